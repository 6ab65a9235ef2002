//! Symmetric 2x2 tensor algebra and metric-tensor construction.
//!
//! `Sym2` carries every tensor quantity in the crate: exact and recovered
//! Hessians, their element averages, and the metric tensors built from them.
//! All spectral operations go through a closed-form eigendecomposition with a
//! hypot-based discriminant so that near-degenerate tensors stay stable.
//!
//! Two metric builders are provided. With `B = alpha*I + |R_K|`,
//!
//! * H1-optimal:  `M_K = det(B)^(-1/4) * ||B||_2^(1/2) * B`
//! * L2-optimal:  `M_K = det(B)^(-1/6) * B`
//!
//! and the regularization parameter is fixed either from the recovered field
//! (`solve_alpha_h`, a power-sum balance solved by bisection) or from the
//! exact Hessian (`solve_alpha_exact`, the corresponding L^(1/2) quasi-norm
//! balance evaluated by element-wise quadrature).

use crate::error::{Error, Result};
use crate::fem::{Problem, TRI_QUAD_6};
use crate::geometry::Mesh;
use crate::recovery::ElementTensorField;
use crate::vec2::Point2;

/// Symmetric 2x2 tensor.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Sym2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

/// Eigendecomposition of a `Sym2`: `A = Q diag(min, max) Q^T` where the
/// columns of `Q` are `(vmin, vmax)`.
#[derive(Clone, Copy, Debug)]
pub struct Eigen2 {
    pub min: f64,
    pub max: f64,
    /// Unit eigenvector for the largest eigenvalue.
    pub vmax: Point2,
}

impl Eigen2 {
    pub fn vmin(&self) -> Point2 {
        // 90 degree rotation of vmax keeps Q orthonormal.
        Point2::new(-self.vmax.y, self.vmax.x)
    }
}

impl Sym2 {
    pub const fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Self { a11, a12, a22 }
    }

    pub const fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub const fn identity() -> Self {
        Self::new(1.0, 0.0, 1.0)
    }

    pub const fn diag(a: f64, b: f64) -> Self {
        Self::new(a, 0.0, b)
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    pub fn is_finite(&self) -> bool {
        self.a11.is_finite() && self.a12.is_finite() && self.a22.is_finite()
    }

    pub fn add(&self, other: &Sym2) -> Sym2 {
        Sym2::new(
            self.a11 + other.a11,
            self.a12 + other.a12,
            self.a22 + other.a22,
        )
    }

    pub fn sub(&self, other: &Sym2) -> Sym2 {
        Sym2::new(
            self.a11 - other.a11,
            self.a12 - other.a12,
            self.a22 - other.a22,
        )
    }

    pub fn scale(&self, s: f64) -> Sym2 {
        Sym2::new(self.a11 * s, self.a12 * s, self.a22 * s)
    }

    /// `v^T A v`.
    pub fn quad_form(&self, v: Point2) -> f64 {
        self.a11 * v.x * v.x + 2.0 * self.a12 * v.x * v.y + self.a22 * v.y * v.y
    }

    /// Matrix-vector product `A v`.
    pub fn apply(&self, v: Point2) -> Point2 {
        Point2::new(
            self.a11 * v.x + self.a12 * v.y,
            self.a12 * v.x + self.a22 * v.y,
        )
    }

    /// Closed-form eigendecomposition with a hypot-stable discriminant.
    pub fn eigen(&self) -> Eigen2 {
        let mean = 0.5 * (self.a11 + self.a22);
        let half_diff = 0.5 * (self.a11 - self.a22);
        let disc = half_diff.hypot(self.a12);
        // Angle of the eigenvector belonging to the larger eigenvalue;
        // atan2 handles the degenerate half_diff == a12 == 0 case (any
        // direction is fine there).
        let theta = 0.5 * (2.0 * self.a12).atan2(self.a11 - self.a22);
        Eigen2 {
            min: mean - disc,
            max: mean + disc,
            vmax: Point2::new(theta.cos(), theta.sin()),
        }
    }

    pub fn eigenvalues(&self) -> (f64, f64) {
        let e = self.eigen();
        (e.min, e.max)
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigen().min
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigen().max
    }

    /// Spectral norm: max |eigenvalue|.
    pub fn spectral_norm(&self) -> f64 {
        let e = self.eigen();
        e.min.abs().max(e.max.abs())
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        let r1 = self.a11.abs() + self.a12.abs();
        let r2 = self.a12.abs() + self.a22.abs();
        r1.max(r2)
    }

    /// Rebuild the tensor with the eigenvalues mapped through `f`, keeping
    /// the eigenvectors.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> Sym2 {
        let e = self.eigen();
        let (fmin, fmax) = (f(e.min), f(e.max));
        let v = e.vmax;
        let w = e.vmin();
        Sym2::new(
            fmax * v.x * v.x + fmin * w.x * w.x,
            fmax * v.x * v.y + fmin * w.x * w.y,
            fmax * v.y * v.y + fmin * w.y * w.y,
        )
    }

    /// `|A| = sqrt(A^2)`: absolute values of the eigenvalues, same eigenvectors.
    pub fn abs(&self) -> Sym2 {
        self.map_eigenvalues(f64::abs)
    }

    /// Principal square root; requires positive semidefiniteness.
    pub fn sqrt_spd(&self) -> Sym2 {
        self.map_eigenvalues(|l| l.max(0.0).sqrt())
    }

    /// `A^(-1/2)` for SPD `A`.
    pub fn inv_sqrt_spd(&self) -> Sym2 {
        self.map_eigenvalues(|l| 1.0 / l.sqrt())
    }

    /// Matrix logarithm for SPD tensors (log-Euclidean calculus).
    pub fn log_spd(&self) -> Sym2 {
        self.map_eigenvalues(f64::ln)
    }

    /// Matrix exponential of a symmetric tensor.
    pub fn exp_sym(&self) -> Sym2 {
        self.map_eigenvalues(f64::exp)
    }

    pub fn inverse(&self) -> Result<Sym2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return Err(Error::SingularTensor(format!("det = {d}")));
        }
        Ok(Sym2::new(self.a22 / d, -self.a12 / d, self.a11 / d))
    }

    pub fn is_spd(&self) -> bool {
        self.a11 > 0.0 && self.det() > 0.0
    }

    /// Symmetric similarity `S A S` with symmetric `S` (result symmetrized
    /// to kill roundoff in the off-diagonal pair).
    pub fn congruence(&self, s: &Sym2) -> Sym2 {
        // B = S * A
        let b11 = s.a11 * self.a11 + s.a12 * self.a12;
        let b12 = s.a11 * self.a12 + s.a12 * self.a22;
        let b21 = s.a12 * self.a11 + s.a22 * self.a12;
        let b22 = s.a12 * self.a12 + s.a22 * self.a22;
        // C = B * S
        let c11 = b11 * s.a11 + b12 * s.a12;
        let c12 = b11 * s.a12 + b12 * s.a22;
        let c21 = b21 * s.a11 + b22 * s.a12;
        let c22 = b21 * s.a12 + b22 * s.a22;
        Sym2::new(c11, 0.5 * (c12 + c21), c22)
    }
}

/// Which interpolation norm the metric optimizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricKind {
    H1,
    L2,
}

impl MetricKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MetricKind::H1 => "h1",
            MetricKind::L2 => "l2",
        }
    }
}

/// One SPD tensor per element plus the regularization parameter used to
/// build the field.
#[derive(Clone, Debug)]
pub struct MetricField {
    pub tensors: Vec<Sym2>,
    pub alpha: f64,
    pub kind: MetricKind,
}

impl MetricField {
    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }
}

/// `B = alpha*I + |t|`, the regularized positive part shared by both builders.
fn regularized(t: &Sym2, alpha: f64) -> Result<Sym2> {
    if alpha < 0.0 {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} < 0")));
    }
    let b = t.abs().add(&Sym2::diag(alpha, alpha));
    if b.lambda_min() <= 0.0 {
        return Err(Error::SingularTensor(
            "alpha*I + |R| is singular; use alpha > 0".into(),
        ));
    }
    Ok(b)
}

/// H1-optimal metric tensor `det(B)^(-1/4) ||B||_2^(1/2) B` with
/// `B = alpha*I + |rk|`.
pub fn metric_h1(rk: &Sym2, alpha: f64) -> Result<Sym2> {
    let b = regularized(rk, alpha)?;
    let c = b.det().powf(-0.25) * b.spectral_norm().sqrt();
    Ok(b.scale(c))
}

/// L2-optimal metric tensor `det(B)^(-1/6) B` with `B = alpha*I + |rk|`.
pub fn metric_l2(rk: &Sym2, alpha: f64) -> Result<Sym2> {
    let b = regularized(rk, alpha)?;
    let c = b.det().powf(-1.0 / 6.0);
    Ok(b.scale(c))
}

/// Apply the chosen builder to a whole element field.
pub fn build_metric_field(
    rk: &ElementTensorField,
    alpha: f64,
    kind: MetricKind,
) -> Result<MetricField> {
    let tensors = rk
        .tensors
        .iter()
        .map(|t| match kind {
            MetricKind::H1 => metric_h1(t, alpha),
            MetricKind::L2 => metric_l2(t, alpha),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricField {
        tensors,
        alpha,
        kind,
    })
}

/// Absolute eigenvalues (sorted ascending) of each tensor, precomputed so the
/// bisection objective is a cheap scalar loop.
fn abs_eigen_pairs(field: &ElementTensorField) -> Vec<(f64, f64)> {
    field
        .tensors
        .iter()
        .map(|t| {
            let e = t.eigen();
            let (a, b) = (e.min.abs(), e.max.abs());
            (a.min(b), a.max(b))
        })
        .collect()
}

fn bisect_increasing(
    mut lo: f64,
    mut hi: f64,
    rhs: f64,
    tol_rel: f64,
    max_iter: usize,
    f: impl Fn(f64) -> f64,
) -> f64 {
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..max_iter {
        mid = 0.5 * (lo + hi);
        let v = f(mid);
        if (v - rhs).abs() <= tol_rel * rhs {
            return mid;
        }
        if v < rhs {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    mid
}

/// Solve the discrete regularization balance for `alpha_h`:
///
/// `sum_K |K| det(a*I+|R_K|)^(1/4) ||a*I+|R_K|||_2^(1/2)
///    = sqrt(2) * sum_K |K| det(|R_K|)^(1/4) ||R_K||_2^(1/2)`.
///
/// The left side is strictly increasing in `a`, so bisection applies.
pub fn solve_alpha_h(mesh: &Mesh, rk: &ElementTensorField) -> Result<f64> {
    if rk.tensors.len() != mesh.n_triangles() {
        return Err(Error::InvalidParameter(
            "element field length does not match mesh".into(),
        ));
    }
    let pairs = abs_eigen_pairs(rk);
    let areas: Vec<f64> = (0..mesh.n_triangles()).map(|k| mesh.area(k)).collect();
    // Fixed summation order keeps the result bit-reproducible.
    let lhs = |alpha: f64| -> f64 {
        let mut s = 0.0;
        for (k, (l1, l2)) in pairs.iter().enumerate() {
            let (b1, b2) = (alpha + l1, alpha + l2);
            s += areas[k] * (b1 * b2).powf(0.25) * b2.sqrt();
        }
        s
    };
    let rhs = std::f64::consts::SQRT_2 * lhs(0.0);
    if rhs <= 0.0 {
        return Err(Error::ZeroField);
    }
    let mut hi = pairs.iter().map(|p| p.1).fold(0.0_f64, f64::max) + 1.0;
    while lhs(hi) < rhs {
        hi *= 2.0;
    }
    Ok(bisect_increasing(0.0, hi, rhs, 1e-8, 200, lhs))
}

/// Solve the exact-Hessian regularization balance for `alpha`:
///
/// `|| det(a*I+|H|)^(1/2) (a*I+|H|) ||_{L^(1/2)} = 2 || det(|H|)^(1/2) H ||_{L^(1/2)}`
///
/// with the L^(1/2) quasi-norm `(int ||.||_2^(1/2) dx)^2` evaluated by
/// element-wise quadrature of the exact Hessian.
pub fn solve_alpha_exact(mesh: &Mesh, problem: &Problem) -> Result<f64> {
    let hess = problem
        .hess_exact
        .as_ref()
        .ok_or(Error::MissingExact("hess_exact"))?;
    // Per quadrature sample: weight |K| w_q and the two eigenvalues of |H|.
    let mut samples: Vec<(f64, f64, f64)> = Vec::with_capacity(6 * mesh.n_triangles());
    for k in 0..mesh.n_triangles() {
        let [p0, p1, p2] = mesh.triangle_points(k);
        let area = mesh.area(k);
        for &(l1, l2, l3, w) in TRI_QUAD_6.iter() {
            let x = p0 * l1 + p1 * l2 + p2 * l3;
            let h = hess(x.x, x.y);
            let e = h.eigen();
            let (a, b) = (e.min.abs(), e.max.abs());
            samples.push((area * w, a.min(b), a.max(b)));
        }
    }
    let quasi_norm_sqrt = |alpha: f64| -> f64 {
        let mut s = 0.0;
        for &(w, l1, l2) in &samples {
            let (b1, b2) = (alpha + l1, alpha + l2);
            s += w * ((b1 * b2).sqrt() * b2).sqrt();
        }
        s
    };
    let base = quasi_norm_sqrt(0.0);
    if base <= 0.0 {
        return Err(Error::ZeroField);
    }
    // Work with the square root of the quasi-norm; the equation
    // lhs(alpha)^2 = 2 * base^2 becomes lhs(alpha) = sqrt(2) * base.
    let rhs = std::f64::consts::SQRT_2 * base;
    let mut hi = samples.iter().map(|s| s.2).fold(0.0_f64, f64::max) + 1.0;
    while quasi_norm_sqrt(hi) < rhs {
        hi *= 2.0;
    }
    Ok(bisect_increasing(0.0, hi, rhs, 1e-8, 200, quasi_norm_sqrt))
}
