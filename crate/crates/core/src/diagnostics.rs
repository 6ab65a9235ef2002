//! Mesh-quality and Hessian-closeness diagnostics.
//!
//! For a metric field `M_K` and the affine maps `F_K` the per-element
//! constants are
//!
//! * equidistribution: `C_eq,K = |K| det(M_K)^(1/2) / mean_over_elements(...)`
//! * alignment: `C_ali,K = (1/2) tr(F' M_K F'^T-form) / (|K| det(M_K)^(1/2))`,
//!   the arithmetic-to-geometric mean ratio of the eigenvalues of
//!   `F'^T M_K F'`, which is 1 exactly for metric-equilateral elements;
//!
//! and the closeness of a recovered element Hessian `R_K` to the exact one
//! is measured through the regularized tensors `alpha_h I + |R_K|` by the
//! epsilon ratio (infinity norm against the smallest eigenvalue) and the
//! spectral bounds `C_{R+,K}`, `C_{R-,K}` evaluated at quadrature points.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{Problem, TRI_QUAD_6};
use crate::geometry::Mesh;
use crate::metric::{MetricField, MetricKind, Sym2};
use crate::recovery::ElementTensorField;
use crate::vec2::Point2;

/// Per-element and aggregate quasi-uniformity constants.
#[derive(Clone, Debug)]
pub struct MeshQualityReport {
    pub c_eq_per_element: Vec<f64>,
    pub c_ali_per_element: Vec<f64>,
    /// max over elements
    pub c_eq: f64,
    /// max over elements
    pub c_ali: f64,
}

/// Epsilon closeness of the regularized recovered and exact element
/// Hessians.
#[derive(Clone, Debug)]
pub struct EpsilonReport {
    pub eps_per_element: Vec<f64>,
    pub eps: f64,
}

/// Spectral closeness constants.
#[derive(Clone, Debug)]
pub struct CrReport {
    pub cr_plus_per_element: Vec<f64>,
    pub cr_minus_per_element: Vec<f64>,
    /// RMS aggregate `sqrt(mean C_{R+,K}^2)`
    pub cr_plus: f64,
    /// min over elements of `C_{R-,K}`
    pub cr_minus: f64,
    pub ratio: f64,
}

/// Combined closeness data as reported per study point.
#[derive(Clone, Debug)]
pub struct ClosenessReport {
    pub epsilon: EpsilonReport,
    pub cr: CrReport,
}

/// Matrix norm used by `epsilon_closeness`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixNorm {
    /// Max absolute row sum (the default).
    MaxAbsRowSum,
    /// Spectral norm variant, invariant under orthogonal conjugation.
    Spectral,
}

fn check_field_len(field_len: usize, mesh: &Mesh) -> Result<()> {
    if field_len != mesh.n_triangles() {
        return Err(Error::InvalidParameter(
            "element field length does not match mesh".into(),
        ));
    }
    Ok(())
}

/// Equidistribution and alignment constants of a mesh under a metric.
pub fn mesh_quality(mesh: &Mesh, metric: &MetricField) -> Result<MeshQualityReport> {
    check_field_len(metric.tensors.len(), mesh)?;
    let n = mesh.n_triangles();
    let mut volumes = Vec::with_capacity(n);
    for (k, m) in metric.tensors.iter().enumerate() {
        let det = m.det();
        if !m.is_spd() {
            return Err(Error::SingularTensor(format!(
                "metric on element {k} is not SPD (det = {det:e})"
            )));
        }
        volumes.push(mesh.area(k) * det.sqrt());
    }
    let mean = volumes.iter().sum::<f64>() / n as f64;
    let c_eq_per_element: Vec<f64> = volumes.iter().map(|v| v / mean).collect();

    let c_ali_per_element: Vec<f64> = (0..n)
        .map(|k| {
            let j = mesh.affine_map(k)?.jacobian;
            let m = &metric.tensors[k];
            // G = F'^T M F'; AM/GM of its eigenvalues
            let col0 = Point2::new(j[0][0], j[1][0]);
            let col1 = Point2::new(j[0][1], j[1][1]);
            let tr = m.quad_form(col0) + m.quad_form(col1);
            let det_j = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            let det_g = det_j * det_j * m.det();
            Ok(0.5 * tr / det_g.sqrt())
        })
        .collect::<Result<Vec<_>>>()?;

    let c_eq = c_eq_per_element.iter().fold(0.0_f64, |a, &b| a.max(b));
    let c_ali = c_ali_per_element.iter().fold(0.0_f64, |a, &b| a.max(b));
    Ok(MeshQualityReport {
        c_eq_per_element,
        c_ali_per_element,
        c_eq,
        c_ali,
    })
}

/// Check the strict inverse alignment inequality per element:
/// `(1/2) tr((F'^T M F')^-1) < 2 C_ali |K|^-1 det(M)^(-1/2)`.
///
/// The left side is the mean reciprocal eigenvalue of the alignment matrix
/// `F'^T M F'`, the quantity the alignment condition controls.
pub fn inverse_alignment_check(
    mesh: &Mesh,
    metric: &MetricField,
    c_ali: f64,
) -> Result<Vec<bool>> {
    check_field_len(metric.tensors.len(), mesh)?;
    (0..mesh.n_triangles())
        .map(|k| {
            let j = mesh.affine_map(k)?.jacobian;
            let det_j = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            // inverse of the Jacobian
            let w = [
                [j[1][1] / det_j, -j[0][1] / det_j],
                [-j[1][0] / det_j, j[0][0] / det_j],
            ];
            let minv = metric.tensors[k].inverse()?;
            // tr(F'^-1 M^-1 F'^-T) = sum over rows r of W of r M^-1 r^T
            let row0 = Point2::new(w[0][0], w[0][1]);
            let row1 = Point2::new(w[1][0], w[1][1]);
            let lhs = 0.5 * (minv.quad_form(row0) + minv.quad_form(row1));
            let rhs =
                2.0 * c_ali / (mesh.area(k) * metric.tensors[k].det().sqrt());
            Ok(lhs < rhs)
        })
        .collect()
}

pub fn epsilon_closeness(
    mesh: &Mesh,
    rk: &ElementTensorField,
    hk: &ElementTensorField,
    alpha_h: f64,
    alpha: f64,
) -> Result<EpsilonReport> {
    epsilon_closeness_with_norm(mesh, rk, hk, alpha_h, alpha, MatrixNorm::MaxAbsRowSum)
}

/// `eps_K = ||(alpha_h I + |R_K|) - (alpha I + |H_K|)|| / lambda_min(alpha_h I + |R_K|)`.
pub fn epsilon_closeness_with_norm(
    mesh: &Mesh,
    rk: &ElementTensorField,
    hk: &ElementTensorField,
    alpha_h: f64,
    alpha: f64,
    norm: MatrixNorm,
) -> Result<EpsilonReport> {
    check_field_len(rk.tensors.len(), mesh)?;
    check_field_len(hk.tensors.len(), mesh)?;
    if alpha_h < 0.0 || alpha < 0.0 {
        return Err(Error::InvalidParameter("alpha must be nonnegative".into()));
    }
    let eps_per_element = rk
        .tensors
        .iter()
        .zip(&hk.tensors)
        .enumerate()
        .map(|(k, (r, h))| {
            let a = r.abs().add(&Sym2::diag(alpha_h, alpha_h));
            let b = h.abs().add(&Sym2::diag(alpha, alpha));
            let den = a.lambda_min();
            if den <= 0.0 {
                return Err(Error::SingularTensor(format!(
                    "regularized tensor on element {k} has lambda_min = {den:e}"
                )));
            }
            let diff = a.sub(&b);
            let num = match norm {
                MatrixNorm::MaxAbsRowSum => diff.inf_norm(),
                MatrixNorm::Spectral => diff.spectral_norm(),
            };
            Ok(num / den)
        })
        .collect::<Result<Vec<f64>>>()?;
    let eps = eps_per_element.iter().fold(0.0_f64, |a, &b| a.max(b));
    Ok(EpsilonReport {
        eps_per_element,
        eps,
    })
}

/// Spectral closeness constants, sampled at the shared 6-point quadrature:
///
/// `C_{R+,K} = max_x lambda_max(B^(-1/2) |H(x)| B^(-1/2))`,
/// `C_{R-,K} = min_x lambda_min(B^(-1/2) (alpha_h I + |H(x)|) B^(-1/2))`
///
/// with `B = alpha_h I + |R_K|` (the symmetric form shares the spectrum of
/// the nonsymmetric products).
pub fn cr_constants(
    mesh: &Mesh,
    rk: &ElementTensorField,
    problem: &Problem,
    alpha_h: f64,
) -> Result<CrReport> {
    check_field_len(rk.tensors.len(), mesh)?;
    let hess = problem
        .hess_exact
        .as_ref()
        .ok_or(Error::MissingExact("hess_exact"))?;
    let n = mesh.n_triangles();
    let per_element: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|k| {
            let b = rk.tensors[k].abs().add(&Sym2::diag(alpha_h, alpha_h));
            if b.lambda_min() <= 0.0 {
                return Err(Error::SingularTensor(format!(
                    "alpha_h I + |R_K| singular on element {k}"
                )));
            }
            let s = b.inv_sqrt_spd();
            let [p0, p1, p2] = mesh.triangle_points(k);
            let mut plus = f64::NEG_INFINITY;
            let mut minus = f64::INFINITY;
            for &(l1, l2, l3, _) in TRI_QUAD_6.iter() {
                let x = p0 * l1 + p1 * l2 + p2 * l3;
                let habs = hess(x.x, x.y).abs();
                plus = plus.max(habs.congruence(&s).lambda_max());
                let reg = habs.add(&Sym2::diag(alpha_h, alpha_h));
                minus = minus.min(reg.congruence(&s).lambda_min());
            }
            Ok((plus, minus))
        })
        .collect::<Result<Vec<_>>>()?;
    let cr_plus_per_element: Vec<f64> = per_element.iter().map(|p| p.0).collect();
    let cr_minus_per_element: Vec<f64> = per_element.iter().map(|p| p.1).collect();
    let cr_plus =
        (cr_plus_per_element.iter().map(|c| c * c).sum::<f64>() / n as f64).sqrt();
    let cr_minus = cr_minus_per_element
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b));
    Ok(CrReport {
        cr_plus_per_element,
        cr_minus_per_element,
        cr_plus,
        cr_minus,
        ratio: cr_plus / cr_minus,
    })
}

/// Solution-dependent factor of the error bound, evaluated by quadrature of
/// the exact Hessian with `B = alpha I + |H(x)|`:
///
/// * `H1` kind: the `L^(1/2)` quasi-norm `(int (det(B)^(1/2) ||B||_2)^(1/2) dx)^2`;
/// * `L2` kind: the Hoelder-split product
///   `(int det(B)^(1/3) dx) * (int det(B)^(1/6) ||B||_2 dx)`.
///
/// By the Cauchy-Schwarz inequality on the shared quadrature measure the
/// `H1` value never exceeds the `L2` value.
pub fn bound_factor(
    problem: &Problem,
    mesh: &Mesh,
    alpha: f64,
    kind: MetricKind,
) -> Result<f64> {
    let hess = problem
        .hess_exact
        .as_ref()
        .ok_or(Error::MissingExact("hess_exact"))?;
    let mut i_h1 = 0.0;
    let mut i_det3 = 0.0;
    let mut i_mix = 0.0;
    for k in 0..mesh.n_triangles() {
        let [p0, p1, p2] = mesh.triangle_points(k);
        let area = mesh.area(k);
        for &(l1, l2, l3, w) in TRI_QUAD_6.iter() {
            let x = p0 * l1 + p1 * l2 + p2 * l3;
            let e = hess(x.x, x.y).eigen();
            let (b1, b2) = {
                let (u, v) = (e.min.abs(), e.max.abs());
                (alpha + u.min(v), alpha + u.max(v))
            };
            let det = b1 * b2;
            let wa = w * area;
            i_h1 += wa * (det.sqrt() * b2).sqrt();
            i_det3 += wa * det.powf(1.0 / 3.0);
            i_mix += wa * det.powf(1.0 / 6.0) * b2;
        }
    }
    Ok(match kind {
        MetricKind::H1 => i_h1 * i_h1,
        MetricKind::L2 => i_det3 * i_mix,
    })
}

/// `max_K max_x ||R_K - H(x)||_inf` over quadrature points: the raw
/// recovery error tracked by the convergence studies.
pub fn recovery_error_max(
    mesh: &Mesh,
    rk: &ElementTensorField,
    problem: &Problem,
) -> Result<f64> {
    check_field_len(rk.tensors.len(), mesh)?;
    let hess = problem
        .hess_exact
        .as_ref()
        .ok_or(Error::MissingExact("hess_exact"))?;
    let per_element: Vec<f64> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|k| {
            let [p0, p1, p2] = mesh.triangle_points(k);
            let mut worst = 0.0_f64;
            for &(l1, l2, l3, _) in TRI_QUAD_6.iter() {
                let x = p0 * l1 + p1 * l2 + p2 * l3;
                worst = worst.max(rk.tensors[k].sub(&hess(x.x, x.y)).inf_norm());
            }
            worst
        })
        .collect();
    Ok(per_element.iter().fold(0.0_f64, |a, &b| a.max(b)))
}
