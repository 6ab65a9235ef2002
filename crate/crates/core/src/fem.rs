//! Linear finite elements for the Dirichlet Poisson problem and the error
//! norms used by the convergence studies.
//!
//! The Galerkin system is assembled element-wise with P1 basis functions,
//! Dirichlet rows are eliminated (boundary data moved to the right-hand
//! side, keeping the reduced system SPD), and the reduced system is solved
//! by conjugate gradients with a Jacobi preconditioner. All error norms use
//! the same 6-point degree-4 symmetric triangle quadrature as the source
//! term, so interpolation and solution errors are directly comparable.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Mesh;
use crate::metric::Sym2;
use crate::vec2::Point2;

/// 6-point degree-4 symmetric triangle rule in barycentric coordinates
/// `(l1, l2, l3, weight)`; weights sum to one.
pub const TRI_QUAD_6: [(f64, f64, f64, f64); 6] = [
    (
        0.445948490915965,
        0.445948490915965,
        0.108103018168070,
        0.223381589678011,
    ),
    (
        0.445948490915965,
        0.108103018168070,
        0.445948490915965,
        0.223381589678011,
    ),
    (
        0.108103018168070,
        0.445948490915965,
        0.445948490915965,
        0.223381589678011,
    ),
    (
        0.091576213509771,
        0.091576213509771,
        0.816847572980458,
        0.109951743655322,
    ),
    (
        0.091576213509771,
        0.816847572980458,
        0.091576213509771,
        0.109951743655322,
    ),
    (
        0.816847572980458,
        0.091576213509771,
        0.091576213509771,
        0.109951743655322,
    ),
];

pub type ScalarFn = Box<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type GradFn = Box<dyn Fn(f64, f64) -> Point2 + Send + Sync>;
pub type HessFn = Box<dyn Fn(f64, f64) -> Sym2 + Send + Sync>;

/// Rectangular domain `(x0, x1) x (y0, y1)`.
#[derive(Clone, Copy, Debug)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

/// A boundary value problem `-Laplace(u) = f` with Dirichlet data `g`, plus
/// optional exact solution data for error measurement.
pub struct Problem {
    pub name: String,
    pub domain: Rect,
    pub f: ScalarFn,
    pub g: ScalarFn,
    pub u_exact: Option<ScalarFn>,
    pub grad_exact: Option<GradFn>,
    pub hess_exact: Option<HessFn>,
}

impl Problem {
    /// Check `g == u_exact` at boundary vertices (when the exact solution is
    /// known).
    pub fn validate_on(&self, mesh: &Mesh) -> Result<()> {
        if let Some(u) = &self.u_exact {
            for i in 0..mesh.n_vertices() {
                if mesh.is_boundary_vertex(i) {
                    let p = mesh.vertex(i);
                    let (gu, uu) = ((self.g)(p.x, p.y), u(p.x, p.y));
                    if (gu - uu).abs() > 1e-10 * uu.abs().max(1.0) {
                        return Err(Error::InvalidParameter(format!(
                            "g and u_exact disagree at boundary vertex {i}: {gu} vs {uu}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// One value per mesh vertex.
#[derive(Clone, Debug)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    /// Constant gradient of the P1 interpolant on element `k`.
    pub fn gradient_on(&self, mesh: &Mesh, k: usize) -> Point2 {
        let t = mesh.triangle(k);
        let [p0, p1, p2] = mesh.triangle_points(k);
        let inv2a = 1.0 / (2.0 * mesh.area(k));
        // grad(lambda_i) = rot_cw(p_j - p_k) / (2|K|), (i, j, k) cyclic
        let g0 = (p1 - p2).rot_cw() * inv2a;
        let g1 = (p2 - p0).rot_cw() * inv2a;
        let g2 = (p0 - p1).rot_cw() * inv2a;
        g0 * self.values[t[0]] + g1 * self.values[t[1]] + g2 * self.values[t[2]]
    }

    /// Value of the P1 interpolant at barycentric coordinates of element `k`.
    pub fn value_at(&self, mesh: &Mesh, k: usize, l: (f64, f64, f64)) -> f64 {
        let t = mesh.triangle(k);
        l.0 * self.values[t[0]] + l.1 * self.values[t[1]] + l.2 * self.values[t[2]]
    }
}

/// Gradients of the three barycentric basis functions on element `k`.
pub fn basis_gradients(mesh: &Mesh, k: usize) -> [Point2; 3] {
    let [p0, p1, p2] = mesh.triangle_points(k);
    let inv2a = 1.0 / (2.0 * mesh.area(k));
    [
        (p1 - p2).rot_cw() * inv2a,
        (p2 - p0).rot_cw() * inv2a,
        (p0 - p1).rot_cw() * inv2a,
    ]
}

/// Nodal interpolation: `values[i] = u(vertex_i)`.
pub fn nodal_interpolant(mesh: &Mesh, u: impl Fn(f64, f64) -> f64) -> ScalarField {
    ScalarField::new(
        (0..mesh.n_vertices())
            .map(|i| {
                let p = mesh.vertex(i);
                u(p.x, p.y)
            })
            .collect(),
    )
}

/// Compressed sparse row matrix (square, symmetric storage kept full).
struct Csr {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut rows = Vec::with_capacity(triplets.len());
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            if rows.last() == Some(&r) && cols.last() == Some(&c) {
                *vals.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                cols.push(c);
                vals.push(v);
            }
        }
        let mut row_ptr = vec![0usize; n + 1];
        for &r in &rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { row_ptr, cols, vals }
    }

    fn mul(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..x.len() {
            let mut s = 0.0;
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[idx] * x[self.cols[idx]];
            }
            y[r] = s;
        }
    }

    fn diagonal(&self, n: usize) -> Vec<f64> {
        let mut d = vec![0.0; n];
        for r in 0..n {
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.cols[idx] == r {
                    d[r] = self.vals[idx];
                }
            }
        }
        d
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients for an SPD system.
fn pcg(a: &Csr, b: &[f64], tol_rel: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let diag = a.diagonal(n);
    let inv_diag: Vec<f64> = diag
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        a.mul(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::SolverDiverged {
                residual: dot(&r, &r).sqrt(),
                iterations: it,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rnorm = dot(&r, &r).sqrt();
        if rnorm <= tol_rel * bnorm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverDiverged {
        residual: dot(&r, &r).sqrt() / bnorm,
        iterations: max_iter,
    })
}

/// Solve `-Laplace(u) = f` with Dirichlet data `g` by P1 Galerkin FEM.
///
/// A mesh without interior vertices is not an error; the interpolated
/// boundary data is returned.
pub fn solve_poisson(mesh: &Mesh, problem: &Problem) -> Result<ScalarField> {
    let nv = mesh.n_vertices();
    let mut unknown = vec![usize::MAX; nv];
    let mut n_unknowns = 0;
    for i in 0..nv {
        if !mesh.is_boundary_vertex(i) {
            unknown[i] = n_unknowns;
            n_unknowns += 1;
        }
    }
    let mut values = vec![0.0; nv];
    for i in 0..nv {
        if mesh.is_boundary_vertex(i) {
            let p = mesh.vertex(i);
            values[i] = (problem.g)(p.x, p.y);
        }
    }
    if n_unknowns == 0 {
        return Ok(ScalarField::new(values));
    }

    let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(9 * mesh.n_triangles());
    let mut rhs = vec![0.0; n_unknowns];
    for k in 0..mesh.n_triangles() {
        let t = mesh.triangle(k);
        let grads = basis_gradients(mesh, k);
        let area = mesh.area(k);
        let [p0, p1, p2] = mesh.triangle_points(k);
        // local load vector with the shared 6-point rule
        let mut load = [0.0; 3];
        for &(l1, l2, l3, w) in TRI_QUAD_6.iter() {
            let x = p0 * l1 + p1 * l2 + p2 * l3;
            let fv = (problem.f)(x.x, x.y) * w * area;
            load[0] += fv * l1;
            load[1] += fv * l2;
            load[2] += fv * l3;
        }
        for i in 0..3 {
            let gi = unknown[t[i]];
            if gi == usize::MAX {
                continue;
            }
            rhs[gi] += load[i];
            for j in 0..3 {
                let kij = area * grads[i].dot(grads[j]);
                let gj = unknown[t[j]];
                if gj == usize::MAX {
                    // eliminated Dirichlet column: move to the right-hand side
                    rhs[gi] -= kij * values[t[j]];
                } else {
                    triplets.push((gi, gj, kij));
                }
            }
        }
    }
    let a = Csr::from_triplets(n_unknowns, triplets);
    let max_iter = (20.0 * (n_unknowns as f64).sqrt()) as usize + 1000;
    let x = pcg(&a, &rhs, 1e-10, max_iter)?;
    for i in 0..nv {
        if unknown[i] != usize::MAX {
            values[i] = x[unknown[i]];
        }
    }
    Ok(ScalarField::new(values))
}

/// `H^1` seminorm of `u_exact - u_h` by element-wise quadrature.
pub fn h1_seminorm_error(mesh: &Mesh, uh: &ScalarField, problem: &Problem) -> Result<f64> {
    let grad = problem
        .grad_exact
        .as_ref()
        .ok_or(Error::MissingExact("grad_exact"))?;
    let per_element: Vec<f64> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|k| {
            let gh = uh.gradient_on(mesh, k);
            let [p0, p1, p2] = mesh.triangle_points(k);
            let area = mesh.area(k);
            let mut s = 0.0;
            for &(l1, l2, l3, w) in TRI_QUAD_6.iter() {
                let x = p0 * l1 + p1 * l2 + p2 * l3;
                let d = grad(x.x, x.y) - gh;
                s += w * d.norm_squared();
            }
            s * area
        })
        .collect();
    Ok(per_element.iter().sum::<f64>().sqrt())
}

/// `H^1` seminorm of the nodal interpolation error `u - Pi_h u`.
pub fn interp_error_h1(mesh: &Mesh, problem: &Problem) -> Result<f64> {
    let u = problem
        .u_exact
        .as_ref()
        .ok_or(Error::MissingExact("u_exact"))?;
    let uh = nodal_interpolant(mesh, u);
    h1_seminorm_error(mesh, &uh, problem)
}

/// `L^2` norm of `u_exact - u_h` by element-wise quadrature.
pub fn l2_error(mesh: &Mesh, uh: &ScalarField, problem: &Problem) -> Result<f64> {
    let u = problem
        .u_exact
        .as_ref()
        .ok_or(Error::MissingExact("u_exact"))?;
    let per_element: Vec<f64> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|k| {
            let [p0, p1, p2] = mesh.triangle_points(k);
            let area = mesh.area(k);
            let mut s = 0.0;
            for &(l1, l2, l3, w) in TRI_QUAD_6.iter() {
                let x = p0 * l1 + p1 * l2 + p2 * l3;
                let d = u(x.x, x.y) - uh.value_at(mesh, k, (l1, l2, l3));
                s += w * d * d;
            }
            s * area
        })
        .collect();
    Ok(per_element.iter().sum::<f64>().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::uniform_rect_mesh;

    fn linear_problem() -> Problem {
        Problem {
            name: "linear".into(),
            domain: Rect {
                x0: 0.0,
                x1: 1.0,
                y0: 0.0,
                y1: 1.0,
            },
            f: Box::new(|_, _| 0.0),
            g: Box::new(|x, y| x + y),
            u_exact: Some(Box::new(|x, y| x + y)),
            grad_exact: Some(Box::new(|_, _| Point2::new(1.0, 1.0))),
            hess_exact: Some(Box::new(|_, _| Sym2::zero())),
        }
    }

    #[test]
    fn quadrature_weights_sum_to_one() {
        let s: f64 = TRI_QUAD_6.iter().map(|q| q.3).sum();
        assert!((s - 1.0).abs() < 1e-14);
        for q in TRI_QUAD_6.iter() {
            assert!((q.0 + q.1 + q.2 - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn quadrature_is_degree_4_exact() {
        // int over reference right triangle of x^a y^b has closed form
        // a! b! / (a+b+2)!
        let m = Mesh::new(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(0.0, 1.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let [p0, p1, p2] = m.triangle_points(0);
        let exact = |a: u32, b: u32| -> f64 {
            let fact = |n: u32| (1..=n).map(f64::from).product::<f64>().max(1.0);
            fact(a) * fact(b) / fact(a + b + 2)
        };
        for (a, b) in [(0, 0), (1, 0), (2, 1), (2, 2), (4, 0), (0, 4), (3, 1)] {
            let mut s = 0.0;
            for &(l1, l2, l3, w) in TRI_QUAD_6.iter() {
                let x = p0 * l1 + p1 * l2 + p2 * l3;
                s += w * x.x.powi(a as i32) * x.y.powi(b as i32);
            }
            s *= m.area(0);
            assert!(
                (s - exact(a, b)).abs() < 1e-14,
                "x^{a} y^{b}: {s} vs {}",
                exact(a, b)
            );
        }
    }

    #[test]
    fn basis_gradients_partition_of_unity() {
        let m = uniform_rect_mesh(0.0, 2.0, 0.0, 1.0, 3, 2).unwrap();
        for k in 0..m.n_triangles() {
            let g = basis_gradients(&m, k);
            let s = g[0] + g[1] + g[2];
            assert!(s.norm() < 1e-12);
            // lambda_i is 1 at vertex i, 0 at the others: check by gradient
            // against the known linear interpolant x.
            let t = m.triangle(k);
            let field = ScalarField::new(
                (0..m.n_vertices()).map(|i| m.vertex(i).x).collect(),
            );
            let gx = field.gradient_on(&m, k);
            assert!((gx.x - 1.0).abs() < 1e-12 && gx.y.abs() < 1e-12, "{t:?}");
        }
    }

    #[test]
    fn solver_reproduces_linear_solution() {
        let m = uniform_rect_mesh(0.0, 1.0, 0.0, 1.0, 5, 4).unwrap();
        let p = linear_problem();
        p.validate_on(&m).unwrap();
        let uh = solve_poisson(&m, &p).unwrap();
        for i in 0..m.n_vertices() {
            let v = m.vertex(i);
            assert!((uh.values[i] - (v.x + v.y)).abs() < 1e-10);
        }
        assert!(h1_seminorm_error(&m, &uh, &p).unwrap() < 1e-10);
    }

    #[test]
    fn constant_boundary_data_gives_constant_solution() {
        let m = crate::geometry::uniform_rect_mesh(0.0, 1.0, 0.0, 1.0, 1, 1).unwrap();
        let p = Problem {
            name: "const".into(),
            domain: Rect {
                x0: 0.0,
                x1: 1.0,
                y0: 0.0,
                y1: 1.0,
            },
            f: Box::new(|_, _| 0.0),
            g: Box::new(|_, _| 1.0),
            u_exact: Some(Box::new(|_, _| 1.0)),
            grad_exact: Some(Box::new(|_, _| Point2::new(0.0, 0.0))),
            hess_exact: None,
        };
        let uh = solve_poisson(&m, &p).unwrap();
        for v in &uh.values {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn nodal_interpolant_examples() {
        let m = uniform_rect_mesh(0.0, 1.0, 0.0, 1.0, 1, 1).unwrap();
        let c = nodal_interpolant(&m, |_, _| 7.0);
        assert!(c.values.iter().all(|&v| v == 7.0));
        let fx = nodal_interpolant(&m, |x, _| x);
        for i in 0..m.n_vertices() {
            assert_eq!(fx.values[i], m.vertex(i).x);
        }
        let q = nodal_interpolant(&m, |x, _| x * x);
        // corners (0,0), (1,0), (0,1), (1,1)
        assert_eq!(q.values, vec![0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn error_norm_examples() {
        let m = uniform_rect_mesh(0.0, 1.0, 0.0, 1.0, 3, 3).unwrap();
        let p = linear_problem();
        // interpolant of the exact solution has zero error
        let uh = nodal_interpolant(&m, |x, y| x + y);
        assert!(h1_seminorm_error(&m, &uh, &p).unwrap() < 1e-12);
        assert!(l2_error(&m, &uh, &p).unwrap() < 1e-12);
        assert!(interp_error_h1(&m, &p).unwrap() < 1e-12);
        // uh = 0 with u = x: |u|_{H1} = 1 exactly
        let p2 = Problem {
            grad_exact: Some(Box::new(|_, _| Point2::new(1.0, 0.0))),
            u_exact: Some(Box::new(|x, _| x)),
            ..linear_problem()
        };
        let zero = ScalarField::new(vec![0.0; m.n_vertices()]);
        assert!((h1_seminorm_error(&m, &zero, &p2).unwrap() - 1.0).abs() < 1e-12);
        // uh = 0 with u = 1: L2 error = 1 exactly
        let p3 = Problem {
            u_exact: Some(Box::new(|_, _| 1.0)),
            ..linear_problem()
        };
        assert!((l2_error(&m, &zero, &p3).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interp_error_matches_seminorm_of_interpolant() {
        let m = uniform_rect_mesh(0.0, 1.0, 0.0, 1.0, 4, 4).unwrap();
        let p = Problem {
            name: "x2".into(),
            domain: Rect {
                x0: 0.0,
                x1: 1.0,
                y0: 0.0,
                y1: 1.0,
            },
            f: Box::new(|_, _| -2.0),
            g: Box::new(|x, _| x * x),
            u_exact: Some(Box::new(|x, _| x * x)),
            grad_exact: Some(Box::new(|x, _| Point2::new(2.0 * x, 0.0))),
            hess_exact: Some(Box::new(|_, _| Sym2::diag(2.0, 0.0))),
        };
        let uh = nodal_interpolant(&m, |x, _| x * x);
        let a = h1_seminorm_error(&m, &uh, &p).unwrap();
        let b = interp_error_h1(&m, &p).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        assert!(a > 0.0);
    }

    #[test]
    fn interp_error_h1_against_dense_quadrature_oracle() {
        // u = x^2 on the 2-triangle unit square; the integrand
        // |grad(u - Pi_h u)|^2 is quadratic, so refine each element with a
        // dense midpoint grid as an independent check.
        let m = Mesh::new(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(0.0, 1.0),
                Point2::new(1.0, 1.0),
            ],
            vec![[0, 1, 2], [1, 3, 2]],
        )
        .unwrap();
        let p = Problem {
            name: "x2".into(),
            domain: Rect {
                x0: 0.0,
                x1: 1.0,
                y0: 0.0,
                y1: 1.0,
            },
            f: Box::new(|_, _| -2.0),
            g: Box::new(|x, _| x * x),
            u_exact: Some(Box::new(|x, _| x * x)),
            grad_exact: Some(Box::new(|x, _| Point2::new(2.0 * x, 0.0))),
            hess_exact: None,
        };
        let uh = nodal_interpolant(&m, |x, _| x * x);
        // dense oracle: subdivide barycentrically n^2 sub-triangles, midpoint rule
        let mut oracle = 0.0;
        let n = 200;
        for k in 0..m.n_triangles() {
            let [p0, p1, p2] = m.triangle_points(k);
            let gh = uh.gradient_on(&m, k);
            let sub_area = m.area(k) / ((n * n) as f64);
            for i in 0..n {
                for j in 0..(n - i) {
                    // two sub-triangles per lattice cell (upper one only if inside)
                    let corners = [
                        (i, j, true),
                        (i, j, false),
                    ];
                    for (ii, jj, lower) in corners {
                        if !lower && ii + jj + 2 > n {
                            continue;
                        }
                        let (bx, by) = if lower {
                            ((ii as f64 + 1.0 / 3.0) / n as f64, (jj as f64 + 1.0 / 3.0) / n as f64)
                        } else {
                            ((ii as f64 + 2.0 / 3.0) / n as f64, (jj as f64 + 2.0 / 3.0) / n as f64)
                        };
                        if bx + by >= 1.0 {
                            continue;
                        }
                        let x = p0 * (1.0 - bx - by) + p1 * bx + p2 * by;
                        let d = Point2::new(2.0 * x.x, 0.0) - gh;
                        oracle += sub_area * d.norm_squared();
                    }
                }
            }
        }
        let oracle = oracle.sqrt();
        let computed = interp_error_h1(&m, &p).unwrap();
        assert!(
            (computed - oracle).abs() < 2e-3 * oracle,
            "{computed} vs oracle {oracle}"
        );
    }

    #[test]
    fn stiffness_matrix_is_spd_on_small_mesh() {
        // dense assembly oracle: symmetric + positive pivots in Cholesky
        let m = uniform_rect_mesh(0.0, 1.0, 0.0, 1.0, 3, 3).unwrap();
        let nv = m.n_vertices();
        let mut unknown = vec![usize::MAX; nv];
        let mut n = 0;
        for i in 0..nv {
            if !m.is_boundary_vertex(i) {
                unknown[i] = n;
                n += 1;
            }
        }
        let mut dense = vec![vec![0.0; n]; n];
        for k in 0..m.n_triangles() {
            let t = m.triangle(k);
            let g = basis_gradients(&m, k);
            for i in 0..3 {
                for j in 0..3 {
                    if unknown[t[i]] != usize::MAX && unknown[t[j]] != usize::MAX {
                        dense[unknown[t[i]]][unknown[t[j]]] +=
                            m.area(k) * g[i].dot(g[j]);
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                assert!((dense[i][j] - dense[j][i]).abs() < 1e-14);
            }
        }
        // Cholesky with positive pivots
        let mut l = dense.clone();
        for i in 0..n {
            for j in 0..i {
                let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
                l[i][j] = (l[i][j] - s) / l[j][j];
            }
            let s: f64 = (0..i).map(|k| l[i][k] * l[i][k]).sum();
            let pivot = l[i][i] - s;
            assert!(pivot > 0.0, "pivot {pivot} at {i}");
            l[i][i] = pivot.sqrt();
        }
    }

    #[test]
    fn quadratic_problem_converges_on_uniform_meshes() {
        // u = x^2 + 25 y^2, f = -52: H1 error behaves like N^(-1/2)
        let p = crate::problems::by_name("quad", false).unwrap();
        let mut errs = Vec::new();
        let mut ns = Vec::new();
        for g in [4usize, 8, 16] {
            let m = uniform_rect_mesh(0.0, 1.0, 0.0, 1.0, g, g).unwrap();
            let uh = solve_poisson(&m, &p).unwrap();
            errs.push(h1_seminorm_error(&m, &uh, &p).unwrap());
            ns.push(2 * g * g);
        }
        // slope of log(err) vs log(N) should be near -1/2
        let slope = (errs[2] / errs[0]).ln() / ((ns[2] as f64) / (ns[0] as f64)).ln();
        assert!(
            (-0.65..=-0.35).contains(&slope),
            "slope {slope}, errors {errs:?}"
        );
        // Cea monitoring: FEM error bounded by a small multiple of the
        // interpolation error
        let m = uniform_rect_mesh(0.0, 1.0, 0.0, 1.0, 8, 8).unwrap();
        let uh = solve_poisson(&m, &p).unwrap();
        let ratio = h1_seminorm_error(&m, &uh, &p).unwrap() / interp_error_h1(&m, &p).unwrap();
        assert!(ratio < 10.0, "Cea ratio {ratio}");
    }
}
