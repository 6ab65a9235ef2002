//! Quick invariant suite: property-style checks over seeded random samples
//! that exercise the tensor algebra, the quality constants, the recovery
//! exactness guarantees, and end-to-end determinism, all without solving a
//! PDE. Exposed both to the `hessadapt check` subcommand and to the
//! acceptance tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adapt::{adapt_mesh, scale_metric_to_target, AdaptParams};
use crate::diagnostics::{inverse_alignment_check, mesh_quality};
use crate::fem::nodal_interpolant;
use crate::geometry::{fmt_f64, jittered_rect_mesh, mesh_to_string, Mesh};
use crate::metric::{
    build_metric_field, metric_h1, metric_l2, solve_alpha_h, MetricField, MetricKind, Sym2,
};
use crate::recovery::{
    element_average, recover_dlf, recover_lls, recover_qls, recover_wf, ElementTensorField,
};
use crate::vec2::Point2;

/// Outcome of one named check.
#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn random_spd(rng: &mut ChaCha8Rng) -> Sym2 {
    let theta: f64 = rng.gen_range(0.0..std::f64::consts::PI);
    let (c, s) = (theta.cos(), theta.sin());
    let l1 = 10f64.powf(rng.gen_range(-2.0..3.0));
    let l2 = 10f64.powf(rng.gen_range(-2.0..3.0));
    Sym2::new(
        l1 * c * c + l2 * s * s,
        (l1 - l2) * c * s,
        l1 * s * s + l2 * c * c,
    )
}

fn random_sym(rng: &mut ChaCha8Rng) -> Sym2 {
    Sym2::new(
        rng.gen_range(-10.0..10.0),
        rng.gen_range(-10.0..10.0),
        rng.gen_range(-10.0..10.0),
    )
}

fn random_triangle(rng: &mut ChaCha8Rng) -> Option<Mesh> {
    let verts: Vec<Point2> = (0..3)
        .map(|_| Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let a = 0.5 * (verts[1] - verts[0]).cross(verts[2] - verts[0]);
    if a.abs() < 1e-3 {
        return None;
    }
    Mesh::new(verts, vec![[0, 1, 2]]).ok()
}

fn check_am_gm_and_inverse_alignment(samples: usize) -> (CheckResult, CheckResult) {
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let mut min_c_ali = f64::INFINITY;
    let mut am_gm_ok = true;
    let mut inverse_ok = true;
    let mut n_done = 0;
    while n_done < samples {
        let Some(mesh) = random_triangle(&mut rng) else {
            continue;
        };
        let metric = MetricField {
            tensors: vec![random_spd(&mut rng)],
            alpha: 0.0,
            kind: MetricKind::H1,
        };
        let q = match mesh_quality(&mesh, &metric) {
            Ok(q) => q,
            Err(_) => {
                am_gm_ok = false;
                break;
            }
        };
        min_c_ali = min_c_ali.min(q.c_ali);
        if q.c_ali < 1.0 - 1e-12 {
            am_gm_ok = false;
        }
        // alignment with constant c_ali implies strict inverse alignment
        match inverse_alignment_check(&mesh, &metric, q.c_ali) {
            Ok(flags) => {
                if !flags.iter().all(|&b| b) {
                    inverse_ok = false;
                }
            }
            Err(_) => inverse_ok = false,
        }
        n_done += 1;
    }
    (
        CheckResult {
            name: "am_gm_alignment_lower_bound",
            passed: am_gm_ok,
            detail: format!("{n_done} samples, min c_ali = {min_c_ali:.15}"),
        },
        CheckResult {
            name: "inverse_alignment_implication",
            passed: inverse_ok,
            detail: format!("{n_done} samples"),
        },
    )
}

fn check_abs_eigenstructure(samples: usize) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let t = random_sym(&mut rng);
        let a = t.abs();
        let scale = t.spectral_norm().max(1.0);
        // eigenvalues map to absolute values
        let (tmin, tmax) = t.eigenvalues();
        let (amin, amax) = a.eigenvalues();
        let expect = {
            let (x, y) = (tmin.abs(), tmax.abs());
            (x.min(y), x.max(y))
        };
        worst = worst.max((amin - expect.0).abs() / scale);
        worst = worst.max((amax - expect.1).abs() / scale);
        // commutation preserves the eigenvectors
        let ta = (
            t.a11 * a.a11 + t.a12 * a.a12,
            t.a11 * a.a12 + t.a12 * a.a22,
            t.a12 * a.a12 + t.a22 * a.a22,
        );
        let at = (
            a.a11 * t.a11 + a.a12 * t.a12,
            a.a11 * t.a12 + a.a12 * t.a22,
            a.a12 * t.a12 + a.a22 * t.a22,
        );
        worst = worst.max((ta.0 - at.0).abs() / scale);
        worst = worst.max((ta.1 - at.1).abs() / scale);
        worst = worst.max((ta.2 - at.2).abs() / scale);
    }
    CheckResult {
        name: "abs_sym_eigenstructure",
        passed: worst < 1e-12,
        detail: format!("{samples} samples, worst deviation {worst:.3e}"),
    }
}

fn check_metric_homogeneity(samples: usize) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(1003);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let t = random_sym(&mut rng);
        let alpha = rng.gen_range(0.01..5.0);
        let s = 10f64.powf(rng.gen_range(-1.0..1.0));
        if let (Ok(m), Ok(ms)) = (metric_h1(&t, alpha), metric_h1(&t.scale(s), s * alpha)) {
            // degree 1 for the H1 builder
            let expect = m.scale(s);
            worst = worst.max(ms.sub(&expect).inf_norm() / expect.inf_norm().max(1e-300));
        }
        if let (Ok(m), Ok(ms)) = (metric_l2(&t, alpha), metric_l2(&t.scale(s), s * alpha)) {
            // degree 2/3 for the L2 builder
            let expect = m.scale(s.powf(2.0 / 3.0));
            worst = worst.max(ms.sub(&expect).inf_norm() / expect.inf_norm().max(1e-300));
        }
    }
    CheckResult {
        name: "metric_homogeneity_degrees",
        passed: worst < 1e-10,
        detail: format!("{samples} samples, worst relative deviation {worst:.3e}"),
    }
}

fn check_qls_quadratic_exactness() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(1004);
    let mut worst: f64 = 0.0;
    for trial in 0..10u64 {
        let mesh =
            jittered_rect_mesh(0.0, 1.0, 0.0, 1.0, 6, 6, 0.2, 9000 + trial).expect("mesh");
        let (a, b, c) = (
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
        );
        let (d, e) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let uh = nodal_interpolant(&mesh, |x, y| {
            a * x * x + b * x * y + c * y * y + d * x + e * y + 1.0
        });
        let expect = Sym2::new(2.0 * a, b, 2.0 * c);
        match recover_qls(&mesh, &uh) {
            Ok(r) => {
                for t in &r.tensors {
                    worst = worst.max(t.sub(&expect).inf_norm());
                }
            }
            Err(err) => {
                return CheckResult {
                    name: "qls_quadratic_exactness",
                    passed: false,
                    detail: format!("recovery failed: {err}"),
                }
            }
        }
    }
    CheckResult {
        name: "qls_quadratic_exactness",
        passed: worst < 1e-9,
        detail: format!("10 jittered meshes, worst entry error {worst:.3e}"),
    }
}

fn check_recoveries_vanish_on_linear() -> CheckResult {
    let mesh = jittered_rect_mesh(0.0, 1.0, 0.0, 1.0, 5, 5, 0.2, 9100).expect("mesh");
    let uh = nodal_interpolant(&mesh, |x, y| 4.0 * x - 2.5 * y + 0.3);
    let mut worst: f64 = 0.0;
    for rec in [recover_qls, recover_dlf, recover_lls, recover_wf] {
        match rec(&mesh, &uh) {
            Ok(r) => {
                for t in &r.tensors {
                    worst = worst.max(t.inf_norm());
                }
            }
            Err(err) => {
                return CheckResult {
                    name: "recoveries_vanish_on_linear",
                    passed: false,
                    detail: format!("recovery failed: {err}"),
                }
            }
        }
    }
    CheckResult {
        name: "recoveries_vanish_on_linear",
        passed: worst < 1e-12,
        detail: format!("worst entry {worst:.3e}"),
    }
}

fn check_c_eq_mean() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(1005);
    let mesh = jittered_rect_mesh(0.0, 1.0, 0.0, 1.0, 7, 5, 0.2, 9200).expect("mesh");
    let metric = MetricField {
        tensors: (0..mesh.n_triangles())
            .map(|_| random_spd(&mut rng))
            .collect(),
        alpha: 0.0,
        kind: MetricKind::H1,
    };
    match mesh_quality(&mesh, &metric) {
        Ok(q) => {
            let mean =
                q.c_eq_per_element.iter().sum::<f64>() / q.c_eq_per_element.len() as f64;
            CheckResult {
                name: "c_eq_mean_is_one",
                passed: (mean - 1.0).abs() < 1e-12,
                detail: format!("mean = {mean:.15}"),
            }
        }
        Err(err) => CheckResult {
            name: "c_eq_mean_is_one",
            passed: false,
            detail: format!("{err}"),
        },
    }
}

fn check_bisection_residual(samples: usize) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(1006);
    let mesh = jittered_rect_mesh(0.0, 1.0, 0.0, 1.0, 4, 4, 0.2, 9300).expect("mesh");
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let field = ElementTensorField {
            tensors: (0..mesh.n_triangles())
                .map(|_| random_sym(&mut rng))
                .collect(),
        };
        let alpha = match solve_alpha_h(&mesh, &field) {
            Ok(a) => a,
            Err(err) => {
                return CheckResult {
                    name: "alpha_h_bisection_residual",
                    passed: false,
                    detail: format!("{err}"),
                }
            }
        };
        // evaluate both sides of the balance directly
        let side = |a: f64| -> f64 {
            let mut s = 0.0;
            for (k, t) in field.tensors.iter().enumerate() {
                let e = t.eigen();
                let (l1, l2) = {
                    let (x, y) = (e.min.abs(), e.max.abs());
                    (x.min(y), x.max(y))
                };
                s += mesh.area(k) * ((a + l1) * (a + l2)).powf(0.25) * (a + l2).sqrt();
            }
            s
        };
        let rhs = std::f64::consts::SQRT_2 * side(0.0);
        worst = worst.max((side(alpha) - rhs).abs() / rhs);
    }
    CheckResult {
        name: "alpha_h_bisection_residual",
        passed: worst < 1e-8,
        detail: format!("{samples} random fields, worst relative residual {worst:.3e}"),
    }
}

/// Full no-solve pipeline run twice; compares serialized meshes, recovered
/// tensors, and formatted CSV floats byte for byte.
fn check_determinism() -> CheckResult {
    let run = || -> crate::error::Result<String> {
        let mesh = jittered_rect_mesh(0.0, 1.0, 0.0, 1.0, 5, 5, 0.2, 9400)?;
        let uh = nodal_interpolant(&mesh, |x, y| (2.0 * x).sin() * (3.0 * y).cos() + x * x);
        let nodal = recover_qls(&mesh, &uh)?;
        let rk = element_average(&mesh, &nodal);
        let alpha = solve_alpha_h(&mesh, &rk)?;
        let metric = build_metric_field(&rk, alpha, MetricKind::H1)?;
        let scaled = scale_metric_to_target(&mesh, &metric, 120)?;
        let out = adapt_mesh(&mesh, &scaled, &AdaptParams::new(120))?;
        let mut buf = mesh_to_string(&out.mesh);
        buf.push_str(&fmt_f64(alpha));
        for t in &rk.tensors {
            buf.push_str(&fmt_f64(t.a11));
            buf.push_str(&fmt_f64(t.a12));
            buf.push_str(&fmt_f64(t.a22));
        }
        Ok(buf)
    };
    match (run(), run()) {
        (Ok(a), Ok(b)) => CheckResult {
            name: "pipeline_determinism",
            passed: a == b,
            detail: format!("{} bytes compared", a.len()),
        },
        (Err(e), _) | (_, Err(e)) => CheckResult {
            name: "pipeline_determinism",
            passed: false,
            detail: format!("{e}"),
        },
    }
}

/// Run the whole quick suite (a few seconds, no PDE solves).
pub fn quick_check() -> Vec<CheckResult> {
    let (am_gm, inverse) = check_am_gm_and_inverse_alignment(10_000);
    vec![
        am_gm,
        inverse,
        check_abs_eigenstructure(10_000),
        check_metric_homogeneity(2_000),
        check_qls_quadratic_exactness(),
        check_recoveries_vanish_on_linear(),
        check_c_eq_mean(),
        check_bisection_residual(50),
        check_determinism(),
    ]
}
