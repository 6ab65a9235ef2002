//! Registered boundary value problems.
//!
//! All three problems are Dirichlet problems for `-Laplace(u) = f` with `f`
//! and `g` manufactured from the exact solution:
//!
//! * `quad`:   `u = x^2 + 25 y^2` on `(0,1)^2`; constant Hessian `diag(2, 50)`.
//! * `flower`: a sum of five circular tanh fronts of steepness 30 and
//!   squared radius 0.125 on `(-1,1)^2`. The source list repeats the
//!   `(x+0.5, y-0.5)` bump; the repetition is kept as published and the
//!   `fix_typo` switch replaces the last bump with `(x+0.5, y+0.5)`.
//! * `tanh`:   `u = tanh(60 y) - tanh(60 (x - y) - 30)` on `(-1,1)^2`;
//!   a boundary layer along the x-axis meeting a shock along `y = x - 1/2`.

use crate::fem::{Problem, Rect};
use crate::metric::Sym2;
use crate::vec2::Point2;

/// Circular tanh front `tanh(s ((x-cx)^2 + (y-cy)^2 - r2))`.
#[derive(Clone, Copy)]
struct Bump {
    cx: f64,
    cy: f64,
    s: f64,
    r2: f64,
}

impl Bump {
    fn value(&self, x: f64, y: f64) -> f64 {
        let q = (x - self.cx).powi(2) + (y - self.cy).powi(2) - self.r2;
        (self.s * q).tanh()
    }

    fn grad(&self, x: f64, y: f64) -> Point2 {
        let (dx, dy) = (x - self.cx, y - self.cy);
        let q = dx * dx + dy * dy - self.r2;
        let t = (self.s * q).tanh();
        let sech2 = 1.0 - t * t;
        let c = 2.0 * self.s * sech2;
        Point2::new(c * dx, c * dy)
    }

    fn hess(&self, x: f64, y: f64) -> Sym2 {
        let (dx, dy) = (x - self.cx, y - self.cy);
        let q = dx * dx + dy * dy - self.r2;
        let t = (self.s * q).tanh();
        let sech2 = 1.0 - t * t;
        let c = 2.0 * self.s * sech2;
        // d(sech2)/dq = -2 t sech2 * s
        let d = -4.0 * self.s * self.s * t * sech2;
        Sym2::new(c + 2.0 * d * dx * dx, 2.0 * d * dx * dy, c + 2.0 * d * dy * dy)
    }
}

fn quad_problem() -> Problem {
    Problem {
        name: "quad".into(),
        domain: Rect {
            x0: 0.0,
            x1: 1.0,
            y0: 0.0,
            y1: 1.0,
        },
        f: Box::new(|_, _| -52.0),
        g: Box::new(|x, y| x * x + 25.0 * y * y),
        u_exact: Some(Box::new(|x, y| x * x + 25.0 * y * y)),
        grad_exact: Some(Box::new(|x, y| Point2::new(2.0 * x, 50.0 * y))),
        hess_exact: Some(Box::new(|_, _| Sym2::diag(2.0, 50.0))),
    }
}

fn flower_bumps(fix_typo: bool) -> Vec<Bump> {
    let mut centers = vec![(0.0, 0.0), (0.5, 0.5), (0.5, -0.5), (-0.5, 0.5)];
    centers.push(if fix_typo { (-0.5, -0.5) } else { (-0.5, 0.5) });
    centers
        .into_iter()
        .map(|(cx, cy)| Bump {
            cx,
            cy,
            s: 30.0,
            r2: 0.125,
        })
        .collect()
}

fn flower_problem(fix_typo: bool) -> Problem {
    let value = {
        let bumps = flower_bumps(fix_typo);
        move |x: f64, y: f64| bumps.iter().map(|b| b.value(x, y)).sum::<f64>()
    };
    let grad = {
        let bumps = flower_bumps(fix_typo);
        move |x: f64, y: f64| {
            bumps
                .iter()
                .fold(Point2::new(0.0, 0.0), |acc, b| acc + b.grad(x, y))
        }
    };
    let hess = {
        let bumps = flower_bumps(fix_typo);
        move |x: f64, y: f64| {
            bumps
                .iter()
                .fold(Sym2::zero(), |acc, b| acc.add(&b.hess(x, y)))
        }
    };
    let f = {
        let hess = {
            let bumps = flower_bumps(fix_typo);
            move |x: f64, y: f64| {
                bumps
                    .iter()
                    .fold(Sym2::zero(), |acc, b| acc.add(&b.hess(x, y)))
            }
        };
        move |x: f64, y: f64| -hess(x, y).trace()
    };
    Problem {
        name: "flower".into(),
        domain: Rect {
            x0: -1.0,
            x1: 1.0,
            y0: -1.0,
            y1: 1.0,
        },
        f: Box::new(f),
        g: Box::new(value.clone()),
        u_exact: Some(Box::new(value)),
        grad_exact: Some(Box::new(grad)),
        hess_exact: Some(Box::new(hess)),
    }
}

fn tanh_problem() -> Problem {
    // u = A - B with A = tanh(60 y), B = tanh(60 (x - y) - 30)
    let parts = |x: f64, y: f64| {
        let a = (60.0 * y).tanh();
        let b = (60.0 * (x - y) - 30.0).tanh();
        (a, 1.0 - a * a, b, 1.0 - b * b)
    };
    Problem {
        name: "tanh".into(),
        domain: Rect {
            x0: -1.0,
            x1: 1.0,
            y0: -1.0,
            y1: 1.0,
        },
        f: Box::new(move |x, y| {
            let (a, sa, b, sb) = parts(x, y);
            7200.0 * a * sa - 14400.0 * b * sb
        }),
        g: Box::new(move |x, y| {
            let (a, _, b, _) = parts(x, y);
            a - b
        }),
        u_exact: Some(Box::new(move |x, y| {
            let (a, _, b, _) = parts(x, y);
            a - b
        })),
        grad_exact: Some(Box::new(move |x, y| {
            let (_, sa, _, sb) = parts(x, y);
            Point2::new(-60.0 * sb, 60.0 * sa + 60.0 * sb)
        })),
        hess_exact: Some(Box::new(move |x, y| {
            let (a, sa, b, sb) = parts(x, y);
            // u_xx = 7200 b sb, u_xy = -7200 b sb,
            // u_yy = -7200 a sa + 7200 b sb
            Sym2::new(
                7200.0 * b * sb,
                -7200.0 * b * sb,
                -7200.0 * a * sa + 7200.0 * b * sb,
            )
        })),
    }
}

pub const PROBLEM_NAMES: [&str; 3] = ["quad", "flower", "tanh"];

/// All registered problems (flower in its published form).
pub fn registry() -> Vec<Problem> {
    vec![quad_problem(), flower_problem(false), tanh_problem()]
}

pub fn by_name(name: &str, flower_fix_typo: bool) -> Option<Problem> {
    match name {
        "quad" => Some(quad_problem()),
        "flower" => Some(flower_problem(flower_fix_typo)),
        "tanh" => Some(tanh_problem()),
        _ => None,
    }
}
