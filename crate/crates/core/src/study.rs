//! Convergence-study driver.
//!
//! For each target element count the study starts from a lightly jittered
//! structured mesh, runs a fixed number of solve -> recover -> metric ->
//! adapt iterations, and measures errors, mesh-quality constants, and
//! closeness constants on the final mesh. Results are written as
//! `study.csv` (one row per target, fixed 16-column order, 17-significant-
//! digit floats, byte-reproducible for a fixed config), per-element
//! diagnostic CSVs, final meshes in the text format, per-phase timings in
//! `timings.csv` (excluded from the reproducibility contract), and a
//! matplotlib script that renders the standard panels.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use crate::adapt::{adapt_mesh, scale_metric_to_target, AdaptParams};
use crate::diagnostics::{
    bound_factor, cr_constants, epsilon_closeness, mesh_quality, recovery_error_max,
};
use crate::error::{Error, Result};
use crate::fem::{h1_seminorm_error, interp_error_h1, l2_error, solve_poisson, Problem};
use crate::geometry::{fmt_f64, jittered_rect_mesh, mesh_to_string, Mesh};
use crate::metric::{build_metric_field, solve_alpha_exact, solve_alpha_h, MetricKind};
use crate::recovery::{element_average, exact_nodal_field, recover, RecoveryMethod};

/// Study configuration (one problem, one recovery method, one metric kind,
/// a ladder of target sizes).
#[derive(Clone, Debug)]
pub struct StudyConfig {
    pub problem: String,
    pub recovery: RecoveryMethod,
    pub metric_kind: MetricKind,
    pub n_targets: Vec<usize>,
    pub fixed_point_iters: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub flower_fix_typo: bool,
    pub debug_meshes: bool,
}

impl StudyConfig {
    pub fn new(problem: &str, recovery: RecoveryMethod, n_targets: Vec<usize>) -> Self {
        Self {
            problem: problem.to_string(),
            recovery,
            metric_kind: MetricKind::H1,
            n_targets,
            fixed_point_iters: 5,
            seed: 42,
            output_dir: PathBuf::from("out"),
            flower_fix_typo: false,
            debug_meshes: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_targets.is_empty() {
            return Err(Error::InvalidParameter("n_targets is empty".into()));
        }
        let mut prev = 0;
        for &n in &self.n_targets {
            if n < 8 {
                return Err(Error::InvalidParameter(format!(
                    "n_target {n} below the minimum of 8"
                )));
            }
            if n <= prev {
                return Err(Error::InvalidParameter(
                    "n_targets must be strictly ascending".into(),
                ));
            }
            prev = n;
        }
        if self.fixed_point_iters < 1 {
            return Err(Error::InvalidParameter(
                "fixed_point_iters must be >= 1".into(),
            ));
        }
        Ok(())
    }

    fn problem(&self) -> Result<Problem> {
        crate::problems::by_name(&self.problem, self.flower_fix_typo)
            .ok_or_else(|| Error::UnknownProblem(self.problem.clone()))
    }
}

/// Wall-clock milliseconds per pipeline phase.
#[derive(Clone, Copy, Debug, Default)]
pub struct PhaseTimes {
    pub solve_ms: f64,
    pub recover_ms: f64,
    pub metric_ms: f64,
    pub adapt_ms: f64,
    pub diagnostics_ms: f64,
}

/// Per-element diagnostics retained for the final mesh of a study point.
#[derive(Clone, Debug)]
pub struct PerElementDiagnostics {
    pub area: Vec<f64>,
    pub c_eq: Vec<f64>,
    pub c_ali: Vec<f64>,
    pub eps: Vec<f64>,
    pub cr_ratio: Vec<f64>,
}

/// One row of the study: all scalar diagnostics for one target size.
#[derive(Clone, Debug)]
pub struct StudyRecord {
    pub n_target: usize,
    pub n_actual: usize,
    pub flagged: bool,
    pub h1_error: f64,
    pub l2_error: f64,
    pub interp_h1_error: f64,
    pub recovery_error_max: f64,
    pub c_eq: f64,
    pub c_ali: f64,
    pub eps: f64,
    pub cr_plus: f64,
    pub cr_minus: f64,
    pub cr_ratio: f64,
    pub alpha_h: f64,
    pub alpha_exact: f64,
    pub bound_factor: f64,
    pub times: PhaseTimes,
    pub final_mesh: Option<Mesh>,
    pub per_element: Option<PerElementDiagnostics>,
}

impl StudyRecord {
    fn failed(n_target: usize) -> Self {
        Self {
            n_target,
            n_actual: 0,
            flagged: true,
            h1_error: 0.0,
            l2_error: 0.0,
            interp_h1_error: 0.0,
            recovery_error_max: 0.0,
            c_eq: 0.0,
            c_ali: 0.0,
            eps: 0.0,
            cr_plus: 0.0,
            cr_minus: 0.0,
            cr_ratio: 0.0,
            alpha_h: 0.0,
            alpha_exact: 0.0,
            bound_factor: 0.0,
            times: PhaseTimes::default(),
            final_mesh: None,
            per_element: None,
        }
    }
}

/// Initial structured mesh with about `max(64, n/4)` elements and a small
/// seeded jitter of the interior vertices.
fn initial_mesh(problem: &Problem, n_target: usize, seed: u64) -> Result<Mesh> {
    let n0 = (n_target / 4).max(64);
    let d = &problem.domain;
    let aspect = (d.x1 - d.x0) / (d.y1 - d.y0);
    let ny = ((n0 as f64 / (2.0 * aspect)).sqrt().round() as usize).max(2);
    let nx = ((aspect * ny as f64).round() as usize).max(2);
    jittered_rect_mesh(d.x0, d.x1, d.y0, d.y1, nx, ny, 0.15, seed)
}

fn run_point(config: &StudyConfig, problem: &Problem, n_target: usize) -> Result<StudyRecord> {
    let mut times = PhaseTimes::default();
    let mut mesh = initial_mesh(problem, n_target, config.seed ^ (n_target as u64))?;
    problem.validate_on(&mesh)?;
    let mut last_flagged = false;
    let mut final_metric = None;
    for iter in 0..config.fixed_point_iters {
        let t0 = Instant::now();
        let uh = solve_poisson(&mesh, problem)?;
        times.solve_ms += t0.elapsed().as_secs_f64() * 1e3;

        let t0 = Instant::now();
        let nodal = recover(config.recovery, &mesh, &uh, problem)?;
        let rk = element_average(&mesh, &nodal);
        times.recover_ms += t0.elapsed().as_secs_f64() * 1e3;

        let t0 = Instant::now();
        let alpha_h = solve_alpha_h(&mesh, &rk)?;
        let metric = build_metric_field(&rk, alpha_h, config.metric_kind)?;
        let scaled = scale_metric_to_target(&mesh, &metric, n_target)?;
        times.metric_ms += t0.elapsed().as_secs_f64() * 1e3;

        let t0 = Instant::now();
        let mut params = AdaptParams::new(n_target);
        if config.debug_meshes {
            params.debug_dir = Some(
                config
                    .output_dir
                    .join(format!("debug_n{n_target}_iter{iter}")),
            );
        }
        let out = adapt_mesh(&mesh, &scaled, &params)?;
        times.adapt_ms += t0.elapsed().as_secs_f64() * 1e3;

        mesh = out.mesh;
        last_flagged = out.report.flagged;
        final_metric = Some(out.metric);
    }

    // final diagnostics on the adapted mesh
    let t0 = Instant::now();
    let uh = solve_poisson(&mesh, problem)?;
    times.solve_ms += t0.elapsed().as_secs_f64() * 1e3;
    let t0 = Instant::now();
    let nodal = recover(config.recovery, &mesh, &uh, problem)?;
    let rk = element_average(&mesh, &nodal);
    times.recover_ms += t0.elapsed().as_secs_f64() * 1e3;

    let t0 = Instant::now();
    let alpha_h = solve_alpha_h(&mesh, &rk)?;
    let alpha_exact = solve_alpha_exact(&mesh, problem)?;
    let h1 = h1_seminorm_error(&mesh, &uh, problem)?;
    let l2 = l2_error(&mesh, &uh, problem)?;
    let ih1 = interp_error_h1(&mesh, problem)?;
    let rec_err = recovery_error_max(&mesh, &rk, problem)?;
    let hk = element_average(&mesh, &exact_nodal_field(&mesh, problem)?);
    let eps = epsilon_closeness(&mesh, &rk, &hk, alpha_h, alpha_exact)?;
    let cr = cr_constants(&mesh, &rk, problem, alpha_h)?;
    let metric = final_metric.expect("at least one fixed-point iteration");
    let quality = mesh_quality(&mesh, &metric)?;
    let bf = bound_factor(problem, &mesh, alpha_exact, config.metric_kind)?;
    times.diagnostics_ms += t0.elapsed().as_secs_f64() * 1e3;

    let per_element = PerElementDiagnostics {
        area: (0..mesh.n_triangles()).map(|k| mesh.area(k)).collect(),
        c_eq: quality.c_eq_per_element.clone(),
        c_ali: quality.c_ali_per_element.clone(),
        eps: eps.eps_per_element.clone(),
        cr_ratio: cr
            .cr_plus_per_element
            .iter()
            .map(|p| p / cr.cr_minus)
            .collect(),
    };
    Ok(StudyRecord {
        n_target,
        n_actual: mesh.n_triangles(),
        flagged: last_flagged,
        h1_error: h1,
        l2_error: l2,
        interp_h1_error: ih1,
        recovery_error_max: rec_err,
        c_eq: quality.c_eq,
        c_ali: quality.c_ali,
        eps: eps.eps,
        cr_plus: cr.cr_plus,
        cr_minus: cr.cr_minus,
        cr_ratio: cr.ratio,
        alpha_h,
        alpha_exact,
        bound_factor: bf,
        times,
        final_mesh: Some(mesh),
        per_element: Some(per_element),
    })
}

/// Run the study without writing any files.
pub fn compute_study(config: &StudyConfig) -> Result<Vec<StudyRecord>> {
    config.validate()?;
    let problem = config.problem()?;
    let mut records = Vec::with_capacity(config.n_targets.len());
    for &n in &config.n_targets {
        match run_point(config, &problem, n) {
            Ok(r) => records.push(r),
            Err(e) => {
                eprintln!("study point n={n} failed: {e}");
                records.push(StudyRecord::failed(n));
            }
        }
    }
    Ok(records)
}

/// Run the study and write all outputs into `config.output_dir`.
pub fn run_study(config: &StudyConfig) -> Result<Vec<StudyRecord>> {
    let records = compute_study(config)?;
    emit_outputs(&records, config)?;
    Ok(records)
}

pub const STUDY_CSV_HEADER: &str = "n_target,n_actual,flagged,h1_error,l2_error,\
interp_h1_error,recovery_error_max,c_eq,c_ali,eps,cr_plus,cr_minus,cr_ratio,\
alpha_h,alpha_exact,bound_factor";

/// Render the 16-column summary CSV.
pub fn study_csv(records: &[StudyRecord]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{STUDY_CSV_HEADER}");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.n_target,
            r.n_actual,
            u8::from(r.flagged),
            fmt_f64(r.h1_error),
            fmt_f64(r.l2_error),
            fmt_f64(r.interp_h1_error),
            fmt_f64(r.recovery_error_max),
            fmt_f64(r.c_eq),
            fmt_f64(r.c_ali),
            fmt_f64(r.eps),
            fmt_f64(r.cr_plus),
            fmt_f64(r.cr_minus),
            fmt_f64(r.cr_ratio),
            fmt_f64(r.alpha_h),
            fmt_f64(r.alpha_exact),
            fmt_f64(r.bound_factor),
        );
    }
    out
}

/// Write `study.csv`, `timings.csv`, per-element CSVs, final meshes, and the
/// plot script.
pub fn emit_outputs(records: &[StudyRecord], config: &StudyConfig) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(Error::NothingToEmit);
    }
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let study_path = dir.join("study.csv");
    std::fs::write(&study_path, study_csv(records))?;
    written.push(study_path);

    let mut timings = String::from("n_target,solve_ms,recover_ms,metric_ms,adapt_ms,diagnostics_ms\n");
    for r in records {
        let _ = writeln!(
            timings,
            "{},{:.3},{:.3},{:.3},{:.3},{:.3}",
            r.n_target,
            r.times.solve_ms,
            r.times.recover_ms,
            r.times.metric_ms,
            r.times.adapt_ms,
            r.times.diagnostics_ms
        );
    }
    let timings_path = dir.join("timings.csv");
    std::fs::write(&timings_path, timings)?;
    written.push(timings_path);

    for r in records {
        if let Some(pe) = &r.per_element {
            let mut csv = String::from("element,area,c_eq_k,c_ali_k,eps_k,cr_ratio_k\n");
            for k in 0..pe.area.len() {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{}",
                    k,
                    fmt_f64(pe.area[k]),
                    fmt_f64(pe.c_eq[k]),
                    fmt_f64(pe.c_ali[k]),
                    fmt_f64(pe.eps[k]),
                    fmt_f64(pe.cr_ratio[k]),
                );
            }
            let p = dir.join(format!("elements_n{}.csv", r.n_target));
            std::fs::write(&p, csv)?;
            written.push(p);
        }
        if let Some(mesh) = &r.final_mesh {
            let p = dir.join(format!("mesh_n{}.txt", r.n_target));
            std::fs::write(&p, mesh_to_string(mesh))?;
            written.push(p);
        }
    }

    let plot_path = dir.join("plot.py");
    std::fs::write(&plot_path, PLOT_SCRIPT)?;
    written.push(plot_path);
    Ok(written)
}

const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Render the study panels from study.csv and elements_n*.csv."""
import csv
import glob
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))


def read_csv(path):
    with open(path) as f:
        rows = list(csv.DictReader(f))
    return rows


study = read_csv(os.path.join(here, "study.csv"))
if not study:
    sys.exit("study.csv is empty")
n = [float(r["n_actual"]) for r in study]

fig, axes = plt.subplots(4, 2, figsize=(11, 16))

element_files = sorted(glob.glob(os.path.join(here, "elements_n*.csv")))
if element_files:
    el = read_csv(element_files[-1])
    for ax, col, label in [
        (axes[0][0], "c_eq_k", "element-wise C_eq,K"),
        (axes[0][1], "c_ali_k", "element-wise C_ali,K"),
        (axes[1][0], "eps_k", "element-wise epsilon"),
        (axes[1][1], "cr_ratio_k", "element-wise C_R+,K / C_R-"),
    ]:
        vals = [float(r[col]) for r in el]
        ax.hist(vals, bins=60)
        ax.set_title(label + f"  ({os.path.basename(element_files[-1])})")

axes[2][0].loglog(n, [float(r["eps"]) for r in study], "o-")
axes[2][0].set_title("epsilon vs N")
axes[2][1].loglog(n, [float(r["cr_ratio"]) for r in study], "o-")
axes[2][1].set_title("C_R+ / C_R- vs N")

h1 = [float(r["h1_error"]) for r in study]
axes[3][0].loglog(n, h1, "o-", label="|u - u_h|_H1")
ref = [h1[0] * (n[0] / x) ** 0.5 for x in n]
axes[3][0].loglog(n, ref, "k--", label="N^(-1/2)")
axes[3][0].set_title("finite element error vs N")
axes[3][0].legend()

axes[3][1].loglog(n, [float(r["alpha_h"]) for r in study], "o-", label="alpha_h")
axes[3][1].loglog(n, [float(r["alpha_exact"]) for r in study], "s--", label="alpha")
axes[3][1].set_title("alpha_h vs alpha")
axes[3][1].legend()

for row in axes:
    for ax in row:
        ax.set_xlabel("N")

fig.tight_layout()
out = os.path.join(here, "panels.png")
fig.savefig(out, dpi=130)
print(f"wrote {out}")
"#;
