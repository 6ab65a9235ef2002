use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hessadapt::metric::MetricKind;
use hessadapt::recovery::RecoveryMethod;
use hessadapt::study::{run_study, StudyConfig};

#[derive(Parser)]
#[command(
    name = "hessadapt",
    about = "Anisotropic mesh adaptation studies driven by recovered Hessians",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence study over a ladder of target mesh sizes.
    Run {
        /// Problem name: quad, flower, or tanh.
        #[arg(long)]
        problem: String,
        /// Hessian source: qls, dlf, lls, wf, or exact.
        #[arg(long)]
        recovery: String,
        /// Metric kind: h1 or l2.
        #[arg(long, default_value = "h1")]
        metric: String,
        /// Comma-separated target element counts, ascending.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        /// Fixed-point iterations of solve/recover/metric/adapt per target.
        #[arg(long, default_value_t = 5)]
        iters: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output directory for CSVs, meshes, and the plot script.
        #[arg(long)]
        out: PathBuf,
        /// Replace the repeated flower bump with its mirrored counterpart.
        #[arg(long)]
        flower_fix_typo: bool,
        /// Dump intermediate meshes for every adaptation pass.
        #[arg(long)]
        debug_meshes: bool,
    },
    /// Run the quick invariant suite (no PDE solves).
    Check,
}

fn init_threads() {
    if let Ok(v) = std::env::var("HESSADAPT_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
}

fn run() -> Result<u8, String> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            problem,
            recovery,
            metric,
            n,
            iters,
            seed,
            out,
            flower_fix_typo,
            debug_meshes,
        } => {
            let recovery = RecoveryMethod::parse(&recovery)
                .ok_or_else(|| format!("unknown recovery method '{recovery}'"))?;
            let metric_kind = match metric.to_ascii_lowercase().as_str() {
                "h1" => MetricKind::H1,
                "l2" => MetricKind::L2,
                other => return Err(format!("unknown metric kind '{other}'")),
            };
            let config = StudyConfig {
                problem,
                recovery,
                metric_kind,
                n_targets: n,
                fixed_point_iters: iters,
                seed,
                output_dir: out,
                flower_fix_typo,
                debug_meshes,
            };
            let records = run_study(&config).map_err(|e| e.to_string())?;
            let mut any_flagged = false;
            for r in &records {
                any_flagged |= r.flagged;
                println!(
                    "n_target {:>7}  n {:>7}  h1 {:>12.5e}  eps {:>10.4}  cr {:>10.4}  \
                     alpha_h {:>9.4}  c_eq {:>6.3}  c_ali {:>6.3}{}",
                    r.n_target,
                    r.n_actual,
                    r.h1_error,
                    r.eps,
                    r.cr_ratio,
                    r.alpha_h,
                    r.c_eq,
                    r.c_ali,
                    if r.flagged { "  [flagged]" } else { "" }
                );
            }
            println!("outputs written to {}", config.output_dir.display());
            Ok(if any_flagged { 2 } else { 0 })
        }
        Command::Check => {
            let results = hessadapt::selfcheck::quick_check();
            let mut all_ok = true;
            for r in &results {
                all_ok &= r.passed;
                println!(
                    "{} {:<34} {}",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name,
                    r.detail
                );
            }
            Ok(if all_ok { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    init_threads();
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
