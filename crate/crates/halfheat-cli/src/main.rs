//! Batch front door: parse a run specification, dispatch to the library,
//! emit a versioned JSON report plus plot-ready CSV tables.
//!
//! Exit codes: 0 completed, 1 input error, 2 numerical failure,
//! 3 obstructed/diverged verdict (machine-readable outcome for sweeps).

mod runspec;

use anyhow::Context;
use clap::Parser;
use halfheat::conditions::{classify, Verdict};
use halfheat::geometry::Point;
use halfheat::kernelcheck::run_kernel_checks;
use halfheat::measures::LineField;
use halfheat::report::{condition_samples_csv, pair_samples_csv, Envelope, Outcome};
use halfheat::solver::{
    dichotomy_bisect, global_existence_probe, initial_trace, picard_solve, run_verdict,
    DichotomyOutcome, RunVerdict,
};
use halfheat::supersolutions::{
    boundary_threshold, build_gauge_supersolution, data_smallness, gauge_threshold_lhs,
    interior_threshold, verify_supersolution,
};
use runspec::{Command, RunSpec};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser, Debug)]
#[command(
    name = "halfheat",
    about = "Half-space heat kernel checks, measure classification, and monotone solver runs"
)]
struct Cli {
    /// Run specification file (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Output directory for reports and tables.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Seed for randomized invariant sampling.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Double all grid resolutions (trend checks).
    #[arg(long)]
    refine: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .is_err()
        {
            eprintln!("warning: thread pool already initialized");
        }
    }
    let text = match std::fs::read_to_string(&cli.spec) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.spec.display());
            return ExitCode::from(1);
        }
    };
    let spec = match RunSpec::parse(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: invalid run specification: {e:#}");
            return ExitCode::from(1);
        }
    };
    if std::fs::create_dir_all(&cli.out).is_err() {
        eprintln!("error: output directory {} is not writable", cli.out.display());
        return ExitCode::from(1);
    }
    match dispatch(&cli, &spec) {
        Ok(outcome) => match outcome {
            Outcome::Completed => ExitCode::from(0),
            Outcome::ObstructedOrDiverged => ExitCode::from(3),
        },
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn write_report<T: Serialize>(
    out: &Path,
    command: &str,
    seed: u64,
    outcome: Outcome,
    payload: T,
) -> anyhow::Result<()> {
    let envelope = Envelope::new(command, seed, outcome, payload);
    let path = out.join("report.json");
    std::fs::write(&path, serde_json::to_string_pretty(&envelope)?)
        .with_context(|| format!("writing {}", path.display()))?;
    println!("report: {}", path.display());
    Ok(())
}

fn write_table(out: &Path, name: &str, text: &str) -> anyhow::Result<()> {
    let path = out.join(name);
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    println!("table: {}", path.display());
    Ok(())
}

fn dispatch(cli: &Cli, spec: &RunSpec) -> anyhow::Result<Outcome> {
    let out = cli.out.as_path();
    let command = spec.command.name();
    match spec.command {
        Command::KernelCheck => {
            let report = run_kernel_checks(cli.seed, 10_000)?;
            let mut table = String::from("name,computed,reference,error,tolerance,pass\n");
            for row in &report.rows {
                table.push_str(&format!(
                    "\"{}\",{:.12e},{:.12e},{:.3e},{:.1e},{}\n",
                    row.name, row.computed, row.reference, row.error, row.tolerance, row.pass
                ));
                println!("{} {}", if row.pass { "PASS" } else { "FAIL" }, row.name);
            }
            write_table(out, "kernel_checks.csv", &table)?;
            let outcome = if report.all_pass {
                Outcome::Completed
            } else {
                Outcome::ObstructedOrDiverged
            };
            write_report(out, command, cli.seed, outcome, &report)?;
            Ok(outcome)
        }
        Command::Classify => {
            let mu = spec.build_measure()?;
            let classification = classify(&mu, spec.p, spec.horizon)?;
            for rep in &classification.reports {
                println!(
                    "{:?}: {:?} — {}",
                    rep.which_condition, rep.verdict, rep.detail
                );
                let csv = condition_samples_csv(&rep.samples);
                write_table(
                    out,
                    &format!("classify_{:?}.csv", rep.which_condition).to_lowercase(),
                    &csv,
                )?;
            }
            let outcome = if classification.combined == Verdict::ObstructedNonexistence {
                Outcome::ObstructedOrDiverged
            } else {
                Outcome::Completed
            };
            write_report(out, command, cli.seed, outcome, &classification)?;
            Ok(outcome)
        }
        Command::Certify => {
            let mu = spec.build_measure()?;
            let gauge = spec.build_gauge()?;
            let smallness = data_smallness(&mu, spec.p, spec.horizon)?;
            let f = mu
                .weighted_parts()
                .first()
                .cloned()
                .unwrap_or_else(halfheat::measures::ScalarField::zero);
            let h = mu
                .line_parts()
                .first()
                .cloned()
                .unwrap_or_else(LineField::zero);
            let (interior_lhs, boundary_lhs) =
                gauge_threshold_lhs(spec.dim(), &f, &h, gauge, spec.p, spec.horizon)?;
            let candidate = build_gauge_supersolution(spec.dim(), &f, &h, gauge, spec.p)?;
            let grid = spec.build_grid(cli.refine);
            let verification = verify_supersolution(
                &move |x: &Point, t: f64| candidate.total(x, t),
                &mu,
                spec.p,
                &grid,
            )?;
            #[derive(Serialize)]
            struct CertifyPayload {
                data_smallness: halfheat::supersolutions::DataSmallness,
                interior_lhs: f64,
                interior_threshold: f64,
                boundary_lhs: f64,
                boundary_threshold: f64,
                verification: halfheat::supersolutions::VerificationReport,
            }
            let payload = CertifyPayload {
                interior_threshold: interior_threshold(spec.p),
                boundary_threshold: boundary_threshold(spec.p),
                data_smallness: smallness,
                interior_lhs,
                boundary_lhs,
                verification: verification.clone(),
            };
            println!(
                "interior lhs {interior_lhs:.6e} vs threshold {:.6e}; verification pass: {}",
                interior_threshold(spec.p),
                verification.pass
            );
            write_table(
                out,
                "smallness_samples.csv",
                &pair_samples_csv(("s", "integrand"), &payload.data_smallness.samples),
            )?;
            let outcome = if verification.pass {
                Outcome::Completed
            } else {
                Outcome::ObstructedOrDiverged
            };
            write_report(out, command, cli.seed, outcome, &payload)?;
            Ok(outcome)
        }
        Command::Solve => {
            let mu = spec.build_measure()?;
            let grid = spec.build_grid(cli.refine);
            let caps = spec.build_caps();
            let field = picard_solve(&mu, spec.p, &grid, &caps)?;
            write_table(out, "field.csv", &field.export_rows())?;
            let verdict = run_verdict(&field);
            let trace = if verdict == RunVerdict::Diverged || mu.is_zero() {
                vec![]
            } else {
                default_trace(&field, &mu)?
            };
            #[derive(Serialize)]
            struct SolvePayload {
                verdict: RunVerdict,
                sweeps: usize,
                final_sup: f64,
                sup_history: Vec<f64>,
                trace: Vec<halfheat::solver::TraceEntry>,
            }
            let payload = SolvePayload {
                verdict,
                sweeps: field.iteration_count,
                final_sup: field.sup().min(f64::MAX),
                sup_history: field.sup_history.clone(),
                trace,
            };
            println!(
                "solve verdict: {verdict:?} after {} sweeps",
                field.iteration_count
            );
            let outcome = if verdict == RunVerdict::Diverged {
                Outcome::ObstructedOrDiverged
            } else {
                Outcome::Completed
            };
            write_report(out, command, cli.seed, outcome, &payload)?;
            Ok(outcome)
        }
        Command::Dichotomy => {
            let mu = spec.build_measure()?;
            let grid = spec.build_grid(false);
            let caps = spec.build_caps();
            let range = spec.kappa_range.unwrap_or((1e-3, 1e2));
            let outcome_d = dichotomy_bisect(
                &mu,
                spec.p,
                &grid,
                range,
                spec.ratio_tol,
                &caps,
                cli.refine,
            )?;
            let (outcome, runs) = match &outcome_d {
                DichotomyOutcome::Bracket(res) => {
                    println!(
                        "bracket: [{:.6e}, {:.6e}] (ratio {:.3})",
                        res.kappa_lo, res.kappa_hi, res.bracket_ratio
                    );
                    (Outcome::Completed, res.runs.clone())
                }
                DichotomyOutcome::AllDiverge { kappa_min, runs, .. } => {
                    println!("all κ >= {kappa_min:.3e} diverge");
                    (Outcome::ObstructedOrDiverged, runs.clone())
                }
                DichotomyOutcome::AllConverge { kappa_max, runs } => {
                    println!("all κ <= {kappa_max:.3e} converge");
                    (Outcome::Completed, runs.clone())
                }
            };
            let table: Vec<(f64, f64)> = runs
                .iter()
                .map(|(k, v)| (*k, if *v == RunVerdict::Diverged { 1.0 } else { 0.0 }))
                .collect();
            write_table(
                out,
                "dichotomy_runs.csv",
                &pair_samples_csv(("kappa", "diverged"), &table),
            )?;
            write_report(out, command, cli.seed, outcome, &outcome_d)?;
            Ok(outcome)
        }
        Command::Trace => {
            let mu = spec.build_measure()?;
            let grid = spec.build_grid(cli.refine);
            let caps = spec.build_caps();
            let field = picard_solve(&mu, spec.p, &grid, &caps)?;
            let trace = match &spec.test_functions {
                Some(fns) => {
                    let dim = spec.dim();
                    let phis: Vec<Arc<dyn Fn(&Point) -> f64 + Send + Sync>> = fns
                        .iter()
                        .map(|tf| {
                            let center = tf.center.clone();
                            let w2 = 2.0 * tf.width * tf.width;
                            let dimc = dim;
                            Arc::new(move |y: &Point| {
                                let c = Point::new(
                                    dimc,
                                    &center[..dimc.get() - 1],
                                    center[dimc.get() - 1],
                                )
                                .unwrap();
                                (-c.dist_sq(y) / w2).exp()
                            })
                                as Arc<dyn Fn(&Point) -> f64 + Send + Sync>
                        })
                        .collect();
                    let times: Vec<f64> = field.times()[..4].iter().rev().cloned().collect();
                    initial_trace(&field, &phis, &times)?
                }
                None => default_trace(&field, &mu)?,
            };
            let mut table = String::from("test_function,t,pairing\n");
            for (i, entry) in trace.iter().enumerate() {
                for (t, v) in &entry.pairings {
                    table.push_str(&format!("{i},{t:.12e},{v:.12e}\n"));
                }
                println!(
                    "φ_{i}: extrapolated {:.8e} (resolvable: {})",
                    entry.extrapolated, entry.resolvable
                );
            }
            write_table(out, "trace.csv", &table)?;
            write_report(out, command, cli.seed, Outcome::Completed, &trace)?;
            Ok(Outcome::Completed)
        }
        Command::GlobalProbe => {
            let mu = spec.build_measure()?;
            let grid = spec.build_grid(cli.refine);
            let caps = spec.build_caps();
            let horizons = spec
                .horizons
                .clone()
                .unwrap_or_else(|| vec![0.1, 1.0, 10.0, 100.0, 1000.0]);
            let report = global_existence_probe(&mu, spec.p, &horizons, &grid, &caps)?;
            for probe in &report.horizons {
                println!(
                    "T = {:>10.3e}: {:?} (sup {:.3e}, {} sweeps)",
                    probe.horizon, probe.verdict, probe.final_sup, probe.sweeps
                );
            }
            let table: Vec<(f64, f64)> = report
                .horizons
                .iter()
                .map(|p| {
                    (
                        p.horizon,
                        if p.verdict == RunVerdict::Diverged { 1.0 } else { 0.0 },
                    )
                })
                .collect();
            write_table(
                out,
                "global_probe.csv",
                &pair_samples_csv(("horizon", "diverged"), &table),
            )?;
            let outcome = if report.first_diverged.is_some() {
                Outcome::ObstructedOrDiverged
            } else {
                Outcome::Completed
            };
            write_report(out, command, cli.seed, outcome, &report)?;
            Ok(outcome)
        }
    }
}

/// Three spread Gaussian test functions over the measure's support.
fn default_trace(
    field: &halfheat::solver::SolutionField,
    mu: &halfheat::measures::HalfSpaceMeasure,
) -> anyhow::Result<Vec<halfheat::solver::TraceEntry>> {
    let dim = mu.dim();
    let reach = mu.support_radius().max(1.0);
    let mut phis: Vec<Arc<dyn Fn(&Point) -> f64 + Send + Sync>> = Vec::new();
    for frac in [0.25, 0.5, 0.75] {
        let center = Point::on_axis(dim, reach * frac)?;
        let w2 = 2.0 * (0.3 * reach) * (0.3 * reach);
        phis.push(Arc::new(move |y: &Point| (-center.dist_sq(y) / w2).exp()));
    }
    let count = 4.min(field.times().len());
    let times: Vec<f64> = field.times()[..count].iter().rev().cloned().collect();
    Ok(initial_trace(field, &phis, &times)?)
}
