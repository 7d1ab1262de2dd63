// Copyright (c) 2026 The geospine Authors
// SPDX-License-Identifier: Apache-2.0

//! `geospine`: optimize, audit and simulate hierarchical spines.
//!
//! Exit codes: 0 success, 1 failed audit, 2 bad input or any other error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use geospine::io::reports::{
    audit_json, estimate_csv, measurements_csv, osed_report_csv, variance_comparison_csv,
    variance_csv,
};
use geospine::io::{
    emit_allocation, emit_spine, load_bundle, parse_allocation, parse_spine, Bundle, BundlePaths,
};
use geospine::privacy::{run_mechanism_replication, Measurement, NoiseMode};
use geospine::{
    audit, osed_all, pareto_pass, stage_one, variance_diagonals, zcdp_to_approx_dp, Allocation,
    BudgetKind, OlsSolver, OptConfig, Spine, VarianceEntry, Workload,
};

#[derive(Parser)]
#[command(
    name = "geospine",
    version,
    about = "Geographic spine optimization and privacy audits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Regroup the spine, bypass low-fanout parents and write reports.
    Optimize(OptimizeArgs),
    /// Check the achieved privacy loss of a spine and allocation.
    Audit(AuditArgs),
    /// Run the mechanism and compare empirical and analytic errors.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Pure,
    Zcdp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Stage {
    /// Regrouping followed by bypassing.
    Full,
    /// Stop after regrouping.
    OsedOnly,
}

#[derive(Args)]
struct Common {
    /// Directory with spine.txt, oses.csv, allocation.json, workload.txt and
    /// optionally histogram.csv.
    #[arg(long, default_value = "fixtures/two_block")]
    bundle: PathBuf,
    /// Spine file replacing the bundle's.
    #[arg(long)]
    spine: Option<PathBuf>,
    /// Allocation file replacing the bundle's.
    #[arg(long)]
    allocation: Option<PathBuf>,
    /// Budget kind, overriding the allocation file.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Epsilon for pure DP. Under zCDP, the epsilon at which delta is reported.
    #[arg(long)]
    eps: Option<f64>,
    /// Rho for zCDP.
    #[arg(long)]
    rho: Option<f64>,
    /// Under zCDP, report delta at this epsilon.
    #[arg(long)]
    delta_for_eps: Option<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 2)]
    fanout_cutoff: usize,
    #[arg(long, value_enum, default_value = "full")]
    stage: Stage,
    #[arg(long, default_value_t = 1000)]
    max_outer_iterations: usize,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    replications: u32,
    /// Draw discrete instead of continuous noise.
    #[arg(long)]
    discrete: bool,
    /// Release exact answers (debugging).
    #[arg(long, conflicts_with = "discrete")]
    zero_noise: bool,
}

/// Loaded inputs after flag overrides.
struct Inputs {
    bundle: Bundle,
    /// Epsilon at which a zCDP delta is reported.
    delta_eps: Option<f64>,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if !(v.is_finite() && v > 0.0) {
        bail!("--{name} must be positive, got {v}");
    }
    Ok(v)
}

fn load(common: &Common) -> Result<Inputs> {
    if common.threads == Some(0) {
        bail!("--threads must be at least 1");
    }
    let paths = BundlePaths::from_dir(&common.bundle);
    let mut bundle = load_bundle(&paths)?;
    if let Some(p) = &common.spine {
        let text = fs::read_to_string(p).with_context(|| p.display().to_string())?;
        let spine = parse_spine(&text, &p.display().to_string())?;
        if spine.num_blocks() != bundle.spine.num_blocks() {
            bail!(
                "spine {} has {} blocks, the bundle has {}",
                p.display(),
                spine.num_blocks(),
                bundle.spine.num_blocks()
            );
        }
        bundle.spine = spine;
    }
    if common.spine.is_some() || common.allocation.is_some() {
        let p = common.allocation.as_ref().unwrap_or(&paths.allocation);
        let text = fs::read_to_string(p).with_context(|| p.display().to_string())?;
        bundle.allocation = parse_allocation(&text, &p.display().to_string(), &bundle.spine)?;
    }

    let kind = match common.mode {
        Some(Mode::Pure) => BudgetKind::Pure,
        Some(Mode::Zcdp) => BudgetKind::Zcdp,
        None => bundle.allocation.kind(),
    };
    let mut delta_eps = common
        .delta_for_eps
        .map(|e| positive("delta-for-eps", e))
        .transpose()?;
    let budget = match kind {
        BudgetKind::Pure => {
            if common.rho.is_some() {
                bail!("--rho applies to zcdp mode only");
            }
            match common.eps {
                Some(e) => positive("eps", e)?,
                None if bundle.allocation.kind() == kind => bundle.allocation.budget(),
                None => bail!("pure mode needs --eps"),
            }
        }
        BudgetKind::Zcdp => {
            if let Some(e) = common.eps {
                if e < 0.0 || !e.is_finite() {
                    bail!("--eps must be nonnegative, got {e}");
                }
                delta_eps.get_or_insert(e);
            }
            match common.rho {
                Some(r) => positive("rho", r)?,
                None if bundle.allocation.kind() == kind => bundle.allocation.budget(),
                None => bail!("zcdp mode needs --rho"),
            }
        }
    };
    bundle.allocation = bundle.allocation.clone().with_budget(kind, budget);
    Ok(Inputs { bundle, delta_eps })
}

fn write(out: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    Ok(builder.build()?)
}

/// Variance report when the workload and query shares allow it.
fn try_variances(
    spine: &Spine,
    alloc: &Allocation,
    bundle: &Bundle,
    rows: &Spine,
) -> Option<Vec<VarianceEntry>> {
    let Some(w) = bundle.workload.uniform() else {
        eprintln!("note: per-level workloads, variance report skipped");
        return None;
    };
    match variance_diagonals(spine, alloc, w, rows) {
        Ok(v) => Some(v),
        Err(e) => {
            eprintln!("note: variance report skipped: {e}");
            None
        }
    }
}

fn cmd_optimize(args: &OptimizeArgs) -> Result<ExitCode> {
    let inputs = load(&args.common)?;
    let bundle = &inputs.bundle;
    let cfg = OptConfig {
        fanout_cutoff: args.fanout_cutoff,
        max_outer_iterations: args.max_outer_iterations,
    };
    if !bundle.allocation.is_fresh() {
        eprintln!("note: regrouping resets per-geounit shares to the geolevel shares");
    }
    let first = stage_one(&bundle.spine, &bundle.oses, &cfg)?;
    let regrouped_alloc = bundle.allocation.rebased(&first.spine)?;
    let (spine, alloc) = match args.stage {
        Stage::OsedOnly => (first.spine.clone(), regrouped_alloc.clone()),
        Stage::Full => pareto_pass(
            &first.spine,
            &regrouped_alloc,
            bundle.allocation.kind().is_pure(),
        ),
    };
    let osed_final = osed_all(&spine, &bundle.oses)?;
    let report = audit(&spine, &alloc, &bundle.workload)?;
    let out = &args.common.out;

    write(out, "spine_optimized.txt", &emit_spine(&spine))?;
    write(
        out,
        "allocation_optimized.json",
        &emit_allocation(&alloc, &spine),
    )?;
    write(
        out,
        "osed_report.csv",
        &osed_report_csv(
            bundle.oses.names(),
            &first.osed_before,
            &first.osed_after,
            &osed_final,
        ),
    )?;
    write(
        out,
        "audit.json",
        &audit_json(&report, conversion(&alloc, inputs.delta_eps)?),
    )?;
    if let Some(v) = try_variances(&first.spine, &regrouped_alloc, bundle, &first.spine) {
        write(out, "variance_before.csv", &variance_csv(&first.spine, &v))?;
    }
    if let Some(v) = try_variances(&spine, &alloc, bundle, &first.spine) {
        write(out, "variance.csv", &variance_csv(&first.spine, &v))?;
    }
    eprintln!(
        "optimized: geounits per level {:?} -> {:?}, OSEDs {:?} -> {:?}, achieved {} of {}",
        bundle.spine.level_sizes(),
        spine.level_sizes(),
        first.osed_before,
        osed_final,
        report.achieved,
        report.budget
    );
    Ok(if report.passes() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn conversion(
    alloc: &Allocation,
    eps: Option<f64>,
) -> Result<Option<(f64, geospine::privacy::Conversion)>> {
    match (alloc.kind(), eps) {
        (BudgetKind::Zcdp, Some(e)) => Ok(Some((e, zcdp_to_approx_dp(alloc.budget(), e)?))),
        _ => Ok(None),
    }
}

fn cmd_audit(args: &AuditArgs) -> Result<ExitCode> {
    let inputs = load(&args.common)?;
    let bundle = &inputs.bundle;
    let report = audit(&bundle.spine, &bundle.allocation, &bundle.workload)?;
    let json = audit_json(&report, conversion(&bundle.allocation, inputs.delta_eps)?);
    print!("{json}");
    write(&args.common.out, "audit.json", &json)?;
    if report.passes() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "audit failed: achieved {} exceeds budget {} on the path to block {}",
            report.achieved,
            report.budget,
            report.worst_path_block + 1
        );
        Ok(ExitCode::from(1))
    }
}

/// Answers of every (geounit, query) of `workload` for a block-id-major
/// vector, in the order of [`variance_diagonals`].
fn workload_answers(spine: &Spine, workload: &Workload, x: &[f64]) -> Vec<f64> {
    let n = workload.num_cells();
    let mut prefix = vec![0.0; (spine.num_blocks() + 1) * n];
    for p in 0..spine.num_blocks() {
        let id = spine.block_id(p);
        for c in 0..n {
            prefix[(p + 1) * n + c] = prefix[p * n + c] + x[id * n + c];
        }
    }
    let mut out = Vec::new();
    let mut cells = vec![0.0; n];
    for id in spine.geounit_ids() {
        let r = spine.geounit(id).expect("listed geounit").blocks();
        for (c, v) in cells.iter_mut().enumerate() {
            *v = prefix[r.end * n + c] - prefix[r.start * n + c];
        }
        for g in workload.groups() {
            out.extend(g.answer(&cells));
        }
    }
    out
}

fn cmd_simulate(args: &SimulateArgs) -> Result<ExitCode> {
    let inputs = load(&args.common)?;
    let bundle = &inputs.bundle;
    let Some(histogram) = &bundle.histogram else {
        bail!(
            "bundle {} has no histogram.csv",
            args.common.bundle.display()
        );
    };
    let Some(workload) = bundle.workload.uniform() else {
        bail!("simulate needs one workload shared by all geolevels");
    };
    if args.replications == 0 {
        bail!("--replications must be at least 1");
    }
    let (spine, alloc) = (&bundle.spine, &bundle.allocation);
    let mode = if args.zero_noise {
        NoiseMode::None
    } else if args.discrete {
        NoiseMode::Discrete
    } else {
        NoiseMode::Continuous
    };
    let solver = OlsSolver::new(spine, alloc, workload)?;
    let analytic = variance_diagonals(spine, alloc, workload, spine)?;
    let x = histogram.as_f64();
    let truth = workload_answers(spine, workload, &x);

    let run = |r: u32| -> geospine::Result<(Vec<Measurement>, Vec<f64>)> {
        let ms = run_mechanism_replication(
            spine,
            alloc,
            &bundle.workload,
            histogram,
            mode,
            args.seed,
            r,
        )?;
        let est = solver.solve(&ms)?;
        Ok((ms, est))
    };
    let (first_ms, first_est) = run(0)?;
    let out = &args.common.out;
    write(out, "measurements.csv", &measurements_csv(spine, &first_ms))?;
    write(
        out,
        "estimate.csv",
        &estimate_csv(workload.num_cells(), &first_est),
    )?;
    write(out, "variance.csv", &variance_csv(spine, &analytic))?;

    let errors: Vec<Vec<f64>> = pool(args.common.threads)?.install(|| {
        (0..args.replications)
            .into_par_iter()
            .map(|r| {
                let (_, est) = run(r)?;
                let answers = workload_answers(spine, workload, &est);
                Ok(answers
                    .iter()
                    .zip(&truth)
                    .map(|(a, t)| (a - t) * (a - t))
                    .collect())
            })
            .collect::<geospine::Result<_>>()
    })?;
    let mut mse = vec![0.0; truth.len()];
    for e in &errors {
        for (m, v) in mse.iter_mut().zip(e) {
            *m += v;
        }
    }
    let reps = f64::from(args.replications);
    let rows: Vec<(VarianceEntry, f64)> = analytic
        .iter()
        .zip(&mse)
        .map(|(a, m)| (*a, m / reps))
        .collect();
    write(
        out,
        "variance_comparison.csv",
        &variance_comparison_csv(spine, &rows),
    )?;

    let worst = rows
        .iter()
        .map(|(a, m)| (m / a.value - 1.0).abs())
        .fold(0.0_f64, f64::max);
    let max_dev = first_est
        .iter()
        .zip(&x)
        .map(|(e, t)| (e - t).abs())
        .fold(0.0_f64, f64::max);
    eprintln!(
        "simulated {} replications: worst relative gap between empirical and analytic error {:.4}; \
         replication 0 max |estimate - truth| {max_dev}",
        args.replications, worst
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Optimize(a) => cmd_optimize(a),
        Command::Audit(a) => cmd_audit(a),
        Command::Simulate(a) => cmd_simulate(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
