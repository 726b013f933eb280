//! Command-line front end: `fit`, `plan` and `pg-selftest`.
//!
//! Exit codes: 0 success, 1 validation (including violated theorem
//! conditions), 2 runtime or numerical failure, 3 I/O.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::diagnostics::summarize;
use crate::ergodicity::{ergodicity_report, ErgodicityReport, IterationBudget};
use crate::error::{Error, Result};
use crate::gibbs::{run_chain, ChainOutput, DrawMatrix};
use crate::io::{
    draws_csv, draws_file_name, ingest_csv, to_json, write_atomic, ChainRecord, ColumnLabel, Ingested, RunConfig,
    RunSummary, Software,
};
use crate::model::{assemble_workspace, Priors};
use crate::oracles::pg_selftest;
use crate::rng::chain_seed;

#[derive(Debug, Parser)]
#[command(name = "pgglmm", version, about = "Polya-Gamma Gibbs sampling for logistic mixed models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the sampler and write draws plus a summary.
    Fit(RunArgs),
    /// Compute the ergodicity bound and iteration budgets without sampling.
    Plan(RunArgs),
    /// Run the Polya-Gamma sampler correctness battery.
    PgSelftest(SelftestArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides sampler.seed (ignored by plan).
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    quiet: bool,
    /// Overrides sampler.threads.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Writes selftest.json into this directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    quiet: bool,
    /// Draws per Monte Carlo check.
    #[arg(long, default_value_t = 100_000)]
    draws: usize,
    /// Draws for the Kolmogorov-Smirnov check.
    #[arg(long, default_value_t = 10_000)]
    ks_draws: usize,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if code == 0 { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::Fit(a) => fit(&a, out),
        Command::Plan(a) => plan(&a, out),
        Command::PgSelftest(a) => selftest(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

struct Prepared {
    config: RunConfig,
    ingested: Ingested,
    priors: Priors,
}

fn prepare(a: &RunArgs) -> Result<Prepared> {
    let mut config = RunConfig::load(&a.config)?;
    if let Some(seed) = a.seed {
        config.sampler.seed = seed;
    }
    if let Some(t) = a.threads {
        config.sampler.threads = t;
    }
    if let Some(dir) = &a.out {
        config.output.dir = std::env::current_dir().map(|c| c.join(dir)).unwrap_or_else(|_| dir.clone());
    }
    let ingested = ingest_csv(&config.data_path(), &config.data)?;
    let priors = config.priors(ingested.dataset.p(), &ingested.groups)?;
    Ok(Prepared {
        config,
        ingested,
        priors,
    })
}

fn report_for(p: &Prepared) -> Result<ErgodicityReport> {
    let ws = assemble_workspace(&p.ingested.dataset, &p.ingested.groups, &p.priors)?;
    ergodicity_report(&ws, &p.priors, p.config.planner.sigma1, &p.config.planner.epsilon)
}

fn describe_budget(b: &IterationBudget) -> String {
    match b {
        IterationBudget::Exact(m) => m.to_string(),
        IterationBudget::Astronomical { log10_iterations } => format!("~1e{log10_iterations:.1}"),
    }
}

fn print_report(out: &mut dyn Write, r: &ErgodicityReport) {
    let delta = if r.delta() > 0.0 {
        format!("{:.6e}", r.delta())
    } else {
        "exp(log delta), below f64 range".to_string()
    };
    let _ = writeln!(
        out,
        "delta >= {delta} (log delta = {:.6}); alternative Sigma1 coefficient: log delta = {:.6}",
        r.log_delta(),
        r.alternative.log_delta
    );
    for b in &r.budgets {
        let _ = writeln!(out, "  TV <= {}: m* = {}", b.epsilon, describe_budget(&b.m_star));
    }
}

fn plan(a: &RunArgs, out: &mut dyn Write) -> Result<i32> {
    let p = prepare(a)?;
    let report = report_for(&p)?;
    let dir = p.config.output_dir();
    write_atomic(&dir.join("plan.json"), to_json(&report)?.as_bytes())?;
    if !a.quiet {
        print_report(out, &report);
        let _ = writeln!(out, "wrote {}", dir.join("plan.json").display());
    }
    Ok(0)
}

fn fit(a: &RunArgs, out: &mut dyn Write) -> Result<i32> {
    let p = prepare(a)?;
    let base = p.config.sampler_config()?;
    let chains = p.config.sampler.chains;
    let (ergodicity, ergodicity_unavailable) = match report_for(&p) {
        Ok(r) => (Some(r), None),
        Err(Error::TheoremConditions(msg)) => (None, Some(msg)),
        Err(e) => return Err(e),
    };
    let started = Instant::now();
    let outputs: Vec<Result<ChainOutput>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..chains)
            .map(|k| {
                let mut cfg = base.clone();
                cfg.seed = chain_seed(base.seed, k as u64);
                let (d, g, pr) = (&p.ingested.dataset, &p.ingested.groups, &p.priors);
                s.spawn(move || run_chain(&cfg, d, g, pr))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::numeric("sampler thread panicked"))))
            .collect()
    });
    let outputs: Vec<ChainOutput> = outputs.into_iter().collect::<Result<_>>()?;
    let wall = started.elapsed().as_secs_f64();

    let dir = p.config.output_dir();
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    let mut records = Vec::new();
    let mut pooled = DrawMatrix::new(outputs[0].draws.names().to_vec());
    for (k, o) in outputs.iter().enumerate() {
        let name = draws_file_name("draws", k, chains);
        files.push((dir.join(&name), draws_csv(&o.draws)));
        let omega_file = o.omega.as_ref().map(|om| {
            let n = draws_file_name("omega", k, chains);
            files.push((dir.join(&n), draws_csv(om)));
            n
        });
        for row in o.draws.rows() {
            pooled.push_row(row)?;
        }
        records.push(ChainRecord {
            chain: k + 1,
            seed: chain_seed(base.seed, k as u64),
            draws_file: name,
            omega_file,
            wall_clock_seconds: o.elapsed.as_secs_f64(),
            summary: summarize(&o.draws)?,
        });
    }
    let summary = RunSummary {
        software: Software::current(),
        seed: base.seed,
        chains,
        threads: base.threads,
        observations: p.ingested.dataset.len(),
        n_total: p.ingested.dataset.n().iter().map(|&n| n as u64).sum(),
        columns: p
            .ingested
            .column_labels()
            .into_iter()
            .map(|(column, source)| ColumnLabel { column, source })
            .collect(),
        wall_clock_seconds: wall,
        summary: summarize(&pooled)?,
        chain_runs: records,
        ergodicity,
        ergodicity_unavailable,
        config: p.config.clone(),
    };
    files.push((dir.join("summary.json"), to_json(&summary)?));
    // Everything is rendered before the first file is replaced.
    for (path, text) in &files {
        write_atomic(path, text.as_bytes())?;
    }
    if !a.quiet {
        let _ = writeln!(out, "{chains} chain(s), {} retained draws each, {wall:.2} s", outputs[0].draws.nrows());
        let _ = writeln!(out, "{:<10} {:>12} {:>12} {:>12} {:>10}", "parameter", "mean", "sd", "mcse", "ess");
        for s in &summary.summary.parameters {
            let _ = writeln!(out, "{:<10} {:>12.6} {:>12.6} {:>12.3e} {:>10.1}", s.name, s.mean, s.sd, s.mcse, s.ess);
        }
        match (&summary.ergodicity, &summary.ergodicity_unavailable) {
            (Some(r), _) => print_report(out, r),
            (None, Some(msg)) => {
                let _ = writeln!(out, "ergodicity bound unavailable: {msg}");
            }
            _ => {}
        }
        let _ = writeln!(out, "wrote {}", dir.display());
    }
    Ok(0)
}

fn selftest(a: &SelftestArgs, out: &mut dyn Write) -> Result<i32> {
    if a.draws < 2 || a.ks_draws < 2 {
        return Err(Error::validation("--draws and --ks-draws must be at least 2"));
    }
    let report = pg_selftest(a.seed, a.draws, a.ks_draws);
    if let Some(dir) = &a.out {
        write_atomic(&dir.join("selftest.json"), to_json(&report)?.as_bytes())?;
    }
    if !a.quiet {
        for c in &report.checks {
            let _ = writeln!(out, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
    }
    Ok(if report.passed() { 0 } else { 2 })
}
