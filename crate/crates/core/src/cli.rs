//! Command-line front end. Exit codes: 0 success, 1 a validation suite
//! failed, 2 bad usage or configuration.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::harness::{
    regret_sweep, run_episodes, write_curve_csv, write_episodes_csv, write_regret_csv, write_summary_csv, SweepSpec,
};
use crate::markdown::curve_value;
use crate::model::PolicyParams;
use crate::policies::{oracle_curve, PolicyKind};
use crate::validate;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "refprice",
    version,
    about = "Pricing under reference effects: markdown curves, policies and regret sweeps"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Markdown curve for the configured instance, written to curve.csv.
    Solve(CommonArgs),
    /// Seeded episodes of the configured policy: episodes.csv and summary.csv.
    Simulate(CommonArgs),
    /// Regret against the clairvoyant curve over run.horizons: regret.csv.
    Sweep(CommonArgs),
    /// Cross-oracle checks of the solver, resets and gradient estimator.
    Validate(CommonArgs),
}

#[derive(Debug, clap::Args)]
pub struct CommonArgs {
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output directory; overrides run.out_dir (default "out").
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads for seed-parallel runs.
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
    /// Dotted overrides such as run.seeds=50.
    #[arg(value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

/// Parses `args` and runs the command. `seed_env` is the value of
/// `REFPRICE_SEED`, if set.
pub fn run<I, T>(args: I, seed_env: Option<&str>, stdout: &mut (dyn Write + Send), stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return if code == 0 { EXIT_OK } else { EXIT_USAGE };
        }
    };
    match dispatch(&cli.command, seed_env, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn dispatch(command: &Command, seed_env: Option<&str>, stdout: &mut (dyn Write + Send)) -> Result<i32> {
    let args = match command {
        Command::Solve(a) | Command::Simulate(a) | Command::Sweep(a) | Command::Validate(a) => a,
    };
    let cfg = ExperimentConfig::load(&args.config, &args.overrides, seed_env)?;
    if matches!(command, Command::Sweep(_)) && cfg.run.horizons.is_empty() {
        return Err(Error::Config("sweep needs a nonempty run.horizons".into()));
    }
    let pool = thread_pool(args.threads)?;
    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg.run.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    pool.install(|| match command {
        Command::Solve(_) => solve(&cfg, &out_dir, stdout),
        Command::Simulate(_) => simulate(&cfg, &out_dir, stdout),
        Command::Sweep(_) => sweep(&cfg, &out_dir, stdout),
        Command::Validate(_) => check(&cfg, stdout),
    })
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn solve(cfg: &ExperimentConfig, out_dir: &Path, stdout: &mut (dyn Write + Send)) -> Result<i32> {
    let inst = cfg.instance();
    let theta = match cfg.policy {
        PolicyKind::MarkdownOracle {
            c1: Some(c1),
            c2: Some(c2),
        } => PolicyParams::new(c1, c2)?,
        _ => inst.theta_star(),
    };
    let curve = oracle_curve(&inst, &theta, cfg.run.r1, cfg.run.horizon)?;
    let value = curve_value(&inst, &curve, cfg.run.r1)?;
    let mut f = create(out_dir, "curve.csv")?;
    write_curve_csv(&mut f, &curve)?;
    f.flush()?;
    writeln!(
        stdout,
        "theta=({}, {}) t_dagger={} value={value} probes={}",
        theta.c1, theta.c2, curve.t_dagger, curve.probes
    )?;
    Ok(EXIT_OK)
}

fn simulate(cfg: &ExperimentConfig, out_dir: &Path, stdout: &mut (dyn Write + Send)) -> Result<i32> {
    let run = &cfg.run;
    let episodes = run_episodes(
        &cfg.instance(),
        &cfg.noise,
        &cfg.policy,
        run.horizon,
        run.r1,
        run.base_seed,
        run.seeds,
    )?;
    let mut f = create(out_dir, "episodes.csv")?;
    write_episodes_csv(&mut f, &episodes)?;
    f.flush()?;
    let mut f = create(out_dir, "summary.csv")?;
    write_summary_csv(&mut f, &episodes)?;
    f.flush()?;
    let mean = episodes.iter().map(|e| e.expected_total).sum::<f64>() / episodes.len() as f64;
    writeln!(
        stdout,
        "{} episodes of {} rounds, mean expected revenue {mean}",
        episodes.len(),
        run.horizon
    )?;
    Ok(EXIT_OK)
}

fn sweep(cfg: &ExperimentConfig, out_dir: &Path, stdout: &mut (dyn Write + Send)) -> Result<i32> {
    let inst = cfg.instance();
    let spec = SweepSpec {
        inst: &inst,
        noise: &cfg.noise,
        policy: &cfg.policy,
        horizons: &cfg.run.horizons,
        seeds: cfg.run.seeds,
        base_seed: cfg.run.base_seed,
        r1: cfg.run.r1,
    };
    let result = regret_sweep(&spec)?;
    let mut f = create(out_dir, "regret.csv")?;
    write_regret_csv(&mut f, &result)?;
    f.flush()?;
    for r in &result.records {
        writeln!(
            stdout,
            "T={} regret={} se={} baseline={}{}",
            r.horizon,
            r.mean_regret,
            r.std_err,
            r.baseline.label(),
            if r.negative {
                " (negative: baseline inconsistency)"
            } else {
                ""
            }
        )?;
    }
    match result.slope {
        Some(s) => writeln!(stdout, "slope={s}")?,
        None => writeln!(stdout, "slope=NA")?,
    }
    Ok(EXIT_OK)
}

fn check(cfg: &ExperimentConfig, stdout: &mut (dyn Write + Send)) -> Result<i32> {
    let report = validate::run_all(cfg.run.base_seed)?;
    write!(stdout, "{report}")?;
    Ok(if report.passed() { EXIT_OK } else { EXIT_VALIDATION })
}
