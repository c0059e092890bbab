//! Command-line front end. [`run_cli`] is the whole program minus process
//! setup, so tests can drive it with in-memory output streams.
//!
//! Exit codes: 0 success, 1 data or runtime errors, 2 configuration errors.

pub mod args;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use clap::Parser;
use log::LevelFilter;
use minipatch::report::{FwerReport, ReplicateReport, RunReport, SimulationReport, Summary, SweepRow};
use minipatch::synth::binomial_margin;
use minipatch::{
    f1_score, fwer_experiment, generate_toeplitz, io, oracle_select, run, DataMatrix, EngineConfig, Error, FwerConfig,
    SamplerConfig, ScenarioConfig,
};
use serde::Serialize;

use crate::args::{Cli, Command, EngineArgs, FileFormat, FwerArgs, GenerateArgs, ScenarioArgs, SelectArgs, SimulateArgs};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug)]
enum Failure {
    Config(String),
    Data(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { field, message } => {
                Failure::Config(format!("invalid value for --{}: {message}", field.replace('_', "-")))
            }
            other => Failure::Data(other.to_string()),
        }
    }
}

/// Parses `args` (including the program name) and runs the chosen command.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let outcome = match &cli.command {
        Command::Select(a) => select(a, stdout, stderr),
        Command::Simulate(a) => simulate(a, stdout, stderr),
        Command::Fwer(a) => fwer(a, stdout),
        Command::Generate(a) => generate(a),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(Failure::Config(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_CONFIG
        }
        Err(Failure::Data(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_DATA
        }
    }
}

fn init_logging(verbose: bool) {
    let level = if verbose { LevelFilter::Debug } else { LevelFilter::Warn };
    // A second initialisation (repeated in-process runs) is harmless.
    let _ = env_logger::Builder::new()
        .filter_level(LevelFilter::Warn)
        .filter_module("minipatch", level)
        .format_timestamp(None)
        .try_init();
    log::set_max_level(level);
}

fn emit<T: Serialize>(report: &T, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), Failure> {
    let write = |w: &mut dyn Write| -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut *w, report)?;
        writeln!(w)
    };
    let res = match out {
        Some(path) => File::create(path).and_then(|f| {
            let mut w = BufWriter::new(f);
            write(&mut w)?;
            w.flush()
        }),
        None => write(stdout),
    };
    res.map_err(|e| Failure::Data(format!("cannot write report: {e}")))
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool, Failure> {
    if threads == 0 {
        return Err(Failure::Config("invalid value for --threads: must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::Data(e.to_string()))
}

fn engine_config(a: &EngineArgs, n: usize, m: usize, seed: u64) -> EngineConfig {
    let sampler = SamplerConfig {
        n,
        m,
        scheme: a.sampler,
        epochs: a.epochs,
        pi_active: a.pi_active,
        gamma_ramp_iters: a.gamma_ramp_iters,
        seed,
    };
    let mut cfg = EngineConfig::new(sampler, a.selector_spec());
    cfg.pi_thr = a.pi_thr;
    cfg.threshold = a.threshold;
    cfg.tau_l = a.tau_l;
    cfg.tau_u = a.tau_u;
    cfg.patience = a.patience;
    cfg.max_iters = a.max_iters;
    cfg.threads = a.threads;
    cfg
}

fn select(a: &SelectArgs, stdout: &mut dyn Write, _stderr: &mut dyn Write) -> Result<(), Failure> {
    init_logging(a.engine.verbose);
    let n = a.engine.n.ok_or_else(|| Failure::Config("missing required flag --n".into()))?;
    let m = a.engine.m.ok_or_else(|| Failure::Config("missing required flag --m".into()))?;
    let data = if a.binary {
        io::read_binary(&a.data)?
    } else {
        io::read_csv(&a.data, a.response.as_deref())?
    };
    let config = engine_config(&a.engine, n, m, a.engine.seed);
    let result = run(&data, &config)?;
    emit(&RunReport::new(&result, &data), a.engine.out.as_deref(), stdout)
}

fn scenario(a: &ScenarioArgs, seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        n_obs: a.n_obs,
        n_features: a.n_features,
        support_size: a.support,
        rho: a.rho,
        snr: a.snr,
        seed,
    }
}

/// Sampler seed for replicate `r`, decorrelated from the scenario seed.
fn run_seed(base: u64, r: usize) -> u64 {
    base.wrapping_add(r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0x5EED
}

fn replicate(
    a: &SimulateArgs,
    r: usize,
    n: usize,
    m: usize,
) -> Result<ReplicateReport, Failure> {
    let scenario_seed = a.engine.seed.wrapping_add(r as u64);
    let (data, truth) = generate_toeplitz(&scenario(&a.scenario, scenario_seed))?;
    let config = engine_config(&a.engine, n, m, run_seed(a.engine.seed, r));
    let result = run(&data, &config)?;
    let oracle = oracle_select(&result.frequencies, truth.support.len())?;
    Ok(ReplicateReport {
        scenario_seed,
        f1_data_driven: f1_score(&result.stable_set, &truth.support),
        f1_oracle: f1_score(&oracle, &truth.support),
        run: RunReport::new(&result, &data),
        ground_truth: truth,
    })
}

fn simulate(a: &SimulateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    init_logging(a.engine.verbose);
    if a.reps == 0 {
        return Err(Failure::Config("invalid value for --reps: need at least one replicate".into()));
    }
    let scen = scenario(&a.scenario, a.engine.seed);
    scen.validate()?;
    let pool = thread_pool(a.engine.threads)?;

    let default_m = (5 * a.scenario.support).min(a.scenario.n_features);
    let m = a.engine.m.unwrap_or(default_m);
    let n = a.engine.n.unwrap_or_else(|| (5 * m).min(a.scenario.n_obs));

    let mut report = SimulationReport {
        scenario: scen,
        replicates: Vec::new(),
        f1_data_driven: None,
        f1_oracle: None,
        sweep: None,
    };

    if a.sweep {
        let cells: Vec<(usize, usize)> = a
            .sweep_m_mult
            .iter()
            .flat_map(|&mm| a.sweep_n_mult.iter().map(move |&nm| (mm * a.scenario.support, nm * mm * a.scenario.support)))
            .collect();
        let mut rows = Vec::with_capacity(cells.len());
        for (m, n) in cells {
            if m == 0 || m > a.scenario.n_features || n > a.scenario.n_obs {
                let _ = writeln!(stderr, "skipping sweep cell m = {m}, n = {n}: exceeds data dimensions");
                continue;
            }
            let reps = run_replicates(&pool, a, n, m)?;
            let dd: Vec<f64> = reps.iter().map(|r| r.f1_data_driven).collect();
            let or: Vec<f64> = reps.iter().map(|r| r.f1_oracle).collect();
            rows.push(SweepRow {
                m,
                n,
                f1_data_driven: Summary::of(&dd),
                f1_oracle: Summary::of(&or),
                mean_iterations: reps.iter().map(|r| r.run.iterations_run as f64).sum::<f64>() / reps.len() as f64,
                mean_wall_time_secs: reps.iter().map(|r| r.run.wall_time_secs).sum::<f64>() / reps.len() as f64,
            });
        }
        let _ = writeln!(stderr, "{:>6} {:>6} {:>10} {:>10} {:>10}", "m", "n", "F1 data", "F1 oracle", "iters");
        for row in &rows {
            let _ = writeln!(
                stderr,
                "{:>6} {:>6} {:>10.3} {:>10.3} {:>10.0}",
                row.m, row.n, row.f1_data_driven.mean, row.f1_oracle.mean, row.mean_iterations
            );
        }
        report.sweep = Some(rows);
    } else {
        let reps = run_replicates(&pool, a, n, m)?;
        let dd: Vec<f64> = reps.iter().map(|r| r.f1_data_driven).collect();
        let or: Vec<f64> = reps.iter().map(|r| r.f1_oracle).collect();
        report.f1_data_driven = Some(Summary::of(&dd));
        report.f1_oracle = Some(Summary::of(&or));
        report.replicates = reps;
    }
    emit(&report, a.engine.out.as_deref(), stdout)
}

fn run_replicates(pool: &rayon::ThreadPool, a: &SimulateArgs, n: usize, m: usize) -> Result<Vec<ReplicateReport>, Failure> {
    use rayon::prelude::*;
    pool.install(|| (0..a.reps).into_par_iter().map(|r| replicate(a, r, n, m)).collect())
}

fn fwer(a: &FwerArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    init_logging(false);
    let mut cfg = FwerConfig::new(a.n_features, a.n_obs, a.n, a.m, a.alpha, a.reps, a.seed);
    cfg.pi_thr = a.pi_thr;
    cfg.iterations = a.iterations;
    let pool = thread_pool(a.threads)?;
    // A low replicate count is logged to stderr by the experiment and recorded in the report.
    let outcome = pool.install(|| fwer_experiment(&cfg))?;
    let report = FwerReport {
        n_features: a.n_features,
        n_obs: a.n_obs,
        n: a.n,
        m: a.m,
        pi_thr: a.pi_thr,
        seed: a.seed,
        empirical_fwer: outcome.empirical_fwer,
        bound: outcome.alpha,
        margin: binomial_margin(outcome.alpha, a.reps),
        within_bound: outcome.empirical_fwer <= outcome.alpha + outcome.margin,
        outcome,
    };
    emit(&report, a.out.as_deref(), stdout)
}

fn generate(a: &GenerateArgs) -> Result<(), Failure> {
    let (data, truth) = generate_toeplitz(&scenario(&a.scenario, a.seed))?;
    write_data(&data, &a.out, a.format)?;
    if let Some(path) = &a.truth {
        let mut sink = Vec::new();
        emit(&truth, Some(path), &mut sink)?;
    }
    Ok(())
}

fn write_data(data: &DataMatrix, path: &Path, format: FileFormat) -> Result<(), Failure> {
    match format {
        FileFormat::Csv => io::write_csv(path, data, "y")?,
        FileFormat::Binary => io::write_binary(path, data)?,
    }
    Ok(())
}
