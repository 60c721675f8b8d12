use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dynaring::config::{read_table, set_override, set_value, ChiralityPattern, ExperimentConfig};
use dynaring::experiment::{
    demo_config, demo_preconditions, replay_config, run_experiment, sweep, Axis, Impossibility,
    SummaryRecord,
};
use dynaring::robots::Algorithm;
use dynaring::{verify, Error};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;

/// Perpetual exploration of dynamic rings by synchronous robots.
#[derive(Parser)]
#[command(name = "dynaring", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and print its summary.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Write one trace line per round to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write a replayable summary (TOML) to this file.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Re-run the config stored in a summary file.
        #[arg(long, conflicts_with_all = ["config", "set"])]
        replay: Option<PathBuf>,
    },
    /// Run the Cartesian product of one or more axes over a config.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// `key=v1,v2,...`, `key=a..b` or `key=a..=b`; repeatable.
        #[arg(long = "axis", value_name = "AXIS")]
        axes: Vec<String>,
    },
    /// Pit a confining adversary against an under-provisioned team.
    DemoImpossible {
        /// `one-robot` or `two-robots`.
        which: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        horizon: u64,
        #[arg(long, default_value = "pef3plus")]
        algorithm: Algorithm,
        /// `uniform` or `alternating`.
        #[arg(long, default_value = "alternating")]
        chirality: String,
        #[arg(long, default_value_t = 0)]
        anchor: usize,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Run the acceptance suite.
    Verify {
        /// Only run these criteria (1-8); repeatable.
        #[arg(long = "criterion", value_name = "ID")]
        criteria: Vec<u8>,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// Config file of dotted `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set robots.k=3`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(..=i64::MAX as u64))]
    seed: Option<u64>,
    #[arg(long)]
    horizon: Option<u64>,
}

impl ConfigArgs {
    fn table(&self) -> Result<toml::Table, Error> {
        let mut table = match &self.config {
            Some(path) => read_table(path)?,
            None => toml::Table::new(),
        };
        for assignment in &self.set {
            set_override(&mut table, assignment)?;
        }
        if let Some(seed) = self.seed {
            set_value(
                &mut table,
                "schedule.seed",
                toml::Value::Integer(seed as i64),
            )?;
        }
        if let Some(horizon) = self.horizon {
            set_value(
                &mut table,
                "run.horizon",
                toml::Value::Integer(horizon as i64),
            )?;
        }
        Ok(table)
    }
}

fn io_error(path: &Path, source: io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn exit_for(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    if err.is_config_error() {
        ExitCode::from(EXIT_CONFIG)
    } else {
        ExitCode::from(EXIT_CHECK_FAILED)
    }
}

fn verdict_exit(passed: bool) -> ExitCode {
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK_FAILED)
    }
}

fn execute(
    config: &ExperimentConfig,
    trace: Option<&Path>,
    summary: Option<&Path>,
) -> Result<SummaryRecord, Error> {
    let record = match trace {
        Some(path) => {
            let file = File::create(path).map_err(|e| io_error(path, e))?;
            let mut w = BufWriter::new(file);
            let (record, _) = run_experiment(config, Some(&mut w))?;
            w.flush().map_err(|e| io_error(path, e))?;
            record
        }
        None if config.run.trace_emit => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            run_experiment(config, Some(&mut lock))?.0
        }
        None => run_experiment(config, None)?.0,
    };
    if let Some(path) = summary {
        std::fs::write(path, record.to_toml()).map_err(|e| io_error(path, e))?;
    }
    Ok(record)
}

fn cmd_run(
    args: &ConfigArgs,
    trace: Option<&Path>,
    summary: Option<&Path>,
    replay: Option<&Path>,
) -> ExitCode {
    let config = match replay {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| io_error(path, e))
            .and_then(|text| replay_config(&text)),
        None => args.table().and_then(ExperimentConfig::from_table),
    };
    let config = match config {
        Ok(c) => c,
        Err(e) => return exit_for(&e),
    };
    log::info!("config digest {}", config.digest());
    match execute(&config, trace, summary) {
        Ok(record) => {
            print!("{}", record.to_text());
            verdict_exit(record.passed())
        }
        Err(e) => exit_for(&e),
    }
}

fn cmd_sweep(args: &ConfigArgs, axes: &[String]) -> ExitCode {
    let parsed: Result<Vec<Axis>, Error> = axes.iter().map(|a| a.parse()).collect();
    let (template, axes) = match args.table().and_then(|t| Ok((t, parsed?))) {
        Ok(v) => v,
        Err(e) => return exit_for(&e),
    };
    let cells = sweep(&template, &axes);
    let (mut pass, mut fail, mut error) = (0, 0, 0);
    for cell in &cells {
        println!("{}", cell.to_line());
        match &cell.outcome {
            Ok(s) if s.passed() => pass += 1,
            Ok(_) => fail += 1,
            Err(_) => error += 1,
        }
    }
    println!(
        "sweep cells={} pass={} fail={} error={}",
        cells.len(),
        pass,
        fail,
        error
    );
    if fail > 0 {
        ExitCode::from(EXIT_CHECK_FAILED)
    } else if error == cells.len() {
        ExitCode::from(EXIT_CONFIG)
    } else {
        ExitCode::SUCCESS
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_demo(
    which: &str,
    n: usize,
    horizon: u64,
    algorithm: Algorithm,
    chirality: &str,
    anchor: usize,
    trace: Option<&Path>,
    summary: Option<&Path>,
) -> ExitCode {
    let which: Impossibility = match which.parse() {
        Ok(w) => w,
        Err(e) => return exit_for(&e),
    };
    let config = demo_config(
        which,
        n,
        horizon,
        algorithm,
        ChiralityPattern::Named(chirality.to_string()),
        anchor,
    );
    if let Err(e) = demo_preconditions(&config) {
        return exit_for(&e);
    }
    match execute(&config, trace, summary) {
        Ok(record) => {
            print!("{}", record.to_text());
            verdict_exit(record.passed())
        }
        Err(e) => exit_for(&e),
    }
}

fn cmd_verify(criteria: &[u8]) -> ExitCode {
    let all: [(u8, fn() -> verify::CriterionOutcome); 8] = [
        (1, verify::criterion_1_coverage),
        (2, verify::criterion_2_tower_bound),
        (3, verify::criterion_3_opposite_dirs),
        (4, verify::criterion_4_sentinels),
        (5, verify::criterion_5_small_rings),
        (6, verify::criterion_6_impossibility),
        (7, verify::criterion_7_determinism),
        (8, verify::criterion_8_golden),
    ];
    if let Some(bad) = criteria.iter().find(|c| !(1..=8).contains(*c)) {
        return exit_for(&Error::Config(format!("no criterion {bad}, expected 1-8")));
    }
    let mut passed = true;
    for (id, f) in all {
        if criteria.is_empty() || criteria.contains(&id) {
            let outcome = f();
            println!("{}", outcome.to_line());
            passed &= outcome.passed;
        }
    }
    verdict_exit(passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match &cli.command {
        Command::Run {
            config,
            trace,
            summary,
            replay,
        } => cmd_run(
            config,
            trace.as_deref(),
            summary.as_deref(),
            replay.as_deref(),
        ),
        Command::Sweep { config, axes } => cmd_sweep(config, axes),
        Command::DemoImpossible {
            which,
            n,
            horizon,
            algorithm,
            chirality,
            anchor,
            trace,
            summary,
        } => cmd_demo(
            which,
            *n,
            *horizon,
            *algorithm,
            chirality,
            *anchor,
            trace.as_deref(),
            summary.as_deref(),
        ),
        Command::Verify { criteria } => cmd_verify(criteria),
    }
}
