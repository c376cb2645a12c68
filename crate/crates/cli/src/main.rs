//! `koordsim`: compile Koord programs, run simulations, measure message
//! scaling and extract plot data from traces.
//!
//! Exit codes:
//! - `compile`: 0 clean, 1 diagnostics, 2 unreadable source.
//! - `simulate`: 0 pass, 2 config error, 3 monitor violation, 4 agent fault.
//! - `scaling`: 0 ok, 2 unknown app or bad arguments, 4 a run failed.
//! - `trace`: 0 ok, 2 unreadable or malformed trace.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use koordsim::config::{self, SimConfig};
use koordsim::harness::{self, RunOptions};
use koordsim::monitor;
use koordsim::scaling::{self, ScalingError};
use koordsim::trace::Trace;
use koordsim::transport::NetMode;

#[derive(Parser)]
#[command(name = "koordsim", version, about = "Koord compiler and multi-robot simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check a Koord program.
    Compile {
        source: PathBuf,
        /// Fleet size to check pid-indexed arrays against.
        #[arg(long, default_value_t = 4)]
        robots: usize,
    },
    /// Run a simulation from a config file.
    Simulate {
        config: PathBuf,
        /// Write the trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's transport.
        #[arg(long, value_enum)]
        net: Option<Net>,
        /// Stop at the first separation violation.
        #[arg(long)]
        halt_on_violation: bool,
        /// Write the key=value metrics report here instead of stdout.
        #[arg(long)]
        metrics: Option<PathBuf>,
        /// Per-robot traffic CSV.
        #[arg(long)]
        robots_csv: Option<PathBuf>,
        /// Minimum pairwise distance CSV.
        #[arg(long)]
        distances_csv: Option<PathBuf>,
        /// Per-task claim and visit CSV.
        #[arg(long)]
        tasks_csv: Option<PathBuf>,
    },
    /// Fleet traffic against fleet size for a formation app.
    Scaling {
        /// shapeform or lineform
        app: String,
        #[arg(long, value_delimiter = ',', default_values_t = [2, 4, 8, 16])]
        counts: Vec<usize>,
        /// Simulated seconds per run.
        #[arg(long, default_value_t = 30.0)]
        duration: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract CSV tables from a trace.
    Trace {
        #[arg(value_enum)]
        table: Table,
        trace: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Net {
    #[value(name = "in_process")]
    InProcess,
    Udp,
}

#[derive(Clone, Copy, ValueEnum)]
enum Table {
    /// time,min_distance
    Distances,
    /// One row per task with claim and visit times.
    Visits,
    /// pid,time,x,y,z
    Positions,
}

const EXIT_DIAGNOSTICS: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_VIOLATION: u8 = 3;
const EXIT_FAULT: u8 = 4;

/// Stdout without the panic when the reader goes away early.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), String> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            emit(text);
            Ok(())
        }
    }
}

fn compile(source: &Path, robots: usize) -> ExitCode {
    let file = source.display().to_string();
    let text = match fs::read_to_string(source) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{file}: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match koord::compile(&text, robots) {
        Ok((table, warnings)) => {
            for w in &warnings {
                eprintln!("{}", w.render(&file));
            }
            if !warnings.is_empty() {
                return ExitCode::from(EXIT_DIAGNOSTICS);
            }
            println!("{file}: ok, {} events, {} shared variables", table.events.len(), table.shared.len());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprint!("{}", e.render(&file));
            ExitCode::from(EXIT_DIAGNOSTICS)
        }
    }
}

struct SimulateArgs {
    config: PathBuf,
    trace: Option<PathBuf>,
    seed: Option<u64>,
    net: Option<Net>,
    halt_on_violation: bool,
    metrics: Option<PathBuf>,
    robots_csv: Option<PathBuf>,
    distances_csv: Option<PathBuf>,
    tasks_csv: Option<PathBuf>,
}

fn simulate(a: SimulateArgs) -> ExitCode {
    let mut cfg = match SimConfig::load(&a.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: {e}", a.config.display());
            return ExitCode::from(EXIT_USAGE);
        }
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
        cfg.net.seed = seed;
    }
    match a.net {
        Some(Net::InProcess) => cfg.net.mode = NetMode::InProcess,
        Some(Net::Udp) => cfg.net.mode = NetMode::Udp,
        None => {}
    }
    cfg.halt_on_violation |= a.halt_on_violation;
    let out = match harness::run(&cfg, RunOptions::default()) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{}: {e}", a.config.display());
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let mut outputs = vec![(a.metrics.as_deref(), out.metrics.report())];
    if let Some(p) = &a.trace {
        outputs.push((Some(p), out.trace.to_string()));
    }
    if let Some(p) = &a.robots_csv {
        outputs.push((Some(p), out.metrics.robots_csv()));
    }
    if let Some(p) = &a.distances_csv {
        outputs.push((Some(p), harness::distances_csv(&out.safety)));
    }
    if let (Some(p), Some(v)) = (&a.tasks_csv, &out.visits) {
        outputs.push((Some(p), harness::tasks_csv(v)));
    }
    for (path, text) in outputs {
        if let Err(e) = write_out(path, &text) {
            eprintln!("{e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let verdict = |pass: bool| if pass { "PASS" } else { "FAIL" };
    eprintln!("safety: {} (min distance {:.3} m)", verdict(out.safety.pass), out.safety.min);
    if let Some(v) = out.safety.first_violation {
        eprintln!("  pids {} and {} at {:.3} m, t = {} s", v.pids.0, v.pids.1, v.distance, koordsim::trace::fmt_time(v.time));
    }
    if let Some(v) = &out.visits {
        eprintln!("visits: {} ({}/{} tasks)", verdict(v.pass), v.completed(), v.tasks.len());
        for p in &v.problems {
            eprintln!("  {p}");
        }
    }
    for (pid, f) in &out.faults {
        eprintln!("fault: pid {pid}: {f}");
    }
    if !out.monitors_pass() {
        ExitCode::from(EXIT_VIOLATION)
    } else if !out.faults.is_empty() {
        ExitCode::from(EXIT_FAULT)
    } else {
        ExitCode::SUCCESS
    }
}

fn scaling_cmd(app: &str, counts: &[usize], duration: f64, seed: u64, out: Option<&Path>) -> ExitCode {
    if duration.is_nan() || duration <= 0.0 {
        eprintln!("duration must be positive");
        return ExitCode::from(EXIT_USAGE);
    }
    match scaling::run(app, counts, duration, seed) {
        Ok(report) => match write_out(out, &report.csv()) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(EXIT_USAGE)
            }
        },
        Err(e @ (ScalingError::UnknownApp(_) | ScalingError::BadCount | ScalingError::Config { .. })) => {
            eprintln!("{e}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(EXIT_FAULT)
        }
    }
}

fn trace_cmd(table: Table, path: &Path) -> ExitCode {
    let parsed = fs::read_to_string(path).map_err(|e| e.to_string()).and_then(|t| Trace::parse(&t).map_err(|e| e.to_string()));
    let trace = match parsed {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let text = match table {
        Table::Distances => {
            let d_s = trace.header_f64("d_s").unwrap_or(config::DEFAULT_D_S);
            harness::distances_csv(&monitor::safety(&trace, d_s))
        }
        Table::Visits => {
            let eps_v = trace.header_f64("eps_v").unwrap_or(config::DEFAULT_EPS_V);
            let delta_v = trace.header_f64("delta_v").unwrap_or(config::DEFAULT_DELTA_V);
            harness::tasks_csv(&monitor::visits(&trace, &trace.header_tasks(), eps_v, delta_v))
        }
        Table::Positions => harness::positions_csv(&trace),
    };
    emit(&text);
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Compile { source, robots } => compile(&source, robots),
        Command::Simulate {
            config,
            trace,
            seed,
            net,
            halt_on_violation,
            metrics,
            robots_csv,
            distances_csv,
            tasks_csv,
        } => simulate(SimulateArgs { config, trace, seed, net, halt_on_violation, metrics, robots_csv, distances_csv, tasks_csv }),
        Command::Scaling { app, counts, duration, seed, out } => scaling_cmd(&app, &counts, duration, seed, out.as_deref()),
        Command::Trace { table, trace } => trace_cmd(table, &trace),
    }
}
