use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};

use portalsim::harness::agents::{run_agents, AgentKind};
use portalsim::harness::metrics::{compute_metrics, Metrics};
use portalsim::harness::sweep::{run_sweep, write_csv, SweepRow, SweepPlan};
use portalsim::netsim::{SessionConfig, SessionLog};
use portalsim::viewsync::Variant;
use portalsim::world::Complexity;

#[derive(Parser)]
#[command(name = "portalsim", version, about = "Simulate two-user shared-view VR sessions")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    /// Divide for baseline, window for every other variant.
    Auto,
    Divide,
    Window,
}

impl PolicyArg {
    fn kind(self) -> Option<AgentKind> {
        match self {
            PolicyArg::Auto => None,
            PolicyArg::Divide => Some(AgentKind::Divide),
            PolicyArg::Window => Some(AgentKind::Window),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one session and write its event log.
    Run {
        #[arg(long)]
        variant: Variant,
        #[arg(long, default_value = "complex")]
        task: Complexity,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 600.0)]
        duration_s: f64,
        #[arg(long, default_value_t = 50)]
        tick_hz: u32,
        #[arg(long, default_value_t = 50.0)]
        latency_ms: f64,
        #[arg(long, default_value_t = 5.0)]
        jitter_ms: f64,
        #[arg(long, value_enum, default_value = "auto")]
        policy: PolicyArg,
        /// Log destination; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute metrics from a saved log.
    Metrics {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Run many seeds of several variants and write one CSV row per session.
    Sweep {
        /// Comma-separated variant names.
        #[arg(long, value_delimiter = ',', required = true)]
        variants: Vec<Variant>,
        #[arg(long, default_value = "complex")]
        task: Complexity,
        /// Half-open seed range such as `0..30`.
        #[arg(long, value_parser = parse_seeds)]
        seeds: std::ops::Range<u64>,
        #[arg(long, value_enum, default_value = "auto")]
        policy: PolicyArg,
        #[arg(long)]
        duration_s: Option<f64>,
        /// Run sessions one at a time.
        #[arg(long)]
        serial: bool,
        /// CSV destination; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_seeds(s: &str) -> Result<std::ops::Range<u64>, String> {
    let (a, b) = s.split_once("..").ok_or("expected N..M")?;
    let a: u64 = a.trim().parse().map_err(|e| format!("bad start: {e}"))?;
    let b: u64 = b.trim().parse().map_err(|e| format!("bad end: {e}"))?;
    if a >= b {
        return Err(format!("empty seed range {a}..{b}"));
    }
    Ok(a..b)
}

enum Failure {
    BadArgs(anyhow::Error),
    Run(anyhow::Error),
}

fn output(path: Option<&PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn metrics_csv(m: &Metrics) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "matched",
        "placed",
        "accuracy",
        "dist_p1_m",
        "dist_p2_m",
        "teleports_p1",
        "teleports_p2",
        "use_time",
        "ticks",
    ])?;
    w.write_record([
        m.matched.to_string(),
        m.placed.to_string(),
        m.accuracy.map(|a| a.to_string()).unwrap_or_default(),
        m.accumulated_distance[0].to_string(),
        m.accumulated_distance[1].to_string(),
        m.teleport_count[0].to_string(),
        m.teleport_count[1].to_string(),
        m.use_time.to_string(),
        m.ticks.to_string(),
    ])?;
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn execute(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Run {
            variant,
            task,
            seed,
            duration_s,
            tick_hz,
            latency_ms,
            jitter_ms,
            policy,
            out,
        } => {
            let kind = policy.kind().unwrap_or(AgentKind::default_for(variant));
            let mut config = SessionConfig::new(variant, task, kind, seed);
            config.duration_s = duration_s;
            config.tick_hz = tick_hz;
            config.net.latency_ms = latency_ms;
            config.net.jitter_ms = jitter_ms;
            config.validate().map_err(|e| Failure::BadArgs(e.into()))?;
            let log = run_agents(config).map_err(|e| Failure::Run(e.into()))?;
            let run = || -> anyhow::Result<()> {
                let mut w = output(out.as_ref())?;
                log.write_to(&mut w)?;
                w.flush()?;
                if out.is_some() {
                    let m = compute_metrics(&log)?;
                    println!("{}", serde_json::to_string(&m)?);
                }
                Ok(())
            };
            run().map_err(Failure::Run)
        }
        Cmd::Metrics { log, format } => {
            let run = || -> anyhow::Result<()> {
                let log = SessionLog::load(&log).with_context(|| format!("reading {}", log.display()))?;
                let m = compute_metrics(&log)?;
                match format {
                    Format::Json => println!("{}", serde_json::to_string_pretty(&m)?),
                    Format::Csv => print!("{}", metrics_csv(&m)?),
                }
                Ok(())
            };
            run().map_err(Failure::Run)
        }
        Cmd::Sweep {
            variants,
            task,
            seeds,
            policy,
            duration_s,
            serial,
            out,
        } => {
            if duration_s.is_some_and(|d| !(d.is_finite() && d > 0.0)) {
                return Err(Failure::BadArgs(anyhow!("duration must be positive")));
            }
            let plan = SweepPlan {
                variants,
                complexity: task,
                seeds,
                policy: policy.kind(),
                duration_s,
            };
            let run = || -> anyhow::Result<()> {
                let rows: Vec<SweepRow> = run_sweep(&plan.configs(), !serial)?;
                let mut w = output(out.as_ref())?;
                write_csv(&rows, &mut w)?;
                w.flush()?;
                Ok(())
            };
            run().map_err(Failure::Run)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::BadArgs(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
