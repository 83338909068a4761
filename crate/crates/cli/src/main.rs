//! `flowlab`: run the analytic, fluid and packet engines on a scenario file,
//! compare them, or sweep one scenario key.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use flowlab_core::fluid::{self, FluidOptions};
use flowlab_core::packetsim::{self, PacketOptions, PacketSimReport};
use flowlab_core::{analytic, Scenario, ScenarioDoc, SteadyStateSummary, DEFAULT_WARMUP_FRACTION};

mod compare;
mod sweep;
mod table;

#[derive(Parser)]
#[command(name = "flowlab", version, about = "TCP/UDP flows on a per-flow-queued bottleneck")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form steady state.
    Analytic(Common),
    /// Integrate the fluid model; writes trajectory.csv and summary.json.
    Fluid {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        fluid: FluidArgs,
    },
    /// Discrete-event simulation; writes report.json and trace.csv.
    Packet {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        packet: PacketArgs,
    },
    /// Run all three engines and check that their throughputs agree.
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        fluid: FluidArgs,
        #[command(flatten)]
        packet: PacketArgs,
        /// Largest relative X̄ deviation allowed between the packet engine and the others.
        #[arg(long, default_value_t = 0.15)]
        tol: f64,
        /// Largest relative X̄ deviation allowed between fluid and analytic.
        #[arg(long, default_value_t = 0.02)]
        fluid_tol: f64,
    },
    /// One summary row per value of a scenario key; writes CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        fluid: FluidArgs,
        #[command(flatten)]
        packet: PacketArgs,
        /// Key to vary, e.g. `flow2.rtt_ms` or `capacity_mbps`.
        #[arg(long)]
        param: String,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        /// Number of evenly spaced values, ends included.
        #[arg(long)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = Engine::Analytic)]
        engine: Engine,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    /// Directory for the output files; nothing is written without it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Scenario override, `key=value` (repeatable). Flow keys: `flowN.key`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Seconds discarded before averaging (default: a fifth of the horizon).
    #[arg(long)]
    warmup: Option<f64>,
}

#[derive(Args)]
struct FluidArgs {
    /// Fluid integration step in seconds.
    #[arg(long)]
    dt: Option<f64>,
    /// Fluid trajectory sampling period in seconds.
    #[arg(long, default_value_t = fluid::DEFAULT_SAMPLE_PERIOD)]
    sample_period: f64,
}

#[derive(Args)]
struct PacketArgs {
    /// Packet-engine seed (overrides the scenario's).
    #[arg(long)]
    seed: Option<u64>,
    /// Short-term fairness window in seconds.
    #[arg(long, default_value_t = flowlab_core::metrics::DEFAULT_WINDOW_S)]
    window: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Engine {
    Analytic,
    Fluid,
    Packet,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Analytic => "analytic",
            Engine::Fluid => "fluid",
            Engine::Packet => "packet",
        }
    }
}

/// Everything an engine run needs besides the scenario.
#[derive(Clone, Copy)]
pub struct RunOptions {
    pub warmup: Option<f64>,
    pub fluid: FluidOptions,
    pub window: f64,
}

impl RunOptions {
    fn new(common: &Common, fluid: Option<&FluidArgs>, packet: Option<&PacketArgs>) -> Self {
        let mut fo = FluidOptions::default();
        if let Some(f) = fluid {
            fo.dt = f.dt;
            fo.sample_period = f.sample_period;
        }
        Self {
            warmup: common.warmup,
            fluid: fo,
            window: packet.map_or(flowlab_core::metrics::DEFAULT_WINDOW_S, |p| p.window),
        }
    }

    pub fn warmup_for(&self, s: &Scenario) -> f64 {
        self.warmup.unwrap_or(DEFAULT_WARMUP_FRACTION * s.horizon())
    }

    pub fn packet(&self, s: &Scenario) -> PacketOptions {
        PacketOptions {
            warmup: self.warmup_for(s),
            window: self.window,
        }
    }
}

pub fn run_fluid(s: &Scenario, o: &RunOptions) -> Result<(fluid::Trajectory, SteadyStateSummary)> {
    let traj = fluid::simulate_with(s, &o.fluid).context("fluid engine")?;
    let summary = traj.summarize(o.warmup_for(s)).context("fluid engine")?;
    Ok((traj, summary))
}

pub fn run_packet(s: &Scenario, o: &RunOptions) -> Result<PacketSimReport> {
    packetsim::run_packet_sim_with(s, o.packet(s)).context("packet engine")
}

pub fn run_analytic(s: &Scenario) -> Result<SteadyStateSummary> {
    analytic::analyze(s).context("analytic engine")
}

/// Steady-state summary of one engine.
pub fn run_engine(engine: Engine, s: &Scenario, o: &RunOptions) -> Result<SteadyStateSummary> {
    match engine {
        Engine::Analytic => run_analytic(s),
        Engine::Fluid => run_fluid(s, o).map(|(_, summary)| summary),
        Engine::Packet => run_packet(s, o).map(|r| r.summary),
    }
}

fn load_doc(common: &Common) -> Result<ScenarioDoc> {
    let path = &common.scenario;
    let text = fs::read_to_string(path).with_context(|| format!("reading scenario {}", path.display()))?;
    let mut doc = ScenarioDoc::parse(&text).with_context(|| format!("scenario {}", path.display()))?;
    for kv in &common.set {
        let (k, v) = kv
            .split_once('=')
            .with_context(|| format!("--set expects key=value, got `{kv}`"))?;
        doc.set(k, v).with_context(|| format!("--set {kv}"))?;
    }
    Ok(doc)
}

fn build(doc: &ScenarioDoc, seed: Option<u64>) -> Result<Scenario> {
    let s = doc.build().context("invalid scenario")?;
    Ok(match seed {
        Some(seed) => s.with_seed(seed),
        None => s,
    })
}

fn out_dir(common: &Common) -> Result<Option<&Path>> {
    match &common.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            Ok(Some(dir.as_path()))
        }
        None => Ok(None),
    }
}

fn write(dir: &Path, name: &str, contents: &[u8]) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn print_single(s: &Scenario, summary: &SteadyStateSummary) {
    println!("{}", table::heading(s));
    let rows = table::rows(s, &[Some(summary)]);
    print!("{}", table::render(&[summary.engine.as_str()], &rows, None));
    if let Some(p) = summary.cycle_period {
        println!("cycle period  {p:.4} s");
    }
    for n in &summary.notes {
        println!("note: {n}");
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Analytic(common) => {
            let s = build(&load_doc(&common)?, None)?;
            let summary = run_analytic(&s)?;
            if let Some(dir) = out_dir(&common)? {
                write(dir, "summary.json", summary.to_json().as_bytes())?;
            }
            print_single(&s, &summary);
        }
        Command::Fluid { common, fluid } => {
            let s = build(&load_doc(&common)?, None)?;
            let opts = RunOptions::new(&common, Some(&fluid), None);
            let (traj, summary) = run_fluid(&s, &opts)?;
            if let Some(dir) = out_dir(&common)? {
                let mut csv = Vec::new();
                traj.write_csv(&mut csv)?;
                write(dir, "trajectory.csv", &csv)?;
                write(dir, "summary.json", summary.to_json().as_bytes())?;
            }
            print_single(&s, &summary);
        }
        Command::Packet { common, packet } => {
            let s = build(&load_doc(&common)?, packet.seed)?;
            let opts = RunOptions::new(&common, None, Some(&packet));
            let report = run_packet(&s, &opts)?;
            if let Some(dir) = out_dir(&common)? {
                let mut csv = Vec::new();
                report.write_trace_csv(&mut csv)?;
                write(dir, "trace.csv", &csv)?;
                write(dir, "report.json", report.to_json().as_bytes())?;
            }
            print_single(&s, &report.summary);
            let jain = |j: Option<f64>| j.map_or("-".to_string(), |j| format!("{j:.3}"));
            println!(
                "jain          short-term {}  long-term {}",
                jain(report.short_term_jain),
                jain(report.long_term_jain)
            );
        }
        Command::Compare {
            common,
            fluid,
            packet,
            tol,
            fluid_tol,
        } => {
            if !(tol >= 0.0 && fluid_tol >= 0.0) {
                bail!("tolerances must be non-negative");
            }
            let s = build(&load_doc(&common)?, packet.seed)?;
            let opts = RunOptions::new(&common, Some(&fluid), Some(&packet));
            let cmp = compare::compare(&s, &opts, tol, fluid_tol)?;
            if let Some(dir) = out_dir(&common)? {
                write(dir, "compare.json", cmp.to_json().as_bytes())?;
            }
            print!("{}", cmp.render(&s));
            if !cmp.pass {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Sweep {
            common,
            fluid,
            packet,
            param,
            from,
            to,
            steps,
            engine,
        } => {
            let mut doc = load_doc(&common)?;
            if let Some(seed) = packet.seed {
                doc.seed = Some(seed);
            }
            let opts = RunOptions::new(&common, Some(&fluid), Some(&packet));
            let csv = sweep::sweep(&doc, &param, &sweep::linspace(from, to, steps), engine, &opts)?;
            match out_dir(&common)? {
                Some(dir) => write(dir, "sweep.csv", csv.as_bytes())?,
                None => print!("{csv}"),
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
