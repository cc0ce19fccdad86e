//! Command-line front end: simulation, marker extraction and the full
//! recognition / interaction pipeline, all with file artifacts.

mod exit;
mod fsio;
mod manifest;
mod pipeline;

use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use swarm_markers::markers::MarkerConfig;
use swarm_markers::sim::run_scenario;
use swarm_markers::windowing::compute_marker_matrix;
use swarm_markers::{MarkerSet, ScenarioId, ScenarioSpec, Trajectory, WindowPlan};

use crate::exit::Usage;
use crate::fsio::{manifest_path, read_input};
use crate::manifest::{FileDigest, PlanTiming, RunManifest};

#[derive(Parser)]
#[command(name = "swarm-markers", version, about = "Information markers for shepherding swarms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the canonical scenario JSON for S1..S11.
    Scenario {
        id: String,
    },
    /// Run one scenario and write its trajectory CSV.
    Simulate {
        scenario: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute a windowed marker matrix from a trajectory CSV.
    Markers {
        trajectory: PathBuf,
        #[command(flatten)]
        plan: PlanArgs,
        #[arg(long)]
        out: PathBuf,
        /// Scenario of the run; defaults to the trajectory's manifest.
        #[arg(long)]
        scenario: Option<String>,
        /// Seed of the run; defaults to the trajectory's manifest.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Regenerate datasets and produce report CSVs.
    Pipeline(pipeline::PipelineArgs),
}

#[derive(Args, Clone)]
pub struct PlanArgs {
    #[arg(long, default_value_t = 20)]
    pub window: usize,
    #[arg(long, default_value_t = 0.75)]
    pub overlap: f64,
    /// `23`, `42`/`all`, or a list such as `M1,M4,M17`.
    #[arg(long, default_value = "23")]
    pub set: String,
}

impl PlanArgs {
    pub fn resolve(&self) -> Result<(WindowPlan, MarkerSet)> {
        Ok((WindowPlan::new(self.window, self.overlap)?, MarkerSet::parse(&self.set)?))
    }
}

fn argv() -> Vec<String> {
    std::env::args().skip(1).collect()
}

fn cmd_scenario(id: &str) -> Result<()> {
    let id: ScenarioId = id.parse()?;
    println!("{}", ScenarioSpec::canonical(id).to_json());
    Ok(())
}

fn cmd_simulate(scenario: &Path, seed: u64, out: &Path) -> Result<()> {
    let bytes = read_input(scenario)?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| Usage(format!("{}: {e}", scenario.display())))?;
    let spec = ScenarioSpec::from_json(&text).with_context(|| format!("in {}", scenario.display()))?;
    let traj = run_scenario(&spec, seed)?;
    let mut csv = Vec::new();
    traj.write_csv(&mut csv)?;

    let mut manifest = RunManifest::new(argv(), vec![FileDigest::of(scenario, &bytes)]);
    manifest.scenario = Some(spec.id.to_string());
    manifest.seeds = vec![seed];
    manifest.reached_goal = Some(traj.reached_goal);
    manifest.emit(out, &csv)?;
    manifest.save(&manifest_path(out))
}

/// Scenario and seed of a trajectory: flags first, then its manifest.
fn run_identity(traj: &Path, scenario: Option<&str>, seed: Option<u64>) -> Result<(ScenarioId, u64, bool)> {
    let upstream = RunManifest::load(&manifest_path(traj)).ok();
    let scenario = match scenario {
        Some(s) => s.parse::<ScenarioId>()?,
        None => upstream
            .as_ref()
            .and_then(|m| m.scenario.as_deref())
            .ok_or_else(|| Usage("--scenario is required when the trajectory has no manifest".into()))?
            .parse()?,
    };
    let seed = match seed {
        Some(s) => s,
        None => upstream
            .as_ref()
            .and_then(|m| m.seeds.first().copied())
            .ok_or_else(|| Usage("--seed is required when the trajectory has no manifest".into()))?,
    };
    let reached = upstream.and_then(|m| m.reached_goal).unwrap_or(false);
    Ok((scenario, seed, reached))
}

fn cmd_markers(
    traj_path: &Path,
    plan: &PlanArgs,
    out: &Path,
    scenario: Option<&str>,
    seed: Option<u64>,
) -> Result<()> {
    let (plan, set) = plan.resolve()?;
    let bytes = read_input(traj_path)?;
    let (scenario, seed, reached) = run_identity(traj_path, scenario, seed)?;
    let traj = Trajectory::read_csv(BufReader::new(bytes.as_slice()), scenario, seed, reached)
        .with_context(|| format!("in {}", traj_path.display()))?;
    let matrix = compute_marker_matrix(&traj, &plan, &set, &MarkerConfig::default())?;
    let mut csv = Vec::new();
    matrix.write_csv(&mut csv)?;

    let mut manifest = RunManifest::new(argv(), vec![FileDigest::of(traj_path, &bytes)]);
    manifest.scenario = Some(scenario.to_string());
    manifest.seeds = vec![seed];
    manifest.window_plan = Some(plan);
    manifest.timing = vec![PlanTiming::new(&plan, &matrix.timing, matrix.n_windows())];
    manifest.emit(out, &csv)?;
    manifest.save(&manifest_path(out))
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("SWARM_MARKERS_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Usage(format!("SWARM_MARKERS_THREADS=`{v}` is not a thread count")))?;
        if n > 0 {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Scenario { id } => cmd_scenario(&id),
        Command::Simulate { scenario, seed, out } => cmd_simulate(&scenario, seed, &out),
        Command::Markers {
            trajectory,
            plan,
            out,
            scenario,
            seed,
        } => cmd_markers(&trajectory, &plan, &out, scenario.as_deref(), seed),
        Command::Pipeline(args) => pipeline::run(&args, argv()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::CONFIG } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::code_for(&e) as u8)
        }
    }
}
