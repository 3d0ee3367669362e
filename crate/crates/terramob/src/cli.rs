//! Command-line interface.
//!
//! Exit codes: 0 success, 2 no path (for `plan`, or `simulate --strict`),
//! 3 bad input of any kind.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use terramob_core::local_adapt::{
    evaluate_bypass, train_bypass, CorridorEnv, LearningParams, QTable, RewardWeights,
};
use terramob_core::sim::{AgentMode, AgentSpec, SimReport, World};
use terramob_core::terrain::{viewshed, CellIndex, DEFAULT_EYE_HEIGHT};
use terramob_core::{astar, AgentProfile, PlanError};
use thiserror::Error;

use crate::asc::write_asc;
use crate::config::{load_terrain, parse_cell, ProfileBook, ScenarioConfig, Terrain};
use crate::formats::{curve_csv, mask_csv, mask_pgm, parse_qtable, plan_csv, trace_csv, write_qtable};
use crate::report::render;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NO_PATH: i32 = 2;
pub const EXIT_BAD_INPUT: i32 = 3;
pub const OUT_ENV: &str = "TERRAMOB_OUT";
const DEFAULT_OUT: &str = "out";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("no path: {0}")]
    NoPath(String),
    #[error("{0}")]
    BadInput(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::NoPath(_) => EXIT_NO_PATH,
            CliError::BadInput(_) => EXIT_BAD_INPUT,
        }
    }
}

fn bad(e: impl std::fmt::Display) -> CliError {
    CliError::BadInput(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "terramob", version, about = "Terrain-aware agent planning and simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plan a least-time path and write it as CSV.
    Plan(PlanArgs),
    /// Train a local bypass Q-table on randomized corridors.
    Train(TrainArgs),
    /// Run a scenario config and write the report and traces.
    Simulate(SimulateArgs),
    /// Render a report JSON as a plain-text table.
    Report(ReportArgs),
    /// Compute the visible cells from an origin.
    Viewshed(ViewshedArgs),
    /// Write a synthetic terrain recipe as an ESRI ASCII grid.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// ESRI ASCII grid path or recipe such as `flat:0@10x10/30`.
    #[arg(long)]
    pub terrain: String,
    #[arg(long, default_value = "Fit adults")]
    pub profile: String,
    /// `row,col`; defaults to the terrain's start marker.
    #[arg(long, value_parser = parse_cell)]
    pub start: Option<CellIndex>,
    /// `row,col`; defaults to the terrain's goal marker.
    #[arg(long, value_parser = parse_cell)]
    pub goal: Option<CellIndex>,
    /// Output directory (default: $TERRAMOB_OUT or `out`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, default_value = "Fit adults")]
    pub profile: String,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub episodes: Option<usize>,
    /// JSON file with optional `training` and `rewards` sections.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config's time step.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Fail with exit code 2 when any agent has no path.
    #[arg(long)]
    pub strict: bool,
    /// Overrides the config's output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report JSON written by `simulate`.
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct ViewshedArgs {
    #[arg(long)]
    pub terrain: String,
    /// Observer cell, `row,col`.
    #[arg(long, value_parser = parse_cell)]
    pub start: CellIndex,
    /// Meters; unlimited when omitted.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Eye and target height above ground, meters.
    #[arg(long, default_value_t = DEFAULT_EYE_HEIGHT)]
    pub height: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Recipe such as `two_corridor:10,25@0x9/30`.
    #[arg(long)]
    pub terrain: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn out_dir(flag: Option<PathBuf>, configured: Option<PathBuf>) -> PathBuf {
    flag.or(configured)
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| bad(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| bad(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn builtin(name: &str) -> Result<AgentProfile, CliError> {
    ProfileBook::default().get(name).map_err(bad)
}

fn terrain(spec: &str) -> Result<Terrain, CliError> {
    load_terrain(spec, Path::new(".")).map_err(bad)
}

fn endpoint(given: Option<CellIndex>, marker: Option<CellIndex>, what: &str) -> Result<CellIndex, CliError> {
    given
        .or(marker)
        .ok_or_else(|| bad(format!("--{what} is required for this terrain")))
}

pub fn cmd_plan(args: PlanArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let t = terrain(&args.terrain)?;
    let profile = builtin(&args.profile)?;
    let start = endpoint(args.start, t.start, "start")?;
    let goal = endpoint(args.goal, t.goal, "goal")?;
    let (plan, stats) = match astar(&t.grid, &profile, start, goal) {
        Ok(r) => r,
        Err(e @ PlanError::NoPath { .. }) => return Err(CliError::NoPath(e.to_string())),
        Err(e) => return Err(bad(e)),
    };
    let path = write_file(&out_dir(args.out, None), "plan.csv", &plan_csv(&t.grid, &plan))?;
    let _ = writeln!(stdout, "total_time_s {}", plan.total_time);
    let _ = writeln!(stdout, "total_distance_m {}", plan.total_distance);
    let _ = writeln!(stdout, "nodes_expanded {}", stats.nodes_expanded);
    let _ = writeln!(stdout, "waypoints {}", plan.len());
    let _ = writeln!(stdout, "wrote {}", path.display());
    Ok(())
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainingFile {
    #[serde(default)]
    training: LearningParams,
    #[serde(default)]
    rewards: RewardWeights,
}

pub fn cmd_train(args: TrainArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let profile = builtin(&args.profile)?;
    let mut file = TrainingFile::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        file = serde_json::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))?;
    }
    let mut params = file.training;
    if let Some(s) = args.seed {
        params.seed = s;
    }
    if let Some(n) = args.episodes {
        params.episodes = n;
    }
    let env = CorridorEnv::new(profile);
    let run = train_bypass(&env, &file.rewards, &params).map_err(bad)?;
    let dir = out_dir(args.out, None);
    let table = write_file(&dir, "qtable.txt", &write_qtable(&run.table))?;
    let curve = write_file(&dir, "curve.csv", &curve_csv(&run.curve))?;
    let eval = evaluate_bypass(
        &env,
        &run.table,
        &file.rewards,
        200,
        params.seed ^ 0x5eed,
        params.max_steps_per_episode,
    )
    .map_err(bad)?;
    let _ = writeln!(stdout, "episodes {}", params.episodes);
    let _ = writeln!(stdout, "held_out_success {}", eval.success_rate());
    let _ = writeln!(stdout, "held_out_collisions {}", eval.collision_rate());
    let _ = writeln!(stdout, "wrote {}", table.display());
    let _ = writeln!(stdout, "wrote {}", curve.display());
    Ok(())
}

/// Everything `simulate` writes, keyed by file name.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub report: SimReport,
    pub files: BTreeMap<String, String>,
}

fn file_id(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Build and run the world described by `cfg`. `base` resolves relative
/// paths in the config.
pub fn run_scenario(cfg: &ScenarioConfig, base: &Path) -> Result<ScenarioOutput, CliError> {
    cfg.validate().map_err(bad)?;
    let t = load_terrain(&cfg.terrain, base).map_err(bad)?;
    let book = ProfileBook::new(&cfg.profiles).map_err(bad)?;
    let mut tables: Vec<QTable> = Vec::new();
    let mut by_path: BTreeMap<PathBuf, usize> = BTreeMap::new();
    let mut by_profile: BTreeMap<String, usize> = BTreeMap::new();
    let mut specs = Vec::with_capacity(cfg.agents.len());
    for a in &cfg.agents {
        let profile = book.get(&a.profile).map_err(bad)?;
        let cell = |v: Option<[usize; 2]>, marker: Option<CellIndex>, what: &str| {
            let c = v
                .map(|[r, c]| CellIndex::new(r, c))
                .or(marker)
                .ok_or_else(|| bad(format!("agent `{}` has no {what} cell", a.id)))?;
            if !t.grid.in_bounds(c) {
                return Err(bad(format!("agent `{}` {what} {c} is outside the grid", a.id)));
            }
            Ok(c)
        };
        let start = cell(a.start, t.start, "start")?;
        let goal = cell(a.goal, t.goal, "goal")?;
        let table = match &a.qtable {
            Some(p) => {
                let path = base.join(p);
                match by_path.get(&path) {
                    Some(&i) => i,
                    None => {
                        let text = std::fs::read_to_string(&path)
                            .map_err(|e| bad(format!("{}: {e}", path.display())))?;
                        let q = parse_qtable(&text).map_err(|e| bad(format!("{}: {e}", path.display())))?;
                        tables.push(q);
                        by_path.insert(path, tables.len() - 1);
                        tables.len() - 1
                    }
                }
            }
            None => match by_profile.get(&profile.name) {
                Some(&i) => i,
                None => {
                    let mut params = cfg.training;
                    params.seed = cfg.sim.seed;
                    let run = train_bypass(&CorridorEnv::new(profile.clone()), &cfg.rewards, &params)
                        .map_err(|e| bad(format!("training for `{}`: {e}", profile.name)))?;
                    tables.push(run.table);
                    by_profile.insert(profile.name.clone(), tables.len() - 1);
                    tables.len() - 1
                }
            },
        };
        specs.push(AgentSpec {
            id: a.id.clone(),
            profile,
            start,
            goal,
            qtable: Some(table),
        });
    }
    let rules = cfg.pursuit_rules().map_err(bad)?;
    let pairs: Vec<(usize, usize, String)> = cfg
        .transport_pairs
        .iter()
        .map(|p| Ok((cfg.agent_index(&p.first)?, cfg.agent_index(&p.second)?, p.route.clone())))
        .collect::<Result<_, crate::config::ConfigError>>()
        .map_err(bad)?;
    let mut world = World::new(
        t.grid,
        specs,
        cfg.obstacles(),
        rules,
        tables,
        cfg.sim_params(),
        cfg.sim.seed,
    )
    .map_err(bad)?;
    world.run();
    let report = world.report(&pairs);
    let mut files = BTreeMap::new();
    let json = serde_json::to_string_pretty(&report).map_err(bad)? + "\n";
    files.insert("report.json".to_string(), json);
    files.insert("report.txt".to_string(), render(&report));
    for a in &world.agents {
        files.insert(format!("trace_{}.csv", file_id(&a.id)), trace_csv(&a.trace));
    }
    Ok(ScenarioOutput { report, files })
}

pub fn cmd_simulate(args: SimulateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = ScenarioConfig::read(&args.config).map_err(bad)?;
    if let Some(s) = args.seed {
        cfg.sim.seed = s;
    }
    if let Some(dt) = args.dt {
        cfg.sim.dt = Some(dt);
    }
    cfg.strict |= args.strict;
    let base = args.config.parent().unwrap_or(Path::new("")).to_path_buf();
    let out = run_scenario(&cfg, &base)?;
    let dir = out_dir(args.out, cfg.outputs.as_ref().map(|o| base.join(o)));
    for (name, text) in &out.files {
        write_file(&dir, name, text)?;
    }
    let _ = stdout.write_all(out.files["report.txt"].as_bytes());
    let _ = writeln!(stdout, "wrote {} files to {}", out.files.len(), dir.display());
    let stranded: Vec<&str> = out
        .report
        .agents
        .iter()
        .filter(|a| a.outcome == AgentMode::NoPath.as_str())
        .map(|a| a.id.as_str())
        .collect();
    if cfg.strict && !stranded.is_empty() {
        return Err(CliError::NoPath(format!("agents without a path: {}", stranded.join(", "))));
    }
    Ok(())
}

pub fn cmd_report(args: ReportArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.report)
        .map_err(|e| bad(format!("{}: {e}", args.report.display())))?;
    let report: SimReport =
        serde_json::from_str(&text).map_err(|e| bad(format!("{}: {e}", args.report.display())))?;
    let _ = stdout.write_all(render(&report).as_bytes());
    Ok(())
}

pub fn cmd_viewshed(args: ViewshedArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let t = terrain(&args.terrain)?;
    if !t.grid.is_traversable(args.start) {
        return Err(bad(format!("observer {} is outside the grid or nodata", args.start)));
    }
    if !(args.height.is_finite() && args.height >= 0.0) {
        return Err(bad("--height must be finite and non-negative"));
    }
    let radius = match args.radius {
        Some(r) if r > 0.0 => r,
        Some(r) => return Err(bad(format!("--radius must be positive, got {r}"))),
        None => f64::MAX,
    };
    let mask = viewshed(&t.grid, args.start, radius, args.height, args.height);
    let dir = out_dir(args.out, None);
    let pgm = write_file(&dir, "viewshed.pgm", &mask_pgm(&t.grid, &mask))?;
    let csv = write_file(&dir, "viewshed.csv", &mask_csv(&t.grid, &mask))?;
    let _ = writeln!(stdout, "visible {} of {}", mask.iter().filter(|v| **v).count(), mask.len());
    let _ = writeln!(stdout, "wrote {}", pgm.display());
    let _ = writeln!(stdout, "wrote {}", csv.display());
    Ok(())
}

pub fn cmd_synth(args: SynthArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let t = terrain(&args.terrain)?;
    let path = write_file(&out_dir(args.out, None), "terrain.asc", &write_asc(&t.grid))?;
    if let (Some(s), Some(g)) = (t.start, t.goal) {
        let _ = writeln!(stdout, "start {},{}", s.row, s.col);
        let _ = writeln!(stdout, "goal {},{}", g.row, g.col);
    }
    let _ = writeln!(stdout, "wrote {}", path.display());
    Ok(())
}

pub fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Plan(a) => cmd_plan(a, stdout),
        Command::Train(a) => cmd_train(a, stdout),
        Command::Simulate(a) => cmd_simulate(a, stdout),
        Command::Report(a) => cmd_report(a, stdout),
        Command::Viewshed(a) => cmd_viewshed(a, stdout),
        Command::Synth(a) => cmd_synth(a, stdout),
    }
}

/// Parse `args` (including the program name), run the command and return
/// the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_BAD_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.code()
        }
    }
}
