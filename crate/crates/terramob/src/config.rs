//! Scenario configuration: one JSON document describing terrain, agents,
//! obstacles, pursuit rules and outputs. Relative paths are resolved against
//! the directory holding the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use terramob_core::agents::find_builtin;
use terramob_core::local_adapt::{LearningParams, RewardWeights};
use terramob_core::sim::{Obstacle, PursuitRule, SimParams};
use terramob_core::terrain::{make_synthetic, Axis, CellIndex, ElevationGrid, Recipe};
use terramob_core::{AgentProfile, AgentRole, SlopeMode, SpeedLaw};
use thiserror::Error;

use crate::asc::{read_asc, AscError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Asc(#[from] AscError),
    #[error("terrain `{spec}`: {msg}")]
    Terrain { spec: String, msg: String },
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

/// A built-in profile name, or a profile spelled out in full or derived from
/// a built-in (`base`) with some fields replaced.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileEntry {
    Builtin(String),
    Override(ProfileOverride),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileOverride {
    pub name: String,
    pub base: Option<String>,
    pub law: Option<SpeedLaw>,
    pub s_flat: Option<f64>,
    pub ref_slope: Option<f64>,
    pub load_kg: Option<f64>,
    pub vessels: Option<u32>,
    pub max_slope: Option<f64>,
    pub body_radius: Option<f64>,
    pub role: Option<AgentRole>,
    pub slope_mode: Option<SlopeMode>,
}

impl ProfileOverride {
    fn resolve(&self) -> Result<AgentProfile, ConfigError> {
        let base = match &self.base {
            Some(b) => Some(find_builtin(b).ok_or_else(|| invalid(format!("unknown base profile `{b}`")))?),
            None => None,
        };
        let need = |field: &str| invalid(format!("profile `{}` lacks `{field}` and has no base", self.name));
        let p = AgentProfile {
            name: self.name.clone(),
            law: match (self.law, &base) {
                (Some(l), _) => l,
                (None, Some(b)) => b.law,
                _ => return Err(need("law")),
            },
            s_flat: self.s_flat.or(base.as_ref().map(|b| b.s_flat)).ok_or_else(|| need("s_flat"))?,
            ref_slope: self
                .ref_slope
                .or(base.as_ref().map(|b| b.ref_slope))
                .ok_or_else(|| need("ref_slope"))?,
            load_kg: self.load_kg.or(base.as_ref().map(|b| b.load_kg)).unwrap_or(0.0),
            vessels: self.vessels.or(base.as_ref().map(|b| b.vessels)).unwrap_or(0),
            max_slope: self
                .max_slope
                .or(base.as_ref().map(|b| b.max_slope))
                .ok_or_else(|| need("max_slope"))?,
            body_radius: self
                .body_radius
                .or(base.as_ref().map(|b| b.body_radius))
                .ok_or_else(|| need("body_radius"))?,
            role: self
                .role
                .or(base.as_ref().map(|b| b.role))
                .unwrap_or(AgentRole::Civilian),
            slope_mode: self
                .slope_mode
                .or(base.as_ref().map(|b| b.slope_mode))
                .unwrap_or_default(),
        };
        p.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentEntry {
    pub id: String,
    pub profile: String,
    /// `[row, col]`; defaults to the terrain's start marker.
    pub start: Option<[usize; 2]>,
    /// `[row, col]`; defaults to the terrain's goal marker.
    pub goal: Option<[usize; 2]>,
    /// Q-table file; a table is trained for the profile when absent.
    pub qtable: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleEntry {
    pub cells: Vec<[usize; 2]>,
    /// `[appear, disappear]` pairs in seconds, `null` for never disappearing.
    /// Empty means present for the whole run.
    #[serde(default)]
    pub schedule: Vec<(f64, Option<f64>)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PursuitEntry {
    pub pursuer: String,
    pub target: String,
    pub los_loss_limit: Option<f64>,
    pub effort_budget: Option<f64>,
    pub capture_radius: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportEntry {
    pub route: String,
    pub first: String,
    pub second: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub seed: u64,
    pub dt: Option<f64>,
    pub max_sim_time: Option<f64>,
    pub observer_height: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub terrain: String,
    #[serde(default)]
    pub profiles: Vec<ProfileEntry>,
    pub agents: Vec<AgentEntry>,
    #[serde(default)]
    pub obstacles: Vec<ObstacleEntry>,
    #[serde(default)]
    pub pursuit_rules: Vec<PursuitEntry>,
    #[serde(default)]
    pub transport_pairs: Vec<TransportEntry>,
    pub sim: SimSection,
    /// Used when a table has to be trained; its seed is replaced by the
    /// scenario seed.
    #[serde(default)]
    pub training: LearningParams,
    #[serde(default)]
    pub rewards: RewardWeights,
    pub outputs: Option<PathBuf>,
    #[serde(default)]
    pub strict: bool,
}

/// A terrain grid plus optional start/goal markers.
#[derive(Debug, Clone)]
pub struct Terrain {
    pub grid: ElevationGrid,
    pub start: Option<CellIndex>,
    pub goal: Option<CellIndex>,
}

fn parse_nums(spec: &str, args: &str, n: usize) -> Result<Vec<f64>, ConfigError> {
    let bad = |msg: String| ConfigError::Terrain {
        spec: spec.to_string(),
        msg,
    };
    let v: Vec<f64> = if args.is_empty() {
        Vec::new()
    } else {
        args.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad(format!("bad number `{s}`"))))
            .collect::<Result<_, _>>()?
    };
    if v.len() != n {
        return Err(bad(format!("expected {n} parameters, got {}", v.len())));
    }
    Ok(v)
}

/// Parse `kind:params@ROWSxCOLS/CELLSIZE`.
///
/// | kind | params |
/// |---|---|
/// | `flat` | height |
/// | `ramp` | slope %, `x` or `y` |
/// | `ridge` | height, column, half-width (cells) |
/// | `cone` | peak, radius (m) |
/// | `two_corridor` | gentle %, steep % (rows are derived; pass 0) |
pub fn parse_recipe(spec: &str) -> Result<(Recipe, usize, usize, f64), ConfigError> {
    let bad = |msg: &str| ConfigError::Terrain {
        spec: spec.to_string(),
        msg: msg.to_string(),
    };
    let (kind, rest) = spec.split_once(':').ok_or_else(|| bad("expected `kind:params@RxC/size`"))?;
    let (args, dims) = rest.split_once('@').ok_or_else(|| bad("missing `@RxC/size`"))?;
    let (shape, size) = dims.split_once('/').ok_or_else(|| bad("missing `/cellsize`"))?;
    let (r, c) = shape.split_once(['x', 'X']).ok_or_else(|| bad("dimensions must be `ROWSxCOLS`"))?;
    let nrows = r.trim().parse::<usize>().map_err(|_| bad("bad row count"))?;
    let ncols = c.trim().parse::<usize>().map_err(|_| bad("bad column count"))?;
    let cellsize = size.trim().parse::<f64>().map_err(|_| bad("bad cellsize"))?;
    let recipe = match kind.trim() {
        "flat" => Recipe::Flat {
            height: parse_nums(spec, args, 1)?[0],
        },
        "ramp" => {
            let (slope, axis) = args.split_once(',').ok_or_else(|| bad("ramp needs `slope,axis`"))?;
            let axis = match axis.trim() {
                "x" | "X" => Axis::X,
                "y" | "Y" => Axis::Y,
                _ => return Err(bad("ramp axis must be x or y")),
            };
            Recipe::Ramp {
                slope_percent: parse_nums(spec, slope, 1)?[0],
                axis,
            }
        }
        "ridge" => {
            let v = parse_nums(spec, args, 3)?;
            if v[1] < 0.0 || v[1].fract() != 0.0 {
                return Err(bad("ridge column must be a non-negative integer"));
            }
            Recipe::Ridge {
                height: v[0],
                position: v[1] as usize,
                half_width: v[2],
            }
        }
        "cone" => {
            let v = parse_nums(spec, args, 2)?;
            Recipe::Cone {
                peak: v[0],
                radius: v[1],
            }
        }
        "two_corridor" => {
            let v = parse_nums(spec, args, 2)?;
            Recipe::TwoCorridor {
                gentle: v[0],
                steep: v[1],
            }
        }
        _ => return Err(bad("unknown recipe kind")),
    };
    Ok((recipe, nrows, ncols, cellsize))
}

fn looks_like_recipe(spec: &str) -> bool {
    spec.contains('@')
        && spec
            .split_once(':')
            .is_some_and(|(k, _)| k.chars().all(|c| c.is_ascii_lowercase() || c == '_'))
}

/// Load a terrain from an ESRI ASCII file or a recipe string. Paths are
/// resolved against `base` when relative.
pub fn load_terrain(spec: &str, base: &Path) -> Result<Terrain, ConfigError> {
    if looks_like_recipe(spec) {
        let (recipe, nrows, ncols, cellsize) = parse_recipe(spec)?;
        let s = make_synthetic(recipe, nrows, ncols, cellsize).map_err(|e| ConfigError::Terrain {
            spec: spec.to_string(),
            msg: e.to_string(),
        })?;
        return Ok(Terrain {
            grid: s.grid,
            start: s.start,
            goal: s.goal,
        });
    }
    let grid = read_asc(&base.join(spec))?;
    Ok(Terrain {
        grid,
        start: None,
        goal: None,
    })
}

/// Parse `r,c`.
pub fn parse_cell(s: &str) -> Result<CellIndex, String> {
    let (r, c) = s.split_once(',').ok_or_else(|| format!("expected `row,col`, got `{s}`"))?;
    let r = r.trim().parse().map_err(|_| format!("bad row in `{s}`"))?;
    let c = c.trim().parse().map_err(|_| format!("bad column in `{s}`"))?;
    Ok(CellIndex::new(r, c))
}

/// Built-in profiles shadowed by any configured ones of the same name.
#[derive(Debug, Clone, Default)]
pub struct ProfileBook {
    custom: BTreeMap<String, AgentProfile>,
}

impl ProfileBook {
    pub fn new(entries: &[ProfileEntry]) -> Result<Self, ConfigError> {
        let mut custom = BTreeMap::new();
        for e in entries {
            let p = match e {
                ProfileEntry::Builtin(name) => {
                    find_builtin(name).ok_or_else(|| invalid(format!("unknown profile `{name}`")))?
                }
                ProfileEntry::Override(o) => o.resolve()?,
            };
            custom.insert(p.name.clone(), p);
        }
        Ok(Self { custom })
    }

    pub fn get(&self, name: &str) -> Result<AgentProfile, ConfigError> {
        self.custom
            .get(name)
            .cloned()
            .or_else(|| find_builtin(name))
            .ok_or_else(|| invalid(format!("unknown profile `{name}`")))
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn sim_params(&self) -> SimParams {
        let d = SimParams::default();
        SimParams {
            dt: self.sim.dt.unwrap_or(d.dt),
            max_sim_time: self.sim.max_sim_time.unwrap_or(d.max_sim_time),
            observer_height: self.sim.observer_height.unwrap_or(d.observer_height),
        }
    }

    pub fn agent_index(&self, id: &str) -> Result<usize, ConfigError> {
        self.agents
            .iter()
            .position(|a| a.id == id)
            .ok_or_else(|| invalid(format!("unknown agent id `{id}`")))
    }

    pub fn obstacles(&self) -> Vec<Obstacle> {
        self.obstacles
            .iter()
            .map(|o| {
                let footprint = o.cells.iter().map(|&[r, c]| CellIndex::new(r, c)).collect();
                if o.schedule.is_empty() {
                    Obstacle::permanent(footprint)
                } else {
                    Obstacle {
                        footprint,
                        schedule: o
                            .schedule
                            .iter()
                            .map(|&(a, b)| (a, b.unwrap_or(f64::INFINITY)))
                            .collect(),
                    }
                }
            })
            .collect()
    }

    pub fn pursuit_rules(&self) -> Result<Vec<PursuitRule>, ConfigError> {
        self.pursuit_rules
            .iter()
            .map(|e| {
                let mut r = PursuitRule::new(self.agent_index(&e.pursuer)?, self.agent_index(&e.target)?);
                if let Some(v) = e.los_loss_limit {
                    r.los_loss_limit = v;
                }
                if let Some(v) = e.effort_budget {
                    r.effort_budget = v;
                }
                if let Some(v) = e.capture_radius {
                    r.capture_radius = v;
                }
                Ok(r)
            })
            .collect()
    }

    /// Basic consistency checks that need no terrain.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.agents.is_empty() {
            return Err(invalid("scenario has no agents"));
        }
        for (i, a) in self.agents.iter().enumerate() {
            if self.agents[..i].iter().any(|b| b.id == a.id) {
                return Err(invalid(format!("duplicate agent id `{}`", a.id)));
            }
        }
        for t in &self.transport_pairs {
            self.agent_index(&t.first)?;
            self.agent_index(&t.second)?;
        }
        Ok(())
    }
}
