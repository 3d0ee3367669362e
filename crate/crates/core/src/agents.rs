//! Agent mobility profiles and slope/load-adjusted speed laws.
//!
//! Each profile publishes one reduction factor at one reference slope. Between
//! flat ground and the reference slope the factor is interpolated linearly
//! from 1; beyond it the same line is extrapolated down to a floor of
//! [`MIN_SLOPE_FACTOR`]. Slopes above `max_slope` are impassable.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use crate::terrain::{CellIndex, ElevationGrid, TerrainError};

/// Lower clamp for the extrapolated slope factor.
pub const MIN_SLOPE_FACTOR: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error("reduction percent {0} outside [0, 100]")]
    ReductionRange(f64),
    #[error("profile `{0}` uses the human speed law")]
    NotAnimal(String),
    #[error("profile `{0}` uses the animal speed law")]
    NotHuman(String),
    #[error("slope must be finite and non-negative (got {0})")]
    BadSlope(f64),
    #[error("invalid profile `{name}`: {reason}")]
    InvalidProfile { name: String, reason: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum AgentRole {
    Civilian,
    Hostile,
    Transport,
}

/// How the sign of an elevation change enters the speed law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SlopeMode {
    /// Uphill and downhill are penalized alike (`|rise| / run`).
    #[default]
    Symmetric,
    /// Downhill moves are treated as flat.
    UphillOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum SpeedLaw {
    /// `S = S_flat * r(slope)`
    Human {
        /// Percent speed reduction at the reference slope.
        reduction_at_ref: f64,
    },
    /// `S = S_flat * r_slope(slope) * r_load`
    Animal { r_load: f64, r_slope_at_ref: f64 },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AgentProfile {
    pub name: String,
    pub law: SpeedLaw,
    /// Flat-ground walking speed, m/s.
    pub s_flat: f64,
    /// Slope (percent) at which the published reduction applies.
    pub ref_slope: f64,
    pub load_kg: f64,
    pub vessels: u32,
    /// Steepest traversable slope, percent.
    pub max_slope: f64,
    pub body_radius: f64,
    pub role: AgentRole,
    #[cfg_attr(feature = "serde", serde(default))]
    pub slope_mode: SlopeMode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedResult {
    pub speed: f64,
    pub r_effective: f64,
    pub passable: bool,
}

impl SpeedResult {
    const BLOCKED: SpeedResult = SpeedResult {
        speed: 0.0,
        r_effective: 0.0,
        passable: false,
    };
}

/// Cost of one edge for one profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeTraversal {
    pub seconds: f64,
    pub run: f64,
    pub slope_percent: f64,
    pub speed: f64,
}

/// `1 - reduction_percent / 100`
pub fn reduction_factor(reduction_percent: f64) -> Result<f64, AgentError> {
    if !(0.0..=100.0).contains(&reduction_percent) {
        return Err(AgentError::ReductionRange(reduction_percent));
    }
    Ok(1.0 - reduction_percent / 100.0)
}

/// Piecewise-linear slope factor through `(0, 1)` and `(ref_slope, r_ref)`.
fn slope_factor(r_ref: f64, ref_slope: f64, slope: f64) -> f64 {
    if slope <= 0.0 {
        return 1.0;
    }
    if slope == ref_slope {
        return r_ref;
    }
    (r_ref + (1.0 - r_ref) * (1.0 - slope / ref_slope)).max(MIN_SLOPE_FACTOR)
}

fn check_slope(slope: f64) -> Result<(), AgentError> {
    if slope.is_finite() && slope >= 0.0 {
        Ok(())
    } else {
        Err(AgentError::BadSlope(slope))
    }
}

pub fn human_speed(p: &AgentProfile, slope: f64) -> Result<SpeedResult, AgentError> {
    let SpeedLaw::Human { reduction_at_ref } = p.law else {
        return Err(AgentError::NotHuman(p.name.clone()));
    };
    check_slope(slope)?;
    if slope > p.max_slope {
        return Ok(SpeedResult::BLOCKED);
    }
    let r_ref = reduction_factor(reduction_at_ref)?;
    let r = slope_factor(r_ref, p.ref_slope, slope);
    Ok(SpeedResult {
        speed: p.s_flat * r,
        r_effective: r,
        passable: true,
    })
}

pub fn animal_speed(p: &AgentProfile, slope: f64) -> Result<SpeedResult, AgentError> {
    let SpeedLaw::Animal {
        r_load,
        r_slope_at_ref,
    } = p.law
    else {
        return Err(AgentError::NotAnimal(p.name.clone()));
    };
    check_slope(slope)?;
    if slope > p.max_slope {
        return Ok(SpeedResult::BLOCKED);
    }
    let r_slope = slope_factor(r_slope_at_ref, p.ref_slope, slope);
    Ok(SpeedResult {
        speed: p.s_flat * r_slope * r_load,
        r_effective: r_slope * r_load,
        passable: true,
    })
}

impl AgentProfile {
    pub fn is_human(&self) -> bool {
        matches!(self.law, SpeedLaw::Human { .. })
    }

    /// Dispatch to the profile's speed law.
    pub fn speed(&self, slope: f64) -> Result<SpeedResult, AgentError> {
        match self.law {
            SpeedLaw::Human { .. } => human_speed(self, slope),
            SpeedLaw::Animal { .. } => animal_speed(self, slope),
        }
    }

    /// Slope seen by the speed law for a signed rise over a run.
    pub fn effective_slope(&self, rise: f64, run: f64) -> f64 {
        match self.slope_mode {
            SlopeMode::Symmetric => rise.abs() / run * 100.0,
            SlopeMode::UphillOnly => rise.max(0.0) / run * 100.0,
        }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |reason| {
            Err(AgentError::InvalidProfile {
                name: self.name.clone(),
                reason,
            })
        };
        let unit = |r: f64| r > 0.0 && r <= 1.0;
        if !(self.s_flat > 0.0 && self.s_flat.is_finite()) {
            return bad("s_flat must be positive");
        }
        if !(self.ref_slope > 0.0 && self.ref_slope.is_finite()) {
            return bad("ref_slope must be positive");
        }
        if !(self.max_slope > 0.0) {
            return bad("max_slope must be positive");
        }
        if !(self.body_radius >= 0.0 && self.body_radius.is_finite()) {
            return bad("body_radius must be non-negative");
        }
        if !(self.load_kg >= 0.0) {
            return bad("load must be non-negative");
        }
        match self.law {
            SpeedLaw::Human { reduction_at_ref } => {
                if !(0.0..100.0).contains(&reduction_at_ref) {
                    return bad("reduction must be in [0, 100)");
                }
            }
            SpeedLaw::Animal {
                r_load,
                r_slope_at_ref,
            } => {
                if !unit(r_load) || !unit(r_slope_at_ref) {
                    return bad("reduction factors must be in (0, 1]");
                }
            }
        }
        Ok(())
    }
}

fn human(name: &str, s_flat: f64, reduction: f64, role: AgentRole, body_radius: f64) -> AgentProfile {
    AgentProfile {
        name: name.to_string(),
        law: SpeedLaw::Human {
            reduction_at_ref: reduction,
        },
        s_flat,
        ref_slope: 15.0,
        load_kg: 0.0,
        vessels: 0,
        max_slope: 35.0,
        body_radius,
        role,
        slope_mode: SlopeMode::Symmetric,
    }
}

/// The four human and two animal-transport profiles with their adopted values.
pub fn builtin_profiles() -> Vec<AgentProfile> {
    alloc::vec![
        human("Fit adults", 1.5, 25.0, AgentRole::Civilian, 0.3),
        human("Elderly", 1.0, 50.0, AgentRole::Civilian, 0.3),
        human("Families", 1.2, 35.0, AgentRole::Civilian, 0.6),
        human("Hostile", 1.8, 20.0, AgentRole::Hostile, 0.3),
        AgentProfile {
            name: "Ox-driven cart".to_string(),
            law: SpeedLaw::Animal {
                r_load: 0.75,
                r_slope_at_ref: 0.90,
            },
            s_flat: 1.25,
            ref_slope: 10.0,
            load_kg: 400.0,
            vessels: 4,
            max_slope: 15.0,
            body_radius: 1.5,
            role: AgentRole::Transport,
            slope_mode: SlopeMode::Symmetric,
        },
        AgentProfile {
            name: "Mule".to_string(),
            law: SpeedLaw::Animal {
                r_load: 0.75,
                r_slope_at_ref: 0.75,
            },
            s_flat: 1.7,
            ref_slope: 25.0,
            load_kg: 100.0,
            vessels: 2,
            max_slope: 30.0,
            body_radius: 0.6,
            role: AgentRole::Transport,
            slope_mode: SlopeMode::Symmetric,
        },
    ]
}

fn normalize(name: &str) -> String {
    name.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

/// Look up a built-in profile by name, ignoring case and punctuation.
/// Singular and short aliases (`fit_adult`, `family`, `ox_cart`, `cart`) are
/// accepted.
pub fn find_builtin(name: &str) -> Option<AgentProfile> {
    let key = normalize(name);
    let canonical = match key.as_str() {
        "fitadult" | "fit" | "adult" => "fitadults",
        "family" => "families",
        "oxcart" | "cart" | "ox" => "oxdrivencart",
        other => other,
    };
    builtin_profiles()
        .into_iter()
        .find(|p| normalize(&p.name) == canonical)
}

/// Time to move between two adjacent cells, or `None` when the edge is
/// impassable for the profile (nodata endpoint or slope above `max_slope`).
pub fn traversal_time(
    p: &AgentProfile,
    grid: &ElevationGrid,
    a: CellIndex,
    b: CellIndex,
) -> Result<Option<EdgeTraversal>, TerrainError> {
    if !grid.in_bounds(a) || !grid.in_bounds(b) {
        let c = if grid.in_bounds(a) { b } else { a };
        return Err(TerrainError::OutOfBounds {
            row: c.row,
            col: c.col,
        });
    }
    if !a.is_adjacent(b) {
        return Err(TerrainError::NotAdjacent { a, b });
    }
    let sample = match grid.slope_percent(a, b) {
        Ok(s) => s,
        Err(TerrainError::Nodata(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let slope = p.effective_slope(sample.rise, sample.run);
    let Ok(sr) = p.speed(slope) else {
        return Ok(None);
    };
    if !sr.passable || sr.speed <= 0.0 {
        return Ok(None);
    }
    Ok(Some(EdgeTraversal {
        seconds: sample.run / sr.speed,
        run: sample.run,
        slope_percent: slope,
        speed: sr.speed,
    }))
}
