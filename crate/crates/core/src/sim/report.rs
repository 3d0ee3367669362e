use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{AgentRuntime, AgentSpec, SimError, SimParams, World};
use crate::agents::AgentProfile;
use crate::terrain::{CellIndex, ElevationGrid};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AgentOutcome {
    pub id: String,
    pub profile: String,
    pub outcome: String,
    /// Seconds from start to arrival; absent unless the agent arrived.
    pub duration: Option<f64>,
    /// Horizontal meters walked.
    pub distance: f64,
    /// Seconds spent on edges.
    pub travel_time: f64,
    /// Seconds spent waiting.
    pub wait_time: f64,
    pub effort: f64,
    pub astar_calls: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PursuitOutcome {
    pub pursuer: String,
    pub target: String,
    pub outcome: String,
    pub time: Option<f64>,
}

/// One transport mode on one route.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModeSummary {
    pub mode: String,
    pub max_slope: f64,
    pub load_kg: f64,
    pub vessels: u32,
    pub outcome: String,
    /// Meters per second over the whole trip.
    pub avg_speed: Option<f64>,
    pub duration: Option<f64>,
    pub distance: Option<f64>,
}

impl ModeSummary {
    pub fn from_agent(a: &AgentRuntime) -> Self {
        let duration = a.duration();
        Self {
            mode: a.profile.name.clone(),
            max_slope: a.profile.max_slope,
            load_kg: a.profile.load_kg,
            vessels: a.profile.vessels,
            outcome: String::from(a.mode.as_str()),
            avg_speed: duration.filter(|d| *d > 0.0).map(|d| a.distance / d),
            duration,
            distance: duration.map(|_| a.distance),
        }
    }
}

/// Two modes on the same route. `reduction_percent` is the time saved by
/// the second mode relative to the first.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComparisonRow {
    pub route: String,
    pub first: ModeSummary,
    pub second: ModeSummary,
    /// First duration minus second duration, seconds.
    pub difference: Option<f64>,
    pub reduction_percent: Option<f64>,
}

impl ComparisonRow {
    pub fn new(route: String, first: ModeSummary, second: ModeSummary) -> Self {
        let (difference, reduction_percent) = match (first.duration, second.duration) {
            (Some(a), Some(b)) if a > 0.0 => (Some(a - b), Some((a - b) / a * 100.0)),
            (Some(a), Some(b)) => (Some(a - b), None),
            _ => (None, None),
        };
        Self {
            route,
            first,
            second,
            difference,
            reduction_percent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimReport {
    pub seed: u64,
    /// Clock value when the run stopped.
    pub end_time: f64,
    pub agents: Vec<AgentOutcome>,
    pub pursuits: Vec<PursuitOutcome>,
    pub transport: Vec<ComparisonRow>,
}

impl World {
    /// Summarize the run. Each pair `(first, second, route)` adds one
    /// comparison row built from two agents of this world.
    pub fn report(&self, pairs: &[(usize, usize, String)]) -> SimReport {
        let agents = self
            .agents
            .iter()
            .map(|a| AgentOutcome {
                id: a.id.clone(),
                profile: a.profile.name.clone(),
                outcome: String::from(a.mode.as_str()),
                duration: a.duration(),
                distance: a.distance,
                travel_time: a.travel_time,
                wait_time: a.wait_time,
                effort: a.effort_spent,
                astar_calls: a.astar_calls,
            })
            .collect();
        let pursuits = self
            .rules
            .iter()
            .zip(&self.pursuits)
            .map(|(r, s)| PursuitOutcome {
                pursuer: self.agents[r.pursuer].id.clone(),
                target: self.agents[r.target].id.clone(),
                outcome: String::from(s.as_str()),
                time: s.time(),
            })
            .collect();
        let transport = pairs
            .iter()
            .map(|(a, b, route)| {
                ComparisonRow::new(
                    route.clone(),
                    ModeSummary::from_agent(&self.agents[*a]),
                    ModeSummary::from_agent(&self.agents[*b]),
                )
            })
            .collect();
        SimReport {
            seed: self.rng_seed,
            end_time: self.clock,
            agents,
            pursuits,
            transport,
        }
    }
}

/// Run each profile alone from `start` to `goal` and compare the trips.
pub fn compare_transport(
    grid: &ElevationGrid,
    route: &str,
    first: &AgentProfile,
    second: &AgentProfile,
    start: CellIndex,
    goal: CellIndex,
    params: SimParams,
) -> Result<ComparisonRow, SimError> {
    let solo = |p: &AgentProfile| -> Result<ModeSummary, SimError> {
        let spec = AgentSpec {
            id: p.name.clone(),
            profile: p.clone(),
            start,
            goal,
            qtable: None,
        };
        let mut w = World::new(grid.clone(), vec![spec], Vec::new(), Vec::new(), Vec::new(), params, 0)?;
        w.run();
        Ok(ModeSummary::from_agent(&w.agents[0]))
    };
    Ok(ComparisonRow::new(String::from(route), solo(first)?, solo(second)?))
}
