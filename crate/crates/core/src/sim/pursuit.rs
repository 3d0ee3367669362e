use alloc::vec::Vec;

use super::{AgentMode, SimError, World};
use crate::planner::{edge, PathPlan};
use crate::terrain::{line_of_sight, CellIndex, Direction};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PursuitRule {
    /// Agent index of the pursuer.
    pub pursuer: usize,
    /// Agent index of the target.
    pub target: usize,
    /// Consecutive seconds without line of sight before giving up.
    pub los_loss_limit: f64,
    /// Effort beyond which the pursuer gives up.
    pub effort_budget: f64,
    /// Center distance in meters that counts as interception.
    pub capture_radius: f64,
}

impl PursuitRule {
    pub const DEFAULT_LOS_LOSS_LIMIT: f64 = 120.0;
    pub const DEFAULT_EFFORT_BUDGET: f64 = 1.0e6;
    pub const DEFAULT_CAPTURE_RADIUS: f64 = 15.0;

    pub fn new(pursuer: usize, target: usize) -> Self {
        Self {
            pursuer,
            target,
            los_loss_limit: Self::DEFAULT_LOS_LOSS_LIMIT,
            effort_budget: Self::DEFAULT_EFFORT_BUDGET,
            capture_radius: Self::DEFAULT_CAPTURE_RADIUS,
        }
    }

    pub(crate) fn validate(&self, i: usize, agents: usize) -> Result<(), SimError> {
        if self.pursuer >= agents || self.target >= agents {
            return Err(SimError::BadRule(i, "unknown agent"));
        }
        if self.pursuer == self.target {
            return Err(SimError::BadRule(i, "an agent cannot pursue itself"));
        }
        if !(self.los_loss_limit > 0.0) || !(self.capture_radius > 0.0) {
            return Err(SimError::BadRule(i, "loss limit and capture radius must be positive"));
        }
        if !(self.effort_budget >= 0.0) {
            return Err(SimError::BadRule(i, "effort budget must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "status", rename_all = "snake_case"))]
pub enum PursuitStatus {
    /// Still running.
    Active {
        /// Consecutive seconds without line of sight.
        los_lost_for: f64,
        last_seen: Option<CellIndex>,
    },
    Intercepted { t: f64 },
    AbandonedLos { t: f64 },
    AbandonedEffort { t: f64 },
    /// The target reached its goal first.
    Escaped { t: f64 },
    /// Never started or cut off by the time limit.
    Unresolved,
}

impl PursuitStatus {
    pub const START: PursuitStatus = PursuitStatus::Active {
        los_lost_for: 0.0,
        last_seen: None,
    };

    pub fn is_active(&self) -> bool {
        matches!(self, PursuitStatus::Active { .. })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            PursuitStatus::Active { .. } => "active",
            PursuitStatus::Intercepted { .. } => "interception",
            PursuitStatus::AbandonedLos { .. } => "abandonment-los",
            PursuitStatus::AbandonedEffort { .. } => "abandonment-effort",
            PursuitStatus::Escaped { .. } => "escaped",
            PursuitStatus::Unresolved => "unresolved",
        }
    }

    /// Clock value at which the pursuit ended.
    pub fn time(&self) -> Option<f64> {
        match *self {
            PursuitStatus::Intercepted { t }
            | PursuitStatus::AbandonedLos { t }
            | PursuitStatus::AbandonedEffort { t }
            | PursuitStatus::Escaped { t } => Some(t),
            _ => None,
        }
    }
}

/// Cells from `from` toward `to`, each step to the passable neighbor that
/// most reduces the octile distance (lowest direction index on ties). Stops
/// at `to` or when no neighbor gets closer.
pub fn greedy_tail(
    world: &World,
    pursuer: usize,
    from: CellIndex,
    to: CellIndex,
) -> Vec<CellIndex> {
    let grid = &world.grid;
    let profile = &world.agents[pursuer].profile;
    let mut cells = Vec::new();
    let mut at = from;
    while at != to {
        let here = at.octile(to);
        let mut best: Option<(CellIndex, f64)> = None;
        for d in Direction::ALL {
            let Some(n) = grid.move_allowed(at, d) else {
                continue;
            };
            if edge(grid, profile, at, n).is_none() {
                continue;
            }
            let h = n.octile(to);
            if h < here && best.is_none_or(|(_, b)| h < b) {
                best = Some((n, h));
            }
        }
        let Some((n, _)) = best else {
            break;
        };
        cells.push(n);
        at = n;
    }
    cells
}

impl World {
    /// Apply pursuit rule `k` after the agents of this step have moved.
    pub fn pursuit_update(&mut self, k: usize, dt: f64) {
        let PursuitStatus::Active {
            mut los_lost_for,
            mut last_seen,
        } = self.pursuits[k]
        else {
            return;
        };
        let rule = self.rules[k];
        let (p, q) = (rule.pursuer, rule.target);
        let t = self.clock;
        let end = |world: &mut World, status: PursuitStatus, pursuer_mode: AgentMode| {
            world.pursuits[k] = status;
            let a = &mut world.agents[p];
            a.pursuing = false;
            if a.is_active() {
                a.mode = pursuer_mode;
                if pursuer_mode == AgentMode::Arrived {
                    a.arrival = Some(t);
                }
            }
        };
        if !self.agents[p].is_active() {
            self.pursuits[k] = PursuitStatus::Unresolved;
            return;
        }
        let (px, py) = self.agents[p].position;
        let (qx, qy) = self.agents[q].position;
        if self.agents[q].mode == AgentMode::Arrived {
            end(self, PursuitStatus::Escaped { t }, AgentMode::Abandoned);
            return;
        }
        if !self.agents[q].is_active() {
            self.pursuits[k] = PursuitStatus::Unresolved;
            self.agents[p].pursuing = false;
            return;
        }
        if crate::math::hypot(px - qx, py - qy) <= rule.capture_radius {
            self.agents[q].mode = AgentMode::Intercepted;
            end(self, PursuitStatus::Intercepted { t }, AgentMode::Arrived);
            return;
        }
        if self.agents[p].effort_spent > rule.effort_budget {
            end(self, PursuitStatus::AbandonedEffort { t }, AgentMode::Abandoned);
            return;
        }
        let h = self.params.observer_height;
        let seen = line_of_sight(&self.grid, self.agents[p].cell, self.agents[q].cell, h, h);
        if seen {
            los_lost_for = 0.0;
            let target_cell = self.agents[q].cell;
            if last_seen != Some(target_cell) {
                last_seen = Some(target_cell);
                self.reaim(p, target_cell);
            }
        } else {
            los_lost_for += dt;
            if los_lost_for >= rule.los_loss_limit {
                end(self, PursuitStatus::AbandonedLos { t }, AgentMode::Abandoned);
                return;
            }
        }
        self.pursuits[k] = PursuitStatus::Active {
            los_lost_for,
            last_seen,
        };
    }

    /// Replace the pursuer's plan beyond its current edge by a greedy run to
    /// `aim`. The plan prefix already walked is kept, so waypoint indices stay
    /// valid. Skipped while the pursuer is off its plan.
    fn reaim(&mut self, p: usize, aim: CellIndex) {
        let a = &self.agents[p];
        let wi = a.waypoint_index;
        let keep = match a.flight {
            Some(f) if a.plan.waypoints.get(wi + 1) == Some(&f.to) && a.plan.waypoints[wi] == f.from => {
                wi + 1
            }
            None if a.plan.waypoints[wi] == a.cell => wi,
            _ => return,
        };
        let anchor = a.plan.waypoints[keep];
        let mut cells: Vec<CellIndex> = a.plan.waypoints[..=keep].to_vec();
        cells.extend(greedy_tail(self, p, anchor, aim));
        if cells == a.plan.waypoints {
            return;
        }
        if let Some(plan) = PathPlan::from_cells(&self.grid, &a.profile, cells) {
            self.agents[p].plan = plan;
        }
    }
}
