use rand::Rng;

use super::qtable::QTable;
use super::state::LocalState;
use crate::agents::AgentProfile;
use crate::planner::{local_step_cost, LocalField, PathPlan};
use crate::terrain::{Action, CellIndex, ElevationGrid};

/// Set of actions, one bit per [`Action::index`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ActionMask(u16);

impl ActionMask {
    pub const EMPTY: ActionMask = ActionMask(0);
    pub const ALL: ActionMask = ActionMask((1 << Action::COUNT) - 1);

    pub fn with(self, a: Action) -> ActionMask {
        ActionMask(self.0 | (1 << a.index()))
    }

    pub fn contains(self, a: Action) -> bool {
        self.0 & (1 << a.index()) != 0
    }

    pub fn count(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Action> {
        Action::ALL.into_iter().filter(move |a| self.contains(*a))
    }

    pub fn bits(self) -> u16 {
        self.0
    }
}

/// `Stay` plus every move the terrain permits for this profile. Obstacles
/// are not considered.
pub fn feasible_actions(grid: &ElevationGrid, profile: &AgentProfile, at: CellIndex) -> ActionMask {
    Action::ALL.into_iter().fold(ActionMask::EMPTY, |m, a| {
        match local_step_cost(grid, profile, at, a) {
            Ok(Some(_)) => m.with(a),
            _ => m,
        }
    })
}

/// Epsilon-greedy over `allowed`. Greedy ties go to the lowest action index;
/// no random number is drawn when `epsilon <= 0`.
pub fn select_action<R: Rng + ?Sized>(
    q: &QTable,
    s: &LocalState,
    allowed: ActionMask,
    epsilon: f64,
    rng: &mut R,
) -> Action {
    if allowed.is_empty() {
        return Action::Stay;
    }
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        let k = rng.random_range(0..allowed.count());
        return allowed.iter().nth(k).unwrap_or(Action::Stay);
    }
    q.greedy(s, allowed)
}

/// Everything the plan-following branch needs to know about an agent.
#[derive(Debug, Clone, Copy)]
pub struct PolicyInput<'a> {
    pub grid: &'a ElevationGrid,
    pub profile: &'a AgentProfile,
    pub plan: &'a PathPlan,
    pub waypoint_index: usize,
    /// Plan index of the tracked waypoint.
    pub target: usize,
    pub at: CellIndex,
}

/// `chi == true`: greedy learned action. `chi == false`: the action
/// minimizing step time plus exact cost-to-go to the tracked waypoint, ties
/// to the lowest index. On a plan edge this is the plan move itself.
pub fn hierarchical_policy(chi: bool, input: &PolicyInput<'_>, q: &QTable, s: &LocalState) -> Action {
    let allowed = feasible_actions(input.grid, input.profile, input.at);
    if chi {
        return q.greedy(s, allowed);
    }
    let target = input.plan.waypoints[input.target.min(input.plan.len() - 1)];
    if input.at == target {
        return Action::Stay;
    }
    let field = LocalField::new(
        input.grid,
        input.profile,
        target,
        input.at.chebyshev(target) + 2,
    );
    let mut best = (Action::Stay, f64::INFINITY);
    for a in allowed.iter() {
        let Ok(Some(step)) = local_step_cost(input.grid, input.profile, input.at, a) else {
            continue;
        };
        let dest = match a {
            Action::Move(d) => input.grid.step(input.at, d).unwrap_or(input.at),
            Action::Stay => input.at,
        };
        let c = step + field.cost(dest);
        if c < best.1 {
            best = (a, c);
        }
    }
    best.0
}

/// Whether the next plan cell is obstructed.
pub fn detect_block(
    plan: &PathPlan,
    waypoint_index: usize,
    occupied: &impl Fn(CellIndex) -> bool,
) -> bool {
    plan.waypoints
        .get(waypoint_index + 1)
        .is_some_and(|&next| occupied(next))
}

/// `(true, k)` when `cell` is plan waypoint `k >= waypoint_index`, otherwise
/// `(false, waypoint_index)`.
pub fn rejoin_check(cell: CellIndex, plan: &PathPlan, waypoint_index: usize) -> (bool, usize) {
    match plan.position_from(cell, waypoint_index) {
        Some(k) => (true, k),
        None => (false, waypoint_index),
    }
}
