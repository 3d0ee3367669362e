//! Discrete-time multi-agent simulation.
//!
//! Each agent gets one global plan at world construction and then moves
//! continuously along grid edges. At every decision point the block
//! indicator is evaluated against obstacles and other agents, and the
//! hierarchical policy picks either the plan-following move or the learned
//! bypass action. Decisions within a step read the positions the agents had
//! at the start of the step and are committed in agent order; a later agent
//! whose move conflicts with an earlier one waits.

mod pursuit;
mod report;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::agents::AgentProfile;
use crate::local_adapt::{
    detect_block, deviation, hierarchical_policy, observe, rejoin_check, rejoin_target,
    PolicyInput, QTable,
};
use crate::math;
use crate::planner::{astar, edge, PathPlan, PlanError};
use crate::terrain::{Action, CellIndex, ElevationGrid, DEFAULT_EYE_HEIGHT};

pub use pursuit::{PursuitRule, PursuitStatus};
pub use report::{
    compare_transport, AgentOutcome, ComparisonRow, ModeSummary, PursuitOutcome, SimReport,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("time step must be positive and finite, got {0}")]
    BadDt(f64),
    #[error("obstacle {0}: schedule intervals must be ordered, non-overlapping and non-empty")]
    BadSchedule(usize),
    #[error("obstacle {0}: footprint cell {1} is outside the grid")]
    FootprintOutside(usize, CellIndex),
    #[error("agent `{0}`: start or goal is outside the grid or holds nodata")]
    BadEndpoint(String),
    #[error("agent `{0}` refers to a missing Q-table")]
    MissingTable(String),
    #[error("pursuit rule {0}: {1}")]
    BadRule(usize, &'static str),
    #[error("agent `{0}`: {1}")]
    Plan(String, PlanError),
}

/// `edge_time * (1 + slope_percent / 100)`, never negative.
pub fn effort_accrual(edge_time: f64, slope_percent: f64) -> f64 {
    (edge_time * (1.0 + slope_percent / 100.0)).max(0.0)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Obstacle {
    pub footprint: Vec<CellIndex>,
    /// Half-open `[appear, disappear)` intervals in seconds.
    pub schedule: Vec<(f64, f64)>,
}

impl Obstacle {
    /// An obstacle present for the whole run.
    pub fn permanent(footprint: Vec<CellIndex>) -> Self {
        Self {
            footprint,
            schedule: vec![(0.0, f64::INFINITY)],
        }
    }

    pub fn schedule_is_valid(&self) -> bool {
        let mut last = f64::NEG_INFINITY;
        self.schedule.iter().all(|&(a, b)| {
            let ok = !a.is_nan() && !b.is_nan() && a < b && a >= last;
            last = b;
            ok
        })
    }

    pub fn active_at(&self, t: f64) -> bool {
        self.schedule.iter().any(|&(a, b)| a <= t && t < b)
    }

    pub fn covers(&self, t: f64, c: CellIndex) -> bool {
        self.active_at(t) && self.footprint.contains(&c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AgentMode {
    Following,
    Adapting,
    Arrived,
    Intercepted,
    Abandoned,
    NoPath,
}

impl AgentMode {
    pub fn is_terminal(self) -> bool {
        !matches!(self, AgentMode::Following | AgentMode::Adapting)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AgentMode::Following => "following",
            AgentMode::Adapting => "adapting",
            AgentMode::Arrived => "arrived",
            AgentMode::Intercepted => "intercepted",
            AgentMode::Abandoned => "abandoned",
            AgentMode::NoPath => "no-path",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentSpec {
    pub id: String,
    pub profile: AgentProfile,
    pub start: CellIndex,
    pub goal: CellIndex,
    /// Index into the world's Q-tables; `None` gives an untrained table.
    pub qtable: Option<usize>,
}

/// One row of an agent's trace, written at the end of every step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub cell: CellIndex,
    pub easting: f64,
    pub northing: f64,
    pub elevation: f64,
    pub mode: AgentMode,
    pub chi: bool,
    pub action: Option<Action>,
    /// Horizontal meters covered during the step divided by the step length.
    pub speed: f64,
    pub deviation: usize,
    pub effort: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct InFlight {
    from: CellIndex,
    to: CellIndex,
    duration: f64,
    elapsed: f64,
    run: f64,
    slope: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentRuntime {
    pub id: String,
    pub profile: AgentProfile,
    pub position: (f64, f64),
    pub cell: CellIndex,
    pub plan: PathPlan,
    pub waypoint_index: usize,
    pub mode: AgentMode,
    pub effort_spent: f64,
    pub qtable_ref: usize,
    pub trace: Vec<TraceRecord>,
    pub start_clock: f64,
    pub arrival: Option<f64>,
    /// Horizontal meters of completed edges.
    pub distance: f64,
    /// Seconds spent on completed edges.
    pub travel_time: f64,
    /// Seconds spent standing still.
    pub wait_time: f64,
    pub astar_calls: usize,
    pub goal: CellIndex,
    flight: Option<InFlight>,
    last_chi: bool,
    last_action: Option<Action>,
    pursuing: bool,
    moved_this_step: f64,
}

impl AgentRuntime {
    pub fn is_active(&self) -> bool {
        !self.mode.is_terminal()
    }

    pub fn duration(&self) -> Option<f64> {
        self.arrival.map(|a| a - self.start_clock)
    }

    fn body(&self) -> Body {
        Body {
            position: self.position,
            cell: self.cell,
            radius: self.profile.body_radius,
            active: self.is_active(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Body {
    position: (f64, f64),
    cell: CellIndex,
    radius: f64,
    active: bool,
}

impl Body {
    fn covers(&self, grid: &ElevationGrid, c: CellIndex) -> bool {
        let (cx, cy) = grid.center(c);
        let h = grid.cellsize() / 2.0;
        let dx = ((self.position.0 - cx).abs() - h).max(0.0);
        let dy = ((self.position.1 - cy).abs() - h).max(0.0);
        c == self.cell || math::hypot(dx, dy) < self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SimParams {
    pub dt: f64,
    pub max_sim_time: f64,
    pub observer_height: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            dt: 1.0,
            max_sim_time: 86_400.0,
            observer_height: DEFAULT_EYE_HEIGHT,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub grid: ElevationGrid,
    pub clock: f64,
    pub agents: Vec<AgentRuntime>,
    pub obstacles: Vec<Obstacle>,
    pub rules: Vec<PursuitRule>,
    pub pursuits: Vec<PursuitStatus>,
    pub tables: Vec<QTable>,
    pub params: SimParams,
    pub rng_seed: u64,
}

/// Agent bodies at the start of a step.
struct Snapshot {
    bodies: Vec<Body>,
}

impl World {
    pub fn new(
        grid: ElevationGrid,
        specs: Vec<AgentSpec>,
        obstacles: Vec<Obstacle>,
        rules: Vec<PursuitRule>,
        mut tables: Vec<QTable>,
        params: SimParams,
        rng_seed: u64,
    ) -> Result<World, SimError> {
        if !(params.dt > 0.0 && params.dt.is_finite()) {
            return Err(SimError::BadDt(params.dt));
        }
        for (i, o) in obstacles.iter().enumerate() {
            if !o.schedule_is_valid() {
                return Err(SimError::BadSchedule(i));
            }
            if let Some(&c) = o.footprint.iter().find(|c| !grid.in_bounds(**c)) {
                return Err(SimError::FootprintOutside(i, c));
            }
        }
        let mut untrained = None;
        let mut agents = Vec::with_capacity(specs.len());
        for spec in specs {
            if !grid.is_traversable(spec.start) || !grid.is_traversable(spec.goal) {
                return Err(SimError::BadEndpoint(spec.id));
            }
            let qtable_ref = match spec.qtable {
                Some(i) if i < tables.len() => i,
                Some(_) => return Err(SimError::MissingTable(spec.id)),
                None => *untrained.get_or_insert_with(|| {
                    tables.push(QTable::new());
                    tables.len() - 1
                }),
            };
            let (plan, mode) = match astar(&grid, &spec.profile, spec.start, spec.goal) {
                Ok((plan, _)) => (plan, AgentMode::Following),
                Err(PlanError::NoPath { .. }) => (
                    PathPlan::from_cells(&grid, &spec.profile, vec![spec.start])
                        .expect("single-cell plan"),
                    AgentMode::NoPath,
                ),
                Err(e) => return Err(SimError::Plan(spec.id, e)),
            };
            agents.push(AgentRuntime {
                position: grid.center(spec.start),
                cell: spec.start,
                plan,
                waypoint_index: 0,
                mode,
                effort_spent: 0.0,
                qtable_ref,
                trace: Vec::new(),
                start_clock: 0.0,
                arrival: None,
                distance: 0.0,
                travel_time: 0.0,
                wait_time: 0.0,
                astar_calls: 1,
                goal: spec.goal,
                flight: None,
                last_chi: false,
                last_action: None,
                pursuing: false,
                moved_this_step: 0.0,
                id: spec.id,
                profile: spec.profile,
            });
        }
        for (i, r) in rules.iter().enumerate() {
            r.validate(i, agents.len())?;
            if rules[..i].iter().any(|o| o.pursuer == r.pursuer) {
                return Err(SimError::BadRule(i, "an agent can pursue only one target"));
            }
        }
        let mut pursuits = Vec::with_capacity(rules.len());
        for r in &rules {
            let both = agents[r.pursuer].is_active() && agents[r.target].is_active();
            agents[r.pursuer].pursuing = both;
            pursuits.push(if both {
                PursuitStatus::START
            } else {
                PursuitStatus::Unresolved
            });
        }
        let mut world = World {
            grid,
            clock: 0.0,
            agents,
            obstacles,
            rules,
            pursuits,
            tables,
            params,
            rng_seed,
        };
        for i in 0..world.agents.len() {
            world.record(i, 0.0);
        }
        Ok(world)
    }

    pub fn is_done(&self) -> bool {
        self.agents.iter().all(|a| !a.is_active()) || self.clock >= self.params.max_sim_time
    }

    /// Step until every agent is terminal or the time limit is reached.
    pub fn run(&mut self) {
        let dt = self.params.dt;
        while !self.is_done() {
            self.step(dt);
        }
        for status in &mut self.pursuits {
            if status.is_active() {
                *status = PursuitStatus::Unresolved;
            }
        }
    }

    fn obstacle_at(&self, t: f64, c: CellIndex) -> bool {
        self.obstacles.iter().any(|o| o.covers(t, c))
    }

    /// Whether agent `i`'s next plan cell is covered by an active obstacle
    /// or another active agent's body.
    pub fn detect_block(&self, i: usize) -> bool {
        let a = &self.agents[i];
        let ignore = self.ignored_by(i);
        let bodies: Vec<Body> = self.agents.iter().map(AgentRuntime::body).collect();
        detect_block(&a.plan, a.waypoint_index, &|c| {
            self.obstacle_at(self.clock, c) || body_at(&self.grid, &bodies, i, ignore, c)
        })
    }

    fn ignored_by(&self, i: usize) -> Option<usize> {
        self.rules
            .iter()
            .zip(&self.pursuits)
            .find(|(r, s)| r.pursuer == i && s.is_active())
            .map(|(r, _)| r.target)
    }

    /// Advance the world by `dt` seconds.
    pub fn step(&mut self, dt: f64) {
        let snapshot = Snapshot {
            bodies: self.agents.iter().map(AgentRuntime::body).collect(),
        };
        let t0 = self.clock;
        for i in 0..self.agents.len() {
            if self.agents[i].is_active() {
                self.advance(i, dt, &snapshot);
            }
        }
        self.clock = t0 + dt;
        for k in 0..self.rules.len() {
            self.pursuit_update(k, dt);
        }
        for i in 0..self.agents.len() {
            if snapshot.bodies[i].active {
                let moved = self.agents[i].moved_this_step;
                self.record(i, moved);
            }
        }
    }

    fn advance(&mut self, i: usize, dt: f64, snap: &Snapshot) {
        let t0 = self.clock;
        let ignore = self.ignored_by(i);
        let mut budget = dt;
        let mut moved = 0.0;
        // edges take at least cellsize / s_flat seconds, so this terminates
        while budget > 1e-12 && self.agents[i].is_active() {
            let a = &mut self.agents[i];
            if let Some(f) = a.flight.as_mut() {
                let take = budget.min(f.duration - f.elapsed);
                let frac_before = f.elapsed / f.duration;
                f.elapsed += take;
                let frac = (f.elapsed / f.duration).min(1.0);
                let f = *f;
                budget -= take;
                moved += f.run * (frac - frac_before);
                a.effort_spent += effort_accrual(take, f.slope);
                let (x0, y0) = self.grid.center(f.from);
                let (x1, y1) = self.grid.center(f.to);
                a.position = (x0 + (x1 - x0) * frac, y0 + (y1 - y0) * frac);
                a.cell = if frac >= 0.5 { f.to } else { f.from };
                if f.elapsed >= f.duration {
                    a.flight = None;
                    a.position = (x1, y1);
                    a.cell = f.to;
                    a.distance += f.run;
                    a.travel_time += f.duration;
                    let (on, k) = rejoin_check(a.cell, &a.plan, a.waypoint_index);
                    if on {
                        a.waypoint_index = k;
                    }
                    let at_end = a.waypoint_index + 1 == a.plan.len();
                    if at_end && !a.pursuing {
                        a.mode = AgentMode::Arrived;
                        a.arrival = Some(t0 + (dt - budget));
                    }
                }
                continue;
            }
            self.decide(i, t0, snap, ignore, &mut budget);
        }
        self.agents[i].moved_this_step = moved;
    }

    fn decide(
        &mut self,
        i: usize,
        t0: f64,
        snap: &Snapshot,
        ignore: Option<usize>,
        budget: &mut f64,
    ) {
        let grid = &self.grid;
        let obstacles = &self.obstacles;
        let occupied = |c: CellIndex| {
            obstacles.iter().any(|o| o.covers(t0, c)) || body_at(grid, &snap.bodies, i, ignore, c)
        };
        let agents = &self.agents;
        let claimed = |c: CellIndex| {
            agents.iter().enumerate().any(|(j, o)| {
                j != i && Some(j) != ignore && o.is_active() && o.flight.is_some_and(|f| f.to == c)
            })
        };
        let a = &agents[i];
        let at = a.cell;
        let wi = a.waypoint_index;
        let chi = detect_block(&a.plan, wi, &occupied);
        let off_plan = deviation(&a.plan, wi, at) > 0;
        let s = observe(grid, &occupied, at, &a.plan, wi);
        let input = PolicyInput {
            grid,
            profile: &a.profile,
            plan: &a.plan,
            waypoint_index: wi,
            target: rejoin_target(&a.plan, wi, &occupied),
            at,
        };
        let action = hierarchical_policy(chi || off_plan, &input, &self.tables[a.qtable_ref], &s);
        let flight = match action {
            Action::Move(d) => grid
                .move_allowed(at, d)
                .filter(|&n| !occupied(n) && !claimed(n))
                .and_then(|n| edge(grid, &a.profile, at, n).map(|e| (n, e))),
            Action::Stay => None,
        };
        let a = &mut self.agents[i];
        a.last_chi = chi;
        a.mode = if chi || off_plan {
            AgentMode::Adapting
        } else {
            AgentMode::Following
        };
        match flight {
            Some((to, e)) => {
                a.last_action = Some(action);
                a.flight = Some(InFlight {
                    from: at,
                    to,
                    duration: e.seconds,
                    elapsed: 0.0,
                    run: e.run,
                    slope: e.slope_percent,
                });
            }
            None => {
                a.last_action = Some(Action::Stay);
                a.wait_time += *budget;
                *budget = 0.0;
            }
        }
    }

    fn record(&mut self, i: usize, moved: f64) {
        let dt = self.params.dt;
        let a = &mut self.agents[i];
        let rec = TraceRecord {
            t: self.clock,
            cell: a.cell,
            easting: a.position.0,
            northing: a.position.1,
            elevation: self.grid.raw(a.cell),
            mode: a.mode,
            chi: a.last_chi,
            action: a.last_action,
            speed: if self.clock > 0.0 { moved / dt } else { 0.0 },
            deviation: deviation(&a.plan, a.waypoint_index, a.cell),
            effort: a.effort_spent,
        };
        a.trace.push(rec);
    }
}

fn body_at(
    grid: &ElevationGrid,
    bodies: &[Body],
    me: usize,
    ignore: Option<usize>,
    c: CellIndex,
) -> bool {
    bodies
        .iter()
        .enumerate()
        .any(|(j, b)| j != me && Some(j) != ignore && b.active && b.covers(grid, c))
}
