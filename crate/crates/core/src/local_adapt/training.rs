//! Episodic training of the bypass policy on randomized corridors.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::policy::{
    detect_block, feasible_actions, hierarchical_policy, rejoin_check, select_action, PolicyInput,
};
use super::qtable::{QTable, TableMeta};
use super::reward::{classify, reward, RewardWeights, StepOutcome};
use super::state::{deviation, observe, rejoin_target};
use super::{LearnError, LearningParams};
use crate::agents::AgentProfile;
use crate::planner::{astar, edge, PathPlan};
use crate::terrain::{Action, CellIndex, ElevationGrid};

/// Seconds charged for staying in place.
pub const STAY_SECONDS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObstacleShape {
    Single,
    /// Cells along the plan starting at the anchor.
    Along(usize),
    /// Cells perpendicular to the plan through the anchor; `offset` of them
    /// lie on the negative side.
    Across { len: usize, offset: usize },
    /// 2x2 square with the anchor at one corner.
    Block { down: bool, right: bool },
}

/// Generator of bypass episodes: a gently sloped corridor, a time-optimal
/// plan along it and an obstacle dropped on the plan ahead of the agent.
#[derive(Debug, Clone, PartialEq)]
pub struct CorridorEnv {
    pub profile: AgentProfile,
    pub nrows: usize,
    pub ncols: usize,
    pub cellsize: f64,
    /// Upper bound of the random along-corridor gradient, percent.
    pub max_ramp_percent: f64,
    /// Half-range of uniform elevation noise, meters.
    pub noise_m: f64,
    /// Share of episodes whose obstacle disappears after a few steps.
    pub transient_fraction: f64,
    pub max_transient_steps: usize,
}

impl CorridorEnv {
    pub fn new(profile: AgentProfile) -> Self {
        Self {
            profile,
            nrows: 9,
            ncols: 24,
            cellsize: 30.0,
            max_ramp_percent: 5.0,
            noise_m: 0.5,
            transient_fraction: 0.15,
            max_transient_steps: 6,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<BypassInstance, LearnError> {
        if self.nrows < 5 || self.ncols < 10 {
            return Err(LearnError::Environment("corridor must be at least 5x10 cells"));
        }
        let ramp = rng.random::<f64>() * self.max_ramp_percent / 100.0 * self.cellsize;
        let noise = self.noise_m;
        let grid = ElevationGrid::from_fn(self.nrows, self.ncols, self.cellsize, |_, c| {
            ramp * c as f64 + noise * (2.0 * rng.random::<f64>() - 1.0)
        })
        .map_err(|_| LearnError::Environment("bad corridor geometry"))?;
        let mid = self.nrows / 2;
        let (plan, _) = astar(
            &grid,
            &self.profile,
            CellIndex::new(mid, 0),
            CellIndex::new(mid, self.ncols - 1),
        )
        .map_err(|_| LearnError::Environment("profile cannot traverse the corridor"))?;
        let n = plan.len();
        let anchor = rng.random_range(3..=n - 5);
        let shape = match rng.random_range(0..4) {
            0 => ObstacleShape::Single,
            1 => ObstacleShape::Along(rng.random_range(2..=3)),
            2 => {
                let len = rng.random_range(2..=3);
                ObstacleShape::Across {
                    len,
                    offset: rng.random_range(0..len),
                }
            }
            _ => ObstacleShape::Block {
                down: rng.random(),
                right: rng.random(),
            },
        };
        let vanish_after = (rng.random::<f64>() < self.transient_fraction)
            .then(|| rng.random_range(1..=self.max_transient_steps));
        let footprint = footprint(&grid, &plan, anchor, shape);
        Ok(BypassInstance {
            grid,
            plan,
            footprint,
            anchor,
            shape,
            vanish_after,
        })
    }
}

fn footprint(grid: &ElevationGrid, plan: &PathPlan, anchor: usize, shape: ObstacleShape) -> Vec<CellIndex> {
    let a = plan.waypoints[anchor];
    let prev = plan.waypoints[anchor - 1];
    let dr = a.row as isize - prev.row as isize;
    let dc = a.col as isize - prev.col as isize;
    let offset = |r: isize, c: isize| {
        let row = a.row as isize + r;
        let col = a.col as isize + c;
        (row >= 0 && col >= 0).then(|| CellIndex::new(row as usize, col as usize))
    };
    let raw: Vec<Option<CellIndex>> = match shape {
        ObstacleShape::Single => alloc::vec![Some(a)],
        ObstacleShape::Along(len) => plan.waypoints[anchor..anchor + len].iter().map(|&c| Some(c)).collect(),
        ObstacleShape::Across { len, offset: neg } => (0..len)
            .map(|i| {
                let k = i as isize - neg as isize;
                offset(-dc * k, dr * k)
            })
            .collect(),
        ObstacleShape::Block { down, right } => {
            let sr = if down { 1 } else { -1 };
            let sc = if right { 1 } else { -1 };
            alloc::vec![offset(0, 0), offset(sr, 0), offset(0, sc), offset(sr, sc)]
        }
    };
    let mut cells: Vec<CellIndex> = Vec::new();
    for c in raw.into_iter().flatten() {
        let excluded = !grid.is_traversable(c)
            || plan.waypoints[..anchor].contains(&c)
            || c == plan.goal()
            || cells.contains(&c);
        if !excluded {
            cells.push(c);
        }
    }
    cells
}

/// One bypass problem. The agent starts on the plan just before `anchor`.
#[derive(Debug, Clone, PartialEq)]
pub struct BypassInstance {
    pub grid: ElevationGrid,
    pub plan: PathPlan,
    pub footprint: Vec<CellIndex>,
    pub anchor: usize,
    pub shape: ObstacleShape,
    /// Steps after which the obstacle disappears; `None` for a static one.
    pub vanish_after: Option<usize>,
}

impl BypassInstance {
    pub fn start_index(&self) -> usize {
        self.anchor - 1
    }

    pub fn active(&self, step: usize) -> bool {
        self.vanish_after.is_none_or(|v| step < v)
    }

    pub fn occupied(&self, step: usize, c: CellIndex) -> bool {
        self.active(step) && self.footprint.contains(&c)
    }

    /// Time-optimal route from the start cell to the goal treating the
    /// footprint as permanently impassable.
    pub fn replanning_oracle(&self, profile: &AgentProfile) -> Option<PathPlan> {
        let mut g = self.grid.clone();
        for &c in &self.footprint {
            g.set_nodata(c);
        }
        astar(&g, profile, self.plan.waypoints[self.start_index()], self.plan.goal())
            .ok()
            .map(|(p, _)| p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpisodeEnd {
    /// Back on the plan with the next plan step free.
    Rejoined,
    Collision,
    StepCap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub end: EpisodeEnd,
    pub steps: usize,
    pub ret: f64,
    /// Cells occupied after each step, starting with the start cell.
    pub path: Vec<CellIndex>,
    /// Plan index reached at the end.
    pub waypoint_index: usize,
    /// Seconds spent on the episode's steps.
    pub elapsed: f64,
}

impl EpisodeResult {
    pub fn success(&self) -> bool {
        self.end == EpisodeEnd::Rejoined
    }

    /// Episode time plus the remaining plan time from the rejoin point.
    pub fn time_to_goal(&self, plan: &PathPlan) -> f64 {
        self.elapsed + plan.edge_times[self.waypoint_index..].iter().sum::<f64>()
    }
}

/// How actions are chosen during an episode.
pub enum Driver<'a, R: Rng + ?Sized> {
    /// Epsilon-greedy on the table, learning from every transition.
    Learn {
        params: &'a LearningParams,
        epsilon: f64,
        rng: &'a mut R,
    },
    /// The frozen hierarchical policy used in simulation.
    Hybrid,
}

pub fn run_episode<R: Rng + ?Sized>(
    inst: &BypassInstance,
    profile: &AgentProfile,
    q: &mut QTable,
    w: &RewardWeights,
    mut driver: Driver<'_, R>,
    max_steps: usize,
) -> Result<EpisodeResult, LearnError> {
    let grid = &inst.grid;
    let plan = &inst.plan;
    let mut at = plan.waypoints[inst.start_index()];
    let mut wi = inst.start_index();
    let mut prev_d = 0usize;
    let mut result = EpisodeResult {
        end: EpisodeEnd::StepCap,
        steps: 0,
        ret: 0.0,
        path: alloc::vec![at],
        waypoint_index: wi,
        elapsed: 0.0,
    };
    for step in 0..max_steps {
        let occ = |c: CellIndex| inst.occupied(step, c);
        let chi = detect_block(plan, wi, &occ);
        let s = observe(grid, &occ, at, plan, wi);
        let a = match &mut driver {
            Driver::Learn { epsilon, rng, .. } => {
                let allowed = feasible_actions(grid, profile, at);
                select_action(q, &s, allowed, *epsilon, *rng)
            }
            Driver::Hybrid => {
                let input = PolicyInput {
                    grid,
                    profile,
                    plan,
                    waypoint_index: wi,
                    target: rejoin_target(plan, wi, &occ),
                    at,
                };
                hierarchical_policy(chi || deviation(plan, wi, at) > 0, &input, q, &s)
            }
        };
        let (next, dt) = match a {
            Action::Move(d) => match grid.move_allowed(at, d).and_then(|n| edge(grid, profile, at, n).map(|e| (n, e))) {
                Some((n, e)) => (n, e.seconds),
                None => (at, STAY_SECONDS),
            },
            Action::Stay => (at, STAY_SECONDS),
        };
        result.steps = step + 1;
        result.elapsed += dt;
        if occ(next) {
            let r = reward(super::RewardEvent::Collision, w)?;
            result.ret += r;
            result.end = EpisodeEnd::Collision;
            if let Driver::Learn { params, .. } = &driver {
                q.update_terminal(&s, a, r, params);
            }
            return Ok(result);
        }
        at = next;
        result.path.push(at);
        let occ_next = |c: CellIndex| inst.occupied(step + 1, c);
        let (on, k) = rejoin_check(at, plan, wi);
        let d = deviation(plan, k, at);
        let next_clear = !detect_block(plan, k, &occ_next);
        let outcome = StepOutcome {
            collided: false,
            rejoined: on && prev_d > 0 && next_clear,
            cleared: chi && on && next_clear,
            deviation: d,
            advanced: on && k > wi,
            deviation_reduced: d < prev_d,
            dt,
        };
        wi = k;
        prev_d = d;
        let success = on && next_clear;
        let mut r = reward(classify(&outcome), w)?;
        let capped = !success && step + 1 == max_steps;
        if capped {
            r = -w.r_coll;
        }
        result.ret += r;
        result.waypoint_index = wi;
        if let Driver::Learn { params, .. } = &driver {
            if success || capped {
                q.update_terminal(&s, a, r, params);
            } else {
                let s_next = observe(grid, &occ_next, at, plan, wi);
                q.update(&s, a, r, &s_next, params);
            }
        }
        if success {
            result.end = EpisodeEnd::Rejoined;
            return Ok(result);
        }
    }
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub ret: f64,
    pub success: bool,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingRun {
    pub table: QTable,
    pub curve: Vec<EpisodeRecord>,
}

pub fn train_bypass(
    env: &CorridorEnv,
    w: &RewardWeights,
    p: &LearningParams,
) -> Result<TrainingRun, LearnError> {
    p.validate()?;
    w.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut table = QTable::new();
    table.meta = TableMeta {
        gamma: p.gamma,
        alpha: p.alpha,
        seed: p.seed,
        episodes: p.episodes,
    };
    let mut curve = Vec::with_capacity(p.episodes);
    for episode in 0..p.episodes {
        let inst = env.sample(&mut rng)?;
        let driver = Driver::Learn {
            params: p,
            epsilon: p.epsilon_at(episode),
            rng: &mut rng,
        };
        let r = run_episode(&inst, &env.profile, &mut table, w, driver, p.max_steps_per_episode)?;
        curve.push(EpisodeRecord {
            episode,
            ret: r.ret,
            success: r.success(),
            steps: r.steps,
        });
    }
    Ok(TrainingRun { table, curve })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BypassEval {
    pub trials: usize,
    pub successes: usize,
    pub collisions: usize,
    pub timeouts: usize,
    /// Hybrid time to goal over the replanning oracle's time, one entry per
    /// successful instance with a static obstacle.
    pub time_ratios: Vec<f64>,
}

impl BypassEval {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.trials.max(1) as f64
    }

    pub fn collision_rate(&self) -> f64 {
        self.collisions as f64 / self.trials.max(1) as f64
    }

    pub fn worst_ratio(&self) -> f64 {
        self.time_ratios.iter().copied().fold(0.0, f64::max)
    }
}

/// Roll out the frozen hierarchical policy on `trials` fresh instances.
pub fn evaluate_bypass(
    env: &CorridorEnv,
    q: &QTable,
    w: &RewardWeights,
    trials: usize,
    seed: u64,
    max_steps: usize,
) -> Result<BypassEval, LearnError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frozen = q.clone();
    let mut eval = BypassEval {
        trials,
        ..Default::default()
    };
    for _ in 0..trials {
        let inst = env.sample(&mut rng)?;
        let r = run_episode::<ChaCha8Rng>(&inst, &env.profile, &mut frozen, w, Driver::Hybrid, max_steps)?;
        match r.end {
            EpisodeEnd::Rejoined => {
                eval.successes += 1;
                if inst.vanish_after.is_none() {
                    if let Some(oracle) = inst.replanning_oracle(&env.profile) {
                        eval.time_ratios.push(r.time_to_goal(&inst.plan) / oracle.total_time);
                    }
                }
            }
            EpisodeEnd::Collision => eval.collisions += 1,
            EpisodeEnd::StepCap => eval.timeouts += 1,
        }
    }
    Ok(eval)
}
