use alloc::vec;
use alloc::vec::Vec;

use super::state::{LocalState, STATE_COUNT};
use super::{ActionMask, LearningParams};
use crate::terrain::Action;

/// Training provenance stored alongside a table.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TableMeta {
    pub gamma: f64,
    pub alpha: f64,
    pub seed: u64,
    pub episodes: usize,
}

/// Dense action-value table over every (state, action) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    values: Vec<f64>,
    visits: Vec<u32>,
    pub meta: TableMeta,
}

impl Default for QTable {
    fn default() -> Self {
        Self::new()
    }
}

impl QTable {
    pub fn new() -> Self {
        Self {
            values: vec![0.0; STATE_COUNT * Action::COUNT],
            visits: vec![0; STATE_COUNT * Action::COUNT],
            meta: TableMeta::default(),
        }
    }

    fn slot(s: &LocalState, a: Action) -> usize {
        s.code() * Action::COUNT + a.index()
    }

    pub fn get(&self, s: &LocalState, a: Action) -> f64 {
        self.values[Self::slot(s, a)]
    }

    pub fn set(&mut self, s: &LocalState, a: Action, value: f64) {
        self.values[Self::slot(s, a)] = value;
    }

    pub fn visits(&self, s: &LocalState, a: Action) -> u32 {
        self.visits[Self::slot(s, a)]
    }

    pub fn row(&self, s: &LocalState) -> &[f64] {
        let start = s.code() * Action::COUNT;
        &self.values[start..start + Action::COUNT]
    }

    pub fn max_value(&self, s: &LocalState) -> f64 {
        self.row(s)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Highest-valued action among `allowed`, lowest index on ties. `Stay`
    /// if nothing is allowed.
    pub fn greedy(&self, s: &LocalState, allowed: ActionMask) -> Action {
        let row = self.row(s);
        let mut best: Option<(Action, f64)> = None;
        for a in allowed.iter() {
            let v = row[a.index()];
            if best.is_none_or(|(_, bv)| v > bv) {
                best = Some((a, v));
            }
        }
        best.map_or(Action::Stay, |(a, _)| a)
    }

    /// `Q(s,a) <- Q(s,a) + alpha * (r + gamma * max_a' Q(s',a') - Q(s,a))`
    pub fn update(
        &mut self,
        s: &LocalState,
        a: Action,
        reward: f64,
        next: &LocalState,
        params: &LearningParams,
    ) {
        let target = reward + params.gamma * self.max_value(next);
        self.apply(s, a, target, params.alpha);
    }

    /// Update for a transition that ends the episode (no successor value).
    pub fn update_terminal(&mut self, s: &LocalState, a: Action, reward: f64, params: &LearningParams) {
        self.apply(s, a, reward, params.alpha);
    }

    fn apply(&mut self, s: &LocalState, a: Action, target: f64, alpha: f64) {
        let i = Self::slot(s, a);
        let q = self.values[i];
        self.values[i] = q + alpha * (target - q);
        self.visits[i] = self.visits[i].saturating_add(1);
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Non-zero entries as `(state code, action index, value)`, in code order.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i / Action::COUNT, i % Action::COUNT, *v))
    }

    /// Set one entry by raw codes. Returns `false` if either code is out of range.
    pub fn set_raw(&mut self, state: usize, action: usize, value: f64) -> bool {
        if state >= STATE_COUNT || action >= Action::COUNT {
            return false;
        }
        self.values[state * Action::COUNT + action] = value;
        true
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}
