//! Learned local bypass of dynamic obstacles.
//!
//! Agents follow their global plan until the next plan cell is obstructed
//! (the block indicator `chi`). While obstructed, actions come from a tabular
//! Q-function over a compact local state; otherwise they minimize step cost
//! plus exact cost-to-go toward the tracked plan waypoint.

mod policy;
mod qtable;
mod reward;
mod state;
mod training;

use thiserror::Error;

pub use policy::{
    detect_block, feasible_actions, hierarchical_policy, rejoin_check, select_action, ActionMask,
    PolicyInput,
};
pub use qtable::{QTable, TableMeta};
pub use reward::{classify, reward, RewardEvent, RewardWeights, StepOutcome};
pub use state::{deviation, observe, rejoin_target, LocalState, STATE_COUNT};
pub use training::{
    evaluate_bypass, run_episode, train_bypass, BypassEval, BypassInstance, CorridorEnv,
    Driver, EpisodeEnd, EpisodeRecord, EpisodeResult, ObstacleShape, TrainingRun,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnError {
    #[error("learning rate must be in (0, 1], got {0}")]
    Alpha(f64),
    #[error("discount must be in [0, 1), got {0}")]
    Gamma(f64),
    #[error("exploration rates must be in [0, 1]")]
    Epsilon,
    #[error("reward weights must be finite and non-negative")]
    Weights,
    #[error("reward inputs must be finite and non-negative, got {0}")]
    NegativeInput(f64),
    #[error("corridor environment: {0}")]
    Environment(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct LearningParams {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Episodes over which exploration decays linearly from start to end.
    pub epsilon_decay_episodes: usize,
    pub episodes: usize,
    pub max_steps_per_episode: usize,
    pub seed: u64,
}

impl Default for LearningParams {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gamma: 0.95,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_episodes: 2000,
            episodes: 5000,
            max_steps_per_episode: 40,
            seed: 0,
        }
    }
}

impl LearningParams {
    pub fn validate(&self) -> Result<(), LearnError> {
        // alpha == 0 is accepted so a frozen table can be replayed through
        // the same code path
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(LearnError::Alpha(self.alpha));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(LearnError::Gamma(self.gamma));
        }
        let unit = 0.0..=1.0;
        if !unit.contains(&self.epsilon_start) || !unit.contains(&self.epsilon_end) {
            return Err(LearnError::Epsilon);
        }
        Ok(())
    }

    pub fn epsilon_at(&self, episode: usize) -> f64 {
        if self.epsilon_decay_episodes == 0 || episode >= self.epsilon_decay_episodes {
            return self.epsilon_end;
        }
        let t = episode as f64 / self.epsilon_decay_episodes as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * t
    }
}
