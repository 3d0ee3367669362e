use super::LearnError;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct RewardWeights {
    pub r_coll: f64,
    /// Per second of delay.
    pub r_delay: f64,
    /// Per cell of deviation.
    pub r_dev: f64,
    pub r_rejoin: f64,
    pub r_clear: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            r_coll: 10.0,
            r_delay: 0.1,
            r_dev: 0.5,
            r_rejoin: 5.0,
            r_clear: 2.0,
        }
    }
}

impl RewardWeights {
    /// Zero weights are accepted to allow ablations.
    pub fn validate(&self) -> Result<(), LearnError> {
        let ok = [self.r_coll, self.r_delay, self.r_dev, self.r_rejoin, self.r_clear]
            .iter()
            .all(|w| w.is_finite() && *w >= 0.0);
        if ok {
            Ok(())
        } else {
            Err(LearnError::Weights)
        }
    }

    /// Largest single-step reward magnitude when delays never exceed
    /// `max_delay` seconds and deviations never exceed `max_deviation` cells.
    pub fn r_max(&self, max_delay: f64, max_deviation: f64) -> f64 {
        [
            self.r_coll,
            self.r_delay * max_delay,
            self.r_dev * max_deviation,
            self.r_rejoin,
            self.r_clear,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RewardEvent {
    Collision,
    /// Seconds lost.
    Delay(f64),
    /// Cells off the plan.
    Deviation(f64),
    Rejoin,
    Clear,
    None,
}

impl RewardEvent {
    pub fn as_str(&self) -> &'static str {
        match self {
            RewardEvent::Collision => "collision",
            RewardEvent::Delay(_) => "delay",
            RewardEvent::Deviation(_) => "deviation",
            RewardEvent::Rejoin => "rejoin",
            RewardEvent::Clear => "clear",
            RewardEvent::None => "none",
        }
    }
}

pub fn reward(event: RewardEvent, w: &RewardWeights) -> Result<f64, LearnError> {
    let amount = |x: f64| {
        if x.is_finite() && x >= 0.0 {
            Ok(x)
        } else {
            Err(LearnError::NegativeInput(x))
        }
    };
    Ok(match event {
        RewardEvent::Collision => -w.r_coll,
        RewardEvent::Delay(dt) => -w.r_delay * amount(dt)?,
        RewardEvent::Deviation(d) => -w.r_dev * amount(d)?,
        RewardEvent::Rejoin => w.r_rejoin,
        RewardEvent::Clear => w.r_clear,
        RewardEvent::None => 0.0,
    })
}

/// What happened during one step, before classification.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepOutcome {
    pub collided: bool,
    pub rejoined: bool,
    pub cleared: bool,
    /// Cells off the plan after the step.
    pub deviation: usize,
    pub advanced: bool,
    pub deviation_reduced: bool,
    /// Seconds the step took.
    pub dt: f64,
}

/// Single event for a step: collision, then rejoin, clear, deviation, delay.
pub fn classify(o: &StepOutcome) -> RewardEvent {
    if o.collided {
        RewardEvent::Collision
    } else if o.rejoined {
        RewardEvent::Rejoin
    } else if o.cleared {
        RewardEvent::Clear
    } else if o.deviation > 0 {
        RewardEvent::Deviation(o.deviation as f64)
    } else if !o.advanced && !o.deviation_reduced {
        RewardEvent::Delay(o.dt)
    } else {
        RewardEvent::None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_cases() {
        let w = RewardWeights::default();
        assert_eq!(reward(RewardEvent::None, &w), Ok(0.0));
        assert_eq!(reward(RewardEvent::Deviation(2.0), &w), Ok(-1.0));
        assert_eq!(reward(RewardEvent::Rejoin, &w), Ok(5.0));
        assert_eq!(reward(RewardEvent::Collision, &w), Ok(-10.0));
        assert_eq!(reward(RewardEvent::Clear, &w), Ok(2.0));
        assert!((reward(RewardEvent::Delay(20.0), &w).unwrap() + 2.0).abs() < 1e-12);
        assert!(reward(RewardEvent::Delay(-1.0), &w).is_err());
        assert!(reward(RewardEvent::Deviation(-0.5), &w).is_err());
    }

    #[test]
    fn precedence() {
        let all = StepOutcome {
            collided: true,
            rejoined: true,
            cleared: true,
            deviation: 2,
            dt: 1.0,
            ..Default::default()
        };
        assert_eq!(classify(&all), RewardEvent::Collision);
        let o = StepOutcome {
            collided: false,
            ..all
        };
        assert_eq!(classify(&o), RewardEvent::Rejoin);
        let o = StepOutcome {
            rejoined: false,
            ..o
        };
        assert_eq!(classify(&o), RewardEvent::Clear);
        let o = StepOutcome { cleared: false, ..o };
        assert_eq!(classify(&o), RewardEvent::Deviation(2.0));
        let o = StepOutcome { deviation: 0, ..o };
        assert_eq!(classify(&o), RewardEvent::Delay(1.0));
        let o = StepOutcome { advanced: true, ..o };
        assert_eq!(classify(&o), RewardEvent::None);
    }
}
