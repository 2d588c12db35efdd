//! Helper reward: task progress plus a weighted penalty for taking over goals
//! the main agent could have finished itself.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RewardConfig<S: Scalar> {
    pub goal_reward: S,
    pub emo_penalty: S,
    pub step_cost: S,
    pub illegal_cost: S,
    pub fail_penalty: S,
    pub lambda_e: S,
    pub horizon: u32,
}

impl<S: Scalar> Default for RewardConfig<S> {
    fn default() -> Self {
        RewardConfig {
            goal_reward: S::lit(20.0),
            emo_penalty: S::lit(-30.0),
            step_cost: S::lit(-0.12),
            illegal_cost: S::lit(-0.5),
            fail_penalty: S::lit(-20.0),
            lambda_e: S::one(),
            horizon: 30,
        }
    }
}

impl<S: Scalar> RewardConfig<S> {
    pub fn with_lambda(lambda_e: S) -> Self {
        RewardConfig {
            lambda_e,
            ..Default::default()
        }
    }

    /// Reward for finishing one goal, before the step term.
    pub fn goal_value(&self, necessary: bool) -> S {
        if necessary {
            self.goal_reward
        } else {
            self.goal_reward + self.lambda_e * self.emo_penalty
        }
    }
}

/// What happened to the helper in one step, as far as reward is concerned.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepFacts {
    /// Necessity flag of each goal the helper completed this step.
    pub helper_completed: Vec<bool>,
    pub helper_illegal: bool,
    /// Final step of an episode whose task is still incomplete.
    pub final_incomplete: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RewardBreakdown<S: Scalar> {
    pub goal: S,
    pub emotional: S,
    pub action: S,
    pub fail: S,
}

impl<S: Scalar> RewardBreakdown<S> {
    pub fn total(&self) -> S {
        self.goal + self.emotional + self.action + self.fail
    }
}

pub fn helper_reward<S: Scalar>(facts: &StepFacts, cfg: &RewardConfig<S>) -> RewardBreakdown<S> {
    let mut r = RewardBreakdown::default();
    for &necessary in &facts.helper_completed {
        r.goal = r.goal + cfg.goal_reward;
        if !necessary {
            r.emotional = r.emotional + cfg.lambda_e * cfg.emo_penalty;
        }
    }
    r.action = if facts.helper_illegal {
        cfg.illegal_cost
    } else {
        cfg.step_cost
    };
    if facts.final_incomplete {
        r.fail = cfg.fail_penalty;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn defaults() {
        let c = RewardConfig::<f64>::default();
        assert_eq!(
            (c.goal_reward, c.emo_penalty, c.step_cost, c.illegal_cost, c.fail_penalty, c.horizon),
            (20.0, -30.0, -0.12, -0.5, -20.0, 30)
        );
    }

    #[test]
    fn worked_values() {
        let c = RewardConfig::<f64>::with_lambda(1.0);
        let nec = StepFacts {
            helper_completed: vec![true],
            ..Default::default()
        };
        assert!(close(helper_reward(&nec, &c).total(), 19.88));
        let unnec = StepFacts {
            helper_completed: vec![false],
            ..Default::default()
        };
        assert!(close(helper_reward(&unnec, &c).total(), -10.12));
        let illegal = StepFacts {
            helper_illegal: true,
            ..Default::default()
        };
        assert!(close(helper_reward(&illegal, &c).total(), -0.5));
        let last = StepFacts {
            final_incomplete: true,
            ..Default::default()
        };
        assert!(close(helper_reward(&last, &c).total(), -20.12));
    }

    #[test]
    fn single_precision() {
        let c = RewardConfig::<f32>::with_lambda(1.0);
        let f = StepFacts {
            helper_completed: vec![false],
            ..Default::default()
        };
        assert!((helper_reward(&f, &c).total() + 10.12).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn components_sum_and_lambda_zero(flags in proptest::collection::vec(any::<bool>(), 0..4),
                                          illegal in any::<bool>(), last in any::<bool>(),
                                          lambda in 0.0f64..=1.0) {
            let facts = StepFacts { helper_completed: flags.clone(), helper_illegal: illegal, final_incomplete: last };
            let c = RewardConfig::<f64>::with_lambda(lambda);
            let r = helper_reward(&facts, &c);
            let unnec = flags.iter().filter(|f| !**f).count() as f64;
            let expect = 20.0 * flags.len() as f64 - 30.0 * lambda * unnec
                + if illegal { -0.5 } else { -0.12 } + if last { -20.0 } else { 0.0 };
            prop_assert!(close(r.total(), expect));
            let z = helper_reward(&facts, &RewardConfig::<f64>::with_lambda(0.0));
            prop_assert_eq!(z.emotional, 0.0);
        }
    }
}
