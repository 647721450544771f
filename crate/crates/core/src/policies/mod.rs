//! Pricing policies behind one entry point, [`PolicyKind::run`].

pub mod baseline;
pub mod learn;
pub mod reset;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markdown::{solve_curve, PriceCurve};
use crate::market::Market;
use crate::model::{Instance, PolicyParams};

pub use baseline::{myopic_greedy_step, optimal_fixed_price, TwoPrice};
pub use learn::{learn_greedy, GreedyLearner, LearnReport, LearnThenEarn};
pub use reset::{reset_plan, reset_ref, ResetPlan};

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyKind {
    Fixed {
        price: f64,
    },
    OptimalFixed,
    TwoPrice {
        alpha: f64,
    },
    MyopicGreedy,
    /// Markdown curve for a given `theta`; the true parameters when `c1`/`c2` are omitted.
    MarkdownOracle {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c1: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c2: Option<f64>,
    },
    LearnThenEarn {
        /// Exploration budget per anchor; derived from the horizon when omitted.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t1: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ra: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rb: Option<f64>,
        /// Constant in front of the default budget.
        #[serde(default = "default_scale")]
        t1_scale: f64,
    },
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Fixed { .. } => "fixed",
            PolicyKind::OptimalFixed => "optimal_fixed",
            PolicyKind::TwoPrice { .. } => "two_price",
            PolicyKind::MyopicGreedy => "myopic_greedy",
            PolicyKind::MarkdownOracle { .. } => "markdown_oracle",
            PolicyKind::LearnThenEarn { .. } => "learn_then_earn",
        }
    }

    pub fn learn_then_earn() -> Self {
        PolicyKind::LearnThenEarn {
            t1: None,
            ra: None,
            rb: None,
            t1_scale: 1.0,
        }
    }

    /// Checks everything that does not depend on the horizon.
    pub fn validate(&self, inst: &Instance<f64>) -> Result<()> {
        match *self {
            PolicyKind::Fixed { price } => {
                inst.check_price("fixed price", price)?;
            }
            PolicyKind::TwoPrice { alpha } => {
                TwoPrice::new(inst, alpha)?;
            }
            PolicyKind::MarkdownOracle { c1, c2 } => {
                self.oracle_theta(inst)?;
                if c1.is_some() != c2.is_some() {
                    return Err(Error::Policy("markdown_oracle needs both c1 and c2 or neither".into()));
                }
            }
            PolicyKind::LearnThenEarn { .. } => {
                self.learner(inst, 1_000)?;
            }
            PolicyKind::OptimalFixed | PolicyKind::MyopicGreedy => {}
        }
        Ok(())
    }

    fn oracle_theta(&self, inst: &Instance<f64>) -> Result<PolicyParams<f64>> {
        match *self {
            PolicyKind::MarkdownOracle {
                c1: Some(c1),
                c2: Some(c2),
            } => Ok(PolicyParams::new(c1, c2)?),
            _ => Ok(inst.theta_star()),
        }
    }

    fn learner(&self, inst: &Instance<f64>, horizon: usize) -> Result<LearnThenEarn> {
        let PolicyKind::LearnThenEarn { t1, ra, rb, t1_scale } = *self else {
            return Err(Error::Policy(format!("{} is not a learning policy", self.name())));
        };
        if !(t1_scale > 0.0 && t1_scale.is_finite()) {
            return Err(Error::Policy(format!("t1_scale = {t1_scale} must be positive")));
        }
        if !inst.greedy_interior() {
            return Err(Error::Policy(
                "greedy price can sit closer than d to zero on this instance; the bandit learner needs C1* p_max + C2* >= delta/2".into(),
            ));
        }
        let (da, db) = learn::default_anchors(inst);
        let budget = t1.unwrap_or_else(|| learn::default_budget(inst.p_max(), horizon, t1_scale));
        LearnThenEarn::new(inst, budget, ra.unwrap_or(da), rb.unwrap_or(db))
    }

    /// Plays the whole horizon of `market`.
    pub fn run<R: Rng + ?Sized>(&self, market: &mut Market, rng: &mut R) -> Result<EpisodeNotes> {
        let inst = *market.instance();
        let horizon = market.horizon();
        let r1 = market.reference();
        let mut notes = EpisodeNotes::default();
        match *self {
            PolicyKind::Fixed { price } => post_constant(market, price)?,
            PolicyKind::OptimalFixed => post_constant(market, optimal_fixed_price(&inst, r1, horizon))?,
            PolicyKind::TwoPrice { alpha } => {
                let tp = TwoPrice::new(&inst, alpha)?;
                notes.switch_round = Some(tp.switch_round(horizon));
                while market.remaining() > 0 {
                    market.post(tp.price(market.t(), horizon))?;
                }
            }
            PolicyKind::MyopicGreedy => {
                while market.remaining() > 0 {
                    market.post(myopic_greedy_step(&inst, market.reference())?)?;
                }
            }
            PolicyKind::MarkdownOracle { .. } => {
                if horizon > 0 {
                    let curve = oracle_curve(&inst, &self.oracle_theta(&inst)?, r1, horizon)?;
                    notes.t_dagger = Some(curve.t_dagger);
                    for &p in &curve.prices {
                        market.post(p)?;
                    }
                }
            }
            PolicyKind::LearnThenEarn { .. } => {
                let report = self.learner(&inst, horizon)?.run(market, rng)?;
                notes.learn = Some(report);
                notes.reset_rounds = report.reset_rounds;
            }
        }
        Ok(notes)
    }
}

/// Curve started from `r1` for symmetric effects; from `p_max` otherwise, which
/// is the near-optimal construction for asymmetric effects.
pub fn oracle_curve(
    inst: &Instance<f64>,
    theta: &PolicyParams<f64>,
    r1: f64,
    horizon: usize,
) -> Result<PriceCurve<f64>> {
    let start = if inst.is_symmetric() { r1 } else { inst.p_max() };
    Ok(solve_curve(theta, start, 1, horizon, inst.p_max())?)
}

fn post_constant(market: &mut Market, price: f64) -> Result<()> {
    while market.remaining() > 0 {
        market.post(price)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EpisodeNotes {
    pub reset_rounds: usize,
    pub switch_round: Option<usize>,
    pub t_dagger: Option<usize>,
    pub learn: Option<LearnReport>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NoiseSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn inst() -> Instance<f64> {
        Instance::new(1.0, 2.0, 0.5, 0.5, 4.0 / 3.0, 1.0).unwrap()
    }

    #[test]
    fn every_policy_stays_in_range() {
        let kinds = [
            PolicyKind::Fixed { price: 1.0 },
            PolicyKind::OptimalFixed,
            PolicyKind::TwoPrice { alpha: 0.3 },
            PolicyKind::MyopicGreedy,
            PolicyKind::MarkdownOracle { c1: None, c2: None },
            PolicyKind::MarkdownOracle {
                c1: Some(0.1),
                c2: Some(0.7),
            },
            PolicyKind::learn_then_earn(),
        ];
        for kind in &kinds {
            kind.validate(&inst()).unwrap();
            for r1 in [0.0, 0.7, 4.0 / 3.0] {
                let mut m = Market::new(inst(), NoiseSpec::Gaussian { std: 0.2 }, r1, 2500, 4)
                    .unwrap()
                    .with_rows();
                let mut rng = ChaCha8Rng::seed_from_u64(4);
                kind.run(&mut m, &mut rng).unwrap();
                let rows = m.take_rows();
                assert_eq!(rows.len(), 2500, "{}", kind.name());
                assert!(rows.iter().all(|r| (0.0..=inst().p_max()).contains(&r.price)));
            }
        }
    }

    #[test]
    fn validation_catches_bad_hyperparameters() {
        assert!(PolicyKind::Fixed { price: 2.0 }.validate(&inst()).is_err());
        assert!(PolicyKind::TwoPrice { alpha: 1.5 }.validate(&inst()).is_err());
        assert!(PolicyKind::MarkdownOracle {
            c1: Some(0.6),
            c2: Some(1.0)
        }
        .validate(&inst())
        .is_err());
        assert!(PolicyKind::MarkdownOracle {
            c1: Some(0.1),
            c2: None
        }
        .validate(&inst())
        .is_err());
        let bad_anchor = PolicyKind::LearnThenEarn {
            t1: None,
            ra: Some(1.3),
            rb: Some(1.1),
            t1_scale: 1.0,
        };
        assert!(bad_anchor.validate(&inst()).is_err());
    }
}
