//! Learning the greedy price with one-point bandit feedback, and the
//! explore-then-exploit pricing algorithm built on it.

use rand::Rng;

use super::reset::{reset_plan, ResetPlan};
use crate::error::{Error, Result};
use crate::markdown::{solve_curve, SolverError};
use crate::market::Market;
use crate::model::{Instance, PolicyParams};

/// Projected stochastic gradient ascent on `p -> R(p, r_target)`.
///
/// Each query perturbs the iterate by `kappa * d` with a fair sign `kappa`, and
/// `p D kappa / d` is an unbiased estimate of the revenue slope at the iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyLearner {
    r_target: f64,
    d: f64,
    p_max: f64,
    s: usize,
    p_hat: f64,
    sum_iterates: f64,
}

impl GreedyLearner {
    pub fn new(inst: &Instance<f64>, r_target: f64) -> Result<Self> {
        inst.check_price("target reference", r_target)?;
        let d = (r_target - inst.p_ratio_bound()) / 2.0;
        if d.is_nan() || d <= 0.0 {
            return Err(Error::Policy(format!(
                "target reference {r_target} must exceed p_ratio_bound {}",
                inst.p_ratio_bound()
            )));
        }
        Ok(Self {
            r_target,
            d,
            p_max: inst.p_max(),
            s: 1,
            p_hat: r_target / 2.0,
            sum_iterates: 0.0,
        })
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn r_target(&self) -> f64 {
        self.r_target
    }

    pub fn iterate(&self) -> f64 {
        self.p_hat
    }

    pub fn rounds(&self) -> usize {
        self.s - 1
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.d, self.r_target - self.d)
    }

    pub fn query(&self, kappa: f64) -> f64 {
        self.p_hat + kappa * self.d
    }

    pub fn gradient(price: f64, demand: f64, kappa: f64, d: f64) -> f64 {
        price * demand * kappa / d
    }

    pub fn observe(&mut self, kappa: f64, price: f64, demand: f64) {
        let g = Self::gradient(price, demand, kappa, self.d);
        let (lo, hi) = self.bounds();
        self.sum_iterates += self.p_hat;
        self.p_hat = (self.p_hat + g / (2.0 * self.p_max * self.s as f64)).clamp(lo, hi);
        self.s += 1;
    }

    /// Mean of the iterates before each update; `None` before the first round.
    pub fn average(&self) -> Option<f64> {
        (self.s > 1).then(|| self.sum_iterates / (self.s - 1) as f64)
    }
}

pub fn draw_sign<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnOutcome {
    pub estimate: f64,
    pub learning_rounds: usize,
    pub reset_rounds: usize,
    /// False when the horizon ran out before the budget was spent.
    pub complete: bool,
}

fn execute(market: &mut Market, plan: &ResetPlan<f64>) -> Result<()> {
    for _ in 0..plan.n_fill {
        market.post_reset(plan.fill)?;
    }
    if let Some(p) = plan.last {
        market.post_reset(p)?;
    }
    Ok(())
}

/// Runs `budget` learning rounds at `r_target`, restoring the reference before
/// each one. Stops early, keeping the partial average, if the horizon would be
/// exceeded.
pub fn learn_greedy<R: Rng + ?Sized>(
    market: &mut Market,
    rng: &mut R,
    budget: usize,
    r_target: f64,
) -> Result<LearnOutcome> {
    let mut learner = GreedyLearner::new(market.instance(), r_target)?;
    let resets_before = market.reset_rounds();
    let mut complete = true;
    for _ in 0..budget {
        let plan = reset_plan(market.state(), r_target)?;
        if market.remaining() < plan.rounds() + 1 {
            complete = false;
            break;
        }
        execute(market, &plan)?;
        let kappa = draw_sign(rng);
        let price = learner.query(kappa).clamp(0.0, market.instance().p_max());
        let demand = market.post(price)?;
        learner.observe(kappa, price, demand);
    }
    Ok(LearnOutcome {
        estimate: learner.average().unwrap_or(learner.iterate()),
        learning_rounds: learner.rounds(),
        reset_rounds: market.reset_rounds() - resets_before,
        complete,
    })
}

/// Where the two explorations learn, as fractions of `delta = p_max - p_ratio_bound`
/// below `p_max`.
pub const DEFAULT_RA_DEPTH: f64 = 5.0 / 6.0;
pub const DEFAULT_RB_DEPTH: f64 = 2.0 / 3.0;

pub fn default_anchors(inst: &Instance<f64>) -> (f64, f64) {
    let (p_max, delta) = (inst.p_max(), inst.delta());
    (p_max - DEFAULT_RA_DEPTH * delta, p_max - DEFAULT_RB_DEPTH * delta)
}

/// `max(4, round(scale * p_max^2 * sqrt(T / (1 + p_max))))`.
pub fn default_budget(p_max: f64, horizon: usize, scale: f64) -> usize {
    let raw = scale * p_max * p_max * (horizon as f64 / (1.0 + p_max)).sqrt();
    (raw.round() as usize).max(4)
}

pub const C1_CLAMP: (f64, f64) = (0.0, 0.49);

/// `C2` is clamped into `[lo * p_max, hi * p_max]`.
pub const C2_CLAMP: (f64, f64) = (1e-6, 10.0);

/// Solves the two greedy-price equations `p(r) = C1 r + C2` through the
/// estimates at `ra` and `rb`.
pub fn theta_from_greedy(ra: f64, pa: f64, rb: f64, pb: f64) -> (f64, f64) {
    let span = rb - ra;
    ((pb - pa) / span, (pa * rb - pb * ra) / span)
}

pub fn clamp_theta(raw: (f64, f64), p_max: f64) -> PolicyParams<f64> {
    PolicyParams {
        c1: raw.0.clamp(C1_CLAMP.0, C1_CLAMP.1),
        c2: raw.1.clamp(C2_CLAMP.0 * p_max, C2_CLAMP.1 * p_max),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnThenEarn {
    pub budget: usize,
    pub ra: f64,
    pub rb: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LearnReport {
    pub greedy_a: f64,
    pub greedy_b: f64,
    pub theta_raw: (f64, f64),
    pub theta: (f64, f64),
    /// First exploitation round.
    pub t2: usize,
    pub learning_rounds: usize,
    pub reset_rounds: usize,
    pub exploit_rounds: usize,
    /// No markdown curve exists for the estimate; `p_max` was posted instead.
    pub degenerate: bool,
}

impl LearnThenEarn {
    pub fn new(inst: &Instance<f64>, budget: usize, ra: f64, rb: f64) -> Result<Self> {
        if budget < 4 {
            return Err(Error::Policy(format!("exploration budget {budget} must be at least 4")));
        }
        let lo = inst.p_ratio_bound();
        let ok = |r: f64| r > lo && r < inst.p_max();
        if !(ra < rb && ok(ra) && ok(rb)) {
            return Err(Error::Policy(format!(
                "need p_ratio_bound = {lo} < ra = {ra} < rb = {rb} < p_max = {}",
                inst.p_max()
            )));
        }
        Ok(Self { budget, ra, rb })
    }

    pub fn run<R: Rng + ?Sized>(&self, market: &mut Market, rng: &mut R) -> Result<LearnReport> {
        let p_max = market.instance().p_max();
        let first = learn_greedy(market, rng, self.budget, self.ra)?;
        let second = learn_greedy(market, rng, self.budget, self.rb)?;
        let theta_raw = theta_from_greedy(self.ra, first.estimate, self.rb, second.estimate);
        let theta = clamp_theta(theta_raw, p_max);
        let mut report = LearnReport {
            greedy_a: first.estimate,
            greedy_b: second.estimate,
            theta_raw,
            theta: (theta.c1, theta.c2),
            t2: market.t(),
            learning_rounds: first.learning_rounds + second.learning_rounds,
            reset_rounds: first.reset_rounds + second.reset_rounds,
            exploit_rounds: market.remaining(),
            degenerate: !(theta_raw.0.is_finite() && theta_raw.1.is_finite()),
        };
        if market.remaining() == 0 {
            return Ok(report);
        }
        let horizon = market.horizon();
        let curve = if report.degenerate {
            None
        } else {
            match solve_curve(&theta, p_max, report.t2, horizon, p_max) {
                Ok(c) => Some(c),
                Err(SolverError::NoFeasibleStart { .. }) => None,
                Err(e) => return Err(e.into()),
            }
        };
        match curve {
            Some(c) => {
                for &p in &c.prices {
                    market.post(p)?;
                }
            }
            None => {
                report.degenerate = true;
                while market.remaining() > 0 {
                    market.post(p_max)?;
                }
            }
        }
        Ok(report)
    }
}
