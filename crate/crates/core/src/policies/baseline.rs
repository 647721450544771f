use crate::error::{Error, Result};
use crate::model::Instance;

pub fn harmonic(n: usize) -> f64 {
    (1..=n).rev().map(|s| 1.0 / s as f64).sum()
}

/// Total expected revenue of holding `p` for `horizon` rounds from reference `r1`.
/// Under ARM `r_t - p = (r1 - p)/t`, so the sign of the reference term never
/// changes and the total is `T p (b - a p) + eta p (r1 - p) H_T`.
pub fn fixed_price_value(inst: &Instance<f64>, p: f64, r1: f64, horizon: usize) -> f64 {
    let eta = if r1 >= p { inst.eta_plus() } else { inst.eta_minus() };
    let t = horizon as f64;
    t * p * (inst.b() - inst.a() * p) + eta * p * (r1 - p) * harmonic(horizon)
}

/// Best single price over `horizon` rounds. Closed form for symmetric effects;
/// a 10^4-step grid on `[0, p_max]` otherwise.
pub fn optimal_fixed_price(inst: &Instance<f64>, r1: f64, horizon: usize) -> f64 {
    if horizon == 0 {
        return 0.0;
    }
    if inst.is_symmetric() {
        let h = harmonic(horizon);
        let t = horizon as f64;
        let eta = inst.eta_plus();
        let p = (t * inst.b() + eta * r1 * h) / (2.0 * (t * inst.a() + eta * h));
        return p.clamp(0.0, inst.p_max());
    }
    let steps = 10_000;
    let h = harmonic(horizon);
    let t = horizon as f64;
    let value = |p: f64| {
        let eta = if r1 >= p { inst.eta_plus() } else { inst.eta_minus() };
        t * p * (inst.b() - inst.a() * p) + eta * p * (r1 - p) * h
    };
    (0..=steps)
        .map(|i| inst.p_max() * i as f64 / steps as f64)
        .fold((0.0, f64::NEG_INFINITY), |best, p| {
            let v = value(p);
            if v > best.1 {
                (p, v)
            } else {
                best
            }
        })
        .0
}

/// High price for the first `switch` rounds, lower price afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPrice {
    pub p_up: f64,
    pub p_down: f64,
    pub alpha: f64,
}

impl TwoPrice {
    pub fn new(inst: &Instance<f64>, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Policy(format!("two-price alpha = {alpha} must lie in (0, 1)")));
        }
        if !inst.is_symmetric() {
            return Err(Error::Policy(
                "two-price construction needs eta_plus == eta_minus".into(),
            ));
        }
        let (a, b, eta) = (inst.a(), inst.b(), inst.eta_plus());
        let l = (1.0 / alpha).ln();
        let denom = 2.0 * (a * (1.0 - alpha) + eta * alpha * l) - (eta * l).powi(2) * alpha / (2.0 * a);
        if denom <= 0.0 {
            return Err(Error::Policy(format!("two-price denominator {denom} is not positive")));
        }
        let p_down = ((1.0 - alpha) * b + eta * alpha * (b / (2.0 * a)) * l) / denom;
        let p_up = (b + eta * p_down * l) / (2.0 * a);
        for p in [p_up, p_down] {
            if !(0.0..=inst.p_max()).contains(&p) {
                return Err(Error::Policy(format!(
                    "two-price level {p} is outside [0, {}]",
                    inst.p_max()
                )));
            }
        }
        Ok(Self { p_up, p_down, alpha })
    }

    /// Rounds `1..=switch_round` post the high price.
    pub fn switch_round(&self, horizon: usize) -> usize {
        (self.alpha * horizon as f64).floor() as usize
    }

    pub fn price(&self, t: usize, horizon: usize) -> f64 {
        if t <= self.switch_round(horizon) {
            self.p_up
        } else {
            self.p_down
        }
    }

    /// Per-round asymptotic value `A(alpha)` minus the no-reference optimum `b^2/(4a)`.
    pub fn rate_gap(&self, inst: &Instance<f64>) -> f64 {
        let (a, b, eta, al) = (inst.a(), inst.b(), inst.eta_plus(), self.alpha);
        let (pu, pd) = (self.p_up, self.p_down);
        let big_a =
            al * pu * (b - a * pu) + (1.0 - al) * pd * (b - a * pd) + eta * pd * al * (pu - pd) * (1.0 / al).ln();
        big_a - b * b / (4.0 * a)
    }
}

/// Single-round revenue maximizer over the whole price range `[0, p_max]`.
///
/// Each branch of the kinked revenue is a concave quadratic; the winner is the
/// better of the two clipped vertices. Inside the greedy window this coincides
/// with the maximizer over `[0, r]`.
pub fn myopic_greedy_step(inst: &Instance<f64>, r: f64) -> Result<f64> {
    inst.check_price("reference", r)?;
    let (a, b, p_max) = (inst.a(), inst.b(), inst.p_max());
    let (ep, em) = (inst.eta_plus(), inst.eta_minus());
    let gain = ((b + ep * r) / (2.0 * (a + ep))).clamp(0.0, r.min(p_max));
    let loss = ((b + em * r) / (2.0 * (a + em))).clamp(r, p_max);
    let rev = |p: f64| p * inst.expected_demand(p, r).unwrap_or(f64::NEG_INFINITY);
    Ok(if rev(loss) > rev(gain) { loss } else { gain })
}
