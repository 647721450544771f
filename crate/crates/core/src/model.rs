//! Linear demand with asymmetric reference effects.
//!
//! `D(p, r) = b - a p + eta_plus (r - p)^+ - eta_minus (p - r)^+` and the
//! single-round revenue `p D(p, r)`. Shocks are additive and never clamped.

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{what} = {value} is outside [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("invalid instance: {0}")]
    Instance(String),
    #[error("invalid policy parameters: {0}")]
    Params(String),
    #[error("invalid noise: {0}")]
    Noise(String),
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

pub(crate) fn two<S: Scalar>() -> S {
    S::one() + S::one()
}

pub(crate) fn check_range<S: Scalar>(what: &'static str, x: S, lo: S, hi: S) -> Result<()> {
    if x.within(lo, hi) {
        Ok(())
    } else {
        Err(ModelError::Domain {
            what,
            value: x.real(),
            lo: lo.real(),
            hi: hi.real(),
        })
    }
}

/// Model parameters. Construct through [`Instance::new`], which enforces the
/// interior-maximizer and nonnegative-demand assumptions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Instance<S> {
    a: S,
    b: S,
    eta_plus: S,
    eta_minus: S,
    p_max: S,
    p_ratio_bound: S,
}

impl<S: Scalar> Instance<S> {
    pub fn new(a: S, b: S, eta_plus: S, eta_minus: S, p_max: S, p_ratio_bound: S) -> Result<Self> {
        let bad = |msg: String| Err(ModelError::Instance(msg));
        if a <= S::zero() {
            return bad(format!("a must be positive, got {a}"));
        }
        if b < S::zero() || eta_plus < S::zero() || eta_minus < S::zero() {
            return bad("b, eta_plus and eta_minus must be nonnegative".into());
        }
        if p_max <= S::zero() {
            return bad(format!("p_max must be positive, got {p_max}"));
        }
        let vertex = b / (two::<S>() * a);
        if vertex >= p_max {
            return bad(format!("b/(2a) = {vertex} must lie strictly below p_max = {p_max}"));
        }
        if p_ratio_bound < vertex || p_ratio_bound >= p_max {
            return bad(format!(
                "p_ratio_bound = {p_ratio_bound} must satisfy b/(2a) = {vertex} <= p_ratio_bound < p_max = {p_max}"
            ));
        }
        let inst = Self {
            a,
            b,
            eta_plus,
            eta_minus,
            p_max,
            p_ratio_bound,
        };
        let z = S::zero();
        for (p, r) in [(z, z), (p_max, z), (z, p_max), (p_max, p_max)] {
            let d = inst.demand_unchecked(p, r);
            if d < -S::slack() {
                return bad(format!("expected demand {d} is negative at p = {p}, r = {r}"));
            }
        }
        Ok(inst)
    }

    /// Builds an instance without the modelling assumptions (interior maximizer,
    /// nonnegative demand on the whole box). Prices are still range checked.
    pub fn unchecked(a: S, b: S, eta_plus: S, eta_minus: S, p_max: S, p_ratio_bound: S) -> Self {
        Self {
            a,
            b,
            eta_plus,
            eta_minus,
            p_max,
            p_ratio_bound,
        }
    }

    /// The greedy price stays at least `d = (r - p_ratio_bound)/2` away from 0
    /// over the whole window only when `C1* p_max + C2* >= delta/2`. The
    /// bandit learner relies on this.
    pub fn greedy_interior(&self) -> bool {
        self.theta_star().greedy(self.p_max) >= self.delta() / two::<S>() - S::slack()
    }

    pub fn a(&self) -> S {
        self.a
    }
    pub fn b(&self) -> S {
        self.b
    }
    pub fn eta_plus(&self) -> S {
        self.eta_plus
    }
    pub fn eta_minus(&self) -> S {
        self.eta_minus
    }
    pub fn p_max(&self) -> S {
        self.p_max
    }
    pub fn p_ratio_bound(&self) -> S {
        self.p_ratio_bound
    }

    /// Width of the window `(p_max - delta, p_max]` on which the greedy price is affine.
    pub fn delta(&self) -> S {
        self.p_max - self.p_ratio_bound
    }

    pub fn is_symmetric(&self) -> bool {
        self.eta_plus == self.eta_minus
    }

    pub fn check_price(&self, what: &'static str, p: S) -> Result<()> {
        check_range(what, p, S::zero(), self.p_max)
    }

    pub(crate) fn demand_unchecked(&self, p: S, r: S) -> S {
        let gain = (r - p).max_of(S::zero());
        let loss = (p - r).max_of(S::zero());
        self.b - self.a * p + self.eta_plus * gain - self.eta_minus * loss
    }

    pub fn expected_demand(&self, p: S, r: S) -> Result<S> {
        self.check_price("price", p)?;
        self.check_price("reference", r)?;
        Ok(self.demand_unchecked(p, r))
    }

    pub fn revenue(&self, p: S, r: S) -> Result<S> {
        Ok(p * self.expected_demand(p, r)?)
    }

    /// dR/dp. At the kink `p = r` the left derivative (gain branch) is returned.
    pub fn revenue_slope(&self, p: S, r: S) -> Result<S> {
        self.check_price("price", p)?;
        self.check_price("reference", r)?;
        let t = two::<S>();
        Ok(if p <= r {
            self.b - t * (self.a + self.eta_plus) * p + self.eta_plus * r
        } else {
            self.b - t * (self.a + self.eta_minus) * p + self.eta_minus * r
        })
    }

    pub fn theta_star(&self) -> PolicyParams<S> {
        let denom = two::<S>() * (self.a + self.eta_plus);
        PolicyParams {
            c1: self.eta_plus / denom,
            c2: self.b / denom,
        }
    }

    /// Lower end of the window where the greedy price is `C1* r + C2*`.
    pub fn greedy_window(&self) -> (S, S) {
        (self.p_ratio_bound, self.p_max)
    }

    /// Maximizer of `revenue(., r)` over `[0, r]` for `r` in `(p_max - delta, p_max]`.
    pub fn greedy_price(&self, r: S) -> Result<S> {
        if !(r > self.p_ratio_bound && r.within(self.p_ratio_bound, self.p_max)) {
            return Err(ModelError::Domain {
                what: "reference (greedy window)",
                value: r.real(),
                lo: self.p_ratio_bound.real(),
                hi: self.p_max.real(),
            });
        }
        Ok(self.theta_star().greedy(r))
    }
}

/// `theta = (C1, C2)`: the greedy price is `C1 r + C2` and the markdown curve is
/// fully determined by it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyParams<S> {
    pub c1: S,
    pub c2: S,
}

impl<S: Scalar> PolicyParams<S> {
    pub fn new(c1: S, c2: S) -> Result<Self> {
        if c1 < S::zero() || c1 >= S::one() / two::<S>() {
            return Err(ModelError::Params(format!("c1 = {c1} must lie in [0, 1/2)")));
        }
        if c2 <= S::zero() {
            return Err(ModelError::Params(format!("c2 = {c2} must be positive")));
        }
        Ok(Self { c1, c2 })
    }

    pub fn greedy(&self, r: S) -> S {
        self.c1 * r + self.c2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    #[default]
    None,
    BoundedUniform {
        half_width: f64,
    },
    Gaussian {
        std: f64,
    },
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseSpec::None => Ok(()),
            NoiseSpec::BoundedUniform { half_width } if half_width >= 0.0 && half_width.is_finite() => Ok(()),
            NoiseSpec::Gaussian { std } if std >= 0.0 && std.is_finite() => Ok(()),
            other => Err(ModelError::Noise(format!("{other:?} needs a finite nonnegative width"))),
        }
    }

    /// One zero-mean shock. Degenerate widths return exactly zero without touching the rng.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseSpec::None => 0.0,
            NoiseSpec::BoundedUniform { half_width } if half_width > 0.0 => {
                Uniform::new_inclusive(-half_width, half_width)
                    .expect("validated width")
                    .sample(rng)
            }
            NoiseSpec::Gaussian { std } if std > 0.0 => Normal::new(0.0, std).expect("validated std").sample(rng),
            _ => 0.0,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            NoiseSpec::None => 0.0,
            NoiseSpec::BoundedUniform { half_width } => half_width * half_width / 3.0,
            NoiseSpec::Gaussian { std } => std * std,
        }
    }
}

/// Expected demand plus one shock.
pub fn sample_demand<R: Rng + ?Sized>(
    inst: &Instance<f64>,
    noise: &NoiseSpec,
    p: f64,
    r: f64,
    rng: &mut R,
) -> Result<f64> {
    Ok(inst.expected_demand(p, r)? + noise.sample(rng))
}
