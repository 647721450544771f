use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Instance, NoiseSpec};
use crate::reference::ReferenceState;

/// One posted round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Round {
    pub t: usize,
    pub price: f64,
    pub reference: f64,
    pub demand: f64,
    pub expected_revenue: f64,
    pub realized_revenue: f64,
}

/// Simulated market under ARM. Policies only see realized demand; the
/// noise-free revenue of each posted price is accumulated for regret.
#[derive(Debug, Clone)]
pub struct Market {
    inst: Instance<f64>,
    noise: NoiseSpec,
    state: ReferenceState<f64>,
    rng: ChaCha8Rng,
    horizon: usize,
    posted: usize,
    reset_rounds: usize,
    expected_total: f64,
    realized_total: f64,
    rows: Option<Vec<Round>>,
}

impl Market {
    /// Shocks are drawn from stream 0 of a ChaCha8 generator seeded with `seed`.
    pub fn new(inst: Instance<f64>, noise: NoiseSpec, r1: f64, horizon: usize, seed: u64) -> Result<Self> {
        noise.validate()?;
        let state = ReferenceState::arm(r1, inst.p_max())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0);
        Ok(Self {
            inst,
            noise,
            state,
            rng,
            horizon,
            posted: 0,
            reset_rounds: 0,
            expected_total: 0.0,
            realized_total: 0.0,
            rows: None,
        })
    }

    pub fn with_rows(mut self) -> Self {
        self.rows = Some(Vec::with_capacity(self.horizon));
        self
    }

    pub fn instance(&self) -> &Instance<f64> {
        &self.inst
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Index of the next round to be posted.
    pub fn t(&self) -> usize {
        self.posted + 1
    }

    pub fn remaining(&self) -> usize {
        self.horizon - self.posted
    }

    pub fn reference(&self) -> f64 {
        self.state.current()
    }

    pub fn state(&self) -> &ReferenceState<f64> {
        &self.state
    }

    pub fn reset_rounds(&self) -> usize {
        self.reset_rounds
    }

    pub fn expected_total(&self) -> f64 {
        self.expected_total
    }

    pub fn realized_total(&self) -> f64 {
        self.realized_total
    }

    pub fn take_rows(&mut self) -> Vec<Round> {
        self.rows.take().unwrap_or_default()
    }

    /// Posts `price` for the next round and returns the realized demand.
    pub fn post(&mut self, price: f64) -> Result<f64> {
        if self.posted == self.horizon {
            return Err(Error::Exhausted(self.horizon));
        }
        let t = self.t();
        let p_max = self.inst.p_max();
        if !(0.0..=p_max).contains(&price) {
            return Err(Error::PriceOutOfRange { t, price, p_max });
        }
        let r = self.state.current();
        let expected = self.inst.expected_demand(price, r)?;
        let demand = expected + self.noise.sample(&mut self.rng);
        let row = Round {
            t,
            price,
            reference: r,
            demand,
            expected_revenue: price * expected,
            realized_revenue: price * demand,
        };
        self.expected_total += row.expected_revenue;
        self.realized_total += row.realized_revenue;
        if let Some(rows) = self.rows.as_mut() {
            rows.push(row);
        }
        self.state.update(price)?;
        self.posted += 1;
        Ok(demand)
    }

    /// Same as [`Market::post`], counted as a reference-reset round.
    pub fn post_reset(&mut self, price: f64) -> Result<f64> {
        let d = self.post(price)?;
        self.reset_rounds += 1;
        Ok(d)
    }
}
