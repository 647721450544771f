//! Markdown price curves.
//!
//! A curve holds `p_max` on `[t1, t_dagger)` and then follows the first-order
//! condition `p_t = C2 + C1 (r_t + sum_{s>t} p_s / s)` up to the horizon. The
//! condition collapses to the one-step rule `p_{t+1} = p_t - C1 r_t / (t+1+C1)`
//! with terminal price `C1 r_T + C2`, so the only unknown is the first markdown
//! price, obtained in O(T) from two auxiliary recursions. A dense solve of the
//! same stationarity system is kept as an oracle for small horizons.

use thiserror::Error;

use crate::model::{check_range, Instance, ModelError, PolicyParams};
use crate::reference::ReferenceState;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("system is not strictly diagonally dominant: C1 * sum 1/s = {0}")]
    NotDominant(f64),
    #[error("no feasible markdown start on [{t1}, {horizon}]")]
    NoFeasibleStart { t1: usize, horizon: usize },
    #[error("bad rounds: t1 = {t1}, t_dagger = {t_dagger}, horizon = {horizon}")]
    Rounds { t1: usize, t_dagger: usize, horizon: usize },
    #[error("singular pivot in dense elimination")]
    Singular,
}

pub type Result<T, E = SolverError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub struct PriceCurve<S> {
    pub t_start: usize,
    pub t_dagger: usize,
    /// `prices[k]` is posted in round `t_start + k`.
    pub prices: Vec<S>,
    /// References induced from the `r_start` the curve was computed for.
    pub refs: Vec<S>,
    /// Feasibility checks spent by [`solve_curve`]; zero for direct construction.
    pub probes: usize,
}

impl<S: Scalar> PriceCurve<S> {
    pub fn horizon(&self) -> usize {
        self.t_start + self.prices.len() - 1
    }

    pub fn price_at(&self, t: usize) -> S {
        self.prices[t - self.t_start]
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Probe<S> {
    Feasible(PriceCurve<S>),
    /// `None` when the first-price equation has no positive denominator.
    Infeasible {
        p_dagger: Option<S>,
    },
}

fn harmonic_tail<S: Scalar>(from: usize, to: usize) -> S {
    // summed smallest-first for accuracy
    (from..=to).rev().fold(S::zero(), |acc, s| acc + S::one() / S::count(s))
}

/// `C1 * sum_{s=t_dagger+1}^{T} 1/s`; the stationarity system is strictly
/// diagonally dominant iff this is below one.
pub fn dominance_load<S: Scalar>(c1: S, t_dagger: usize, horizon: usize) -> S {
    c1 * harmonic_tail(t_dagger + 1, horizon)
}

fn check_rounds(t1: usize, t_dagger: usize, horizon: usize) -> Result<()> {
    if t1 == 0 || t1 > t_dagger || t_dagger > horizon {
        return Err(SolverError::Rounds { t1, t_dagger, horizon });
    }
    Ok(())
}

/// `(sum, r_dagger)` of the ARM state entering round `t_dagger` after holding
/// `p_max` from round `t1` with reference `r_start`.
fn plateau_state<S: Scalar>(r_start: S, t1: usize, t_dagger: usize, p_max: S) -> (S, S) {
    let sum = S::count(t1) * r_start + S::count(t_dagger - t1) * p_max;
    (sum, sum / S::count(t_dagger))
}

/// First markdown price for a start at `t_dagger` with entering reference `r_dagger`.
///
/// Writing `p_t = A_t p + B_t` along the one-step rule and substituting into the
/// stationarity condition of round `t_dagger` gives `p = (B' + C2 + C1 C2/T) / (1 - A')`.
/// Returns `None` when `1 - A'` is not positive.
pub fn first_markdown_price<S: Scalar>(
    theta: &PolicyParams<S>,
    r_dagger: S,
    t_dagger: usize,
    horizon: usize,
) -> Option<S> {
    let (c1, c2) = (theta.c1, theta.c2);
    if t_dagger == horizon {
        return Some(c1 * r_dagger + c2);
    }
    let base = S::count(t_dagger) * r_dagger;
    let (mut a_prev, mut b_prev) = (S::one(), S::zero());
    // sums over s in [t_dagger, t-2]
    let (mut lag_a, mut lag_b) = (S::zero(), S::zero());
    // sums over s in [t_dagger, T-1]
    let (mut tot_a, mut tot_b) = (S::one(), S::zero());
    // sums of A_s/s, B_s/s over s in [t_dagger+1, T-1]
    let (mut wa, mut wb) = (S::zero(), S::zero());
    for t in t_dagger + 1..horizon {
        let ts = S::count(t);
        let k = c1 / (ts + c1) / S::count(t - 1);
        let a_t = a_prev - k * lag_a;
        let b_t = b_prev - k * (base + lag_b);
        lag_a = lag_a + a_prev;
        lag_b = lag_b + b_prev;
        tot_a = tot_a + a_t;
        tot_b = tot_b + b_t;
        wa = wa + a_t / ts;
        wb = wb + b_t / ts;
        a_prev = a_t;
        b_prev = b_t;
    }
    let big_t = S::count(horizon);
    let tail = c1 / (big_t * big_t);
    let a_bar = c1 * (wa + tail * tot_a);
    let b_bar = c1 * r_dagger + c1 * (wb + tail * (base + tot_b));
    let denom = S::one() - a_bar;
    if denom <= S::zero() {
        return None;
    }
    Some((b_bar + c2 + c1 * c2 / big_t) / denom)
}

/// Rolls the curve forward from a known first markdown price.
fn roll<S: Scalar>(
    theta: &PolicyParams<S>,
    r_start: S,
    t1: usize,
    t_dagger: usize,
    horizon: usize,
    p_max: S,
    p_dagger: S,
) -> PriceCurve<S> {
    let n = horizon - t1 + 1;
    let mut prices = Vec::with_capacity(n);
    let mut refs = Vec::with_capacity(n);
    let mut sum = S::count(t1) * r_start;
    let mut r = r_start;
    let mut p = p_max;
    for t in t1..=horizon {
        if t == t_dagger {
            p = p_dagger;
        } else if t == horizon {
            p = theta.greedy(r);
        } else if t > t_dagger {
            p = p - theta.c1 * refs[refs.len() - 1] / (S::count(t) + theta.c1);
        }
        prices.push(p);
        refs.push(r);
        sum = sum + p;
        r = sum / S::count(t + 1);
    }
    PriceCurve {
        t_start: t1,
        t_dagger,
        prices,
        refs,
        probes: 0,
    }
}

/// Curve with its markdown forced to start at `t_dagger`. Infeasible when the
/// first markdown price leaves `[0, p_max]`.
pub fn curve_from_tdagger<S: Scalar>(
    theta: &PolicyParams<S>,
    r_start: S,
    t1: usize,
    t_dagger: usize,
    horizon: usize,
    p_max: S,
) -> Result<Probe<S>> {
    check_rounds(t1, t_dagger, horizon)?;
    check_range("start reference", r_start, S::zero(), p_max)?;
    let load = dominance_load(theta.c1, t_dagger, horizon);
    if load >= S::one() {
        return Err(SolverError::NotDominant(load.real()));
    }
    let (_, r_dagger) = plateau_state(r_start, t1, t_dagger, p_max);
    match first_markdown_price(theta, r_dagger, t_dagger, horizon) {
        Some(p) if p.within(S::zero(), p_max) => Ok(Probe::Feasible(roll(
            theta,
            r_start,
            t1,
            t_dagger,
            horizon,
            p_max,
            p.clamp_to(S::zero(), p_max),
        ))),
        p => Ok(Probe::Infeasible { p_dagger: p }),
    }
}

/// A probe that would hit a non-dominant system counts as infeasible. The
/// non-dominant starts form a prefix of `[t1, T]`, so this keeps the predicate
/// monotone.
fn feasible_price<S: Scalar>(
    theta: &PolicyParams<S>,
    r_start: S,
    t1: usize,
    t: usize,
    horizon: usize,
    p_max: S,
) -> Option<S> {
    if dominance_load(theta.c1, t, horizon) >= S::one() {
        return None;
    }
    let (_, r_dagger) = plateau_state(r_start, t1, t, p_max);
    first_markdown_price(theta, r_dagger, t, horizon)
        .filter(|p| p.within(S::zero(), p_max))
        .map(|p| p.clamp_to(S::zero(), p_max))
}

/// Smallest feasible markdown start by binary search, then the full curve.
pub fn solve_curve<S: Scalar>(
    theta: &PolicyParams<S>,
    r_start: S,
    t1: usize,
    horizon: usize,
    p_max: S,
) -> Result<PriceCurve<S>> {
    check_rounds(t1, t1, horizon)?;
    check_range("start reference", r_start, S::zero(), p_max)?;
    let mut probes = 1;
    let mut best = feasible_price(theta, r_start, t1, horizon, horizon, p_max)
        .ok_or(SolverError::NoFeasibleStart { t1, horizon })?;
    let (mut lo, mut hi) = (t1, horizon);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        probes += 1;
        match feasible_price(theta, r_start, t1, mid, horizon, p_max) {
            Some(p) => {
                hi = mid;
                best = p;
            }
            None => lo = mid + 1,
        }
    }
    let mut curve = roll(theta, r_start, t1, hi, horizon, p_max, best);
    curve.probes = probes;
    Ok(curve)
}

/// Exhaustive counterpart of the binary search.
pub fn scan_t_dagger<S: Scalar>(
    theta: &PolicyParams<S>,
    r_start: S,
    t1: usize,
    horizon: usize,
    p_max: S,
) -> Option<usize> {
    (t1..=horizon).find(|&t| feasible_price(theta, r_start, t1, t, horizon, p_max).is_some())
}

/// Stationarity residuals `p_t - C2 - C1 (r_t + sum_{s>t} p_s/s)` on `[t_dagger, T]`.
pub fn foc_residuals<S: Scalar>(theta: &PolicyParams<S>, curve: &PriceCurve<S>) -> Vec<S> {
    let horizon = curve.horizon();
    let mut tail = S::zero();
    let mut out = Vec::with_capacity(horizon + 1 - curve.t_dagger);
    for t in (curve.t_dagger..=horizon).rev() {
        let p = curve.price_at(t);
        let r = curve.refs[t - curve.t_start];
        out.push(p - theta.c2 - theta.c1 * (r + tail));
        tail = tail + p / S::count(t);
    }
    out.reverse();
    out
}

/// Total expected revenue of posting `curve` with references evolved from
/// `r_actual` at the curve's first round.
pub fn curve_value<S: Scalar>(inst: &Instance<S>, curve: &PriceCurve<S>, r_actual: S) -> Result<S> {
    if curve.is_empty() {
        return Ok(S::zero());
    }
    let mut state = ReferenceState::arm_at(curve.t_start, r_actual, inst.p_max())?;
    let mut total = S::zero();
    for &p in &curve.prices {
        total = total + inst.revenue(p, state.current())?;
        state.update(p)?;
    }
    Ok(total)
}

/// Stationarity conditions on `[t_dagger, T]` in matrix form.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem<S> {
    pub t_dagger: usize,
    pub horizon: usize,
    pub theta: PolicyParams<S>,
    pub r_dagger: S,
}

impl<S: Scalar> LinearSystem<S> {
    pub fn dim(&self) -> usize {
        self.horizon + 1 - self.t_dagger
    }

    fn s(&self, k: usize) -> S {
        S::count(self.t_dagger + k)
    }

    /// Row-major `n x n` matrix, 0-based: `A_ij = -C1 / s_max(i,j)`, unit diagonal.
    pub fn matrix(&self) -> Vec<Vec<S>> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            S::one()
                        } else {
                            -self.theta.c1 / self.s(i.max(j))
                        }
                    })
                    .collect()
            })
            .collect()
    }

    pub fn rhs(&self) -> Vec<S> {
        let base = S::count(self.t_dagger) * self.r_dagger;
        (0..self.dim())
            .map(|i| {
                if i == 0 {
                    self.theta.c1 * self.r_dagger + self.theta.c2
                } else {
                    self.theta.c1 * base / self.s(i) + self.theta.c2
                }
            })
            .collect()
    }

    pub fn dominance_load(&self) -> S {
        dominance_load(self.theta.c1, self.t_dagger, self.horizon)
    }
}

/// Gaussian elimination with partial pivoting. Oracle only: O(n^3).
pub fn dense_solve<S: Scalar>(sys: &LinearSystem<S>) -> Result<Vec<S>> {
    let load = sys.dominance_load();
    if load >= S::one() {
        return Err(SolverError::NotDominant(load.real()));
    }
    let mut m = sys.matrix();
    let mut rhs = sys.rhs();
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| {
                m[x][col]
                    .abs()
                    .partial_cmp(&m[y][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if m[pivot][col] == S::zero() {
            return Err(SolverError::Singular);
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            if f == S::zero() {
                continue;
            }
            let (upper, lower) = m.split_at_mut(row);
            for (x, &v) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *x = *x - f * v;
            }
            rhs[row] = rhs[row] - f * rhs[col];
        }
    }
    let mut x = vec![S::zero(); n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in row + 1..n {
            acc = acc - m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Ok(x)
}
