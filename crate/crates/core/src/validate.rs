//! Cross-oracle checks: every fast path against a slow, obviously correct one.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::markdown::{
    curve_from_tdagger, dense_solve, foc_residuals, scan_t_dagger, solve_curve, LinearSystem, Probe,
};
use crate::model::{Instance, NoiseSpec, PolicyParams};
use crate::policies::learn::{draw_sign, GreedyLearner};
use crate::policies::reset::{brute_force_n, reset_plan_from_sum};
use crate::reference::ReferenceState;
use crate::Exact;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub cases: usize,
    /// Largest residual seen, in the units of `tolerance`.
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: &'static str, cases: usize, worst: f64, tolerance: f64) -> Self {
        Self {
            name,
            cases,
            worst,
            tolerance,
            passed: worst <= tolerance,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<22} cases={:<6} worst={:.3e} tol={:.1e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.worst,
            self.tolerance
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

/// A random instance that satisfies the modelling assumptions and keeps the
/// greedy price interior. Symmetric effects when `symmetric` is set.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, symmetric: bool) -> Instance<f64> {
    loop {
        let a = rng.random_range(0.2..2.0);
        let vertex = rng.random_range(0.1..2.0);
        let gap = rng.random_range(0.05..0.9);
        let eta_plus = rng.random_range(0.0..1.0);
        let eta_minus = if symmetric {
            eta_plus
        } else {
            rng.random_range(0.0..1.0)
        };
        let prb = vertex + rng.random_range(0.1..0.9) * gap;
        if let Ok(inst) = Instance::new(a, 2.0 * a * vertex, eta_plus, eta_minus, vertex + gap, prb) {
            if inst.greedy_interior() {
                return inst;
            }
        }
    }
}

fn random_theta<R: Rng + ?Sized>(rng: &mut R, p_max: f64) -> PolicyParams<f64> {
    PolicyParams {
        c1: rng.random_range(0.0..0.25),
        c2: rng.random_range(0.5..1.0) * p_max,
    }
}

/// Recursion against a dense Gaussian elimination of the stationarity system.
pub fn dense_vs_recursion<R: Rng + ?Sized>(rng: &mut R, cases: usize) -> Result<Check> {
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < cases {
        let p_max = rng.random_range(0.5..3.0);
        let th = random_theta(rng, p_max);
        let horizon = rng.random_range(1..=200);
        let t_dagger = rng.random_range(1..=horizon);
        let r_start = rng.random_range(0.0..=p_max);
        if crate::markdown::dominance_load(th.c1, t_dagger, horizon) >= 1.0 {
            continue;
        }
        let Probe::Feasible(c) = curve_from_tdagger(&th, r_start, 1, t_dagger, horizon, p_max)? else {
            continue;
        };
        let sys = LinearSystem {
            t_dagger,
            horizon,
            theta: th,
            r_dagger: c.refs[t_dagger - 1],
        };
        let dense = dense_solve(&sys)?;
        for (x, y) in dense.iter().zip(&c.prices[t_dagger - 1..]) {
            worst = worst.max((x - y).abs());
        }
        done += 1;
    }
    Ok(Check::new("dense_vs_recursion", cases, worst, 1e-8))
}

/// Binary search for the markdown start against a linear scan; `worst` counts mismatches.
pub fn binary_vs_scan<R: Rng + ?Sized>(rng: &mut R, cases: usize) -> Result<Check> {
    let mut mismatches = 0usize;
    for _ in 0..cases {
        let inst = random_instance(rng, true);
        let horizon = rng.random_range(1..=500);
        let t1 = rng.random_range(1..=horizon);
        let r_start = rng.random_range(0.0..=inst.p_max());
        let th = inst.theta_star();
        let fast = solve_curve(&th, r_start, t1, horizon, inst.p_max())
            .ok()
            .map(|c| c.t_dagger);
        if fast != scan_t_dagger(&th, r_start, t1, horizon, inst.p_max()) {
            mismatches += 1;
        }
    }
    Ok(Check::new("binary_vs_scan", cases, mismatches as f64, 0.0))
}

pub fn foc<R: Rng + ?Sized>(rng: &mut R, cases: usize, max_horizon: usize) -> Result<Check> {
    let mut worst = 0.0f64;
    for k in 0..cases {
        let inst = random_instance(rng, true);
        let horizon = if k == 0 {
            max_horizon
        } else {
            rng.random_range(1..=max_horizon)
        };
        let r_start = rng.random_range(0.0..=inst.p_max());
        let th = inst.theta_star();
        let c = solve_curve(&th, r_start, 1, horizon, inst.p_max())?;
        worst = foc_residuals(&th, &c).iter().fold(worst, |m, r| m.max(r.abs()));
    }
    Ok(Check::new("foc_residual", cases, worst, 1e-8))
}

/// Markdown shape on random instances; `worst` is the largest price increase.
pub fn markdown_shape<R: Rng + ?Sized>(rng: &mut R, cases: usize) -> Result<Check> {
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let inst = random_instance(rng, true);
        let horizon = rng.random_range(1..=2000);
        let r_start = rng.random_range(0.0..=inst.p_max());
        let c = solve_curve(&inst.theta_star(), r_start, 1, horizon, inst.p_max())?;
        for w in c.prices.windows(2) {
            worst = worst.max(w[1] - w[0]);
        }
    }
    Ok(Check::new("markdown_shape", cases, worst, 0.0))
}

/// Reset plans: exact attainment in rational arithmetic, float attainment,
/// and minimal fill counts against exhaustive search. `worst` is the float
/// attainment error, or infinity on any exact or minimality failure.
pub fn reset_brute_force<R: Rng + ?Sized>(rng: &mut R, cases: usize) -> Result<Check> {
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let t = rng.random_range(1..400usize);
        let pm = rng.random_range(1..=4i128);
        let p_max = Exact::from_integer(pm);
        let r = Exact::new(rng.random_range(0..=1000) * pm, 1000);
        let target = Exact::new(rng.random_range(100..=900) * pm, 1000);
        let sum = Exact::from_integer(t as i128) * r;
        let plan = reset_plan_from_sum(t, sum, target, p_max)?;
        let mut s = ReferenceState::arm_at(t, r, p_max)?;
        for p in plan.prices() {
            s.update(p)?;
        }
        let minimal = plan.rounds() == 0 || Some(plan.n_fill) == brute_force_n(t, sum, target, p_max, 100_000);
        if s.current() != target || !minimal {
            worst = f64::INFINITY;
        }

        let p_max = rng.random_range(0.5..3.0);
        let t = rng.random_range(1..10_000usize);
        let r = rng.random_range(0.0..=p_max);
        let target = rng.random_range(0.05..0.95) * p_max;
        let sum = t as f64 * r;
        let plan = reset_plan_from_sum(t, sum, target, p_max)?;
        let mut s = ReferenceState::arm_at(t, r, p_max)?;
        for p in plan.prices() {
            s.update(p)?;
        }
        worst = worst.max((s.current() - target).abs());
        if plan.rounds() > 0 && Some(plan.n_fill) != brute_force_n(t, sum, target, p_max, 1_000_000) {
            worst = f64::INFINITY;
        }
    }
    Ok(Check::new("reset_brute_force", 2 * cases, worst, 1e-9))
}

/// Monte-Carlo mean of the one-point gradient against the revenue slope.
/// `worst` is the largest deviation in standard errors.
pub fn gradient_monte_carlo<R: Rng + ?Sized>(rng: &mut R, points: usize, draws: usize) -> Result<Check> {
    let mut worst = 0.0f64;
    for _ in 0..points {
        let inst = random_instance(rng, false);
        let r = rng.random_range(inst.p_ratio_bound()..=inst.p_max());
        let d = (r - inst.p_ratio_bound()) / 2.0;
        if d <= 1e-3 {
            continue;
        }
        let x = rng.random_range(d..=r - d);
        let truth = inst.revenue_slope(x, r)?;
        for noise in [
            NoiseSpec::BoundedUniform { half_width: 0.3 },
            NoiseSpec::Gaussian { std: 0.3 },
        ] {
            let (mut sum, mut sq) = (0.0, 0.0);
            for _ in 0..draws {
                let kappa = draw_sign(rng);
                let p = x + kappa * d;
                let demand = inst.expected_demand(p, r)? + noise.sample(rng);
                let g = GreedyLearner::gradient(p, demand, kappa, d);
                sum += g;
                sq += g * g;
            }
            let n = draws as f64;
            let mean = sum / n;
            let se = ((sq / n - mean * mean) / n).sqrt();
            worst = worst.max((mean - truth).abs() / se);
        }
    }
    Ok(Check::new("gradient_monte_carlo", 2 * points, worst, 3.0))
}

/// Best total revenue over all `grid^horizon` price sequences on an even grid.
pub fn enumerate_best(inst: &Instance<f64>, r1: f64, horizon: usize, grid: usize) -> Result<f64> {
    let prices: Vec<f64> = (0..grid).map(|i| inst.p_max() * i as f64 / (grid - 1) as f64).collect();
    fn go(inst: &Instance<f64>, prices: &[f64], state: ReferenceState<f64>, left: usize) -> Result<f64> {
        if left == 0 {
            return Ok(0.0);
        }
        let mut best = f64::NEG_INFINITY;
        for &p in prices {
            let mut next = state;
            next.update(p)?;
            best = best.max(inst.revenue(p, state.current())? + go(inst, prices, next, left - 1)?);
        }
        Ok(best)
    }
    go(inst, &prices, ReferenceState::arm(r1, inst.p_max())?, horizon)
}

/// Markdown value minus the best enumerated grid sequence at T = 5.
pub fn small_horizon_optimality(inst: &Instance<f64>, r1: f64) -> Result<Check> {
    let c = solve_curve(&inst.theta_star(), r1, 1, 5, inst.p_max())?;
    let value = crate::markdown::curve_value(inst, &c, r1)?;
    let best = enumerate_best(inst, r1, 5, 21)?;
    Ok(Check::new("small_horizon_optimum", 1, best - value, 0.01))
}

/// All suites with the default case counts.
pub fn run_all(seed: u64) -> Result<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let paper = Instance::new(1.0, 2.0, 0.5, 0.5, 4.0 / 3.0, 1.0)?;
    let checks = vec![
        dense_vs_recursion(&mut rng, 50)?,
        binary_vs_scan(&mut rng, 100)?,
        foc(&mut rng, 20, 10_000)?,
        markdown_shape(&mut rng, 1000)?,
        small_horizon_optimality(&paper, 0.0)?,
        reset_brute_force(&mut rng, 1000)?,
        gradient_monte_carlo(&mut rng, 10, 1_000_000)?,
    ];
    Ok(Report { checks })
}
