//! Seeded episodes, clairvoyant baselines and regret sweeps.
//!
//! Episode `i` of a sweep uses seed `base_seed + i`. The market's shocks come
//! from stream 0 of a ChaCha8 generator with that seed and the policy's own
//! randomness from stream 1, so runs are reproducible bit for bit regardless
//! of the worker count.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::markdown::{curve_value, PriceCurve};
use crate::market::{Market, Round};
use crate::model::{Instance, NoiseSpec};
use crate::policies::{oracle_curve, EpisodeNotes, PolicyKind};

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub seed: u64,
    pub policy: &'static str,
    pub horizon: usize,
    pub rows: Vec<Round>,
    pub expected_total: f64,
    pub realized_total: f64,
    pub notes: EpisodeNotes,
}

pub fn policy_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

fn play(
    inst: &Instance<f64>,
    noise: &NoiseSpec,
    policy: &PolicyKind,
    horizon: usize,
    r1: f64,
    seed: u64,
    rows: bool,
) -> Result<EpisodeRecord> {
    let mut market = Market::new(*inst, *noise, r1, horizon, seed)?;
    if rows {
        market = market.with_rows();
    }
    let notes = policy.run(&mut market, &mut policy_rng(seed))?;
    debug_assert_eq!(market.remaining(), 0);
    Ok(EpisodeRecord {
        seed,
        policy: policy.name(),
        horizon,
        expected_total: market.expected_total(),
        realized_total: market.realized_total(),
        rows: market.take_rows(),
        notes,
    })
}

/// Full episode with per-round rows.
pub fn run_episode(
    inst: &Instance<f64>,
    noise: &NoiseSpec,
    policy: &PolicyKind,
    horizon: usize,
    r1: f64,
    seed: u64,
) -> Result<EpisodeRecord> {
    play(inst, noise, policy, horizon, r1, seed, true)
}

/// Episodes `base_seed, base_seed + 1, ...` in parallel, returned in seed order.
pub fn run_episodes(
    inst: &Instance<f64>,
    noise: &NoiseSpec,
    policy: &PolicyKind,
    horizon: usize,
    r1: f64,
    base_seed: u64,
    seeds: usize,
) -> Result<Vec<EpisodeRecord>> {
    (0..seeds)
        .into_par_iter()
        .map(|i| run_episode(inst, noise, policy, horizon, r1, base_seed.wrapping_add(i as u64)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    /// Symmetric reference effects: the markdown curve is optimal.
    Optimal,
    /// Asymmetric effects: curve from `p_max`, near-optimal only.
    NearOptimal,
}

impl BaselineKind {
    pub fn label(&self) -> &'static str {
        match self {
            BaselineKind::Optimal => "optimal",
            BaselineKind::NearOptimal => "near-optimal",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Baseline {
    pub value: f64,
    pub kind: BaselineKind,
    pub curve: PriceCurve<f64>,
}

pub fn clairvoyant(inst: &Instance<f64>, r1: f64, horizon: usize) -> Result<Baseline> {
    let kind = if inst.is_symmetric() {
        BaselineKind::Optimal
    } else {
        BaselineKind::NearOptimal
    };
    if horizon == 0 {
        return Ok(Baseline {
            value: 0.0,
            kind,
            curve: PriceCurve {
                t_start: 1,
                t_dagger: 1,
                prices: vec![],
                refs: vec![],
                probes: 0,
            },
        });
    }
    let curve = oracle_curve(inst, &inst.theta_star(), r1, horizon)?;
    let value = curve_value(inst, &curve, r1)?;
    Ok(Baseline { value, kind, curve })
}

pub fn clairvoyant_value(inst: &Instance<f64>, r1: f64, horizon: usize) -> Result<f64> {
    Ok(clairvoyant(inst, r1, horizon)?.value)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretRecord {
    pub horizon: usize,
    pub seeds: usize,
    pub mean_regret: f64,
    pub std_err: f64,
    pub baseline_value: f64,
    pub policy_value_mean: f64,
    pub baseline: BaselineKind,
    /// Mean regret below `-1e-6 * V*`: the baseline is not an upper bound here.
    pub negative: bool,
    /// Largest exploration-reset count over the seeds, for learning policies.
    pub max_reset_rounds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub records: Vec<RegretRecord>,
    /// OLS slope of ln(mean regret) on ln T; `None` with fewer than two
    /// horizons or any nonpositive mean regret.
    pub slope: Option<f64>,
    pub base_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec<'a> {
    pub inst: &'a Instance<f64>,
    pub noise: &'a NoiseSpec,
    pub policy: &'a PolicyKind,
    pub horizons: &'a [usize],
    pub seeds: usize,
    pub base_seed: u64,
    pub r1: f64,
}

pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Least-squares slope of `y` on `x`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Runs on the current rayon pool; results are ordered by episode index.
pub fn regret_sweep(spec: &SweepSpec<'_>) -> Result<Sweep> {
    let mut records = Vec::with_capacity(spec.horizons.len());
    for &horizon in spec.horizons {
        let base = clairvoyant(spec.inst, spec.r1, horizon)?;
        let episodes: Vec<EpisodeRecord> = (0..spec.seeds)
            .into_par_iter()
            .map(|i| {
                let seed = spec.base_seed.wrapping_add(i as u64);
                play(spec.inst, spec.noise, spec.policy, horizon, spec.r1, seed, false)
            })
            .collect::<Result<_>>()?;
        let regrets: Vec<f64> = episodes.iter().map(|e| base.value - e.expected_total).collect();
        let (mean_regret, std_err) = mean_and_stderr(&regrets);
        records.push(RegretRecord {
            horizon,
            seeds: spec.seeds,
            mean_regret,
            std_err,
            baseline_value: base.value,
            policy_value_mean: base.value - mean_regret,
            baseline: base.kind,
            negative: mean_regret < -1e-6 * base.value.abs(),
            max_reset_rounds: episodes.iter().map(|e| e.notes.reset_rounds).max().unwrap_or(0),
        });
    }
    let slope = if records.iter().all(|r| r.mean_regret > 0.0) {
        let xs: Vec<f64> = records.iter().map(|r| (r.horizon as f64).ln()).collect();
        let ys: Vec<f64> = records.iter().map(|r| r.mean_regret.ln()).collect();
        ols_slope(&xs, &ys)
    } else {
        None
    };
    Ok(Sweep {
        records,
        slope,
        base_seed: spec.base_seed,
    })
}

pub const EPISODES_HEADER: &str = "seed,t,price,reference,demand,expected_revenue,realized_revenue";
pub const REGRET_HEADER: &str = "T,seeds,mean_regret,std_err,baseline_value,policy_value_mean,baseline";
pub const CURVE_HEADER: &str = "t,price,reference";

pub fn write_episodes_csv<W: Write>(out: &mut W, episodes: &[EpisodeRecord]) -> std::io::Result<()> {
    writeln!(out, "{EPISODES_HEADER}")?;
    for e in episodes {
        for r in &e.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                e.seed, r.t, r.price, r.reference, r.demand, r.expected_revenue, r.realized_revenue
            )?;
        }
    }
    Ok(())
}

pub fn write_regret_csv<W: Write>(out: &mut W, sweep: &Sweep) -> std::io::Result<()> {
    writeln!(out, "{REGRET_HEADER}")?;
    for r in &sweep.records {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.horizon,
            r.seeds,
            r.mean_regret,
            r.std_err,
            r.baseline_value,
            r.policy_value_mean,
            r.baseline.label()
        )?;
    }
    match sweep.slope {
        Some(s) => writeln!(out, "# slope,{s}")?,
        None => writeln!(out, "# slope,NA")?,
    }
    writeln!(out, "# base_seed,{}", sweep.base_seed)
}

pub const SUMMARY_HEADER: &str =
    "seed,policy,T,expected_total,realized_total,t2,reset_rounds,degenerate,t_dagger,switch_round";

/// One line per episode with its totals and phase boundaries; empty fields
/// where a policy has no such phase.
pub fn write_summary_csv<W: Write>(out: &mut W, episodes: &[EpisodeRecord]) -> std::io::Result<()> {
    fn opt<T: std::fmt::Display>(x: Option<T>) -> String {
        x.map(|v| v.to_string()).unwrap_or_default()
    }
    writeln!(out, "{SUMMARY_HEADER}")?;
    for e in episodes {
        let n = &e.notes;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            e.seed,
            e.policy,
            e.horizon,
            e.expected_total,
            e.realized_total,
            opt(n.learn.map(|l| l.t2)),
            n.reset_rounds,
            opt(n.learn.map(|l| l.degenerate)),
            opt(n.t_dagger),
            opt(n.switch_round),
        )?;
    }
    Ok(())
}

pub fn write_curve_csv<W: Write>(out: &mut W, curve: &PriceCurve<f64>) -> std::io::Result<()> {
    writeln!(out, "{CURVE_HEADER}")?;
    for (k, (p, r)) in curve.prices.iter().zip(&curve.refs).enumerate() {
        writeln!(out, "{},{},{}", curve.t_start + k, p, r)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::baseline::{fixed_price_value, myopic_greedy_step};

    fn inst() -> Instance<f64> {
        Instance::new(1.0, 2.0, 0.5, 0.5, 4.0 / 3.0, 1.0).unwrap()
    }

    #[test]
    fn fixed_price_total_matches_closed_form() {
        let rec = run_episode(
            &inst(),
            &NoiseSpec::None,
            &PolicyKind::Fixed { price: 0.9 },
            777,
            0.2,
            1,
        )
        .unwrap();
        assert!((rec.expected_total - fixed_price_value(&inst(), 0.9, 0.2, 777)).abs() < 1e-9);
        let col: f64 = rec.rows.iter().map(|r| r.expected_revenue).sum();
        assert!((col - rec.expected_total).abs() <= 1e-6 * rec.expected_total);
        assert_eq!(rec.rows.len(), 777);
    }

    #[test]
    fn one_round_myopic_is_best_single_round() {
        let r1 = 0.8;
        let rec = run_episode(&inst(), &NoiseSpec::None, &PolicyKind::MyopicGreedy, 1, r1, 0).unwrap();
        let p = myopic_greedy_step(&inst(), r1).unwrap();
        assert_eq!(rec.expected_total, inst().revenue(p, r1).unwrap());
    }

    #[test]
    fn episodes_are_deterministic() {
        let noise = NoiseSpec::Gaussian { std: 0.3 };
        let a = run_episode(&inst(), &noise, &PolicyKind::learn_then_earn(), 2000, 0.5, 42).unwrap();
        let b = run_episode(&inst(), &noise, &PolicyKind::learn_then_earn(), 2000, 0.5, 42).unwrap();
        assert_eq!(a, b);
        let mut buf_a = Vec::new();
        let mut buf_b = Vec::new();
        write_episodes_csv(&mut buf_a, &[a]).unwrap();
        write_episodes_csv(&mut buf_b, &[b]).unwrap();
        assert_eq!(buf_a, buf_b);
    }

    #[test]
    fn no_reference_effect_baseline() {
        let flat = Instance::new(1.0, 2.0, 0.0, 0.0, 4.0 / 3.0, 1.0).unwrap();
        let v = clairvoyant_value(&flat, 0.3, 500).unwrap();
        assert!((v - 500.0).abs() < 1e-9);
    }

    #[test]
    fn oracle_has_no_regret() {
        let spec = SweepSpec {
            inst: &inst(),
            noise: &NoiseSpec::Gaussian { std: 0.1 },
            policy: &PolicyKind::MarkdownOracle { c1: None, c2: None },
            horizons: &[10, 100, 1000],
            seeds: 3,
            base_seed: 5,
            r1: 0.4,
        };
        let sweep = regret_sweep(&spec).unwrap();
        for r in &sweep.records {
            assert!(r.mean_regret.abs() <= 1e-6 * r.baseline_value);
            assert!(!r.negative);
        }
    }

    #[test]
    fn asymmetric_baseline_is_labelled() {
        let asym = Instance::new(1.0, 2.0, 0.5, 0.2, 4.0 / 3.0, 1.0).unwrap();
        assert_eq!(clairvoyant(&asym, 0.5, 50).unwrap().kind, BaselineKind::NearOptimal);
        assert_eq!(clairvoyant(&inst(), 0.5, 50).unwrap().kind, BaselineKind::Optimal);
    }

    #[test]
    fn regret_csv_layout() {
        let spec = SweepSpec {
            inst: &inst(),
            noise: &NoiseSpec::None,
            policy: &PolicyKind::OptimalFixed,
            horizons: &[100, 1000],
            seeds: 2,
            base_seed: 0,
            r1: 0.0,
        };
        let sweep = regret_sweep(&spec).unwrap();
        let mut buf = Vec::new();
        write_regret_csv(&mut buf, &sweep).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], REGRET_HEADER);
        assert_eq!(lines.len(), 5);
        assert!(lines[3].starts_with("# slope,"));
        assert_eq!(lines[4], "# base_seed,0");
        assert!(lines[1].ends_with(",optimal"));
    }

    #[test]
    fn slope_fit() {
        let xs = [1.0, 2.0, 3.0];
        assert!((ols_slope(&xs, &[2.0, 2.5, 3.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(ols_slope(&[1.0], &[1.0]).is_none());
        let (m, se) = mean_and_stderr(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - 1.0).abs() < 1e-15);
    }
}
