//! Steering the ARM reference back to a target.
//!
//! Post the extreme price `fill` (p_max when the reference must rise, 0 when it
//! must fall) for `n_fill` rounds, then one correcting price `last` chosen so
//! that the average lands exactly on the target.

use crate::error::{Error, Result};
use crate::model::check_range;
use crate::reference::ReferenceState;
use crate::scalar::{ceil_count, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResetPlan<S> {
    pub fill: S,
    pub n_fill: usize,
    /// `None` when the reference is already on target.
    pub last: Option<S>,
}

impl<S: Scalar> ResetPlan<S> {
    pub fn empty() -> Self {
        Self {
            fill: S::zero(),
            n_fill: 0,
            last: None,
        }
    }

    pub fn rounds(&self) -> usize {
        if self.last.is_some() {
            self.n_fill + 1
        } else {
            0
        }
    }

    pub fn prices(&self) -> Vec<S> {
        let mut out = vec![self.fill; self.n_fill];
        out.extend(self.last);
        out
    }
}

/// Plan from an ARM state at round `t` whose running sum is `sum = t r_t`.
pub fn reset_plan_from_sum<S: Scalar>(t: usize, sum: S, target: S, p_max: S) -> Result<ResetPlan<S>> {
    check_range("target reference", target, S::zero(), p_max)?;
    let ts = S::count(t);
    let current = sum / ts;
    if (current - target).abs() <= S::slack() {
        return Ok(ResetPlan::empty());
    }
    let (fill, step) = if current < target {
        (p_max, p_max - target)
    } else {
        (S::zero(), target)
    };
    if step <= S::zero() {
        return Err(Error::Unreachable {
            current: current.real(),
            target: target.real(),
        });
    }
    // x(n) = (t+n+1) target - sum - n fill moves by `step` toward the box each round
    let x = |n: usize| S::count(t + n + 1) * target - sum - S::count(n) * fill;
    let x0 = x(0);
    let overshoot = if current < target { x0 - p_max } else { -x0 };
    let mut n = ceil_count(overshoot / step);
    while n > 0 && x(n - 1).within(S::zero(), p_max) {
        n -= 1;
    }
    while !x(n).within(S::zero(), p_max) {
        n += 1;
    }
    Ok(ResetPlan {
        fill,
        n_fill: n,
        last: Some(x(n).clamp_to(S::zero(), p_max)),
    })
}

/// Plan from round `t` with reference `r_t`.
pub fn reset_ref<S: Scalar>(t: usize, r_t: S, target: S, p_max: S) -> Result<ResetPlan<S>> {
    check_range("reference", r_t, S::zero(), p_max)?;
    reset_plan_from_sum(t, S::count(t) * r_t, target, p_max)
}

pub fn reset_plan<S: Scalar>(state: &ReferenceState<S>, target: S) -> Result<ResetPlan<S>> {
    reset_plan_from_sum(state.t(), state.sum(), target, state.p_max())
}

/// Exhaustive search for the smallest `n` whose correcting price lies in
/// `[0, p_max]`. Test oracle.
pub fn brute_force_n<S: Scalar>(t: usize, sum: S, target: S, p_max: S, limit: usize) -> Option<usize> {
    let current = sum / S::count(t);
    let fill = if current < target { p_max } else { S::zero() };
    (0..=limit).find(|&n| {
        let x = S::count(t + n + 1) * target - sum - S::count(n) * fill;
        x.within(S::zero(), p_max)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Exact;
    use proptest::prelude::*;

    #[test]
    fn on_target_is_empty() {
        let plan = reset_ref(5, 0.7, 0.7, 1.0).unwrap();
        assert_eq!(plan.rounds(), 0);
        assert!(plan.prices().is_empty());
    }

    #[test]
    fn single_round_example() {
        let q = |n, d| Exact::new(n, d);
        let plan = reset_ref(3, q(1, 2), q(3, 5), q(1, 1)).unwrap();
        assert_eq!(plan.n_fill, 0);
        assert_eq!(plan.prices(), vec![q(9, 10)]);
        let mut s = ReferenceState::arm_at(3, q(1, 2), q(1, 1)).unwrap();
        for p in plan.prices() {
            s.update(p).unwrap();
        }
        assert_eq!(s.current(), q(3, 5));
        let f = reset_ref(3, 0.5f64, 0.6, 1.0).unwrap();
        assert_eq!(f.rounds(), 1);
        assert!((f.last.unwrap() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn unreachable_extremes() {
        assert!(matches!(reset_ref(4, 0.5, 1.0, 1.0), Err(Error::Unreachable { .. })));
        assert!(matches!(reset_ref(4, 0.5, 0.0, 1.0), Err(Error::Unreachable { .. })));
        assert_eq!(reset_ref(4, 1.0, 1.0, 1.0).unwrap().rounds(), 0);
    }

    #[test]
    fn downward_uses_zero_fill() {
        let plan = reset_ref(10, 0.9f64, 0.3, 1.0).unwrap();
        assert_eq!(plan.fill, 0.0);
        assert!(plan.n_fill > 0);
        let mut s = ReferenceState::arm_at(10, 0.9, 1.0).unwrap();
        for p in plan.prices() {
            s.update(p).unwrap();
        }
        assert!((s.current() - 0.3f64).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn exact_attainment_and_minimal_n(t in 1usize..400, num in 0i128..=1000, tgt in 100i128..=900, pm in 1i128..=4) {
            let p_max = Exact::from_integer(pm);
            let r = Exact::new(num * pm, 1000);
            let target = Exact::new(tgt * pm, 1000);
            let sum = Exact::from_integer(t as i128) * r;
            match reset_plan_from_sum(t, sum, target, p_max) {
                Ok(plan) => {
                    let mut s = ReferenceState::arm_at(t, r, p_max).unwrap();
                    for p in plan.prices() {
                        s.update(p).unwrap();
                    }
                    prop_assert_eq!(s.current(), target);
                    if plan.rounds() > 0 {
                        prop_assert_eq!(Some(plan.n_fill), brute_force_n(t, sum, target, p_max, 10_000));
                    }
                }
                Err(_) => prop_assert!(target == Exact::from_integer(0) && r > target),
            }
        }

        #[test]
        fn float_attainment(t in 1usize..10_000, u in 0.0f64..1.0, w in 0.05f64..0.95, p_max in 0.5f64..3.0) {
            let (r, target) = (u * p_max, w * p_max);
            prop_assume!(target > 0.0);
            let plan = reset_ref(t, r, target, p_max).unwrap();
            let mut s = ReferenceState::arm_at(t, r, p_max).unwrap();
            for p in plan.prices() {
                s.update(p).unwrap();
            }
            prop_assert!((s.current() - target).abs() <= 1e-9);
            if plan.rounds() > 0 {
                prop_assert_eq!(Some(plan.n_fill), brute_force_n(t, t as f64 * r, target, p_max, 1_000_000));
            }
        }
    }
}
