use crate::model::{check_range, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RefMode<S> {
    /// Running average of the initial reference and every posted price.
    Arm,
    /// `r' = zeta r + (1 - zeta) p` with a constant factor.
    Esm { zeta: S },
}

/// Reference price kept as `(sum, count)` so that averages never drift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceState<S> {
    mode: RefMode<S>,
    t: usize,
    sum: S,
    current: S,
    p_max: S,
}

impl<S: Scalar> ReferenceState<S> {
    pub fn new(mode: RefMode<S>, r1: S, p_max: S) -> Result<Self> {
        check_range("initial reference", r1, S::zero(), p_max)?;
        if let RefMode::Esm { zeta } = mode {
            if zeta < S::zero() || zeta >= S::one() {
                return Err(crate::model::ModelError::Domain {
                    what: "zeta",
                    value: zeta.real(),
                    lo: 0.0,
                    hi: 1.0,
                });
            }
        }
        Ok(Self {
            mode,
            t: 1,
            sum: r1,
            current: r1,
            p_max,
        })
    }

    pub fn arm(r1: S, p_max: S) -> Result<Self> {
        Self::new(RefMode::Arm, r1, p_max)
    }

    /// ARM state at round `t` with reference `r`, i.e. `sum = t r`.
    pub fn arm_at(t: usize, r: S, p_max: S) -> Result<Self> {
        let mut s = Self::arm(r, p_max)?;
        s.t = t.max(1);
        s.sum = S::count(s.t) * r;
        Ok(s)
    }

    pub fn mode(&self) -> RefMode<S> {
        self.mode
    }

    /// Index of the round whose reference is `current`.
    pub fn t(&self) -> usize {
        self.t
    }

    /// `r_1 + sum of posted prices`; equals `t * current` under ARM.
    pub fn sum(&self) -> S {
        self.sum
    }

    pub fn current(&self) -> S {
        self.current
    }

    pub fn p_max(&self) -> S {
        self.p_max
    }

    pub fn update(&mut self, p: S) -> Result<()> {
        check_range("price", p, S::zero(), self.p_max)?;
        self.sum = self.sum + p;
        self.t += 1;
        self.current = match self.mode {
            RefMode::Arm => self.sum / S::count(self.t),
            RefMode::Esm { zeta } => zeta * self.current + (S::one() - zeta) * p,
        };
        Ok(())
    }

    /// Smoothing step with a caller-supplied factor, ignoring the mode.
    /// With `zeta = t/(t+1)` this is the ARM step.
    pub fn update_smoothed(&mut self, p: S, zeta: S) -> Result<()> {
        check_range("price", p, S::zero(), self.p_max)?;
        check_range("zeta", zeta, S::zero(), S::one())?;
        self.sum = self.sum + p;
        self.t += 1;
        self.current = zeta * self.current + (S::one() - zeta) * p;
        Ok(())
    }
}
