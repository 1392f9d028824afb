//! Named one-dimensional members of the family.
//!
//! Models supported on `x = 1, 2, ...` are realized as a base distribution on
//! `y = x - offset >= 0` whose shift `beta` absorbs the offset.

use serde::{Deserialize, Serialize};

use crate::distribution::{CountVector, UgatParams};
use crate::error::{Error, Result};
use crate::series::SeriesAccuracy;

/// Lower end of the support of a named model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Support {
    /// `x = 0, 1, 2, ...`
    N0,
    /// `x = 1, 2, 3, ...`
    N,
}

impl Support {
    pub fn offset(self) -> u64 {
        match self {
            Support::N0 => 0,
            Support::N => 1,
        }
    }
}

/// A one-dimensional base distribution observed at `base + offset`.
#[derive(Debug, Clone)]
pub struct ShiftedDistribution {
    pub name: &'static str,
    pub base: UgatParams,
    pub support_offset: u64,
}

impl ShiftedDistribution {
    fn build(name: &'static str, alpha: f64, beta: f64, s: f64, support: Support, acc: SeriesAccuracy) -> Result<Self> {
        Ok(Self {
            name,
            base: UgatParams::with_accuracy(vec![alpha], beta, s, acc)?,
            support_offset: support.offset(),
        })
    }

    fn base_point(&self, x: u64) -> Option<CountVector> {
        x.checked_sub(self.support_offset).map(|y| CountVector::new(vec![y]))
    }

    /// The same base distribution relabeled onto another support.
    pub fn on_support(mut self, support: Support) -> Self {
        self.support_offset = support.offset();
        self
    }

    pub fn pmf(&self, x: u64) -> Result<f64> {
        match self.base_point(x) {
            Some(y) => self.base.joint_pmf(&y),
            None => Ok(0.0),
        }
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: u64) -> Result<f64> {
        Ok(1.0 - self.sf(x)?)
    }

    /// `P(X > x)`.
    pub fn sf(&self, x: u64) -> Result<f64> {
        let y = x as i64 - self.support_offset as i64;
        if y < -1 {
            return Ok(1.0);
        }
        self.base.marginal_ccdf(0, y)
    }

    /// Discrete hazard `P(X = x | X >= x)`.
    pub fn hazard(&self, x: u64) -> Result<f64> {
        let survive = if x == 0 { 1.0 } else { self.sf(x - 1)? };
        if survive == 0.0 {
            return Ok(f64::NAN);
        }
        Ok(self.pmf(x)? / survive)
    }

    pub fn mean(&self) -> Result<f64> {
        Ok(self.base.raw_moment(0, 1)? + self.support_offset as f64)
    }

    /// Unnormalized series evaluated directly on the shifted support, i.e. the
    /// normalizer of the displayed mass function.
    pub fn normalizer(&self) -> f64 {
        self.base.normalizer()
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {v} must be finite and > 0")))
    }
}

fn unit_interval_open(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {v} must lie in (0, 1)")))
    }
}

fn tail_exponent(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 1.0 {
        Ok(())
    } else {
        Err(Error::DivergentParameters(format!(
            "{name} = {v} must exceed 1 for a normalizable power tail"
        )))
    }
}

/// Lerch: `P(x) ∝ p^x / (x + a)^c` on `x >= 1`.
pub fn make_lerch(p: f64, a: f64, c: f64, acc: SeriesAccuracy) -> Result<ShiftedDistribution> {
    unit_interval_open("p", p)?;
    positive("a", a)?;
    if !c.is_finite() {
        return Err(Error::InvalidParameter(format!("c = {c} must be finite")));
    }
    ShiftedDistribution::build("lerch", p, a + 1.0, c, Support::N, acc)
}

/// Hurwitz–Lerch zeta: `P(x) ∝ theta^x / (x + a)^{s+1}` on `x >= 1`.
pub fn make_hurwitz_lerch_zeta(theta: f64, a: f64, s: f64, acc: SeriesAccuracy) -> Result<ShiftedDistribution> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidParameter(format!("theta = {theta} must lie in (0, 1]")));
    }
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::InvalidParameter(format!("a = {a} must lie in [0, 1]")));
    }
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::InvalidParameter(format!("s = {s} must be >= 0")));
    }
    if theta == 1.0 {
        tail_exponent("s + 1", s + 1.0)?;
    }
    ShiftedDistribution::build("hlz", theta, a + 1.0, s + 1.0, Support::N, acc)
}

/// Good: `P(x) ∝ theta^x / x^{s+1}` on `x >= 1`.
pub fn make_good(theta: f64, s: f64, acc: SeriesAccuracy) -> Result<ShiftedDistribution> {
    unit_interval_open("theta", theta)?;
    if !s.is_finite() {
        return Err(Error::InvalidParameter(format!("s = {s} must be finite")));
    }
    ShiftedDistribution::build("good", theta, 1.0, s + 1.0, Support::N, acc)
}

/// Hurwitz zeta: `P(x) ∝ 1 / (x + b)^sigma` on `x >= 0`.
pub fn make_hurwitz_zeta(b: f64, sigma: f64, acc: SeriesAccuracy) -> Result<ShiftedDistribution> {
    positive("b", b)?;
    tail_exponent("sigma", sigma)?;
    ShiftedDistribution::build("hzeta", 1.0, b, sigma, Support::N0, acc)
}

/// Zipf–Mandelbrot: `P(x) ∝ 1 / (x + a)^c` on `x >= 1`.
pub fn make_zipf_mandelbrot(a: f64, c: f64, acc: SeriesAccuracy) -> Result<ShiftedDistribution> {
    positive("a", a)?;
    tail_exponent("c", c)?;
    ShiftedDistribution::build("zipf", 1.0, a + 1.0, c, Support::N, acc)
}

/// Discrete Pareto (zeta): `P(x) = 1 / (x^c zeta(c))` on `x >= 1`.
pub fn make_discrete_pareto(c: f64, acc: SeriesAccuracy) -> Result<ShiftedDistribution> {
    tail_exponent("c", c)?;
    ShiftedDistribution::build("dpareto", 1.0, 1.0, c, Support::N, acc)
}

/// Geometric: `p^{x-1} (1 - p)` on `x >= 1`, or `p^x (1 - p)` on `x >= 0`.
pub fn make_geometric(p: f64, support: Support, acc: SeriesAccuracy) -> Result<ShiftedDistribution> {
    unit_interval_open("p", p)?;
    ShiftedDistribution::build("geom", p, 1.0, 0.0, support, acc)
}
