//! Normalizing series of the UGAT family.
//!
//! The r-fold sum over `(l_1, ..., l_r)` of `prod alpha_i^{l_i} / (sum l + beta)^s` is
//! collapsed by grouping on the total `t = sum l`, which turns it into the
//! one-dimensional series `sum_t h_t(alpha) / (t + beta)^s` where `h_t` is the
//! complete homogeneous symmetric polynomial of degree `t`.
//!
//! Sums are accumulated in increasing `t` and stopped once a monotone upper
//! bound on the remaining tail drops below the requested tolerance. Values are
//! carried in scaled form: the stored sum is `sum_t h_t ((t + b) / b)^{-s}`, so
//! the leading term is exactly one. The tolerance is applied relative to the
//! partial sum, which keeps very large shifts (b ~ 1e3..1e8) meaningful.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometric weights `alpha_0, ..., alpha_{r-1}`, each in `(0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct AlphaVector(Vec<f64>);

impl AlphaVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter(
                "alpha vector must have at least one entry".into(),
            ));
        }
        for (i, &a) in values.iter().enumerate() {
            if !a.is_finite() || a <= 0.0 || a > 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "alpha[{i}] = {a} is outside (0, 1]; zero weights must be dropped from the model"
                )));
            }
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> f64 {
        max_weight(&self.0)
    }
}

impl TryFrom<Vec<f64>> for AlphaVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<AlphaVector> for Vec<f64> {
    fn from(a: AlphaVector) -> Self {
        a.0
    }
}

/// Shift `beta > 0` and exponent `s = rk - n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesParams {
    pub beta: f64,
    pub s: f64,
}

impl SeriesParams {
    pub fn new(beta: f64, s: f64) -> Result<Self> {
        if !beta.is_finite() || beta <= 0.0 {
            return Err(Error::InvalidParameter(format!("beta = {beta} must be finite and > 0")));
        }
        if !s.is_finite() {
            return Err(Error::InvalidParameter(format!("s = {s} must be finite")));
        }
        Ok(Self { beta, s })
    }
}

/// Truncation policy for every series evaluation.
///
/// A sum is accepted once the certified tail bracket is narrower than
/// `abs_tol` times the partial sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesAccuracy {
    pub abs_tol: f64,
    pub max_terms: usize,
}

impl SeriesAccuracy {
    pub fn new(abs_tol: f64, max_terms: usize) -> Result<Self> {
        if !abs_tol.is_finite() || abs_tol <= 0.0 {
            return Err(Error::InvalidParameter(format!("abs_tol = {abs_tol} must be > 0")));
        }
        if max_terms == 0 {
            return Err(Error::InvalidParameter("max_terms must be at least 1".into()));
        }
        Ok(Self { abs_tol, max_terms })
    }
}

impl Default for SeriesAccuracy {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            max_terms: 1_000_000,
        }
    }
}

/// A series value stored as `value * exp(ln_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledSum {
    pub value: f64,
    pub ln_scale: f64,
}

impl ScaledSum {
    pub fn ln(&self) -> f64 {
        self.value.ln() + self.ln_scale
    }

    pub fn get(&self) -> f64 {
        self.ln().exp()
    }
}

/// Complete homogeneous symmetric polynomial `h_t(alpha)`.
pub fn homogeneous_sym(t: usize, alphas: &AlphaVector) -> f64 {
    let mut h = vec![1.0; alphas.len()];
    for _ in 0..t {
        advance(&mut h, alphas.as_slice());
    }
    h[alphas.len() - 1]
}

/// Bare normalizing series `sum_t h_t(alpha) / (t + beta)^s`.
pub fn series_m(alphas: &AlphaVector, sp: &SeriesParams, acc: &SeriesAccuracy) -> Result<f64> {
    Ok(Series::new(alphas.as_slice(), sp.s, *acc)?.sum(sp.beta)?.get())
}

/// The normalizing series with `beta` replaced by `beta + shift`.
pub fn series_m_shifted(
    alphas: &AlphaVector,
    sp: &SeriesParams,
    shift: u64,
    acc: &SeriesAccuracy,
) -> Result<f64> {
    Ok(Series::new(alphas.as_slice(), sp.s, *acc)?
        .sum(sp.beta + shift as f64)?
        .get())
}

/// Natural log of the normalizing series; finite even where `series_m` underflows.
pub fn ln_series_m(alphas: &AlphaVector, sp: &SeriesParams, acc: &SeriesAccuracy) -> Result<f64> {
    Ok(Series::new(alphas.as_slice(), sp.s, *acc)?.sum(sp.beta)?.ln())
}

/// Upper bound on `sum_{t > last} h_t(alpha) / (t + beta)^s`, nonincreasing in `last`.
pub fn series_tail_bound(alphas: &AlphaVector, sp: &SeriesParams, last: usize) -> Result<f64> {
    check_guard(alphas.as_slice(), sp.s)?;
    let scaled = tail_bound(alphas.as_slice(), sp.s, sp.beta, last);
    Ok(scaled * (-sp.s * sp.beta.ln()).exp())
}

/// Series evaluator for a fixed weight vector and exponent.
///
/// Weights may include zeros here (generating-function arguments), but
/// never exceed one.
#[derive(Debug, Clone)]
pub struct Series {
    alphas: Vec<f64>,
    s: f64,
    acc: SeriesAccuracy,
}

impl Series {
    pub fn new(alphas: &[f64], s: f64, acc: SeriesAccuracy) -> Result<Self> {
        check_guard(alphas, s)?;
        Ok(Self {
            alphas: alphas.to_vec(),
            s,
            acc,
        })
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn accuracy(&self) -> SeriesAccuracy {
        self.acc
    }

    /// Same weights with a different exponent.
    pub fn with_exponent(&self, s: f64) -> Result<Self> {
        Self::new(&self.alphas, s, self.acc)
    }

    /// Weights extended by extra copies of existing entries.
    pub fn extended(&self, extra: &[f64]) -> Result<Self> {
        let mut alphas = self.alphas.clone();
        alphas.extend_from_slice(extra);
        Self::new(&alphas, self.s, self.acc)
    }

    pub fn sum(&self, b: f64) -> Result<ScaledSum> {
        Ok(self.sum_many(&[b])?[0])
    }

    /// Evaluates the series at several shifts with one shared truncation index.
    pub fn sum_many(&self, shifts: &[f64]) -> Result<Vec<ScaledSum>> {
        for &b in shifts {
            if !b.is_finite() || b <= 0.0 {
                return Err(Error::InvalidParameter(format!("series shift {b} must be > 0")));
            }
        }
        if self.s == 0.0 {
            let closed = self.alphas.iter().map(|a| 1.0 / (1.0 - a)).product::<f64>();
            return Ok(shifts
                .iter()
                .map(|_| ScaledSum {
                    value: closed,
                    ln_scale: 0.0,
                })
                .collect());
        }
        self.accumulate(shifts, |_, _| 1.0, |b, last| self.bracket(b, last))
    }

    /// `sum_t h_t ln(t + b) / (t + b)^s`, in the same scaling as [`Series::sum`].
    pub fn sum_log_weighted(&self, b: f64) -> Result<ScaledSum> {
        if !b.is_finite() || b <= 0.0 {
            return Err(Error::InvalidParameter(format!("series shift {b} must be > 0")));
        }
        let q = max_weight(&self.alphas);
        let delta = if q < 1.0 {
            1.0
        } else {
            0.5 * (self.s - self.alphas.len() as f64)
        };
        let s = self.s;
        let alphas = &self.alphas;
        let out = self.accumulate(
            &[b],
            |t, b| (t as f64 + b).ln(),
            |b, last| {
                let upper = b.ln().abs() * tail_bound(alphas, s, b, last)
                    + tail_bound(alphas, s - delta, b, last) / (std::f64::consts::E * delta);
                (0.0, upper)
            },
        )?;
        Ok(out[0])
    }

    /// Lower and upper bounds on the scaled tail beyond `last`.
    fn bracket(&self, b: f64, last: usize) -> (f64, f64) {
        if self.alphas.len() == 1 && self.alphas[0] == 1.0 {
            // convex terms f: int_T f - f(T)/2 <= sum_{t > T} f(t) <= int_{T+1/2} f
            let s = self.s;
            let integral = |from: f64| b * ((from + b) / b).powf(1.0 - s) / (s - 1.0);
            let t = last as f64;
            let lower = integral(t) - 0.5 * ((t + b) / b).powf(-s);
            let upper = ROUND_UP * integral(t + 0.5);
            return ((lower / ROUND_UP).max(0.0).min(upper), upper);
        }
        (0.0, tail_bound(&self.alphas, self.s, b, last))
    }

    fn accumulate(
        &self,
        shifts: &[f64],
        weight: impl Fn(usize, f64) -> f64,
        bracket: impl Fn(f64, usize) -> (f64, f64),
    ) -> Result<Vec<ScaledSum>> {
        let r = self.alphas.len();
        let mut h = vec![1.0; r];
        let mut sums = vec![Neumaier::default(); shifts.len()];
        let mut last_bound = f64::INFINITY;
        for t in 0..self.acc.max_terms {
            let ht = h[r - 1];
            if ht != 0.0 {
                for (acc, &b) in sums.iter_mut().zip(shifts) {
                    let decay = (-self.s * (t as f64 / b).ln_1p()).exp();
                    acc.add(ht * decay * weight(t, b));
                }
            }
            if t < 64 || t % 32 == 0 || t + 1 == self.acc.max_terms {
                let brackets: Vec<(f64, f64)> = shifts.iter().map(|&b| bracket(b, t)).collect();
                let worst = brackets
                    .iter()
                    .zip(&sums)
                    .map(|((lo, hi), acc)| 0.5 * (hi - lo) / acc.total().abs())
                    .fold(0.0, f64::max);
                last_bound = worst;
                if worst <= self.acc.abs_tol {
                    return Ok(sums
                        .iter()
                        .zip(shifts)
                        .zip(brackets)
                        .map(|((acc, &b), (lo, hi))| ScaledSum {
                            value: acc.total() + 0.5 * (lo + hi),
                            ln_scale: -self.s * b.ln(),
                        })
                        .collect());
                }
            }
            advance(&mut h, &self.alphas);
        }
        Err(Error::NonConvergent {
            terms: self.acc.max_terms,
            bound: last_bound,
            tol: self.acc.abs_tol,
        })
    }
}

/// Moves the prefix table `h[j] = h_t(alpha_0..alpha_j)` from degree t to t + 1.
fn advance(h: &mut [f64], alphas: &[f64]) {
    let mut prev = 0.0;
    for (hj, &a) in h.iter_mut().zip(alphas) {
        *hj = prev + a * *hj;
        prev = *hj;
    }
}

fn max_weight(alphas: &[f64]) -> f64 {
    alphas.iter().copied().fold(0.0, f64::max)
}

pub(crate) fn check_guard(alphas: &[f64], s: f64) -> Result<()> {
    if alphas.is_empty() {
        return Err(Error::InvalidParameter("series needs at least one weight".into()));
    }
    if !s.is_finite() {
        return Err(Error::InvalidParameter(format!("s = {s} must be finite")));
    }
    for (i, &a) in alphas.iter().enumerate() {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::InvalidParameter(format!(
                "weight[{i}] = {a} is outside [0, 1]; the series diverges for weights above one"
            )));
        }
    }
    let r = alphas.len() as f64;
    if max_weight(alphas) == 1.0 && s <= r {
        return Err(Error::DivergentParameters(format!(
            "a unit weight requires s > {r} (number of weights), got s = {s}"
        )));
    }
    Ok(())
}

/// `ln C(t + r - 1, r - 1)`, the number of compositions of t into r parts.
fn ln_compositions(t: usize, r: usize) -> f64 {
    (1..r).map(|j| ((t + j) as f64 / j as f64).ln()).sum()
}

/// Bound on the scaled tail `sum_{t > last} h_t ((t + b)/b)^{-s}`.
///
/// Uses `h_t <= C(t+r-1, r-1) q^t` with `q = max alpha`. For `q < 1` the
/// dominating sequence has a term ratio that decreases in t, giving a
/// geometric bound; for `q = 1` an integral comparison with `s > r`.
fn tail_bound(alphas: &[f64], s: f64, b: f64, last: usize) -> f64 {
    let r = alphas.len();
    let q = max_weight(alphas);
    if q == 0.0 {
        return 0.0;
    }
    let t1 = last as f64 + 1.0;
    if q < 1.0 {
        let growth = if s < 0.0 {
            ((t1 + 1.0 + b) / (t1 + b)).powf(-s)
        } else {
            1.0
        };
        let rho = q * (t1 + r as f64) / (t1 + 1.0) * growth;
        if rho >= 1.0 {
            return f64::INFINITY;
        }
        let ln_first = ln_compositions(last + 1, r) + t1 * q.ln() - s * ((t1 + b) / b).ln();
        return ROUND_UP * ln_first.exp() / (1.0 - rho);
    }
    let rf = r as f64;
    if s <= rf {
        return f64::INFINITY;
    }
    let c = 0.5 * rf;
    let k = ((t1 + c) / (t1 + b)).max(1.0).powf(rf - 1.0);
    let ln_fact: f64 = (1..r).map(|j| (j as f64).ln()).sum();
    let ln_main = rf * b.ln() + (rf - s) * ((last as f64 + b) / b).ln() - ln_fact;
    ROUND_UP * k * ln_main.exp() / (s - rf)
}

const ROUND_UP: f64 = 1.0 + 1e-12;

#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}
