//! Probability functions, moments and sampling.
//!
//! Every probability is a ratio of normalizing series, so the prefactor of
//! the underlying polynomial family never has to be formed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::series::{AlphaVector, ScaledSum, Series, SeriesAccuracy, SeriesParams};

/// Default cell cap for [`UgatParams::joint_cdf_exact`].
pub const DEFAULT_BOX_CAP: u128 = 1_000_000;

/// Largest `n` for which [`stirling_first`] is tabulated.
pub const STIRLING_MAX: usize = 20;

/// One observation `(x_1, ..., x_r)` of nonnegative counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CountVector(Vec<u64>);

impl CountVector {
    pub fn new(coords: Vec<u64>) -> Self {
        Self(coords)
    }

    pub fn zeros(r: usize) -> Self {
        Self(vec![0; r])
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    /// Coordinatewise sum.
    pub fn plus(&self, other: &CountVector) -> CountVector {
        CountVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Copy with coordinate `i` incremented by one.
    pub fn bumped(&self, i: usize) -> CountVector {
        let mut c = self.0.clone();
        c[i] += 1;
        CountVector(c)
    }
}

impl From<Vec<u64>> for CountVector {
    fn from(v: Vec<u64>) -> Self {
        Self(v)
    }
}

/// Parameters `(alpha, beta, s)` of an r-dimensional UGAT distribution.
///
/// Immutable once built; the normalizing series is evaluated at construction.
#[derive(Debug, Clone)]
pub struct UgatParams {
    alphas: AlphaVector,
    beta: f64,
    s: f64,
    series: Series,
    norm: ScaledSum,
}

impl UgatParams {
    pub fn new(alphas: Vec<f64>, beta: f64, s: f64) -> Result<Self> {
        Self::with_accuracy(alphas, beta, s, SeriesAccuracy::default())
    }

    pub fn with_accuracy(alphas: Vec<f64>, beta: f64, s: f64, acc: SeriesAccuracy) -> Result<Self> {
        let alphas = AlphaVector::new(alphas)?;
        let sp = SeriesParams::new(beta, s)?;
        let series = Series::new(alphas.as_slice(), sp.s, acc)?;
        let norm = series.sum(beta)?;
        if !(norm.value.is_finite() && norm.value > 0.0) {
            return Err(Error::DivergentParameters(format!(
                "normalizer is not finite and positive ({})",
                norm.value
            )));
        }
        Ok(Self {
            alphas,
            beta,
            s,
            series,
            norm,
        })
    }

    pub fn dim(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &AlphaVector {
        &self.alphas
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn accuracy(&self) -> SeriesAccuracy {
        self.series.accuracy()
    }

    pub fn series(&self) -> &Series {
        &self.series
    }

    /// `ln S`, the log of the normalizing series at `beta`.
    pub fn ln_normalizer(&self) -> f64 {
        self.norm.ln()
    }

    pub fn normalizer(&self) -> f64 {
        self.norm.get()
    }

    /// `ln M(beta + shift)` for the weights of this distribution.
    pub fn ln_m_shifted(&self, shift: f64) -> Result<f64> {
        if shift == 0.0 {
            return Ok(self.norm.ln());
        }
        Ok(self.series.sum(self.beta + shift)?.ln())
    }

    fn alpha(&self, coord: usize) -> Result<f64> {
        self.alphas
            .as_slice()
            .get(coord)
            .copied()
            .ok_or(Error::IndexOutOfRange {
                index: coord,
                dim: self.dim(),
            })
    }

    pub(crate) fn check_point(&self, x: &CountVector) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// `ln P(X = x)` without forming the product of powers.
    pub fn log_joint_pmf(&self, x: &CountVector) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.log_weight(x.as_slice()) - self.norm.ln())
    }

    /// Unnormalized log mass `sum x_i ln alpha_i - s ln(sum x + beta)`.
    fn log_weight(&self, x: &[u64]) -> f64 {
        let total: u64 = x.iter().sum();
        let powers: f64 = x
            .iter()
            .zip(self.alphas.as_slice())
            .map(|(&xi, &a)| if xi == 0 { 0.0 } else { xi as f64 * a.ln() })
            .sum();
        powers - self.s * (total as f64 + self.beta).ln()
    }

    pub fn joint_pmf(&self, x: &CountVector) -> Result<f64> {
        if self.s == 0.0 {
            self.check_point(x)?;
            // independent geometric coordinates
            return Ok(x
                .as_slice()
                .iter()
                .zip(self.alphas.as_slice())
                .map(|(&xi, &a)| a.powi(xi as i32) * (1.0 - a))
                .product());
        }
        Ok(self.log_joint_pmf(x)?.exp())
    }

    /// `P(X_i > x)` for `x >= -1`.
    pub fn marginal_ccdf(&self, coord: usize, x: i64) -> Result<f64> {
        let a = self.alpha(coord)?;
        if x < -1 {
            return Err(Error::InvalidParameter(format!("survival point {x} must be >= -1")));
        }
        if x == -1 {
            return Ok(1.0);
        }
        let k = (x + 1) as f64;
        if self.s == 0.0 {
            return Ok(a.powi(x as i32 + 1));
        }
        Ok((k * a.ln() + self.ln_m_shifted(k)? - self.norm.ln()).exp())
    }

    pub fn marginal_cdf(&self, coord: usize, x: u64) -> Result<f64> {
        Ok(1.0 - self.marginal_ccdf(coord, x as i64)?)
    }

    /// `P(X_i = x) = P(X_i > x - 1) - P(X_i > x)`.
    pub fn marginal_pmf(&self, coord: usize, x: u64) -> Result<f64> {
        let x = x as i64;
        Ok(self.marginal_ccdf(coord, x - 1)? - self.marginal_ccdf(coord, x)?)
    }

    /// Product of the marginal CDFs.
    ///
    /// This is the joint CDF only when the coordinates are independent, which
    /// for this family means `s = 0`; compare with [`UgatParams::joint_cdf_exact`].
    pub fn joint_cdf_product(&self, x: &CountVector) -> Result<f64> {
        self.check_point(x)?;
        x.as_slice()
            .iter()
            .enumerate()
            .map(|(i, &xi)| self.marginal_cdf(i, xi))
            .product()
    }

    pub fn joint_cdf_exact(&self, x: &CountVector) -> Result<f64> {
        self.joint_cdf_exact_capped(x, DEFAULT_BOX_CAP)
    }

    /// `P(X <= x)` by direct summation over the box `[0, x_1] x ... x [0, x_r]`.
    pub fn joint_cdf_exact_capped(&self, x: &CountVector, cap: u128) -> Result<f64> {
        self.check_point(x)?;
        let cells = x
            .as_slice()
            .iter()
            .try_fold(1u128, |acc, &xi| acc.checked_mul(xi as u128 + 1))
            .unwrap_or(u128::MAX);
        if cells > cap {
            return Err(Error::BoxTooLarge { cells, cap });
        }
        let upper = x.as_slice();
        let mut cell = vec![0u64; upper.len()];
        let mut sum = 0.0;
        loop {
            sum += (self.log_weight(&cell) - self.norm.ln()).exp();
            // odometer over the box
            let mut k = 0;
            loop {
                if k == cell.len() {
                    return Ok(sum);
                }
                if cell[k] < upper[k] {
                    cell[k] += 1;
                    break;
                }
                cell[k] = 0;
                k += 1;
            }
        }
    }

    fn check_bivariate(&self, i: usize, j: usize) -> Result<()> {
        if self.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: self.dim(),
            });
        }
        if i >= 2 || j >= 2 {
            return Err(Error::IndexOutOfRange {
                index: i.max(j),
                dim: 2,
            });
        }
        if i == j {
            return Err(Error::InvalidParameter(
                "conditioning coordinate must differ from the target".into(),
            ));
        }
        Ok(())
    }

    fn pair(i: usize, xi: u64, xj: u64) -> CountVector {
        if i == 0 {
            CountVector(vec![xi, xj])
        } else {
            CountVector(vec![xj, xi])
        }
    }

    /// `P(X_i = x_i | X_j = x_j)` for a bivariate distribution.
    pub fn conditional_pmf(&self, i: usize, xi: u64, j: usize, xj: u64) -> Result<f64> {
        self.check_bivariate(i, j)?;
        let denom = self.marginal_pmf(j, xj)?;
        if denom <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "P(X_{j} = {xj}) is zero; conditional undefined"
            )));
        }
        Ok(self.joint_pmf(&Self::pair(i, xi, xj))? / denom)
    }

    /// `E(X_i | X_j = x_j)` for a bivariate distribution.
    pub fn conditional_expectation(&self, i: usize, j: usize, xj: u64) -> Result<f64> {
        self.check_bivariate(i, j)?;
        let a = self.alpha(i)?;
        let denom = self.marginal_pmf(j, xj)?;
        if denom <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "P(X_{j} = {xj}) is zero; conditional undefined"
            )));
        }
        let acc = self.accuracy();
        let c = xj as f64 + self.beta;
        let mut sum = 0.0;
        for x in 1..acc.max_terms as u64 {
            let p = self.joint_pmf(&Self::pair(i, x, xj))? / denom;
            sum += x as f64 * p;
            // bound on sum_{y > x} y P(X_i = y | X_j = x_j)
            let tail = if a < 1.0 {
                let growth = if self.s < 0.0 {
                    ((x as f64 + 2.0 + c) / (x as f64 + 1.0 + c)).powf(-self.s)
                } else {
                    1.0
                };
                let rho = a * (x as f64 + 2.0) / (x as f64 + 1.0) * growth;
                if rho < 1.0 {
                    p * a * (x as f64 + 1.0) * growth / (1.0 - rho)
                } else {
                    f64::INFINITY
                }
            } else {
                // y (y + c)^{-s} <= (y + c)^{1-s}; integral comparison needs s > 2
                let at_origin = self.joint_pmf(&Self::pair(i, 0, xj))? / denom * c.powf(self.s);
                at_origin * (x as f64 + c).powf(2.0 - self.s) / (self.s - 2.0)
            };
            if tail <= acc.abs_tol * sum {
                return Ok(sum);
            }
        }
        Err(Error::NonConvergent {
            terms: acc.max_terms,
            bound: f64::NAN,
            tol: acc.abs_tol,
        })
    }

    /// `E(X_i^ell)` from the one-dimensional marginal series.
    pub fn raw_moment(&self, coord: usize, ell: u32) -> Result<f64> {
        let a = self.alpha(coord)?;
        if ell == 0 {
            return Ok(1.0);
        }
        let acc = self.accuracy();
        if a >= 1.0 {
            return Err(Error::NonConvergent {
                terms: 0,
                bound: f64::INFINITY,
                tol: acc.abs_tol,
            });
        }
        let l = ell as i32;
        let mut sum = 0.0;
        let mut prev = 1.0; // P(X_i > -1)
        for x in 0..acc.max_terms as u64 {
            let cur = self.marginal_ccdf(coord, x as i64)?;
            sum += (x as f64).powi(l) * (prev - cur);
            prev = cur;
            if x == 0 {
                continue;
            }
            // sum_{y > x} y^ell P(X_i = y) <= sum_{y > x} y^ell P(X_i > y - 1), geometric in y
            let xf = x as f64;
            let growth = if self.s < 0.0 {
                ((self.beta + xf + 2.0) / (self.beta + xf + 1.0)).powf(-self.s)
            } else {
                1.0
            };
            let rho = ((xf + 2.0) / (xf + 1.0)).powi(l) * a * growth;
            if rho < 1.0 {
                let tail = (xf + 1.0).powi(l) * cur / (1.0 - rho);
                if tail <= acc.abs_tol * sum {
                    return Ok(sum);
                }
            }
        }
        Err(Error::NonConvergent {
            terms: acc.max_terms,
            bound: f64::NAN,
            tol: acc.abs_tol,
        })
    }

    /// `E[(X_i)_ell]` through the signed Stirling transform of raw moments.
    pub fn factorial_moment(&self, coord: usize, ell: u32) -> Result<f64> {
        let n = ell as usize;
        let mut total = 0.0;
        for j in 0..=n {
            let c = stirling_first(n, j)?;
            if c != 0 {
                total += c as f64 * self.raw_moment(coord, j as u32)?;
            }
        }
        Ok(total)
    }

    /// `E[(X_i)_ell] = ell! alpha_i^ell M(beta + ell; alpha + ell copies of alpha_i) / M(beta; alpha)`.
    ///
    /// The extended series is the ell-th derivative of the normalizer in
    /// `alpha_i`, rewritten as a series of the same family.
    pub fn factorial_moment_by_extension(&self, coord: usize, ell: u32) -> Result<f64> {
        let a = self.alpha(coord)?;
        if ell == 0 {
            return Ok(1.0);
        }
        let extended = self.series.extended(&vec![a; ell as usize])?;
        let lf = ell as f64;
        let ln_fact: f64 = (1..=ell).map(|k| (k as f64).ln()).sum();
        let num = extended.sum(self.beta + lf)?.ln();
        Ok((ln_fact + lf * a.ln() + num - self.norm.ln()).exp())
    }

    fn check_args(&self, t: &[f64]) -> Result<()> {
        if t.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: t.len(),
            });
        }
        Ok(())
    }

    /// Probability generating function `E[prod t_i^{X_i}]`.
    pub fn pgf(&self, t: &[f64]) -> Result<f64> {
        self.check_args(t)?;
        let mut weights = Vec::with_capacity(t.len());
        for (ti, &a) in t.iter().zip(self.alphas.as_slice()) {
            if !ti.is_finite() || *ti < 0.0 {
                return Err(Error::InvalidParameter(format!("pgf argument {ti} must be >= 0")));
            }
            let w = ti * a;
            if w > 1.0 {
                return Err(Error::DivergentParameters(format!(
                    "pgf argument {ti} pushes its weight to {w} > 1"
                )));
            }
            weights.push(w);
        }
        let tilted = Series::new(&weights, self.s, self.accuracy())?;
        Ok((tilted.sum(self.beta)?.ln() - self.norm.ln()).exp())
    }

    /// Moment generating function `E[exp(t . X)]`.
    pub fn mgf(&self, t: &[f64]) -> Result<f64> {
        self.check_args(t)?;
        let e: Vec<f64> = t.iter().map(|ti| ti.exp()).collect();
        self.pgf(&e)
    }

    /// Draws `n` i.i.d. vectors: the total by inverse CDF on the ordered
    /// series, then its split across coordinates one at a time.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<CountVector> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sampler = Sampler::new(self);
        (0..n).map(|_| sampler.draw(&mut rng)).collect()
    }
}

impl Serialize for UgatParams {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("UgatParams", 3)?;
        st.serialize_field("alphas", self.alphas.as_slice())?;
        st.serialize_field("beta", &self.beta)?;
        st.serialize_field("s", &self.s)?;
        st.end()
    }
}

struct Sampler<'a> {
    params: &'a UgatParams,
    /// cumulative scaled mass of totals 0..=t
    cumulative: Vec<f64>,
    /// suffix[j][m] = h_m(alpha_j, ..., alpha_{r-1}); suffix[r][m] = [m == 0]
    suffix: Vec<Vec<f64>>,
    h: Vec<f64>,
}

impl<'a> Sampler<'a> {
    fn new(params: &'a UgatParams) -> Self {
        let r = params.dim();
        Self {
            params,
            cumulative: Vec::new(),
            suffix: vec![Vec::new(); r + 1],
            h: vec![1.0; r],
        }
    }

    fn extend_totals(&mut self) {
        let p = self.params;
        let t = self.cumulative.len();
        if t > 0 {
            let mut prev = 0.0;
            for (hj, &a) in self.h.iter_mut().zip(p.alphas.as_slice()) {
                *hj = prev + a * *hj;
                prev = *hj;
            }
        }
        let term = self.h[p.dim() - 1] * (-p.s * (t as f64 / p.beta).ln_1p()).exp();
        let last = self.cumulative.last().copied().unwrap_or(0.0);
        self.cumulative.push(last + term);
    }

    fn extend_suffix(&mut self, upto: usize) {
        let alphas = self.params.alphas.as_slice();
        let r = alphas.len();
        let have = self.suffix[r].len();
        for m in have..=upto {
            self.suffix[r].push(if m == 0 { 1.0 } else { 0.0 });
            for j in (0..r).rev() {
                let prev = if m == 0 { 0.0 } else { self.suffix[j][m - 1] };
                let v = self.suffix[j + 1][m] + alphas[j] * prev;
                self.suffix[j].push(v);
            }
        }
    }

    fn draw(&mut self, rng: &mut ChaCha8Rng) -> CountVector {
        let p = self.params;
        let target = rng.gen::<f64>() * p.norm.value;
        let cap = p.accuracy().max_terms;
        while self.cumulative.last().is_none_or(|&c| c <= target) && self.cumulative.len() < cap {
            self.extend_totals();
        }
        let total = self.cumulative.partition_point(|&c| c <= target).min(self.cumulative.len() - 1);
        self.extend_suffix(total);

        let alphas = p.alphas.as_slice();
        let r = alphas.len();
        let mut coords = vec![0u64; r];
        let mut remaining = total;
        for j in 0..r - 1 {
            let whole = self.suffix[j][remaining];
            let u = rng.gen::<f64>() * whole;
            let mut acc = 0.0;
            let mut power = 1.0;
            let mut chosen = remaining;
            for a in 0..=remaining {
                acc += power * self.suffix[j + 1][remaining - a];
                if acc > u {
                    chosen = a;
                    break;
                }
                power *= alphas[j];
            }
            coords[j] = chosen as u64;
            remaining -= chosen;
        }
        coords[r - 1] = remaining as u64;
        CountVector(coords)
    }
}

/// Signed Stirling numbers of the first kind, `(x)_n = sum_k s(n, k) x^k`.
pub fn stirling_first(n: usize, k: usize) -> Result<i64> {
    if n > STIRLING_MAX || k > n {
        return Err(Error::OutOfTabulatedRange { n, k });
    }
    let mut row = vec![0i64; n + 1];
    row[0] = 1;
    for m in 0..n {
        // s(m+1, k) = s(m, k-1) - m s(m, k)
        for j in (0..=m + 1).rev() {
            let left = if j == 0 { 0 } else { row[j - 1] };
            row[j] = left - m as i64 * row[j];
        }
    }
    Ok(row[k])
}
