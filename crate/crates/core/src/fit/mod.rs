//! Maximum-likelihood estimation.
//!
//! The likelihood depends on the data through the per-coordinate sums and the
//! histogram of row totals. Optimization runs on `logit(alpha)`, `ln(beta)`
//! and `ln(s)`; intervals are formed there and mapped back.

mod optim;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::SufficientStats;
use crate::distribution::UgatParams;
use crate::error::{Error, Result};
use crate::series::SeriesAccuracy;

pub use optim::{Method, StopRule};

/// How the exponent `s` is treated.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentMode {
    Fixed(f64),
    /// Fit `(alpha, beta)` at each value and keep the best.
    Grid(Vec<f64>),
    /// Estimate `s` jointly.
    Free,
}

impl ExponentMode {
    pub fn default_grid() -> Self {
        ExponentMode::Grid(vec![0.5, 1.0, 2.0, 3.0, 5.0, 8.0])
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FitConfig {
    pub exponent: ExponentMode,
    /// Gradient infinity-norm threshold (unconstrained scale).
    pub gtol: f64,
    /// Relative objective change threshold.
    pub ftol: f64,
    pub max_iter: usize,
    pub multistart: usize,
    pub seed: u64,
    pub accuracy: SeriesAccuracy,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            exponent: ExponentMode::default_grid(),
            gtol: 1e-6,
            ftol: 1e-10,
            max_iter: 500,
            multistart: 8,
            seed: 0,
            accuracy: SeriesAccuracy::default(),
        }
    }
}

/// `-ln L`.
pub fn neg_log_likelihood(p: &UgatParams, st: &SufficientStats) -> Result<f64> {
    check_stats(p, st)?;
    let a = p.alphas().as_slice();
    let mut nll = st.n as f64 * p.ln_normalizer();
    for (&sum, ai) in st.coord_sums.iter().zip(a) {
        if sum > 0 {
            nll -= sum as f64 * ai.ln();
        }
    }
    if p.s() != 0.0 {
        for &(t, c) in &st.totals {
            nll += p.s() * c as f64 * (t as f64 + p.beta()).ln();
        }
    }
    Ok(nll)
}

fn check_stats(p: &UgatParams, st: &SufficientStats) -> Result<()> {
    if st.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: st.dim(),
        });
    }
    Ok(())
}

/// Gradient of [`neg_log_likelihood`] in the natural parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gradient {
    pub alphas: Vec<f64>,
    pub beta: f64,
    pub s: f64,
}

pub fn nll_gradient(p: &UgatParams, st: &SufficientStats) -> Result<Gradient> {
    check_stats(p, st)?;
    let n = st.n as f64;
    let (b, s) = (p.beta(), p.s());
    let series = p.series();
    let ln_m = p.ln_normalizer();
    let alphas = p
        .alphas()
        .as_slice()
        .iter()
        .zip(&st.coord_sums)
        .map(|(&a, &sum)| {
            // E[X_j] = a_j M(b + 1; alpha + a_j) / M(b; alpha)
            let mean = a * (series.extended(&[a])?.sum(b + 1.0)?.ln() - ln_m).exp();
            Ok((n * mean - sum as f64) / a)
        })
        .collect::<Result<Vec<f64>>>()?;
    let plain = series.sum(b)?;
    let d_beta = if s == 0.0 {
        0.0
    } else {
        let up = series.with_exponent(s + 1.0)?.sum(b)?;
        let ratio = (up.ln() - plain.ln()).exp();
        let inv: f64 = st.totals.iter().map(|&(t, c)| c as f64 / (t as f64 + b)).sum();
        s * inv - n * s * ratio
    };
    // both sums share the scale factor, so the value ratio is E[ln(T + b)]
    let mean_ln = series.sum_log_weighted(b)?.value / plain.value;
    let obs: f64 = st.totals.iter().map(|&(t, c)| c as f64 * (t as f64 + b).ln()).sum();
    let d_s = obs - n * mean_ln;
    Ok(Gradient {
        alphas,
        beta: d_beta,
        s: d_s,
    })
}

/// `(AIC, BIC)` from `-ln L`, the number of free parameters and observations.
pub fn information_criteria(nll: f64, n_params: usize, n_obs: usize) -> (f64, f64) {
    let k = n_params as f64;
    (2.0 * k + 2.0 * nll, k * (n_obs as f64).ln() + 2.0 * nll)
}

/// Free parameters at one exponent setting.
#[derive(Debug, Clone, Copy)]
struct Layout {
    r: usize,
    beta_free: bool,
    s_free: bool,
}

impl Layout {
    fn len(&self) -> usize {
        self.r + self.beta_free as usize + self.s_free as usize
    }

    fn names(&self) -> Vec<String> {
        let mut out: Vec<String> = (1..=self.r).map(|i| format!("alpha{i}")).collect();
        if self.beta_free {
            out.push("beta".into());
        }
        if self.s_free {
            out.push("s".into());
        }
        out
    }
}

fn logistic(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

fn logit(a: f64) -> f64 {
    (a / (1.0 - a)).ln()
}

/// Objective in unconstrained coordinates at fixed `s` (unless `s` is free).
struct Problem<'a> {
    st: &'a SufficientStats,
    layout: Layout,
    s_fixed: f64,
    acc: SeriesAccuracy,
}

impl Problem<'_> {
    fn natural(&self, theta: &[f64]) -> (Vec<f64>, f64, f64) {
        let r = self.layout.r;
        let alphas = theta[..r].iter().map(|&v| logistic(v)).collect();
        let mut k = r;
        let beta = if self.layout.beta_free {
            k += 1;
            theta[k - 1].exp()
        } else {
            1.0
        };
        let s = if self.layout.s_free { theta[k].exp() } else { self.s_fixed };
        (alphas, beta, s)
    }

    fn params(&self, theta: &[f64]) -> Option<UgatParams> {
        let (alphas, beta, s) = self.natural(theta);
        if alphas.iter().any(|&a| !(a > 0.0 && a < 1.0)) || !beta.is_finite() || !s.is_finite() {
            return None;
        }
        UgatParams::with_accuracy(alphas, beta, s, self.acc).ok()
    }

    fn value(&self, theta: &[f64]) -> Option<f64> {
        let p = self.params(theta)?;
        neg_log_likelihood(&p, self.st).ok().filter(|v| v.is_finite())
    }

    fn value_grad(&self, theta: &[f64]) -> Option<(f64, Vec<f64>)> {
        let p = self.params(theta)?;
        let f = neg_log_likelihood(&p, self.st).ok().filter(|v| v.is_finite())?;
        let g = nll_gradient(&p, self.st).ok()?;
        let mut out: Vec<f64> = g
            .alphas
            .iter()
            .zip(p.alphas().as_slice())
            .map(|(d, a)| d * a * (1.0 - a))
            .collect();
        if self.layout.beta_free {
            out.push(g.beta * p.beta());
        }
        if self.layout.s_free {
            out.push(g.s * p.s());
        }
        out.iter().all(|v| v.is_finite()).then_some((f, out))
    }

    /// Central differences of the analytic gradient, symmetrized.
    fn hessian(&self, theta: &[f64]) -> Option<DMatrix<f64>> {
        let n = theta.len();
        let mut h = DMatrix::zeros(n, n);
        for j in 0..n {
            let step = 1e-4 * theta[j].abs().max(1.0);
            let mut up = theta.to_vec();
            let mut dn = theta.to_vec();
            up[j] += step;
            dn[j] -= step;
            let (_, gu) = self.value_grad(&up)?;
            let (_, gd) = self.value_grad(&dn)?;
            for i in 0..n {
                h[(i, j)] = (gu[i] - gd[i]) / (2.0 * step);
            }
        }
        Some((&h + h.transpose()) * 0.5)
    }
}

/// Two-sided interval; `upper = None` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interval {
    pub lower: f64,
    pub upper: Option<f64>,
}

impl Interval {
    fn new(lower: f64, upper: f64) -> Self {
        Self {
            lower,
            upper: upper.is_finite().then_some(upper),
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && self.upper.is_none_or(|u| v <= u)
    }
}

/// Estimate, standard error and 95% interval of one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamEstimate {
    pub name: String,
    pub value: f64,
    /// `None` when the parameter lies along a flat direction of the likelihood.
    pub std_error: Option<f64>,
    pub ci95: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitResult {
    pub alphas: Vec<f64>,
    pub beta: f64,
    pub s: f64,
    pub params: Vec<ParamEstimate>,
    pub neg_log_likelihood: f64,
    pub n_obs: usize,
    pub n_params: usize,
    pub aic: f64,
    pub bic: f64,
    /// Covariance of the free parameters in natural scale, in `params` order.
    pub covariance: Vec<Vec<f64>>,
    pub converged: bool,
    pub iterations: usize,
    pub method: String,
    pub start_index: usize,
    pub warnings: Vec<String>,
    /// `(s, -ln L)` for every exponent tried.
    pub s_profile: Vec<(f64, f64)>,
}

impl FitResult {
    pub fn to_params(&self, acc: SeriesAccuracy) -> Result<UgatParams> {
        UgatParams::with_accuracy(self.alphas.clone(), self.beta, self.s, acc)
    }
}

struct Candidate {
    out: optim::Outcome,
    start_index: usize,
}

/// Fits the distribution to a sample.
pub fn fit_mle(st: &SufficientStats, cfg: &FitConfig) -> Result<FitResult> {
    let r = st.dim();
    if r == 0 || st.n == 0 {
        return Err(Error::InvalidParameter("empty sample".into()));
    }
    if let Some(coord) = st.coord_sums.iter().position(|&s| s == 0) {
        return Err(Error::DegenerateData { coord });
    }
    let settings: Vec<(Option<f64>, Layout)> = match &cfg.exponent {
        ExponentMode::Fixed(s) => vec![(Some(*s), layout_for(r, *s))],
        ExponentMode::Grid(g) if g.is_empty() => {
            return Err(Error::InvalidParameter("empty exponent grid".into()))
        }
        ExponentMode::Grid(g) => g.iter().map(|&s| (Some(s), layout_for(r, s))).collect(),
        ExponentMode::Free => vec![(
            None,
            Layout {
                r,
                beta_free: true,
                s_free: true,
            },
        )],
    };
    for (s, _) in &settings {
        if let Some(s) = s {
            if !s.is_finite() || *s < 0.0 {
                return Err(Error::InvalidParameter(format!("fixed exponent {s} must be >= 0")));
            }
        }
    }
    let max_p = settings.iter().map(|(_, l)| l.len()).max().unwrap_or(0);
    if st.n <= max_p {
        return Err(Error::TooFewObservations {
            n_obs: st.n,
            n_params: max_p,
        });
    }

    let mut best: Option<(Candidate, Problem, f64)> = None;
    let mut profile = Vec::new();
    for (s, layout) in settings {
        let problem = Problem {
            st,
            layout,
            s_fixed: s.unwrap_or(0.0),
            acc: cfg.accuracy,
        };
        let Some(cand) = multistart(&problem, cfg) else {
            continue;
        };
        let s_hat = problem.natural(&cand.out.x).2;
        profile.push((s_hat, cand.out.f));
        if best.as_ref().is_none_or(|(b, _, _)| cand.out.f < b.out.f) {
            best = Some((cand, problem, s_hat));
        }
    }
    let Some((cand, problem, _)) = best else {
        return Err(Error::DidNotConverge { iterations: 0 });
    };
    summarize(cand, &problem, profile)
}

fn layout_for(r: usize, s: f64) -> Layout {
    Layout {
        r,
        beta_free: s != 0.0,
        s_free: false,
    }
}

fn starts(problem: &Problem, cfg: &FitConfig) -> Vec<Vec<f64>> {
    let l = problem.layout;
    let base: Vec<f64> = problem
        .st
        .means()
        .iter()
        .map(|m| logit((m / (1.0 + m)).clamp(0.01, 0.99)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let count = cfg.multistart.max(1);
    (0..count)
        .map(|k| {
            let mut theta = base.clone();
            let jitter = k >= 4 || !l.beta_free;
            if jitter && k > 0 {
                theta.iter_mut().for_each(|v| *v += rng.gen_range(-1.0..1.0));
            }
            if l.beta_free {
                let lb = if jitter {
                    rng.gen_range(0.0..1000f64.ln())
                } else {
                    [1.0f64, 10.0, 100.0, 1000.0][k].ln()
                };
                theta.push(lb);
            }
            if l.s_free {
                let ls = 2f64.ln() + if jitter { rng.gen_range(-1.0..1.0) } else { 0.0 };
                theta.push(ls);
            }
            theta
        })
        .collect()
}

fn multistart(problem: &Problem, cfg: &FitConfig) -> Option<Candidate> {
    let rule = StopRule {
        gtol: cfg.gtol,
        ftol: cfg.ftol,
        max_iter: cfg.max_iter,
    };
    let runs: Vec<Option<Candidate>> = starts(problem, cfg)
        .into_par_iter()
        .enumerate()
        .map(|(start_index, theta)| {
            let mut out = optim::bfgs(|x| problem.value_grad(x), &theta, rule)?;
            if !out.converged {
                if let Some(nm) = optim::nelder_mead(|x| problem.value(x), &out.x, rule) {
                    if nm.f <= out.f {
                        out = optim::Outcome {
                            iterations: out.iterations + nm.iterations,
                            ..nm
                        };
                    }
                }
            }
            Some(Candidate {
                out,
                start_index,
            })
        })
        .collect();
    runs.into_iter()
        .flatten()
        .fold(None, |acc: Option<Candidate>, c| match acc {
            Some(a) if a.out.f <= c.out.f => Some(a),
            _ => Some(c),
        })
}

/// Singular values below this fraction of the largest count as flat directions.
const NULL_RTOL: f64 = 1e-10;
/// Condition number above which the covariance is flagged.
const COND_WARN: f64 = 1e8;

fn summarize(
    cand: Candidate,
    problem: &Problem,
    profile: Vec<(f64, f64)>,
) -> Result<FitResult> {
    let theta = &cand.out.x;
    let l = problem.layout;
    let (alphas, beta, s) = problem.natural(theta);
    let n_params = l.len();
    let nll = cand.out.f;
    let (aic, bic) = information_criteria(nll, n_params, problem.st.n);
    let mut warnings = Vec::new();
    if !cand.out.converged {
        warnings.push(format!("optimizer stopped after {} iterations without meeting the tolerance", cand.out.iterations));
    }

    let hess = problem.hessian(theta).ok_or(Error::SingularInformation)?;
    let svd = hess.clone().svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.max();
    let cond = if sv.min() > 0.0 { smax / sv.min() } else { f64::INFINITY };
    let v_t = svd.v_t.clone().expect("svd v_t");
    let null: Vec<usize> = (0..sv.len()).filter(|&k| sv[k].is_nan() || sv[k] <= NULL_RTOL * smax).collect();
    if !null.is_empty() || cond > COND_WARN {
        warnings.push(format!("observed information is ill-conditioned (condition number {cond:.3e})"));
    }
    let cov_theta = svd
        .pseudo_inverse(NULL_RTOL * smax)
        .map_err(|_| Error::SingularInformation)?;
    let on_null = |j: usize| null.iter().any(|&k| v_t[(k, j)].abs() > 1e-3);

    let jac: Vec<f64> = {
        let mut v: Vec<f64> = alphas.iter().map(|a| a * (1.0 - a)).collect();
        if l.beta_free {
            v.push(beta);
        }
        if l.s_free {
            v.push(s);
        }
        v
    };
    let jm = DMatrix::from_diagonal(&DVector::from_vec(jac.clone()));
    let cov_nat = &jm * &cov_theta * &jm;
    let cov_nat = (&cov_nat + cov_nat.transpose()) * 0.5;

    let names = l.names();
    let mut params = Vec::with_capacity(n_params);
    for (j, name) in names.into_iter().enumerate() {
        let value = match j {
            j if j < l.r => alphas[j],
            j if j == l.r && l.beta_free => beta,
            _ => s,
        };
        let is_alpha = j < l.r;
        let se_theta = cov_theta[(j, j)].max(0.0).sqrt();
        let flat = on_null(j) || !se_theta.is_finite();
        let (std_error, ci95) = if flat {
            (None, Interval::new(0.0, if is_alpha { 1.0 } else { f64::INFINITY }))
        } else {
            let (lo, hi) = (theta[j] - 1.96 * se_theta, theta[j] + 1.96 * se_theta);
            let ci = if is_alpha {
                Interval::new(logistic(lo), logistic(hi))
            } else {
                Interval::new(lo.exp(), hi.exp())
            };
            (Some(jac[j] * se_theta), ci)
        };
        params.push(ParamEstimate {
            name,
            value,
            std_error,
            ci95,
        });
    }
    let covariance = (0..n_params)
        .map(|i| (0..n_params).map(|j| cov_nat[(i, j)]).collect())
        .collect();
    Ok(FitResult {
        alphas,
        beta,
        s,
        params,
        neg_log_likelihood: nll,
        n_obs: problem.st.n,
        n_params,
        aic,
        bic,
        covariance,
        converged: cand.out.converged,
        iterations: cand.out.iterations,
        method: match cand.out.method {
            Method::Bfgs => "bfgs".into(),
            Method::NelderMead => "nelder-mead".into(),
        },
        start_index: cand.start_index,
        warnings,
        s_profile: profile,
    })
}

/// Observed information `-d^2 ln L` in natural parameters `(alpha, beta[, s])`
/// by central differences of the analytic gradient.
pub fn observed_information(p: &UgatParams, st: &SufficientStats, with_s: bool) -> Result<DMatrix<f64>> {
    let r = p.dim();
    let n = r + 1 + with_s as usize;
    let x0: Vec<f64> = p
        .alphas()
        .as_slice()
        .iter()
        .copied()
        .chain([p.beta()])
        .chain(with_s.then_some(p.s()))
        .collect();
    let grad_at = |x: &[f64]| -> Result<Vec<f64>> {
        let s = if with_s { x[r + 1] } else { p.s() };
        let q = UgatParams::with_accuracy(x[..r].to_vec(), x[r], s, p.accuracy())?;
        let g = nll_gradient(&q, st)?;
        let mut v = g.alphas;
        v.push(g.beta);
        if with_s {
            v.push(g.s);
        }
        Ok(v)
    };
    let mut h = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut step = 1e-5 * x0[j].abs().max(1e-3);
        if j < r {
            step = step.min(0.5 * (1.0 - x0[j])).min(0.5 * x0[j]);
        }
        let mut up = x0.clone();
        let mut dn = x0.clone();
        up[j] += step;
        dn[j] -= step;
        let (gu, gd) = (grad_at(&up)?, grad_at(&dn)?);
        for i in 0..n {
            h[(i, j)] = (gu[i] - gd[i]) / (2.0 * step);
        }
    }
    Ok((&h + h.transpose()) * 0.5)
}
