//! Multivariate reliability measures and aging-class predicates.
//!
//! All quantities depend on the lifetimes only through powers of the weights
//! and the shifted series `M(beta + n)` at integer `n`. Residual sums over
//! `t` collapse into a series of the same family with an enlarged weight
//! vector, because `sum_t y^t h_{m-t}(alpha) = h_m(alpha, y)`.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::{CountVector, UgatParams};
use crate::error::{Error, Result};

/// `R(x) = P(X_1 >= x_1, ..., X_r >= x_r)`.
pub fn joint_survival(p: &UgatParams, x: &CountVector) -> Result<f64> {
    p.check_point(x)?;
    let a = p.alphas().as_slice();
    if p.s() == 0.0 {
        return Ok(x.as_slice().iter().zip(a).map(|(&xi, ai)| ai.powi(xi as i32)).product());
    }
    let powers = ln_powers(a, x);
    Ok((powers + p.ln_m_shifted(x.total() as f64)? - p.ln_normalizer()).exp())
}

fn ln_powers(a: &[f64], x: &CountVector) -> f64 {
    x.as_slice()
        .iter()
        .zip(a)
        .map(|(&xi, ai)| if xi == 0 { 0.0 } else { xi as f64 * ai.ln() })
        .sum()
}

fn weight(p: &UgatParams, i: usize) -> Result<f64> {
    p.alphas().as_slice().get(i).copied().ok_or(Error::IndexOutOfRange {
        index: i,
        dim: p.dim(),
    })
}

/// `M(beta + n + k) / M(beta + n)` with one truncation index for both series.
fn shift_ratio(p: &UgatParams, n: u64, k: u64) -> Result<f64> {
    if p.s() == 0.0 {
        return Ok(1.0);
    }
    let b = p.beta() + n as f64;
    let sums = p.series().sum_many(&[b + k as f64, b])?;
    Ok((sums[0].ln() - sums[1].ln()).exp())
}

/// `R_i(t, x) = P(X_i - x_i >= t | X >= x)`.
pub fn residual_survival(p: &UgatParams, i: usize, t: u64, x: &CountVector) -> Result<f64> {
    p.check_point(x)?;
    let a = weight(p, i)?;
    if t == 0 {
        return Ok(1.0);
    }
    Ok(a.powi(t as i32) * shift_ratio(p, x.total(), t)?)
}

/// `h_i(x) = P(X_i = x_i | X >= x) = 1 - R(x + e_i) / R(x)`.
pub fn hazard_component(p: &UgatParams, i: usize, x: &CountVector) -> Result<f64> {
    p.check_point(x)?;
    let a = weight(p, i)?;
    Ok(1.0 - a * shift_ratio(p, x.total(), 1)?)
}

/// `m_i(x) = sum_{t >= 0} R_i(t, x)`.
pub fn mmrl_component(p: &UgatParams, i: usize, x: &CountVector) -> Result<f64> {
    p.check_point(x)?;
    let a = weight(p, i)?;
    if p.s() == 0.0 {
        return Ok(1.0 / (1.0 - a));
    }
    let b = p.beta() + x.total() as f64;
    let extended = p.series().extended(&[a])?;
    Ok((extended.sum(b)?.ln() - p.series().sum(b)?.ln()).exp())
}

/// `sum_{t in N^r} R(x + t) / R(x)`, the multivariate mean residual volume.
fn summed_residual(p: &UgatParams, n: u64) -> Result<f64> {
    let a = p.alphas().as_slice();
    if p.s() == 0.0 {
        return Ok(a.iter().map(|ai| 1.0 / (1.0 - ai)).product());
    }
    let b = p.beta() + n as f64;
    let doubled = p.series().extended(a)?;
    Ok((doubled.sum(b)?.ln() - p.series().sum(b)?.ln()).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AgingClass {
    /// `R(x + t) <= R(x) R(t)`; the reverse inequality is MNWU.
    #[serde(rename = "MNBU")]
    Mnbu,
    /// `sum_t R(x + t) / R(x) <= sum_t R(t)`; the reverse is MNWUE.
    #[serde(rename = "MNBUE")]
    Mnbue,
    /// `h_i(x) <= h_i(x + t)` for every i; the reverse is MDFR.
    #[serde(rename = "MIFR")]
    Mifr,
}

impl AgingClass {
    pub const ALL: [AgingClass; 3] = [AgingClass::Mnbu, AgingClass::Mnbue, AgingClass::Mifr];

    pub fn dual_name(self) -> &'static str {
        match self {
            AgingClass::Mnbu => "MNWU",
            AgingClass::Mnbue => "MNWUE",
            AgingClass::Mifr => "MDFR",
        }
    }
}

/// Outcome of a predicate over a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Both sides agree to within the equality tolerance everywhere.
    Equality,
    /// The class inequality (`<=` form) holds everywhere.
    HoldsLe,
    /// The dual inequality (`>=` form) holds everywhere.
    HoldsGe,
    Mixed,
    /// The series needed by the predicate diverge for these parameters.
    Undefined,
}

/// Predicate result with the extreme relative gaps `lhs / rhs - 1` seen on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgingCheck {
    pub class: AgingClass,
    pub verdict: Verdict,
    /// `None` when no comparison was made.
    pub max_gap: Option<f64>,
    pub min_gap: Option<f64>,
    pub comparisons: usize,
}

/// Relative gaps below this are treated as equality.
pub const EQUALITY_TOL: f64 = 1e-12;

fn verdict_from(gaps: &[f64]) -> (Verdict, Option<f64>, Option<f64>) {
    let max = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let v = if gaps.is_empty() || (max <= EQUALITY_TOL && min >= -EQUALITY_TOL) {
        Verdict::Equality
    } else if max <= EQUALITY_TOL {
        Verdict::HoldsLe
    } else if min >= -EQUALITY_TOL {
        Verdict::HoldsGe
    } else {
        Verdict::Mixed
    };
    let finite = |v: f64| v.is_finite().then_some(v);
    (v, finite(max), finite(min))
}

/// Table of `ln M(beta + n)` for the integer shifts a grid needs.
struct ShiftTable {
    shifts: Vec<u64>,
    values: Vec<f64>,
}

impl ShiftTable {
    fn build(p: &UgatParams, needed: BTreeSet<u64>) -> Result<Self> {
        let shifts: Vec<u64> = needed.into_iter().collect();
        let values = shifts
            .par_iter()
            .map(|&n| p.ln_m_shifted(n as f64))
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self { shifts, values })
    }

    fn ln_m(&self, n: u64) -> f64 {
        self.values[self.shifts.binary_search(&n).expect("shift precomputed")]
    }
}

/// Evaluates one aging predicate at every `(x, t)` pair of the grids.
///
/// MNBUE compares the full residual sums and ignores `t_grid`.
pub fn aging_class_check(
    p: &UgatParams,
    class: AgingClass,
    x_grid: &[CountVector],
    t_grid: &[CountVector],
) -> Result<AgingCheck> {
    for x in x_grid.iter().chain(t_grid) {
        p.check_point(x)?;
    }
    let gaps: Vec<f64> = match class {
        AgingClass::Mnbu => {
            let mut needed = BTreeSet::from([0u64]);
            for x in x_grid {
                for t in t_grid {
                    needed.extend([x.total(), t.total(), x.total() + t.total()]);
                }
            }
            let table = ShiftTable::build(p, needed)?;
            let base = table.ln_m(0);
            x_grid
                .iter()
                .flat_map(|x| t_grid.iter().map(move |t| (x.total(), t.total())))
                .map(|(nx, nt)| {
                    let d = table.ln_m(nx + nt) + base - table.ln_m(nx) - table.ln_m(nt);
                    d.exp_m1()
                })
                .collect()
        }
        AgingClass::Mnbue => {
            let rhs = match summed_residual(p, 0) {
                Ok(v) => v,
                Err(Error::DivergentParameters(_)) => {
                    return Ok(AgingCheck {
                        class,
                        verdict: Verdict::Undefined,
                        max_gap: None,
                        min_gap: None,
                        comparisons: 0,
                    })
                }
                Err(e) => return Err(e),
            };
            x_grid
                .par_iter()
                .map(|x| Ok(summed_residual(p, x.total())? / rhs - 1.0))
                .collect::<Result<Vec<f64>>>()?
        }
        AgingClass::Mifr => {
            let mut needed = BTreeSet::new();
            for x in x_grid {
                for t in t_grid {
                    let n = x.total() + t.total();
                    needed.extend([x.total(), x.total() + 1, n, n + 1]);
                }
            }
            let table = ShiftTable::build(p, needed)?;
            let ln_ratio = |n: u64| table.ln_m(n + 1) - table.ln_m(n);
            x_grid
                .iter()
                .flat_map(|x| t_grid.iter().map(move |t| (x.total(), t.total())))
                .map(|(nx, nt)| (ln_ratio(nx + nt) - ln_ratio(nx)).exp_m1())
                .collect()
        }
    };
    let (verdict, max_gap, min_gap) = verdict_from(&gaps);
    Ok(AgingCheck {
        class,
        verdict,
        max_gap,
        min_gap,
        comparisons: gaps.len(),
    })
}

/// Reliability measures at one lifetime vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReliabilityPoint {
    pub x: CountVector,
    pub survival: f64,
    pub hazard: Vec<f64>,
    /// `None` where the mean residual life is infinite.
    pub mmrl: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReliabilityReport {
    pub points: Vec<ReliabilityPoint>,
    pub aging: Vec<AgingCheck>,
}

/// Default cap on the number of grid points of a report.
pub const DEFAULT_GRID_CAP: usize = 100_000;

/// All vectors in `[0, max]^r`, first coordinate varying fastest.
pub fn box_grid(r: usize, max: u64, cap: usize) -> Result<Vec<CountVector>> {
    let points = (max as usize + 1)
        .checked_pow(r as u32)
        .unwrap_or(usize::MAX);
    if points > cap {
        return Err(Error::GridTooLarge { points, cap });
    }
    let mut out = Vec::with_capacity(points);
    let mut cell = vec![0u64; r];
    loop {
        out.push(CountVector::new(cell.clone()));
        let mut k = 0;
        loop {
            if k == r {
                return Ok(out);
            }
            if cell[k] < max {
                cell[k] += 1;
                break;
            }
            cell[k] = 0;
            k += 1;
        }
    }
}

/// Survival, hazard and MMRL at each grid point, plus all aging predicates
/// with `t` ranging over the same grid.
pub fn reliability_report(p: &UgatParams, grid: &[CountVector]) -> Result<ReliabilityReport> {
    let points = grid
        .par_iter()
        .map(|x| {
            let hazard = (0..p.dim())
                .map(|i| hazard_component(p, i, x))
                .collect::<Result<Vec<f64>>>()?;
            let mmrl = (0..p.dim())
                .map(|i| match mmrl_component(p, i, x) {
                    Ok(v) => Ok(Some(v)),
                    Err(Error::DivergentParameters(_)) => Ok(None),
                    Err(e) => Err(e),
                })
                .collect::<Result<Vec<Option<f64>>>>()?;
            Ok(ReliabilityPoint {
                x: x.clone(),
                survival: joint_survival(p, x)?,
                hazard,
                mmrl,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let aging = AgingClass::ALL
        .iter()
        .map(|&c| aging_class_check(p, c, grid, grid))
        .collect::<Result<Vec<_>>>()?;
    Ok(ReliabilityReport { points, aging })
}
