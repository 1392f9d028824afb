//! Brute-force references used only by unit tests.

use crate::distribution::{CountVector, UgatParams};

/// Unnormalized mass `prod a_i^{x_i} / (sum x + beta)^s`.
pub fn weight(a: &[f64], beta: f64, s: f64, x: &[u64]) -> f64 {
    let total: u64 = x.iter().sum();
    let p: f64 = a.iter().zip(x).map(|(ai, &xi)| ai.powi(xi as i32)).product();
    p / (total as f64 + beta).powf(s)
}

/// Iterates the box `[0, cut]^r`, smallest terms first.
pub fn for_each_cell(r: usize, cut: u64, mut f: impl FnMut(&[u64])) {
    let mut cell = vec![cut; r];
    loop {
        f(&cell);
        let mut k = 0;
        loop {
            if k == r {
                return;
            }
            if cell[k] > 0 {
                cell[k] -= 1;
                break;
            }
            cell[k] = cut;
            k += 1;
        }
    }
}

/// r-fold sum of [`weight`] over a box large enough that the remainder is
/// below 1e-17 relative (weights at most 0.6 for r = 3).
pub fn normalizer(a: &[f64], beta: f64, s: f64) -> f64 {
    let q = a.iter().copied().fold(0.0, f64::max);
    let cut = ((1e-18f64).ln() / q.ln()).ceil() as u64 + 10;
    let mut total = 0.0;
    for_each_cell(a.len(), cut, |x| total += weight(a, beta, s, x));
    total
}

pub fn box_mass(p: &UgatParams, cut: u64) -> f64 {
    let mut total = 0.0;
    for_each_cell(p.dim(), cut, |x| {
        total += p.joint_pmf(&CountVector::new(x.to_vec())).unwrap()
    });
    total
}

/// Mass outside `[0, cut]^r`, bounded with `(sum x + beta)^{-s} <= beta^{-s}` for s >= 0.
pub fn box_tail_bound(p: &UgatParams, cut: u64) -> f64 {
    let a = p.alphas().as_slice();
    let geo: f64 = a.iter().map(|ai| 1.0 / (1.0 - ai)).product();
    let outside: f64 = a
        .iter()
        .map(|ai| ai.powi(cut as i32 + 1) / (1.0 - ai) * geo * (1.0 - ai))
        .sum();
    outside * p.beta().powf(-p.s()) / p.normalizer()
}
