//! Tanimoto similarity, thresholded pair search and MCS similarity.
//!
//! Pair search sorts one side by popcount and only scores candidates inside
//! the Tanimoto popcount window: with popcounts `p` and `q`, `tc ≤ min(p,q) /
//! max(p,q)`, so `tc ≥ t` requires `t·p ≤ q ≤ p/t`. Work is sharded with
//! rayon and the merged output is sorted by `(tc desc, a, b)`, independent of
//! the thread count.

mod mcs;

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fingerprints::Fingerprint;

pub use mcs::{mcs_ratio, McsResult, DEFAULT_MCS_BUDGET};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("fingerprint widths differ ({0} vs {1} bits)")]
    MismatchedParams(u32, u32),
    #[error("similarity threshold {0} outside (0, 1]")]
    InvalidThreshold(f64),
}

/// `|a ∧ b| / |a ∨ b|`. Two empty fingerprints score 0.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64, SimError> {
    if a.n_bits() != b.n_bits() {
        return Err(SimError::MismatchedParams(a.n_bits(), b.n_bits()));
    }
    Ok(tanimoto_unchecked(a, b))
}

#[inline]
pub(crate) fn tanimoto_unchecked(a: &Fingerprint, b: &Fingerprint) -> f64 {
    let common = a.intersection_count(b);
    tanimoto_from_counts(a.popcount(), b.popcount(), common)
}

#[inline]
pub(crate) fn tanimoto_from_counts(p: u32, q: u32, common: u32) -> f64 {
    let union = p + q - common;
    if union == 0 {
        0.0
    } else {
        common as f64 / union as f64
    }
}

/// A scored pair of positions into the searched slices. For cross search `a`
/// indexes the first set and `b` the second; for self search `a < b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityPair {
    pub a: usize,
    pub b: usize,
    pub tc: f64,
    pub mcs_ratio: Option<f64>,
}

fn check_inputs(threshold: f64, sets: &[&[&Fingerprint]]) -> Result<(), SimError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(SimError::InvalidThreshold(threshold));
    }
    let mut width = None;
    for fp in sets.iter().flat_map(|s| s.iter()) {
        match width {
            None => width = Some(fp.n_bits()),
            Some(w) if w != fp.n_bits() => {
                return Err(SimError::MismatchedParams(w, fp.n_bits()))
            }
            Some(_) => {}
        }
    }
    Ok(())
}

/// Popcount window `[lo, hi]` that can reach `threshold` against popcount `p`.
/// Widened by a small slack; the exact score decides membership.
fn popcount_window(p: u32, threshold: f64) -> (u32, u32) {
    let lo = (threshold * p as f64 - 1e-9).ceil().max(1.0) as u32;
    let hi = (p as f64 / threshold + 1e-9).floor().min(u32::MAX as f64) as u32;
    (lo, hi)
}

fn sort_pairs(pairs: &mut [SimilarityPair]) {
    pairs.sort_by(|x, y| {
        y.tc.partial_cmp(&x.tc)
            .unwrap_or(Ordering::Equal)
            .then(x.a.cmp(&y.a))
            .then(x.b.cmp(&y.b))
    });
}

/// All `(x ∈ A, y ∈ B)` with `tanimoto(x, y) ≥ threshold`.
pub fn find_cross_pairs(
    set_a: &[&Fingerprint],
    set_b: &[&Fingerprint],
    threshold: f64,
) -> Result<Vec<SimilarityPair>, SimError> {
    check_inputs(threshold, &[set_a, set_b])?;
    let mut by_count: Vec<(u32, usize)> = set_b
        .iter()
        .enumerate()
        .map(|(i, f)| (f.popcount(), i))
        .collect();
    by_count.sort_unstable();

    let mut pairs: Vec<SimilarityPair> = set_a
        .par_iter()
        .enumerate()
        .flat_map_iter(|(ia, fa)| {
            let p = fa.popcount();
            let (lo, hi) = popcount_window(p, threshold);
            let start = by_count.partition_point(|&(q, _)| q < lo);
            let end = by_count.partition_point(|&(q, _)| q <= hi);
            let slice = if p == 0 || start >= end {
                &by_count[0..0]
            } else {
                &by_count[start..end]
            };
            slice.iter().filter_map(move |&(q, ib)| {
                let common = fa.intersection_count(set_b[ib]);
                let tc = tanimoto_from_counts(p, q, common);
                (tc >= threshold).then_some(SimilarityPair {
                    a: ia,
                    b: ib,
                    tc,
                    mcs_ratio: None,
                })
            })
        })
        .collect();
    sort_pairs(&mut pairs);
    Ok(pairs)
}

/// All unordered pairs `a < b` within one set with `tanimoto ≥ threshold`.
pub fn find_self_pairs(
    set: &[&Fingerprint],
    threshold: f64,
) -> Result<Vec<SimilarityPair>, SimError> {
    check_inputs(threshold, &[set])?;
    let mut by_count: Vec<(u32, usize)> = set
        .iter()
        .enumerate()
        .map(|(i, f)| (f.popcount(), i))
        .collect();
    by_count.sort_unstable();

    let mut pairs: Vec<SimilarityPair> = (0..by_count.len())
        .into_par_iter()
        .flat_map_iter(|s| {
            let (p, i) = by_count[s];
            let (_, hi) = popcount_window(p, threshold);
            let end = if p == 0 {
                s + 1
            } else {
                by_count.partition_point(|&(q, _)| q <= hi)
            };
            let by_count = &by_count;
            (s + 1..end.max(s + 1)).filter_map(move |t| {
                let (q, j) = by_count[t];
                let common = set[i].intersection_count(set[j]);
                let tc = tanimoto_from_counts(p, q, common);
                (tc >= threshold).then(|| SimilarityPair {
                    a: i.min(j),
                    b: i.max(j),
                    tc,
                    mcs_ratio: None,
                })
            })
        })
        .collect();
    sort_pairs(&mut pairs);
    Ok(pairs)
}

/// Highest Tanimoto of `query` against `set`, or `None` when `set` is empty.
pub fn max_tanimoto(query: &Fingerprint, set: &[&Fingerprint]) -> Option<f64> {
    set.iter()
        .map(|f| tanimoto_unchecked(query, f))
        .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |m| m.max(x))))
}
