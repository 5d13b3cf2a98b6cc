use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::ExposureNetwork;
use crate::projection::Projection;
use crate::scalar::{canonical_sum, Real};

use super::trial_rng;

/// Portfolio properties that randomisation and rewiring must leave intact.
/// Sums are taken in sorted order so the fingerprint depends only on the
/// multiset of link values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LenderFingerprint<T> {
    pub total_raw: T,
    pub total_weighted: T,
    pub hhi_weighted: T,
    /// Risk-adjusted exposure per category.
    pub composition: BTreeMap<u32, T>,
}

impl<T: Real> LenderFingerprint<T> {
    pub fn of(net: &ExposureNetwork<T>) -> Vec<Self> {
        (0..net.n_lenders())
            .map(|i| {
                let mut raw: Vec<T> = net.row(i).map(|(_, r, _)| r).collect();
                let mut w: Vec<T> = net.row(i).map(|(_, _, w)| w).collect();
                let mut sq: Vec<T> = w.iter().map(|&x| x * x).collect();
                let mut per_cat: BTreeMap<u32, Vec<T>> = BTreeMap::new();
                for (k, _, wk) in net.row(i) {
                    let c = net.borrowers()[k].risk_category.unwrap_or(0);
                    per_cat.entry(c).or_default().push(wk);
                }
                let total_weighted = canonical_sum(&mut w);
                LenderFingerprint {
                    total_raw: canonical_sum(&mut raw),
                    total_weighted,
                    hhi_weighted: canonical_sum(&mut sq) / (total_weighted * total_weighted),
                    composition: per_cat.into_iter().map(|(c, mut v)| (c, canonical_sum(&mut v))).collect(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Equal-width bins spanning the samples and `observed`.
    pub fn new(samples: &[f64], observed: f64, bins: usize) -> Self {
        let bins = bins.max(1);
        let lo = samples.iter().copied().fold(observed, f64::min);
        let hi = samples.iter().copied().fold(observed, f64::max);
        let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
        let edges: Vec<f64> = (0..=bins).map(|b| lo + width * b as f64).collect();
        let mut counts = vec![0usize; bins];
        for &s in samples {
            let b = (((s - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        Histogram { edges, counts }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomizationResult<T> {
    pub observed: T,
    pub samples: Vec<T>,
    /// `(#{samples >= observed} + 1) / (N + 1)`.
    pub p_value: f64,
    pub seed: u64,
    /// Number of (lender, category) groups with at least two links.
    pub permutable_groups: usize,
}

impl<T: Real> RandomizationResult<T> {
    pub fn histogram(&self, bins: usize) -> Histogram {
        let s: Vec<f64> = self.samples.iter().map(|x| x.as_f64()).collect();
        Histogram::new(&s, self.observed.as_f64(), bins)
    }
}

fn permutable_groups<T: Real>(net: &ExposureNetwork<T>) -> Result<Vec<Vec<usize>>> {
    for b in net.borrowers() {
        if b.risk_category.is_none() {
            return Err(Error::MissingCategory(b.id.clone()));
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..net.n_lenders() {
        let mut by_cat: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for pos in net.row_range(i) {
            let c = net.borrowers()[net.link_borrower(pos)].risk_category.expect("checked");
            by_cat.entry(c).or_default().push(pos);
        }
        groups.extend(by_cat.into_values().filter(|g| g.len() >= 2));
    }
    Ok(groups)
}

fn shuffled<T: Real>(net: &ExposureNetwork<T>, groups: &[Vec<usize>], seed: u64, trial: usize) -> ExposureNetwork<T> {
    let mut rng = trial_rng(seed, trial);
    let mut raw = net.raw_values().to_vec();
    let mut weighted = net.weighted_values().to_vec();
    let mut perm: Vec<usize> = Vec::new();
    for g in groups {
        perm.clear();
        perm.extend_from_slice(g);
        perm.shuffle(&mut rng);
        for (&dst, &src) in g.iter().zip(&perm) {
            raw[dst] = net.raw_values()[src];
            weighted[dst] = net.weighted_values()[src];
        }
    }
    net.with_values(raw, weighted)
}

/// The network drawn in trial `trial` of [`randomize_within_risk`] with the
/// same seed.
pub fn randomized_network<T: Real>(net: &ExposureNetwork<T>, seed: u64, trial: usize) -> Result<ExposureNetwork<T>> {
    let groups = permutable_groups(net)?;
    Ok(shuffled(net, &groups, seed, trial))
}

/// Null model for the overlap: every lender independently reassigns its
/// exposures among its own borrowers of the same risk category. The sparsity
/// pattern (hence the overlap set), each lender's per-category multiset of
/// `(raw, weighted)` values, its HHI and its totals are unchanged; only which
/// amount sits on a shared borrower moves. Groups with fewer than two links
/// are left alone.
///
/// Every trial is checked against the input's [`LenderFingerprint`].
pub fn randomize_within_risk<T: Real>(net: &ExposureNetwork<T>, trials: usize, seed: u64) -> Result<RandomizationResult<T>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let groups = permutable_groups(net)?;
    let base = LenderFingerprint::of(net);
    let observed = Projection::from_network(net).dependency_sys();
    let overlap_count = net.overlap_mask().iter().filter(|&&x| x).count();

    let samples: Vec<T> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let trial = shuffled(net, &groups, seed, t);
            if LenderFingerprint::of(&trial) != base {
                return Err(Error::Conservation { trial: t, what: "lender fingerprint changed".into() });
            }
            if trial.overlap_mask().iter().filter(|&&x| x).count() != overlap_count {
                return Err(Error::Conservation { trial: t, what: "overlap count changed".into() });
            }
            Ok(Projection::from_network(&trial).dependency_sys())
        })
        .collect::<Result<_>>()?;

    let exceed = samples.iter().filter(|&&s| s >= observed).count();
    Ok(RandomizationResult {
        observed,
        p_value: (exceed + 1) as f64 / (trials + 1) as f64,
        samples,
        seed,
        permutable_groups: groups.len(),
    })
}
