use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{Borrower, ExposureNetwork, Link};
use crate::projection::Projection;
use crate::scalar::Real;

use super::trial_rng;

/// Mean system DI after successive merges of isolated borrowers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapTrajectory<T> {
    pub observed: T,
    /// `mean[s]` averages the trials that reached step `s`; `mean[0]` is the
    /// observed value.
    pub mean: Vec<T>,
    pub std_err: Vec<T>,
    /// Number of trials that reached each step.
    pub trials_at_step: Vec<usize>,
    /// True when some trial ran out of eligible pairs before `steps`.
    pub truncated: bool,
}

/// Merges two isolated borrowers held by different lenders into one shared
/// borrower (id `"{a}+{b}"`, the riskier category of the two). The merged
/// borrower takes the position of `a`; `b` is removed.
pub fn merge_borrowers<T: Real>(net: &ExposureNetwork<T>, a: usize, b: usize) -> Result<ExposureNetwork<T>> {
    if a == b || net.degree(a) != 1 || net.degree(b) != 1 {
        return Err(Error::NoEligiblePair("merge needs two distinct isolated borrowers".into()));
    }
    let la = net.column(a).next().expect("degree 1").0;
    let lb = net.column(b).next().expect("degree 1").0;
    if la == lb {
        return Err(Error::NoEligiblePair("both borrowers belong to the same lender".into()));
    }
    let (ba, bb) = (&net.borrowers()[a], &net.borrowers()[b]);
    let merged = Borrower {
        id: format!("{}+{}", ba.id, bb.id),
        pd: match (ba.pd, bb.pd) {
            (Some(x), Some(y)) => Some(x.max(y)),
            (x, y) => x.or(y),
        },
        lgd: match (ba.lgd, bb.lgd) {
            (Some(x), Some(y)) => Some(x.max(y)),
            (x, y) => x.or(y),
        },
        risk_category: match (ba.risk_category, bb.risk_category) {
            (Some(x), Some(y)) => Some(x.max(y)),
            (x, y) => x.or(y),
        },
    };
    let remap = |k: usize| if k == b { a } else if k > b { k - 1 } else { k };
    let mut borrowers: Vec<Borrower<T>> = net.borrowers().to_vec();
    borrowers[a] = merged;
    borrowers.remove(b);
    let links: Vec<Link<T>> = net.links().into_iter().map(|l| Link { borrower: remap(l.borrower), ..l }).collect();
    ExposureNetwork::from_links(net.lenders().to_vec(), borrowers, links)
}

#[derive(Clone)]
struct Isolated<T> {
    lender: usize,
    weight: T,
}

/// Pool of isolated borrowers in one risk category.
#[derive(Clone)]
struct Pool<T> {
    members: Vec<Isolated<T>>,
    per_lender: BTreeMap<usize, u64>,
}

impl<T: Real> Pool<T> {
    fn eligible_pairs(&self) -> u64 {
        let c = self.members.len() as u64;
        let same: u64 = self.per_lender.values().map(|&x| x * x.saturating_sub(1) / 2).sum();
        c * c.saturating_sub(1) / 2 - same
    }

    fn take(&mut self, idx: usize) -> Isolated<T> {
        let item = self.members.swap_remove(idx);
        let e = self.per_lender.get_mut(&item.lender).expect("tracked");
        *e -= 1;
        item
    }
}

fn pools<T: Real>(net: &ExposureNetwork<T>) -> Result<Vec<Pool<T>>> {
    let mut by_cat: BTreeMap<u32, Pool<T>> = BTreeMap::new();
    for k in 0..net.n_borrowers() {
        if net.degree(k) != 1 {
            continue;
        }
        let b = &net.borrowers()[k];
        let c = b.risk_category.ok_or_else(|| Error::MissingCategory(b.id.clone()))?;
        let (lender, _, weight) = net.column(k).next().expect("degree 1");
        let pool = by_cat.entry(c).or_insert_with(|| Pool { members: Vec::new(), per_lender: BTreeMap::new() });
        pool.members.push(Isolated { lender, weight });
        *pool.per_lender.entry(lender).or_insert(0) += 1;
    }
    Ok(by_cat.into_values().collect())
}

fn run_trial<T: Real>(base: &Projection<T>, mut pools: Vec<Pool<T>>, steps: usize, seed: u64, trial: usize) -> Vec<T> {
    let mut rng = trial_rng(seed, trial);
    let mut proj = base.clone();
    let n = proj.n;
    let mut path = Vec::with_capacity(steps + 1);
    path.push(proj.dependency_sys());
    for _ in 0..steps {
        let counts: Vec<u64> = pools.iter().map(|p| p.eligible_pairs()).collect();
        let total: u64 = counts.iter().sum();
        if total == 0 {
            break;
        }
        let mut pick = rng.random_range(0..total);
        let mut cat = 0;
        while pick >= counts[cat] {
            pick -= counts[cat];
            cat += 1;
        }
        let pool = &mut pools[cat];
        let (x, y) = loop {
            let len = pool.members.len();
            let x = rng.random_range(0..len);
            let y = rng.random_range(0..len);
            if x != y && pool.members[x].lender != pool.members[y].lender {
                break (x.max(y), x.min(y));
            }
        };
        // remove the higher index first so the lower stays valid
        let a = pool.take(x);
        let b = pool.take(y);
        let total_w = a.weight + b.weight;
        let (i, j) = (a.lender, b.lender);
        proj.p[i * n + i] = proj.p[i * n + i] + a.weight * a.weight / total_w - a.weight;
        proj.p[j * n + j] = proj.p[j * n + j] + b.weight * b.weight / total_w - b.weight;
        let cross = a.weight * b.weight / total_w;
        proj.p[i * n + j] = proj.p[i * n + j] + cross;
        proj.p[j * n + i] = proj.p[j * n + i] + cross;
        path.push(proj.dependency_sys());
    }
    path
}

/// Repeatedly merges two same-category isolated borrowers of different
/// lenders into a shared borrower and tracks the mean system DI over
/// `trials` independent trajectories. Lender totals, HHI and risk composition
/// are untouched by construction: each lender keeps its multiset of weights.
pub fn grow_overlap<T: Real>(net: &ExposureNetwork<T>, steps: usize, trials: usize, seed: u64) -> Result<OverlapTrajectory<T>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let base = Projection::from_network(net);
    let observed = base.dependency_sys();
    let pools = pools(net)?;
    if steps > 0 && pools.iter().all(|p| p.eligible_pairs() == 0) {
        return Err(Error::NoEligiblePair(
            "no two isolated borrowers of different lenders share a risk category".into(),
        ));
    }
    let paths: Vec<Vec<T>> = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(&base, pools.clone(), steps, seed, t))
        .collect();

    let mut mean = Vec::with_capacity(steps + 1);
    let mut std_err = Vec::with_capacity(steps + 1);
    let mut trials_at_step = Vec::with_capacity(steps + 1);
    for s in 0..=steps {
        let vals: Vec<T> = paths.iter().filter_map(|p| p.get(s).copied()).collect();
        if vals.is_empty() {
            break;
        }
        let cnt = T::lit(vals.len() as f64);
        let mu = vals.iter().copied().sum::<T>() / cnt;
        let var = if vals.len() > 1 {
            vals.iter().map(|&v| (v - mu) * (v - mu)).sum::<T>() / (cnt - T::one())
        } else {
            T::zero()
        };
        mean.push(mu);
        std_err.push((var / cnt).sqrt());
        trials_at_step.push(vals.len());
    }
    let truncated = paths.iter().any(|p| p.len() < steps + 1);
    Ok(OverlapTrajectory { observed, mean, std_err, trials_at_step, truncated })
}
