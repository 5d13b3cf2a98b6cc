use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{ExposureNetwork, StepWeightParams};
use crate::projection::Projection;
use crate::scalar::Real;

/// Change in per-lender DI after moving borrowers to a riskier category.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DowngradeReport<T> {
    pub lender_ids: Vec<String>,
    pub borrower_ids: Vec<String>,
    pub new_category: u32,
    pub base_di: Vec<T>,
    /// `singles[b][i]`: DI change of lender `i` when only borrower `b` moves.
    pub singles: Vec<Vec<T>>,
    /// DI change when all borrowers move together.
    pub joint: Vec<T>,
    pub joint_di_sys: T,
    /// `joint - sum(singles)` per lender; present for two or more borrowers.
    pub convexity: Option<Vec<T>>,
    /// Convexity as a percentage of `sum(singles)`; `None` where that sum is 0.
    pub convexity_pct: Option<Vec<Option<T>>>,
}

fn dependencies_after<T: Real>(
    net: &ExposureNetwork<T>,
    moved: &[usize],
    new_category: u32,
    weights: &StepWeightParams<T>,
) -> Result<(Vec<T>, T)> {
    let mut borrowers = net.borrowers().to_vec();
    for &k in moved {
        borrowers[k].risk_category = Some(new_category);
    }
    let reweighted = net.with_borrowers(borrowers)?.apply_step_weights(weights)?;
    let proj = Projection::from_network(&reweighted);
    Ok((proj.dependencies(), proj.dependency_sys()))
}

/// Downgrades each listed borrower alone and then all together, reweighting
/// with the step function. Reports per-lender DI changes and, for two or more
/// borrowers, the excess of the joint change over the sum of single changes.
pub fn downgrade<T: Real>(
    net: &ExposureNetwork<T>,
    borrower_ids: &[&str],
    new_category: u32,
    weights: &StepWeightParams<T>,
) -> Result<DowngradeReport<T>> {
    if borrower_ids.is_empty() {
        return Err(Error::InvalidParameter("no borrowers to downgrade".into()));
    }
    let mut idx = Vec::with_capacity(borrower_ids.len());
    for &id in borrower_ids {
        let k = net.borrower_index(id).ok_or_else(|| Error::UnknownBorrower(id.to_string()))?;
        let current = net.borrowers()[k].risk_category.ok_or_else(|| Error::MissingCategory(id.to_string()))?;
        if new_category < current {
            return Err(Error::SaferDowngrade { id: id.to_string(), from: current, to: new_category });
        }
        idx.push(k);
    }
    let (base_di, _) = dependencies_after(net, &[], new_category, weights)?;
    let delta = |after: Vec<T>| -> Vec<T> { after.iter().zip(&base_di).map(|(&a, &b)| a - b).collect() };

    let mut singles = Vec::with_capacity(idx.len());
    for &k in &idx {
        let (after, _) = dependencies_after(net, &[k], new_category, weights)?;
        singles.push(delta(after));
    }
    let (joint_after, joint_di_sys) = dependencies_after(net, &idx, new_category, weights)?;
    let joint = delta(joint_after);

    let (convexity, convexity_pct) = if idx.len() >= 2 {
        let n = net.n_lenders();
        let sums: Vec<T> = (0..n).map(|i| singles.iter().map(|s| s[i]).sum()).collect();
        let diff: Vec<T> = joint.iter().zip(&sums).map(|(&j, &s)| j - s).collect();
        let pct = diff
            .iter()
            .zip(&sums)
            .map(|(&d, &s)| if s != T::zero() { Some(d / s * T::lit(100.0)) } else { None })
            .collect();
        (Some(diff), Some(pct))
    } else {
        (None, None)
    };

    Ok(DowngradeReport {
        lender_ids: net.lenders().iter().map(|l| l.id.clone()).collect(),
        borrower_ids: borrower_ids.iter().map(|s| s.to_string()).collect(),
        new_category,
        base_di,
        singles,
        joint,
        joint_di_sys,
        convexity,
        convexity_pct,
    })
}
