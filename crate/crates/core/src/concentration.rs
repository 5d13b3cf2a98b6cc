//! Concentration metrics: HHI, Dependency Index, overlap statistics.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::ExposureNetwork;
use crate::projection::{impact_matrix, weighted_mean, ImpactMatrix};
use crate::scalar::Real;

/// Herfindahl-Hirschman index `sum E_k^2 / (sum E_k)^2`.
pub fn hhi<T: Real>(exposures: &[T]) -> Result<T> {
    let total: T = exposures.iter().copied().sum();
    if total <= T::zero() {
        return Err(Error::InvalidParameter("hhi of an all-zero exposure vector".into()));
    }
    let sq: T = exposures.iter().map(|&e| e * e).sum();
    Ok(sq / (total * total))
}

/// `DI_i = 1 - [sum_j (s_ji / s_ii)^2]^-1`.
pub fn dependency_index<T: Real>(s: &ImpactMatrix<T>, i: usize) -> Result<T> {
    let diag = s.get(i, i);
    if !(diag > T::zero()) {
        return Err(Error::ZeroDiagonal(i));
    }
    let sum: T = (0..s.n())
        .map(|j| {
            let r = s.get(j, i) / diag;
            r * r
        })
        .sum();
    Ok(T::one() - sum.recip())
}

pub fn dependency_indices<T: Real>(s: &ImpactMatrix<T>) -> Result<Vec<T>> {
    (0..s.n()).map(|i| dependency_index(s, i)).collect()
}

/// System Dependency Index: per-lender DI weighted by total risk-adjusted
/// exposure.
pub fn dependency_index_sys<T: Real>(net: &ExposureNetwork<T>, s: &ImpactMatrix<T>) -> Result<T> {
    if s.n() != net.n_lenders() {
        return Err(Error::Dimension(format!(
            "impact matrix is {0}x{0}, network has {1} lenders",
            s.n(),
            net.n_lenders()
        )));
    }
    let di = dependency_indices(s)?;
    Ok(weighted_mean(&net.weighted_row_totals(), &di))
}

/// Shared-borrower statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapStats<T> {
    /// Indices of borrowers with two or more lenders.
    pub overlap: Vec<usize>,
    pub co_exposure_frac: Vec<T>,
    pub co_weight_frac: Vec<T>,
}

pub fn overlap_stats<T: Real>(net: &ExposureNetwork<T>) -> OverlapStats<T> {
    let mask = net.overlap_mask();
    let mut co_e = Vec::with_capacity(net.n_lenders());
    let mut co_w = Vec::with_capacity(net.n_lenders());
    for i in 0..net.n_lenders() {
        let (mut e, mut w, mut te, mut tw) = (T::zero(), T::zero(), T::zero(), T::zero());
        for (k, raw, weighted) in net.row(i) {
            te = te + raw;
            tw = tw + weighted;
            if mask[k] {
                e = e + raw;
                w = w + weighted;
            }
        }
        co_e.push(e / te);
        co_w.push(w / tw);
    }
    OverlapStats {
        overlap: (0..net.n_borrowers()).filter(|&k| mask[k]).collect(),
        co_exposure_frac: co_e,
        co_weight_frac: co_w,
    }
}

/// Fraction of risk-adjusted exposure per risk category, for each lender and
/// for the overlap set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskComposition<T> {
    pub categories: Vec<u32>,
    /// `lenders[i][c]` is lender `i`'s fraction in `categories[c]`.
    pub lenders: Vec<Vec<T>>,
    /// Same for the overlap, `None` when no borrower is shared.
    pub overlap: Option<Vec<T>>,
}

pub fn overlap_risk_composition<T: Real>(net: &ExposureNetwork<T>) -> Result<RiskComposition<T>> {
    let mut cats = BTreeMap::new();
    for b in net.borrowers() {
        let c = b.risk_category.ok_or_else(|| Error::MissingCategory(b.id.clone()))?;
        cats.insert(c, 0usize);
    }
    for (pos, v) in cats.values_mut().enumerate() {
        *v = pos;
    }
    let nc = cats.len();
    let cat_of = |k: usize| cats[&net.borrowers()[k].risk_category.expect("checked")];
    let mask = net.overlap_mask();
    let mut per_lender = vec![vec![T::zero(); nc]; net.n_lenders()];
    let mut overlap = vec![T::zero(); nc];
    for (i, row) in per_lender.iter_mut().enumerate() {
        for (k, _, w) in net.row(i) {
            let c = cat_of(k);
            row[c] = row[c] + w;
            if mask[k] {
                overlap[c] = overlap[c] + w;
            }
        }
    }
    let normalise = |v: &mut Vec<T>| {
        let t: T = v.iter().copied().sum();
        for x in v.iter_mut() {
            *x = *x / t;
        }
    };
    per_lender.iter_mut().for_each(normalise);
    let overlap = if mask.iter().any(|&m| m) {
        normalise(&mut overlap);
        Some(overlap)
    } else {
        None
    };
    Ok(RiskComposition { categories: cats.into_keys().collect(), lenders: per_lender, overlap })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LenderConcentration<T> {
    pub lender: String,
    pub hhi_raw: T,
    pub hhi_weighted: T,
    pub di: T,
    pub co_exposure_frac: T,
    pub co_weight_frac: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationReport<T> {
    pub per_lender: Vec<LenderConcentration<T>>,
    pub di_sys: T,
}

impl<T: Real> ConcentrationReport<T> {
    pub fn from_network(net: &ExposureNetwork<T>) -> Result<(Self, ImpactMatrix<T>)> {
        let s = impact_matrix(net)?;
        let di = dependency_indices(&s)?;
        let stats = overlap_stats(net);
        let mut per_lender = Vec::with_capacity(net.n_lenders());
        for i in 0..net.n_lenders() {
            let (raw, weighted): (Vec<T>, Vec<T>) = net.row(i).map(|(_, r, w)| (r, w)).unzip();
            per_lender.push(LenderConcentration {
                lender: net.lenders()[i].id.clone(),
                hhi_raw: hhi(&raw)?,
                hhi_weighted: hhi(&weighted)?,
                di: di[i],
                co_exposure_frac: stats.co_exposure_frac[i],
                co_weight_frac: stats.co_weight_frac[i],
            });
        }
        let di_sys = weighted_mean(&net.weighted_row_totals(), &di);
        Ok((ConcentrationReport { per_lender, di_sys }, s))
    }

    /// Lender statistics table: `Lender,HHI,DI,Co-exposures %,Co-weights %`
    /// where HHI is the risk-adjusted index.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["Lender", "HHI", "DI", "Co-exposures %", "Co-weights %"])?;
        let hundred = T::lit(100.0);
        for l in &self.per_lender {
            w.write_record([
                l.lender.clone(),
                l.hhi_weighted.to_string(),
                l.di.to_string(),
                (l.co_exposure_frac * hundred).to_string(),
                (l.co_weight_frac * hundred).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
