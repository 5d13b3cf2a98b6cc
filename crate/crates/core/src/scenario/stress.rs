use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::ExposureNetwork;
use crate::projection::Projection;
use crate::scalar::Real;

/// Effect of scaling one borrower's risk-adjusted column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityRecord<T> {
    pub borrower_id: String,
    pub borrower: usize,
    pub in_overlap: bool,
    pub delta_di_sys: T,
    pub delta_hhi_sys: T,
}

/// Exposure-weighted mean of per-lender risk-adjusted HHI.
pub fn system_hhi<T: Real>(net: &ExposureNetwork<T>) -> T {
    let totals = net.weighted_row_totals();
    let sumsq: Vec<T> = (0..net.n_lenders()).map(|i| net.row(i).map(|(_, _, w)| w * w).sum()).collect();
    hhi_sys_from(&totals, &sumsq)
}

fn hhi_sys_from<T: Real>(totals: &[T], sumsq: &[T]) -> T {
    // sum_i T_i * (sumsq_i / T_i^2) / sum_i T_i
    let num: T = totals.iter().zip(sumsq).map(|(&t, &q)| q / t).sum();
    num / totals.iter().copied().sum()
}

/// For each borrower, multiplies its weighted column by `factor` and records
/// the change in system DI and system HHI. The input is not modified.
///
/// Only lenders exposed to the borrower change, so each borrower costs
/// `O(d * n)` on top of one projection of the base network.
pub fn borrower_stress<T: Real>(net: &ExposureNetwork<T>, factor: T) -> Result<Vec<SensitivityRecord<T>>> {
    if !(factor > T::zero() && factor.is_finite()) {
        return Err(Error::InvalidParameter("stress factor must be positive".into()));
    }
    let proj = Projection::from_network(net);
    let n = proj.n;
    let di = proj.dependencies();
    let totals = proj.totals.clone();
    let sumsq: Vec<T> = (0..n).map(|i| net.row(i).map(|(_, _, w)| w * w).sum()).collect();
    let total_sum: T = totals.iter().copied().sum();
    let td_sum: T = totals.iter().zip(&di).map(|(&t, &d)| t * d).sum();
    let hhi_num: T = totals.iter().zip(&sumsq).map(|(&t, &q)| q / t).sum();
    let di_sys = td_sum / total_sum;
    let hhi_sys = hhi_num / total_sum;

    let fm1 = factor - T::one();
    let mask = net.overlap_mask();
    let mut col: Vec<(usize, T)> = Vec::new();
    let mut scratch = vec![T::zero(); n];
    let mut out = Vec::with_capacity(net.n_borrowers());
    for k in 0..net.n_borrowers() {
        col.clear();
        col.extend(net.column(k).map(|(i, _, w)| (i, w)));
        let w_total: T = col.iter().map(|&(_, w)| w).sum();

        let mut td_new = td_sum;
        let mut hhi_new = hhi_num;
        let mut total_new = total_sum;
        for &(a, wa) in &col {
            // column a of P after the scaling
            for j in 0..n {
                scratch[j] = proj.get(j, a);
            }
            for &(b, wb) in &col {
                scratch[b] = scratch[b] + fm1 * wa * wb / w_total;
            }
            let diag = scratch[a];
            let s: T = scratch.iter().map(|&x| (x / diag) * (x / diag)).sum();
            let di_a = T::one() - s.recip();
            let t_a = totals[a] + fm1 * wa;
            let q_a = sumsq[a] + (factor * factor - T::one()) * wa * wa;
            td_new = td_new + (t_a * di_a - totals[a] * di[a]);
            hhi_new = hhi_new + (q_a / t_a - sumsq[a] / totals[a]);
            total_new = total_new + fm1 * wa;
        }
        out.push(SensitivityRecord {
            borrower_id: net.borrowers()[k].id.clone(),
            borrower: k,
            in_overlap: mask[k],
            delta_di_sys: td_new / total_new - di_sys,
            delta_hhi_sys: hhi_new / total_new - hhi_sys,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concentration::dependency_index_sys;
    use crate::projection::impact_matrix;

    fn scaled(net: &ExposureNetwork<f64>, k: usize, f: f64) -> ExposureNetwork<f64> {
        net.reweight(|l, _| Ok(if l.borrower == k { l.weighted * f } else { l.weighted })).unwrap()
    }

    fn di_sys(net: &ExposureNetwork<f64>) -> f64 {
        dependency_index_sys(net, &impact_matrix(net).unwrap()).unwrap()
    }

    #[test]
    fn matches_full_recomputation() {
        let net = ExposureNetwork::from_dense(&[
            vec![1.0, 2.0, 0.0, 0.5, 0.0],
            vec![0.0, 1.0, 3.0, 0.0, 0.0],
            vec![0.7, 0.0, 1.0, 0.0, 2.0],
        ])
        .unwrap();
        let recs = borrower_stress(&net, 5.0).unwrap();
        for r in &recs {
            let s = scaled(&net, r.borrower, 5.0);
            assert!((r.delta_di_sys - (di_sys(&s) - di_sys(&net))).abs() < 1e-13);
            assert!((r.delta_hhi_sys - (system_hhi(&s) - system_hhi(&net))).abs() < 1e-13);
        }
    }

    #[test]
    fn identity_factor() {
        let net = ExposureNetwork::from_dense(&[vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0]]).unwrap();
        for r in borrower_stress(&net, 1.0).unwrap() {
            assert_eq!(r.delta_di_sys, 0.0);
            assert_eq!(r.delta_hhi_sys, 0.0);
        }
    }

    #[test]
    fn single_lender_isolated_borrower() {
        let net = ExposureNetwork::from_dense(&[vec![1.0, 3.0]]).unwrap();
        let recs = borrower_stress(&net, 5.0).unwrap();
        assert_eq!(recs[0].delta_di_sys, 0.0);
        assert!(recs[0].delta_hhi_sys != 0.0);
    }

    #[test]
    fn isolated_borrower_can_raise_system_dependency() {
        // a small, highly dependent lender gains system weight when its
        // private exposure grows; the weight effect beats its own DI drop
        let net = ExposureNetwork::from_dense(&[vec![0.01, 1.0, 0.0], vec![0.0, 100.0, 1000.0]]).unwrap();
        let recs = borrower_stress(&net, 5.0).unwrap();
        assert!(!recs[0].in_overlap);
        assert!(recs[0].delta_di_sys > 0.0);
    }

    #[test]
    fn shared_borrower_raises_dependency() {
        let net = ExposureNetwork::from_dense(&[vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0]]).unwrap();
        let recs = borrower_stress(&net, 5.0).unwrap();
        assert!(recs[1].in_overlap);
        assert!(recs[1].delta_di_sys > 0.0);
        assert!(recs[0].delta_di_sys < 0.0);
        assert!(borrower_stress(&net, 0.0).is_err());
    }
}
