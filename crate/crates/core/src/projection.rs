//! One-mode projections of the exposure network.
//!
//! The lender projection is the impact matrix
//!
//! ```text
//! s_ij = sum_l w_il w_jl / (W_l T_j)
//! ```
//!
//! with `W_l` the total weight on borrower `l` and `T_j` the total weight of
//! lender `j`. Internally we keep the symmetric unnormalised part
//! `P_ij = sum_l w_il w_jl / W_l` and the totals, since `s_ij = P_ij / T_j`
//! and the Dependency Index only needs ratios within a column of `P`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::ExposureNetwork;
use crate::scalar::Real;

/// Columns per parallel work unit. Chunk partials are reduced in chunk order,
/// so results do not depend on the number of threads.
const COLUMN_CHUNK: usize = 4096;

/// Relative tolerance used to decide whether `s_ij` and `s_ji` differ.
pub const ASYMMETRY_TOLERANCE: f64 = 1e-9;

/// Dense lender-to-lender impact matrix, row = impacting lender.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImpactMatrix<T> {
    pub lender_ids: Vec<String>,
    n: usize,
    s: Vec<T>,
}

impl<T: Real> ImpactMatrix<T> {
    /// Wraps a dense row-major matrix, checking shape and column sums.
    pub fn from_rows(lender_ids: Vec<String>, rows: &[Vec<T>]) -> Result<Self> {
        let n = lender_ids.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("impact matrix must be n x n".into()));
        }
        let s = rows.iter().flatten().copied().collect();
        Ok(ImpactMatrix { lender_ids, n, s })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Impact of lender `i` on lender `j`.
    pub fn get(&self, i: usize, j: usize) -> T {
        self.s[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.s[i * self.n..(i + 1) * self.n]
    }

    pub fn column_sum(&self, j: usize) -> T {
        (0..self.n).map(|i| self.get(i, j)).sum()
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// CSV with a header of lender ids; row `i` lists `s_i1 .. s_in`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["lender".to_string()];
        header.extend(self.lender_ids.iter().cloned());
        w.write_record(&header)?;
        for i in 0..self.n {
            let mut rec = vec![self.lender_ids[i].clone()];
            rec.extend(self.row(i).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// `{ impacting: { impacted: s } }`, preserving lender order.
    pub fn to_json(&self) -> serde_json::Value {
        let mut outer = serde_json::Map::new();
        for i in 0..self.n {
            let mut inner = serde_json::Map::new();
            for j in 0..self.n {
                inner.insert(self.lender_ids[j].clone(), serde_json::json!(self.get(i, j)));
            }
            outer.insert(self.lender_ids[i].clone(), serde_json::Value::Object(inner));
        }
        serde_json::Value::Object(outer)
    }
}

/// Unnormalised symmetric projection `P` plus weighted lender totals.
#[derive(Debug, Clone)]
pub(crate) struct Projection<T> {
    pub n: usize,
    pub p: Vec<T>,
    pub totals: Vec<T>,
}

impl<T: Real> Projection<T> {
    pub fn from_network(net: &ExposureNetwork<T>) -> Self {
        let n = net.n_lenders();
        let m = net.n_borrowers();
        let chunks: Vec<(usize, usize)> =
            (0..m).step_by(COLUMN_CHUNK).map(|s| (s, (s + COLUMN_CHUNK).min(m))).collect();
        let partials: Vec<Vec<T>> = chunks
            .par_iter()
            .map(|&(start, end)| {
                let mut p = vec![T::zero(); n * n];
                let mut col: Vec<(usize, T)> = Vec::new();
                for k in start..end {
                    col.clear();
                    col.extend(net.column(k).map(|(i, _, w)| (i, w)));
                    accumulate_column(&mut p, n, &col, T::one());
                }
                p
            })
            .collect();
        let mut p = vec![T::zero(); n * n];
        for part in partials {
            for (acc, v) in p.iter_mut().zip(part) {
                *acc = *acc + v;
            }
        }
        Projection { n, p, totals: net.weighted_row_totals() }
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.p[i * self.n + j]
    }

    pub fn impact(&self, lender_ids: Vec<String>) -> ImpactMatrix<T> {
        let n = self.n;
        let mut s = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                s[i * n + j] = self.p[i * n + j] / self.totals[j];
            }
        }
        ImpactMatrix { lender_ids, n, s }
    }

    /// `DI_i = 1 - P_ii^2 / sum_j P_ji^2`, identical to the definition on `S`
    /// because `T_i` cancels within column `i`.
    pub fn dependency(&self, i: usize) -> T {
        let diag = self.get(i, i);
        let sum: T = (0..self.n).map(|j| {
            let r = self.get(j, i) / diag;
            r * r
        }).sum();
        T::one() - sum.recip()
    }

    pub fn dependencies(&self) -> Vec<T> {
        (0..self.n).map(|i| self.dependency(i)).collect()
    }

    pub fn dependency_sys(&self) -> T {
        weighted_mean(&self.totals, &self.dependencies())
    }
}

/// Adds `scale * w_a w_b / W` for every ordered pair of links in a column.
pub(crate) fn accumulate_column<T: Real>(p: &mut [T], n: usize, col: &[(usize, T)], scale: T) {
    let total: T = col.iter().map(|&(_, w)| w).sum();
    for &(a, wa) in col {
        let f = scale * wa / total;
        for &(b, wb) in col {
            p[a * n + b] = p[a * n + b] + f * wb;
        }
    }
}

pub(crate) fn weighted_mean<T: Real>(weights: &[T], values: &[T]) -> T {
    let total: T = weights.iter().copied().sum();
    let acc: T = weights.iter().zip(values).map(|(&w, &v)| w * v).sum();
    acc / total
}

/// Impact matrix of a valid network, via sparse column iteration.
pub fn impact_matrix<T: Real>(net: &ExposureNetwork<T>) -> Result<ImpactMatrix<T>> {
    let proj = Projection::from_network(net);
    let ids = net.lenders().iter().map(|l| l.id.clone()).collect();
    Ok(proj.impact(ids))
}

/// Lender pairs `(i, j)`, `i < j`, whose mutual impacts differ by more than
/// [`ASYMMETRY_TOLERANCE`] relative.
pub fn asymmetry_check<T: Real>(net: &ExposureNetwork<T>) -> Result<Vec<(usize, usize)>> {
    let s = impact_matrix(net)?;
    let tol = T::lit(ASYMMETRY_TOLERANCE);
    let mut pairs = Vec::new();
    for i in 0..s.n() {
        for j in (i + 1)..s.n() {
            let (a, b) = (s.get(i, j), s.get(j, i));
            let scale = a.abs().max(b.abs());
            if (a - b).abs() > tol * scale {
                pairs.push((i, j));
            }
        }
    }
    Ok(pairs)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BorrowerEdge<T> {
    pub from: String,
    pub to: String,
    pub weight: T,
}

/// Projection onto the largest borrowers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BorrowerGraph<T> {
    /// Selected borrowers, by decreasing total weighted exposure.
    pub borrower_ids: Vec<String>,
    pub total_weight: Vec<T>,
    pub edges: Vec<BorrowerEdge<T>>,
}

impl<T: Real> BorrowerGraph<T> {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["from", "to", "weight"])?;
        for e in &self.edges {
            w.write_record([e.from.clone(), e.to.clone(), e.weight.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Borrower-side analogue of the impact matrix, with the roles of lenders and
/// borrowers swapped: `b_kl = sum_i w_ik w_il / (T_i W_l)`, restricted to the
/// `top_k` borrowers by total weighted exposure. Normalisations use totals over
/// the full network. Only off-diagonal nonzero edges are returned.
pub fn borrower_projection<T: Real>(net: &ExposureNetwork<T>, top_k: usize) -> Result<BorrowerGraph<T>> {
    if top_k == 0 {
        return Err(Error::InvalidParameter("top_k must be positive".into()));
    }
    let m = net.n_borrowers();
    if top_k > m {
        return Err(Error::InvalidParameter(format!("top_k {top_k} exceeds {m} borrowers")));
    }
    let col_totals = net.weighted_column_totals();
    let row_totals = net.weighted_row_totals();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| col_totals[b].partial_cmp(&col_totals[a]).expect("finite").then(a.cmp(&b)));
    order.truncate(top_k);
    let mut local = vec![usize::MAX; m];
    for (pos, &k) in order.iter().enumerate() {
        local[k] = pos;
    }

    let mut acc: BTreeMap<(usize, usize), T> = BTreeMap::new();
    let mut picked: Vec<(usize, T)> = Vec::new();
    for i in 0..net.n_lenders() {
        picked.clear();
        picked.extend(net.row(i).filter(|&(k, _, _)| local[k] != usize::MAX).map(|(k, _, w)| (k, w)));
        for &(k, wk) in &picked {
            for &(l, wl) in &picked {
                if k != l {
                    let e = acc.entry((local[k], local[l])).or_insert(T::zero());
                    *e = *e + wk * wl / (row_totals[i] * col_totals[l]);
                }
            }
        }
    }
    let ids: Vec<String> = order.iter().map(|&k| net.borrowers()[k].id.clone()).collect();
    let edges = acc
        .into_iter()
        .filter(|(_, w)| *w > T::zero())
        .map(|((a, b), weight)| BorrowerEdge { from: ids[a].clone(), to: ids[b].clone(), weight })
        .collect();
    Ok(BorrowerGraph {
        total_weight: order.iter().map(|&k| col_totals[k]).collect(),
        borrower_ids: ids,
        edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn building_block() -> ExposureNetwork<f64> {
        ExposureNetwork::from_dense(&[vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0]]).unwrap()
    }

    /// Dense triple loop, straight from the definition.
    fn dense_oracle(w: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = w.len();
        let m = w[0].len();
        let mut s = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let tj: f64 = w[j].iter().sum();
                for l in 0..m {
                    let wl: f64 = (0..n).map(|p| w[p][l]).sum();
                    if wl > 0.0 {
                        s[i][j] += w[i][l] * w[j][l] / (wl * tj);
                    }
                }
            }
        }
        s
    }

    #[test]
    fn building_block_matrix() {
        let s = impact_matrix(&building_block()).unwrap();
        let expect = [[0.75, 0.25], [0.25, 0.75]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((s.get(i, j) - expect[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_lender_is_identity() {
        let net = ExposureNetwork::from_dense(&[vec![3.0, 1.0]]).unwrap();
        let s = impact_matrix(&net).unwrap();
        assert!((s.get(0, 0) - 1.0f64).abs() < 1e-15);
    }

    #[test]
    fn asymmetry_examples() {
        assert!(asymmetry_check(&building_block()).unwrap().is_empty());
        let net = ExposureNetwork::from_dense(&[vec![2.0, 2.0, 0.0], vec![0.0, 1.0, 1.0]]).unwrap();
        assert_eq!(asymmetry_check(&net).unwrap(), vec![(0, 1)]);
        let one = ExposureNetwork::from_dense(&[vec![2.0]]).unwrap();
        assert!(asymmetry_check(&one).unwrap().is_empty());
    }

    #[test]
    fn sparse_matches_dense_oracle() {
        let w = vec![
            vec![1.0, 0.5, 0.0, 2.0, 0.0],
            vec![0.0, 3.0, 1.0, 0.0, 0.0],
            vec![0.2, 0.0, 4.0, 1.0, 7.0],
        ];
        let net = ExposureNetwork::from_dense(&w).unwrap();
        let s = impact_matrix(&net).unwrap();
        let o = dense_oracle(&w);
        for i in 0..3 {
            for j in 0..3 {
                assert!((s.get(i, j) - o[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn borrower_projection_examples() {
        // borrowers 1 and 3 share no lender; 1 and 2 share lender A
        let g = borrower_projection(&building_block(), 3).unwrap();
        assert_eq!(g.borrower_ids.len(), 3);
        let weight = |a: &str, b: &str| {
            g.edges.iter().find(|e| e.from == a && e.to == b).map(|e| e.weight).unwrap_or(0.0)
        };
        assert_eq!(weight("1", "3"), 0.0);
        assert!(weight("1", "2") > 0.0);
        // transpose analogue: b_12 = w_A1 w_A2 / (T_A W_2) = 1 / (2 * 2)
        assert!((weight("1", "2") - 0.25).abs() < 1e-15);
        assert!(borrower_projection(&building_block(), 0).is_err());
        assert!(borrower_projection(&building_block(), 4).is_err());

        let single = ExposureNetwork::from_dense(&[vec![1.0, 2.0]]).unwrap();
        let g = borrower_projection(&single, 2).unwrap();
        assert!(g.edges.iter().all(|e| e.weight > 0.0));
        assert_eq!(g.edges.len(), 2);
    }

    #[test]
    fn impact_outputs() {
        let s = impact_matrix(&building_block()).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("lender,A,B\nA,0.75,0.25\n"));
        let json = s.to_json();
        assert_eq!(json["A"]["B"], serde_json::json!(0.25));
    }
}
