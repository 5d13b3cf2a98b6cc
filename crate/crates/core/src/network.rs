//! The bipartite lender/borrower exposure network.
//!
//! Exposures are stored twice: row-major by lender (the primary storage) and
//! as a column index by borrower, so both portfolio and per-borrower scans are
//! linear in the number of links.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Lender {
    pub id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Borrower<T> {
    pub id: String,
    /// Probability of default.
    pub pd: Option<T>,
    /// Expected loss given default.
    pub lgd: Option<T>,
    /// Discrete risk class, 1 is the safest.
    pub risk_category: Option<u32>,
}

impl<T: Real> Borrower<T> {
    pub fn with_category(id: impl Into<String>, category: u32) -> Self {
        Borrower { id: id.into(), pd: None, lgd: None, risk_category: Some(category) }
    }

    pub fn with_pd(id: impl Into<String>, pd: T, lgd: Option<T>) -> Self {
        Borrower { id: id.into(), pd: Some(pd), lgd, risk_category: None }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let unit = |x: Option<T>| x.is_none_or(|v| v >= T::zero() && v <= T::one());
        if !unit(self.pd) {
            return Err(Error::InvalidParameter(format!("pd of `{}` outside [0,1]", self.id)));
        }
        if !unit(self.lgd) {
            return Err(Error::InvalidParameter(format!("lgd of `{}` outside [0,1]", self.id)));
        }
        if self.risk_category == Some(0) {
            return Err(Error::InvalidParameter(format!(
                "risk_category of `{}` must be >= 1",
                self.id
            )));
        }
        Ok(())
    }
}

/// One lender-borrower exposure, addressed by positional indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link<T> {
    pub lender: usize,
    pub borrower: usize,
    pub raw: T,
    pub weighted: T,
}

/// Step risk weight `f(r) = a + b * [r > r0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepWeightParams<T> {
    pub a: T,
    pub b: T,
    pub r0: T,
}

impl<T: Real> Default for StepWeightParams<T> {
    fn default() -> Self {
        StepWeightParams { a: T::lit(0.2), b: T::one(), r0: T::lit(1.5) }
    }
}

impl<T: Real> StepWeightParams<T> {
    pub fn new(a: T, b: T, r0: T) -> Result<Self> {
        let p = StepWeightParams { a, b, r0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a >= T::zero() && self.b >= T::zero() && self.a + self.b > T::zero()) {
            return Err(Error::InvalidParameter(
                "step weights need a, b >= 0 and a + b > 0".into(),
            ));
        }
        Ok(())
    }

    /// Weight for a risk category. The boundary `r == r0` counts as safe.
    pub fn weight(&self, category: u32) -> T {
        let r = T::lit(category as f64);
        if r > self.r0 {
            self.a + self.b
        } else {
            self.a
        }
    }
}

/// Sparse `n x m` matrix of raw and risk-adjusted exposures with borrower
/// attributes. Immutable once built; transformations return new networks.
#[derive(Debug, Clone)]
pub struct ExposureNetwork<T> {
    lenders: Vec<Lender>,
    borrowers: Vec<Borrower<T>>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    raw: Vec<T>,
    weighted: Vec<T>,
    col_ptr: Vec<usize>,
    col_links: Vec<usize>,
}

impl<T: Real> ExposureNetwork<T> {
    /// Builds a network from positional links. Duplicate `(lender, borrower)`
    /// links are summed.
    pub fn from_links(
        lenders: Vec<Lender>,
        borrowers: Vec<Borrower<T>>,
        mut links: Vec<Link<T>>,
    ) -> Result<Self> {
        let n = lenders.len();
        let m = borrowers.len();
        if n == 0 || m == 0 || links.is_empty() {
            return Err(Error::Empty);
        }
        let mut seen = std::collections::HashSet::with_capacity(n);
        for l in &lenders {
            if !seen.insert(l.id.as_str()) {
                return Err(Error::DuplicateLender(l.id.clone()));
            }
        }
        let mut seen = std::collections::HashSet::with_capacity(m);
        for b in &borrowers {
            if !seen.insert(b.id.as_str()) {
                return Err(Error::InvalidParameter(format!("duplicate borrower id `{}`", b.id)));
            }
            b.validate()?;
        }
        for link in &links {
            if link.lender >= n || link.borrower >= m {
                return Err(Error::Dimension(format!(
                    "link ({}, {}) outside {n} x {m}",
                    link.lender, link.borrower
                )));
            }
            if !(link.raw.is_finite() && link.weighted.is_finite()) {
                return Err(Error::InvalidParameter("non-finite exposure".into()));
            }
            if link.raw < T::zero() || link.weighted < T::zero() {
                return Err(Error::NegativeExposure { row: 0, value: link.raw.min(link.weighted).as_f64() });
            }
        }
        links.sort_by_key(|l| (l.lender, l.borrower));
        let mut merged: Vec<Link<T>> = Vec::with_capacity(links.len());
        for link in links {
            match merged.last_mut() {
                Some(last) if last.lender == link.lender && last.borrower == link.borrower => {
                    last.raw = last.raw + link.raw;
                    last.weighted = last.weighted + link.weighted;
                }
                _ => merged.push(link),
            }
        }
        for link in &merged {
            if link.raw == T::zero() {
                return Err(Error::InvalidParameter(format!(
                    "zero exposure link ({}, {})",
                    lenders[link.lender].id, borrowers[link.borrower].id
                )));
            }
            if link.weighted == T::zero() {
                return Err(Error::ZeroWeightColumn(borrowers[link.borrower].id.clone()));
            }
        }

        let mut row_ptr = vec![0usize; n + 1];
        let mut col_count = vec![0usize; m];
        for link in &merged {
            row_ptr[link.lender + 1] += 1;
            col_count[link.borrower] += 1;
        }
        for i in 0..n {
            if row_ptr[i + 1] == 0 {
                return Err(Error::EmptyLender(lenders[i].id.clone()));
            }
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut col_ptr = vec![0usize; m + 1];
        for k in 0..m {
            if col_count[k] == 0 {
                return Err(Error::InvalidParameter(format!(
                    "borrower `{}` has no exposures",
                    borrowers[k].id
                )));
            }
            col_ptr[k + 1] = col_ptr[k] + col_count[k];
        }
        let mut fill = col_ptr.clone();
        let mut col_links = vec![0usize; merged.len()];
        for (idx, link) in merged.iter().enumerate() {
            col_links[fill[link.borrower]] = idx;
            fill[link.borrower] += 1;
        }

        Ok(ExposureNetwork {
            lenders,
            borrowers,
            row_ptr,
            cols: merged.iter().map(|l| l.borrower).collect(),
            raw: merged.iter().map(|l| l.raw).collect(),
            weighted: merged.iter().map(|l| l.weighted).collect(),
            col_ptr,
            col_links,
        })
    }

    /// Convenience constructor from a dense weight matrix (rows = lenders).
    /// Zero entries are absent links; raw exposures equal the weights.
    pub fn from_dense(weights: &[Vec<T>]) -> Result<Self> {
        let n = weights.len();
        let m = weights.first().map_or(0, |r| r.len());
        let lenders = (0..n).map(|i| Lender { id: lender_label(i) }).collect();
        let borrowers = (0..m).map(|k| Borrower::with_category((k + 1).to_string(), 1)).collect();
        let mut links = Vec::new();
        for (i, row) in weights.iter().enumerate() {
            if row.len() != m {
                return Err(Error::Dimension("ragged weight matrix".into()));
            }
            for (k, &w) in row.iter().enumerate() {
                if w != T::zero() {
                    links.push(Link { lender: i, borrower: k, raw: w, weighted: w });
                }
            }
        }
        Self::from_links(lenders, borrowers, links)
    }

    pub fn n_lenders(&self) -> usize {
        self.lenders.len()
    }

    pub fn n_borrowers(&self) -> usize {
        self.borrowers.len()
    }

    pub fn n_links(&self) -> usize {
        self.cols.len()
    }

    pub fn lenders(&self) -> &[Lender] {
        &self.lenders
    }

    pub fn borrowers(&self) -> &[Borrower<T>] {
        &self.borrowers
    }

    pub fn lender_index(&self, id: &str) -> Option<usize> {
        self.lenders.iter().position(|l| l.id == id)
    }

    pub fn borrower_index(&self, id: &str) -> Option<usize> {
        self.borrowers.iter().position(|b| b.id == id)
    }

    /// Links of lender `i` as `(borrower, raw, weighted)`, ordered by borrower.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T, T)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |p| (self.cols[p], self.raw[p], self.weighted[p]))
    }

    /// Links of borrower `k` as `(lender, raw, weighted)`, ordered by lender.
    pub fn column(&self, k: usize) -> impl Iterator<Item = (usize, T, T)> + '_ {
        self.col_links[self.col_ptr[k]..self.col_ptr[k + 1]].iter().map(move |&p| {
            (self.lender_of(p), self.raw[p], self.weighted[p])
        })
    }

    /// Number of lenders exposed to borrower `k`.
    pub fn degree(&self, k: usize) -> usize {
        self.col_ptr[k + 1] - self.col_ptr[k]
    }

    pub fn links(&self) -> Vec<Link<T>> {
        (0..self.n_lenders())
            .flat_map(|i| {
                self.row(i).map(move |(k, raw, weighted)| Link { lender: i, borrower: k, raw, weighted })
            })
            .collect()
    }

    fn lender_of(&self, p: usize) -> usize {
        // row_ptr is nondecreasing; find the row containing link p
        self.row_ptr.partition_point(|&start| start <= p) - 1
    }

    pub fn raw_at(&self, i: usize, k: usize) -> T {
        self.lookup(i, k).map_or(T::zero(), |p| self.raw[p])
    }

    pub fn weighted_at(&self, i: usize, k: usize) -> T {
        self.lookup(i, k).map_or(T::zero(), |p| self.weighted[p])
    }

    fn lookup(&self, i: usize, k: usize) -> Option<usize> {
        let slice = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        slice.binary_search(&k).ok().map(|off| self.row_ptr[i] + off)
    }

    pub fn row_total_raw(&self, i: usize) -> T {
        self.raw[self.row_ptr[i]..self.row_ptr[i + 1]].iter().copied().sum()
    }

    pub fn row_total_weighted(&self, i: usize) -> T {
        self.weighted[self.row_ptr[i]..self.row_ptr[i + 1]].iter().copied().sum()
    }

    pub fn column_total_weighted(&self, k: usize) -> T {
        self.column(k).map(|(_, _, w)| w).sum()
    }

    pub fn weighted_row_totals(&self) -> Vec<T> {
        (0..self.n_lenders()).map(|i| self.row_total_weighted(i)).collect()
    }

    pub fn weighted_column_totals(&self) -> Vec<T> {
        (0..self.n_borrowers()).map(|k| self.column_total_weighted(k)).collect()
    }

    /// Dense copy of the weighted matrix (rows = lenders). Meant for small
    /// networks and tests.
    pub fn weighted_dense(&self) -> Vec<Vec<T>> {
        let mut out = vec![vec![T::zero(); self.n_borrowers()]; self.n_lenders()];
        for i in 0..self.n_lenders() {
            for (k, _, w) in self.row(i) {
                out[i][k] = w;
            }
        }
        out
    }

    /// Returns a copy with every risk-adjusted weight recomputed by `f`.
    pub fn reweight<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&Link<T>, &Borrower<T>) -> Result<T>,
    {
        let mut links = self.links();
        for link in &mut links {
            link.weighted = f(link, &self.borrowers[link.borrower])?;
        }
        Self::from_links(self.lenders.clone(), self.borrowers.clone(), links)
    }

    /// Risk-adjusted exposure `f(r_k) * e_ik` with the step weight function.
    pub fn apply_step_weights(&self, params: &StepWeightParams<T>) -> Result<Self> {
        params.validate()?;
        self.reweight(|link, b| {
            let r = b.risk_category.ok_or_else(|| Error::MissingCategory(b.id.clone()))?;
            Ok(params.weight(r) * link.raw)
        })
    }

    /// Risk-adjusted exposure `PD_k * e_ik`.
    pub fn apply_pd_weights(&self) -> Result<Self> {
        self.reweight(|link, b| {
            let pd = b.pd.ok_or_else(|| Error::MissingPd(b.id.clone()))?;
            if pd == T::zero() {
                return Err(Error::ZeroWeightColumn(b.id.clone()));
            }
            Ok(pd * link.raw)
        })
    }

    /// Same topology and weights with replaced borrower attributes.
    pub fn with_borrowers(&self, borrowers: Vec<Borrower<T>>) -> Result<Self> {
        if borrowers.len() != self.n_borrowers() {
            return Err(Error::Dimension("borrower list length changed".into()));
        }
        for b in &borrowers {
            b.validate()?;
        }
        let mut out = self.clone();
        out.borrowers = borrowers;
        Ok(out)
    }

    /// Storage positions of lender `i`'s links.
    pub(crate) fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        self.row_ptr[i]..self.row_ptr[i + 1]
    }

    pub(crate) fn link_borrower(&self, pos: usize) -> usize {
        self.cols[pos]
    }

    pub(crate) fn raw_values(&self) -> &[T] {
        &self.raw
    }

    pub(crate) fn weighted_values(&self) -> &[T] {
        &self.weighted
    }

    /// Same sparsity pattern with new link values in storage order.
    pub(crate) fn with_values(&self, raw: Vec<T>, weighted: Vec<T>) -> Self {
        debug_assert_eq!(raw.len(), self.raw.len());
        debug_assert_eq!(weighted.len(), self.weighted.len());
        ExposureNetwork { raw, weighted, ..self.clone() }
    }

    /// Overlap set: borrowers held by two or more lenders.
    pub fn overlap_mask(&self) -> Vec<bool> {
        (0..self.n_borrowers()).map(|k| self.degree(k) >= 2).collect()
    }
}

/// `A`, `B`, ..., `Z`, `L26`, ... used for anonymous lenders.
pub fn lender_label(i: usize) -> String {
    if i < 26 {
        char::from(b'A' + i as u8).to_string()
    } else {
        format!("L{i}")
    }
}
