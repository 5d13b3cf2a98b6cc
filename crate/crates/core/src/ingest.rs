//! CSV ingestion of exposure tables.
//!
//! Header: `lender_id,borrower_id,ead[,pd,lgd,risk_category]`; lines starting
//! with `#` are skipped. Rows for the
//! same `(lender, borrower)` pair are summed. When several rows (or several
//! files) disagree on a borrower attribute the riskier value wins: the higher
//! risk category, the higher pd, the higher lgd.

use std::collections::HashMap;
use std::io::Read;

use crate::error::{Error, Result};
use crate::network::{Borrower, ExposureNetwork, Lender, Link};
use crate::scalar::Real;

/// Accumulates rows from one or more CSV sources, then builds a network.
/// Lenders and borrowers are ordered by first appearance.
#[derive(Debug, Default)]
pub struct ExposureLoader<T> {
    lenders: Vec<Lender>,
    lender_pos: HashMap<String, usize>,
    borrowers: Vec<Borrower<T>>,
    borrower_pos: HashMap<String, usize>,
    links: Vec<Link<T>>,
    rows_seen: usize,
}

struct Columns {
    lender: usize,
    borrower: usize,
    ead: usize,
    pd: Option<usize>,
    lgd: Option<usize>,
    category: Option<usize>,
}

impl<T: Real> ExposureLoader<T> {
    pub fn new() -> Self {
        ExposureLoader {
            lenders: Vec::new(),
            lender_pos: HashMap::new(),
            borrowers: Vec::new(),
            borrower_pos: HashMap::new(),
            links: Vec::new(),
            rows_seen: 0,
        }
    }

    /// Reads every row of `source`. Row numbers in errors are 1-based data
    /// rows of this source (the header is row 0).
    pub fn read<R: Read>(&mut self, source: R) -> Result<()> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(source);
        let header = reader.headers()?.clone();
        let find = |name: &str| header.iter().position(|h| h == name);
        let need = |name: &str| find(name).ok_or_else(|| Error::MissingColumn(name.to_string()));
        let cols = Columns {
            lender: need("lender_id")?,
            borrower: need("borrower_id")?,
            ead: need("ead")?,
            pd: find("pd"),
            lgd: find("lgd"),
            category: find("risk_category"),
        };
        for (idx, record) in reader.records().enumerate() {
            let row = idx + 1;
            let record = record?;
            self.push_record(&record, &cols, row)?;
            self.rows_seen += 1;
        }
        Ok(())
    }

    fn push_record(&mut self, rec: &csv::StringRecord, cols: &Columns, row: usize) -> Result<()> {
        let field = |i: usize| rec.get(i).unwrap_or("");
        let lender_id = field(cols.lender);
        let borrower_id = field(cols.borrower);
        if lender_id.is_empty() || borrower_id.is_empty() {
            return Err(Error::Row { row, message: "empty lender_id or borrower_id".into() });
        }
        let ead = parse_number(field(cols.ead), row, "ead")?
            .ok_or_else(|| Error::Row { row, message: "missing ead".into() })?;
        if ead < 0.0 {
            return Err(Error::NegativeExposure { row, value: ead });
        }
        let pd = opt_field(cols.pd, rec, row, "pd")?;
        let lgd = opt_field(cols.lgd, rec, row, "lgd")?;
        for (name, v) in [("pd", pd), ("lgd", lgd)] {
            if let Some(v) = v {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Row { row, message: format!("{name} {v} outside [0,1]") });
                }
            }
        }
        let category = match cols.category.map(field).filter(|s| !s.is_empty()) {
            None => None,
            Some(s) => {
                let c: u32 = s.parse().map_err(|_| Error::Row {
                    row,
                    message: format!("risk_category `{s}` is not a positive integer"),
                })?;
                if c == 0 {
                    return Err(Error::Row { row, message: "risk_category must be >= 1".into() });
                }
                Some(c)
            }
        };

        let lender = match self.lender_pos.get(lender_id) {
            Some(&i) => i,
            None => {
                self.lenders.push(Lender { id: lender_id.to_string() });
                self.lender_pos.insert(lender_id.to_string(), self.lenders.len() - 1);
                self.lenders.len() - 1
            }
        };
        let borrower = match self.borrower_pos.get(borrower_id) {
            Some(&k) => k,
            None => {
                self.borrowers.push(Borrower {
                    id: borrower_id.to_string(),
                    pd: None,
                    lgd: None,
                    risk_category: None,
                });
                self.borrower_pos.insert(borrower_id.to_string(), self.borrowers.len() - 1);
                self.borrowers.len() - 1
            }
        };
        let b = &mut self.borrowers[borrower];
        b.pd = riskier(b.pd, pd.map(T::lit));
        b.lgd = riskier(b.lgd, lgd.map(T::lit));
        b.risk_category = match (b.risk_category, category) {
            (Some(a), Some(c)) => Some(a.max(c)),
            (a, c) => a.or(c),
        };
        if ead > 0.0 {
            let e = T::lit(ead);
            self.links.push(Link { lender, borrower, raw: e, weighted: e });
        }
        Ok(())
    }

    /// Builds the network with `weighted == raw`; apply a weighting scheme
    /// afterwards.
    pub fn finish(self) -> Result<ExposureNetwork<T>> {
        if self.rows_seen == 0 || self.links.is_empty() {
            return Err(Error::Empty);
        }
        let mut has_link = vec![false; self.borrowers.len()];
        let mut lender_has_link = vec![false; self.lenders.len()];
        for l in &self.links {
            has_link[l.borrower] = true;
            lender_has_link[l.lender] = true;
        }
        // zero-ead rows do not create links; drop entities that only appear there
        let keep_l: Vec<usize> = (0..self.lenders.len()).filter(|&i| lender_has_link[i]).collect();
        let keep_b: Vec<usize> = (0..self.borrowers.len()).filter(|&k| has_link[k]).collect();
        let mut lmap = vec![usize::MAX; self.lenders.len()];
        for (new, &old) in keep_l.iter().enumerate() {
            lmap[old] = new;
        }
        let mut bmap = vec![usize::MAX; self.borrowers.len()];
        for (new, &old) in keep_b.iter().enumerate() {
            bmap[old] = new;
        }
        let borrowers: Vec<Borrower<T>> = keep_b.iter().map(|&k| self.borrowers[k].clone()).collect();
        for b in &borrowers {
            if b.pd.is_none() && b.risk_category.is_none() {
                return Err(Error::MissingRisk(b.id.clone()));
            }
        }
        let lenders = keep_l.iter().map(|&i| self.lenders[i].clone()).collect();
        let links = self
            .links
            .into_iter()
            .map(|l| Link { lender: lmap[l.lender], borrower: bmap[l.borrower], ..l })
            .collect();
        ExposureNetwork::from_links(lenders, borrowers, links)
    }
}

fn riskier<T: Real>(a: Option<T>, b: Option<T>) -> Option<T> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, y) => x.or(y),
    }
}

fn parse_number(s: &str, row: usize, name: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    let v: f64 = s
        .parse()
        .map_err(|_| Error::Row { row, message: format!("{name} `{s}` is not a number") })?;
    if !v.is_finite() {
        return Err(Error::Row { row, message: format!("{name} is not finite") });
    }
    Ok(Some(v))
}

fn opt_field(idx: Option<usize>, rec: &csv::StringRecord, row: usize, name: &str) -> Result<Option<f64>> {
    match idx {
        None => Ok(None),
        Some(i) => parse_number(rec.get(i).unwrap_or(""), row, name),
    }
}

/// Loads a single CSV source.
pub fn load_exposures<T: Real, R: Read>(source: R) -> Result<ExposureNetwork<T>> {
    let mut loader = ExposureLoader::new();
    loader.read(source)?;
    loader.finish()
}

/// Writes a network back to the input CSV layout (raw exposures only).
pub fn write_exposures<T: Real, W: std::io::Write>(net: &ExposureNetwork<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lender_id", "borrower_id", "ead", "pd", "lgd", "risk_category"])?;
    let fmt = |x: Option<T>| x.map(|v| v.to_string()).unwrap_or_default();
    for link in net.links() {
        let b = &net.borrowers()[link.borrower];
        w.write_record([
            net.lenders()[link.lender].id.clone(),
            b.id.clone(),
            link.raw.to_string(),
            fmt(b.pd),
            fmt(b.lgd),
            b.risk_category.map(|c| c.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
