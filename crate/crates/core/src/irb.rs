//! IRB capital, maturity adjustment and the granularity adjustment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Borrower, ExposureNetwork, Lender, Link};
use crate::scalar::{norm_cdf, norm_ppf, Real};

/// Asset correlation source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoSpec<T> {
    Constant(T),
    /// One value per borrower, in network order.
    PerBorrower(Vec<T>),
    /// Basel corporate curve, 0.12 to 0.24 decreasing in pd.
    Basel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CapitalParams<T> {
    pub q: T,
    pub delta: T,
    pub gamma: T,
    /// Effective maturity in years.
    pub maturity: T,
    pub rho: RhoSpec<T>,
    /// Square the `b(PD)` smoothing term as in the Basel text.
    pub b_squared: bool,
}

impl<T: Real> Default for CapitalParams<T> {
    fn default() -> Self {
        CapitalParams {
            q: T::lit(0.999),
            delta: T::lit(4.83),
            gamma: T::lit(0.25),
            maturity: T::one(),
            rho: RhoSpec::Basel,
            b_squared: true,
        }
    }
}

impl<T: Real> CapitalParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.q > T::zero() && self.q < T::one()) {
            return Err(Error::InvalidParameter("q must lie in (0,1)".into()));
        }
        if !(self.delta > T::zero()) {
            return Err(Error::InvalidParameter("delta must be positive".into()));
        }
        if !(self.gamma >= T::zero() && self.gamma <= T::one()) {
            return Err(Error::InvalidParameter("gamma must lie in [0,1]".into()));
        }
        if !(self.maturity >= T::zero()) {
            return Err(Error::InvalidParameter("maturity must be nonnegative".into()));
        }
        match &self.rho {
            RhoSpec::Constant(r) if !(*r >= T::zero() && *r < T::one()) => {
                Err(Error::InvalidParameter("rho must lie in [0,1)".into()))
            }
            RhoSpec::PerBorrower(v) if v.iter().any(|r| !(*r >= T::zero() && *r < T::one())) => {
                Err(Error::InvalidParameter("rho must lie in [0,1)".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn rho_for(&self, borrower: usize, pd: T) -> Result<T> {
        match &self.rho {
            RhoSpec::Constant(r) => Ok(*r),
            RhoSpec::PerBorrower(v) => v
                .get(borrower)
                .copied()
                .ok_or_else(|| Error::Dimension(format!("no rho for borrower {borrower}"))),
            RhoSpec::Basel => Ok(basel_correlation(pd)),
        }
    }
}

/// Basel corporate asset correlation.
pub fn basel_correlation<T: Real>(pd: T) -> T {
    let fifty = T::lit(50.0);
    let weight = (T::one() - (-fifty * pd).exp()) / (T::one() - (-fifty).exp());
    T::lit(0.12) * weight + T::lit(0.24) * (T::one() - weight)
}

/// `b(PD) = 0.119 - 0.0548 ln PD`, optionally squared.
pub fn maturity_b<T: Real>(pd: T, b_squared: bool) -> T {
    let b = T::lit(0.119) - T::lit(0.0548) * pd.ln();
    if b_squared {
        b * b
    } else {
        b
    }
}

/// `MA = (1 + (M - 2.5) b) / (1 - 1.5 b)`.
pub fn maturity_adjustment<T: Real>(pd: T, maturity: T, b_squared: bool) -> Result<T> {
    if !(pd > T::zero() && pd <= T::one()) {
        return Err(Error::DegeneratePd(pd.as_f64()));
    }
    let b = maturity_b(pd, b_squared);
    let denom = T::one() - T::lit(1.5) * b;
    if denom <= T::zero() {
        return Err(Error::MaturitySingular);
    }
    Ok((T::one() + (maturity - T::lit(2.5)) * b) / denom)
}

/// Per-borrower IRB capital
/// `MA * LGD * (Phi[(Phi^-1(PD) + sqrt(rho) Phi^-1(q)) / sqrt(1 - rho)] - PD)`.
pub fn irb_k<T: Real>(pd: T, lgd: T, rho: T, q: T, ma: T) -> Result<T> {
    if !(pd > T::zero() && pd < T::one()) {
        return Err(Error::DegeneratePd(pd.as_f64()));
    }
    if !(lgd >= T::zero() && lgd <= T::one()) {
        return Err(Error::InvalidParameter("lgd must lie in [0,1]".into()));
    }
    if !(rho >= T::zero() && rho < T::one()) {
        return Err(Error::InvalidParameter("rho must lie in [0,1)".into()));
    }
    let stressed = norm_cdf((norm_ppf(pd) + rho.sqrt() * norm_ppf(q)) / (T::one() - rho).sqrt());
    Ok(ma * (lgd * stressed - lgd * pd))
}

/// Capital inputs of one borrower.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BorrowerCapital<T> {
    pub k: T,
    /// Loan-loss reserve `E[LGD] * PD`.
    pub reserve: T,
    /// `(gamma E[LGD](1 - E[LGD]) + E[LGD]^2) / E[LGD]`; `None` when LGD = 0.
    pub c: Option<T>,
    pub ma: T,
}

pub fn lgd_variance_factor<T: Real>(lgd: T, gamma: T) -> Option<T> {
    if lgd > T::zero() {
        Some((gamma * lgd * (T::one() - lgd) + lgd * lgd) / lgd)
    } else {
        None
    }
}

pub fn borrower_capital<T: Real>(pd: T, lgd: T, rho: T, params: &CapitalParams<T>) -> Result<BorrowerCapital<T>> {
    let ma = maturity_adjustment(pd, params.maturity, params.b_squared)?;
    Ok(BorrowerCapital {
        k: irb_k(pd, lgd, rho, params.q, ma)?,
        reserve: lgd * pd,
        c: lgd_variance_factor(lgd, params.gamma),
        ma,
    })
}

fn check_shares<T: Real>(shares: &[T], n: usize) -> Result<()> {
    if shares.len() != n {
        return Err(Error::Dimension(format!("{} shares for {n} borrowers", shares.len())));
    }
    if shares.iter().any(|&s| s < T::zero()) {
        return Err(Error::InvalidParameter("negative share".into()));
    }
    let sum: T = shares.iter().copied().sum();
    if (sum - T::one()).abs().as_f64() > 1e-9_f64.max(4.0 * T::epsilon().as_f64() * shares.len() as f64) {
        return Err(Error::ShareSum(sum.as_f64()));
    }
    Ok(())
}

/// Portfolio capital `K = sum s_i K_i`.
pub fn portfolio_k<T: Real>(shares: &[T], caps: &[BorrowerCapital<T>]) -> Result<T> {
    check_shares(shares, caps.len())?;
    Ok(shares.iter().zip(caps).map(|(&s, c)| s * c.k).sum())
}

/// Per-borrower numerator term `s_i^2 C_i [delta (K_i + R_i) - K_i]` of the GA.
fn ga_terms<T: Real>(shares: &[T], caps: &[BorrowerCapital<T>], delta: T) -> Result<Vec<T>> {
    shares
        .iter()
        .zip(caps)
        .map(|(&s, cap)| {
            if s == T::zero() {
                return Ok(T::zero());
            }
            let c = cap.c.ok_or(Error::ZeroLgd)?;
            Ok(s * s * c * (delta * (cap.k + cap.reserve) - cap.k))
        })
        .collect()
}

/// Granularity adjustment `Gamma = (1 / 2K) sum s_i^2 C_i [delta (K_i + R_i) - K_i]`.
pub fn granularity_adjustment<T: Real>(shares: &[T], caps: &[BorrowerCapital<T>], params: &CapitalParams<T>) -> Result<T> {
    let k = portfolio_k(shares, caps)?;
    if !(k > T::zero()) {
        return Err(Error::ZeroCapital);
    }
    let num: T = ga_terms(shares, caps, params.delta)?.into_iter().sum();
    Ok(num / (T::lit(2.0) * k))
}

/// Capital for one lender's portfolio.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LenderCapital<T> {
    pub lender: String,
    /// Borrower indices in the lender's portfolio.
    pub borrowers: Vec<usize>,
    /// Raw exposure shares, summing to one.
    pub shares: Vec<T>,
    pub capitals: Vec<BorrowerCapital<T>>,
    pub k: T,
    pub gamma: T,
}

/// Per-lender `K` and `Gamma` from raw exposure shares. `pd_map` transforms
/// the borrower pd first (identity, or a downturn stress).
pub fn lender_capitals<T: Real, F: Fn(T) -> T>(
    net: &ExposureNetwork<T>,
    params: &CapitalParams<T>,
    pd_map: F,
) -> Result<Vec<LenderCapital<T>>> {
    params.validate()?;
    check_risk_inputs(net)?;
    let mut per_borrower = Vec::with_capacity(net.n_borrowers());
    for (k, b) in net.borrowers().iter().enumerate() {
        let pd = pd_map(b.pd.expect("checked"));
        let lgd = b.lgd.expect("checked");
        let rho = params.rho_for(k, pd)?;
        per_borrower.push(borrower_capital(pd, lgd, rho, params)?);
    }
    let mut out = Vec::with_capacity(net.n_lenders());
    for i in 0..net.n_lenders() {
        let total = net.row_total_raw(i);
        let (borrowers, shares): (Vec<usize>, Vec<T>) = net.row(i).map(|(k, raw, _)| (k, raw / total)).unzip();
        let capitals: Vec<BorrowerCapital<T>> = borrowers.iter().map(|&k| per_borrower[k]).collect();
        let k = portfolio_k(&shares, &capitals)?;
        let gamma = granularity_adjustment(&shares, &capitals, params)?;
        out.push(LenderCapital { lender: net.lenders()[i].id.clone(), borrowers, shares, capitals, k, gamma });
    }
    Ok(out)
}

/// Every borrower needs both pd and lgd; the error lists all offenders.
pub fn check_risk_inputs<T: Real>(net: &ExposureNetwork<T>) -> Result<()> {
    let missing: Vec<String> = net
        .borrowers()
        .iter()
        .filter(|b| b.pd.is_none() || b.lgd.is_none())
        .map(|b| b.id.clone())
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::MissingLgd(missing))
    }
}

/// `1 - 2(N-2)w + N(N-2)w^2`.
pub fn uvw_closed_form<T: Real>(n: usize, w: T) -> T {
    let n_t = T::lit(n as f64);
    let two = T::lit(2.0);
    T::one() - two * (n_t - two) * w + n_t * (n_t - two) * w * w
}

/// The overlapping system: `N - 1` lenders in a chain over `N` borrowers, end
/// borrowers held by one lender with weight `u`, interior borrowers shared by
/// two neighbouring lenders with weight `v` each.
pub fn uvw_system<T: Real>(n: usize, u: T, v: T, pd: T, lgd: T) -> Result<ExposureNetwork<T>> {
    if n < 3 {
        return Err(Error::InvalidParameter("uvw system needs N >= 3".into()));
    }
    let lenders = (0..n - 1).map(|i| Lender { id: crate::network::lender_label(i) }).collect();
    let borrowers = (0..n).map(|k| Borrower::with_pd((k + 1).to_string(), pd, Some(lgd))).collect();
    let mut links = Vec::new();
    for j in 0..n - 1 {
        let left = if j == 0 { u } else { v };
        let right = if j == n - 2 { u } else { v };
        links.push(Link { lender: j, borrower: j, raw: left, weighted: left });
        links.push(Link { lender: j, borrower: j + 1, raw: right, weighted: right });
    }
    ExposureNetwork::from_links(lenders, borrowers, links)
}

/// Aggregates every lender into a single lender holding the column sums.
pub fn superlender<T: Real>(net: &ExposureNetwork<T>) -> Result<ExposureNetwork<T>> {
    let links = (0..net.n_borrowers())
        .map(|k| {
            let (raw, weighted) = net.column(k).fold((T::zero(), T::zero()), |(r, w), (_, a, b)| (r + a, w + b));
            Link { lender: 0, borrower: k, raw, weighted }
        })
        .collect();
    ExposureNetwork::from_links(vec![Lender { id: "SUPER".into() }], net.borrowers().to_vec(), links)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UvwCurve<T> {
    pub n: usize,
    pub w: Vec<T>,
    pub gamma: Vec<T>,
    pub closed_form: Vec<T>,
    /// Least-squares constant in `Gamma ~ c * closed_form`.
    pub constant: T,
    /// `max |Gamma / (c closed_form) - 1|` over the grid.
    pub max_rel_deviation: T,
}

/// Evaluates the granularity adjustment of the aggregated superlender over a
/// grid of interior weights `w` with `u = (1 - (N-2) w) / 2`. Infeasible grid
/// points are skipped.
pub fn uvw_gamma_curve<T: Real>(
    n: usize,
    w_grid: &[T],
    pd: T,
    lgd: T,
    params: &CapitalParams<T>,
) -> Result<UvwCurve<T>> {
    if n < 3 {
        return Err(Error::InvalidParameter("uvw curve needs N >= 3".into()));
    }
    let rho = params.rho_for(0, pd)?;
    let cap = borrower_capital(pd, lgd, rho, params)?;
    let caps = vec![cap; n];
    let mut ws = Vec::new();
    let mut gammas = Vec::new();
    let mut closed = Vec::new();
    for &w in w_grid {
        let u = (T::one() - T::lit((n - 2) as f64) * w) / T::lit(2.0);
        if w < T::zero() || u < T::zero() {
            continue;
        }
        let mut shares = vec![w; n];
        shares[0] = u;
        shares[n - 1] = u;
        gammas.push(granularity_adjustment(&shares, &caps, params)?);
        closed.push(uvw_closed_form(n, w));
        ws.push(w);
    }
    if ws.is_empty() {
        return Err(Error::InvalidParameter("no feasible w in grid".into()));
    }
    let num: T = gammas.iter().zip(&closed).map(|(&g, &c)| g * c).sum();
    let den: T = closed.iter().map(|&c| c * c).sum();
    let constant = num / den;
    let max_rel_deviation = gammas
        .iter()
        .zip(&closed)
        .map(|(&g, &c)| (g / (constant * c) - T::one()).abs())
        .fold(T::zero(), T::max);
    Ok(UvwCurve { n, w: ws, gamma: gammas, closed_form: closed, constant, max_rel_deviation })
}
