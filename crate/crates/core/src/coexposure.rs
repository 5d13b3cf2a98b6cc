//! Co-exposure capital: the dependency-driven add-on `X_CE`, the
//! double-counting ratio `r` against the granularity adjustment, and the
//! corrected add-on `K_CE`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::irb::{lender_capitals, BorrowerCapital, CapitalParams};
use crate::network::ExposureNetwork;
use crate::scalar::{norm_cdf, norm_ppf, Real};
use crate::scenario::borrower_stress;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoexposureParams<T> {
    pub alpha: T,
    pub eta: T,
    /// Column scaling used to measure each borrower's dependency increment.
    pub stress_factor: T,
}

impl<T: Real> Default for CoexposureParams<T> {
    fn default() -> Self {
        CoexposureParams { alpha: T::lit(0.53), eta: T::lit(68.9), stress_factor: T::lit(5.0) }
    }
}

impl<T: Real> CoexposureParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= T::zero() && self.alpha <= T::one()) {
            return Err(Error::InvalidParameter("alpha must lie in [0,1]".into()));
        }
        if !(self.eta >= T::zero() && self.eta.is_finite()) {
            return Err(Error::InvalidParameter("eta must be finite and >= 0".into()));
        }
        if !(self.stress_factor > T::zero() && self.stress_factor.is_finite()) {
            return Err(Error::InvalidParameter("stress_factor must be positive".into()));
        }
        Ok(())
    }
}

/// One borrower's contribution before the share weighting:
/// `MA * LGD * (Phi[Phi^-1(PD) + eta Phi^-1((1 + max(dDI, 0)) / 2)] - PD)`.
///
/// Exactly zero outside the overlap, for `eta = 0`, for non-positive
/// increments and for `PD` in `{0, 1}`.
pub fn x_ce_term<T: Real>(pd: T, lgd: T, ma: T, delta_di: T, in_overlap: bool, eta: T) -> Result<T> {
    if !(delta_di < T::one()) {
        return Err(Error::DependencyIncrement(delta_di.as_f64()));
    }
    if !in_overlap || eta == T::zero() || delta_di <= T::zero() || pd <= T::zero() || pd >= T::one() {
        return Ok(T::zero());
    }
    let shift = eta * norm_ppf((T::one() + delta_di) / T::lit(2.0));
    Ok(ma * lgd * (norm_cdf(norm_ppf(pd) + shift) - pd))
}

/// `r = num / den` from the first-order change of the GA when share mass
/// moves from the non-overlap set `Z` onto the overlap set `Omega`
/// (`s_i += eps` on `Omega`, `s_i -= eps N_Omega / N_Z` on `Z`):
///
/// ```text
/// A = sum s^2 Kt,   B = sum s K,   Kt = C [delta (K + R) - K] / 2
/// num = 2 (N_O / N_Z) (sum_Z s Kt) B + (sum_O K) A
/// den = 2 (sum_O s Kt) B + (N_O / N_Z) (sum_Z K) A
/// ```
///
/// `r <= 1` exactly when the GA does not decrease under that move, i.e. when
/// the GA already prices some of the overlap. `r = 1` when `Omega` or `Z` is
/// empty.
pub fn double_count_ratio<T: Real>(
    shares: &[T],
    caps: &[BorrowerCapital<T>],
    in_overlap: &[bool],
    delta: T,
) -> Result<T> {
    if shares.len() != caps.len() || shares.len() != in_overlap.len() {
        return Err(Error::Dimension("shares, capitals and overlap flags differ in length".into()));
    }
    let n_o = in_overlap.iter().filter(|&&o| o).count();
    let n_z = in_overlap.len() - n_o;
    if n_o == 0 || n_z == 0 {
        return Ok(T::one());
    }
    let mut a = T::zero();
    let mut b = T::zero();
    let (mut skt_o, mut skt_z, mut k_o, mut k_z) = (T::zero(), T::zero(), T::zero(), T::zero());
    for ((&s, cap), &o) in shares.iter().zip(caps).zip(in_overlap) {
        let c = cap.c.ok_or(Error::ZeroLgd)?;
        let kt = c * (delta * (cap.k + cap.reserve) - cap.k) / T::lit(2.0);
        a = a + s * s * kt;
        b = b + s * cap.k;
        if o {
            skt_o = skt_o + s * kt;
            k_o = k_o + cap.k;
        } else {
            skt_z = skt_z + s * kt;
            k_z = k_z + cap.k;
        }
    }
    let ratio = T::lit(n_o as f64) / T::lit(n_z as f64);
    let two = T::lit(2.0);
    let num = two * ratio * skt_z * b + k_o * a;
    let den = two * skt_o * b + ratio * k_z * a;
    if !(den > T::zero()) {
        return Err(Error::ZeroCapital);
    }
    Ok(num / den)
}

/// Shares after the double-counting perturbation of size `eps`.
pub fn perturb_shares<T: Real>(shares: &[T], in_overlap: &[bool], eps: T) -> Vec<T> {
    let n_o = in_overlap.iter().filter(|&&o| o).count();
    let n_z = in_overlap.len() - n_o;
    let down = if n_z == 0 { T::zero() } else { eps * T::lit(n_o as f64) / T::lit(n_z as f64) };
    shares.iter().zip(in_overlap).map(|(&s, &o)| if o { s + eps } else { s - down }).collect()
}

/// `K_CE = max(0, [alpha (r - 1) + 1] X_CE)`.
pub fn k_ce<T: Real>(x_ce: T, r: T, alpha: T) -> T {
    ((alpha * (r - T::one()) + T::one()) * x_ce).max(T::zero())
}

pub fn total_capital<T: Real>(k: T, gamma: T, k_ce: T) -> T {
    k + gamma + k_ce
}

/// Everything about one lender that the add-on depends on, with `r` already
/// evaluated. `K_CE` is then a cheap function of `(alpha, eta)`, which is
/// what calibration exploits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LenderCoexposure<T> {
    pub lender: String,
    pub borrower_ids: Vec<String>,
    pub shares: Vec<T>,
    pub pd: Vec<T>,
    pub lgd: Vec<T>,
    pub ma: Vec<T>,
    /// System DI increment of each borrower under the stress.
    pub delta_di: Vec<T>,
    pub in_overlap: Vec<bool>,
    pub k: T,
    pub gamma: T,
    pub r: T,
}

impl<T: Real> LenderCoexposure<T> {
    /// Per-borrower share-weighted terms and their sum.
    pub fn x_ce(&self, eta: T) -> Result<(T, Vec<T>)> {
        let mut terms = Vec::with_capacity(self.shares.len());
        for i in 0..self.shares.len() {
            let t = x_ce_term(self.pd[i], self.lgd[i], self.ma[i], self.delta_di[i], self.in_overlap[i], eta)?;
            terms.push(self.shares[i] * t);
        }
        Ok((terms.iter().copied().sum(), terms))
    }

    pub fn k_ce(&self, alpha: T, eta: T) -> Result<T> {
        Ok(k_ce(self.x_ce(eta)?.0, self.r, alpha))
    }
}

/// Builds the per-lender co-exposure inputs: IRB capital and GA per lender,
/// each borrower's system DI increment under `stress_factor`, and `r`.
/// `pd_map` transforms every pd first (identity, or a downturn stress).
pub fn lender_coexposures<T: Real, F: Fn(T) -> T>(
    net: &ExposureNetwork<T>,
    capital: &CapitalParams<T>,
    stress_factor: T,
    pd_map: F,
) -> Result<Vec<LenderCoexposure<T>>> {
    let caps = lender_capitals(net, capital, &pd_map)?;
    let stress = borrower_stress(net, stress_factor)?;
    caps.into_iter()
        .map(|lc| {
            let in_overlap: Vec<bool> = lc.borrowers.iter().map(|&k| stress[k].in_overlap).collect();
            let r = double_count_ratio(&lc.shares, &lc.capitals, &in_overlap, capital.delta)?;
            let borrowers = net.borrowers();
            Ok(LenderCoexposure {
                borrower_ids: lc.borrowers.iter().map(|&k| borrowers[k].id.clone()).collect(),
                pd: lc.borrowers.iter().map(|&k| pd_map(borrowers[k].pd.expect("checked"))).collect(),
                lgd: lc.borrowers.iter().map(|&k| borrowers[k].lgd.expect("checked")).collect(),
                ma: lc.capitals.iter().map(|c| c.ma).collect(),
                delta_di: lc.borrowers.iter().map(|&k| stress[k].delta_di_sys).collect(),
                in_overlap,
                lender: lc.lender,
                shares: lc.shares,
                k: lc.k,
                gamma: lc.gamma,
                r,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapitalRow<T> {
    pub lender: String,
    pub k: T,
    pub gamma: T,
    pub x_ce: T,
    pub r: T,
    pub k_ce: T,
    pub k_total: T,
    /// True when the zero floor on `K_CE` was active.
    pub floored: bool,
}

/// Per-borrower `X_CE` contributions of one lender.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoexposureReport<T> {
    pub lender: String,
    pub borrower_ids: Vec<String>,
    pub terms: Vec<T>,
    pub x_ce: T,
    pub r: T,
    pub k_ce: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapitalReport<T> {
    pub params: CoexposureParams<T>,
    pub rows: Vec<CapitalRow<T>>,
    pub coexposure: Vec<CoexposureReport<T>>,
}

impl<T: Real> CapitalReport<T> {
    pub fn from_lenders(lenders: &[LenderCoexposure<T>], params: &CoexposureParams<T>) -> Result<Self> {
        params.validate()?;
        let mut rows = Vec::with_capacity(lenders.len());
        let mut coexposure = Vec::with_capacity(lenders.len());
        for l in lenders {
            let (x, terms) = l.x_ce(params.eta)?;
            let kce = k_ce(x, l.r, params.alpha);
            let unfloored = (params.alpha * (l.r - T::one()) + T::one()) * x;
            rows.push(CapitalRow {
                lender: l.lender.clone(),
                k: l.k,
                gamma: l.gamma,
                x_ce: x,
                r: l.r,
                k_ce: kce,
                k_total: total_capital(l.k, l.gamma, kce),
                floored: unfloored < T::zero(),
            });
            coexposure.push(CoexposureReport {
                lender: l.lender.clone(),
                borrower_ids: l.borrower_ids.clone(),
                terms,
                x_ce: x,
                r: l.r,
                k_ce: kce,
            });
        }
        Ok(CapitalReport { params: *params, rows, coexposure })
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lender", "K", "Gamma", "X_CE", "r", "K_CE", "K_total"])?;
        for r in &self.rows {
            w.write_record([
                r.lender.clone(),
                r.k.to_string(),
                r.gamma.to_string(),
                r.x_ce.to_string(),
                r.r.to_string(),
                r.k_ce.to_string(),
                r.k_total.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Full capital table of a network with pds used as given.
pub fn capital_report<T: Real>(
    net: &ExposureNetwork<T>,
    capital: &CapitalParams<T>,
    params: &CoexposureParams<T>,
) -> Result<CapitalReport<T>> {
    params.validate()?;
    let lenders = lender_coexposures(net, capital, params.stress_factor, |pd| pd)?;
    CapitalReport::from_lenders(&lenders, params)
}
