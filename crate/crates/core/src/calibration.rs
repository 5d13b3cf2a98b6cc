//! Least-squares fit of `(alpha, eta)` to the gap between simulated
//! unexpected loss and analytic `K + Gamma`.
//!
//! For fixed `eta`, `K_CE` is affine in `alpha` (the zero floor never binds
//! for `alpha` in `[0, 1]` and `r >= 0`), so the objective is minimised over
//! `alpha` in closed form and the search runs over `eta` alone: a log-spaced
//! grid, then golden-section refinement around the best grid point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coexposure::{lender_coexposures, LenderCoexposure};
use crate::error::{Error, Result};
use crate::irb::CapitalParams;
use crate::monte_carlo::{simulate_lender, SimConfig, SimResult};
use crate::network::ExposureNetwork;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationConfig {
    pub eta_min: f64,
    pub eta_max: f64,
    pub eta_points: usize,
    pub alpha_points: usize,
    /// Relative tolerance on `eta` for the refinement.
    pub tolerance: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig { eta_min: 0.1, eta_max: 1000.0, eta_points: 32, alpha_points: 21, tolerance: 1e-9 }
    }
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta_min > 0.0 && self.eta_max > self.eta_min) {
            return Err(Error::InvalidParameter("need 0 < eta_min < eta_max".into()));
        }
        if self.eta_points < 2 || self.alpha_points < 2 {
            return Err(Error::InvalidParameter("grids need at least two points".into()));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 0.1) {
            return Err(Error::InvalidParameter("tolerance must lie in (0, 0.1)".into()));
        }
        Ok(())
    }

    pub fn eta_grid(&self) -> Vec<f64> {
        let (lo, hi) = (self.eta_min.ln(), self.eta_max.ln());
        let n = self.eta_points - 1;
        (0..=n).map(|i| (lo + (hi - lo) * i as f64 / n as f64).exp()).collect()
    }

    pub fn alpha_grid(&self) -> Vec<f64> {
        let n = self.alpha_points - 1;
        (0..=n).map(|i| i as f64 / n as f64).collect()
    }
}

/// `gap = UL - (K + Gamma)`.
pub fn capital_gap(ul: f64, k: f64, gamma: f64) -> f64 {
    ul - (k + gamma)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub alpha: f64,
    pub eta: f64,
    pub lenders: Vec<String>,
    pub gaps: Vec<f64>,
    /// Lenders with `gap <= 0`, whose target add-on is zero; they do not
    /// enter the residual.
    pub excluded: Vec<String>,
    pub rss: f64,
    /// Best objective over the coarse grid, never below `rss`.
    pub grid_rss: f64,
}

/// The active lenders of a fit, with the objective and its profile in `eta`.
struct Problem<'a> {
    lenders: Vec<&'a LenderCoexposure<f64>>,
    gaps: Vec<f64>,
}

impl Problem<'_> {
    /// `X_CE` of every active lender.
    fn x(&self, eta: f64) -> Result<Vec<f64>> {
        self.lenders.iter().map(|l| Ok(l.x_ce(eta)?.0)).collect()
    }

    fn objective(&self, xs: &[f64], alpha: f64) -> f64 {
        self.lenders
            .iter()
            .zip(xs)
            .zip(&self.gaps)
            .map(|((l, &x), &g)| {
                let e = crate::coexposure::k_ce(x, l.r, alpha) - g;
                e * e
            })
            .sum()
    }

    /// Best `alpha` in `[0, 1]` for fixed `eta` and the objective there.
    /// A flat direction (every `r = 1` or `X_CE = 0`) resolves to `alpha = 0`.
    fn profile(&self, eta: f64) -> Result<(f64, f64)> {
        let xs = self.x(eta)?;
        let mut num = 0.0;
        let mut den = 0.0;
        for ((l, &x), &g) in self.lenders.iter().zip(&xs).zip(&self.gaps) {
            let slope = x * (l.r - 1.0);
            num += (g - x) * slope;
            den += slope * slope;
        }
        let alpha = if den > 0.0 { (num / den).clamp(0.0, 1.0) } else { 0.0 };
        Ok((alpha, self.objective(&xs, alpha)))
    }
}

/// Fits `(alpha, eta)` to the positive gaps. `lenders[i]` and `gaps[i]`
/// describe the same lender.
///
/// When several `eta` reach the minimum (to within `1e-9` relative, or
/// `1e-20` of the summed squared gaps), the smallest one is returned.
pub fn fit_alpha_eta(lenders: &[LenderCoexposure<f64>], gaps: &[f64], cfg: &CalibrationConfig) -> Result<CalibrationResult> {
    cfg.validate()?;
    if lenders.len() != gaps.len() {
        return Err(Error::Dimension(format!("{} lenders but {} gaps", lenders.len(), gaps.len())));
    }
    if gaps.iter().any(|g| !g.is_finite()) {
        return Err(Error::InvalidParameter("non-finite gap".into()));
    }
    let mut active = Vec::new();
    let mut targets = Vec::new();
    let mut excluded = Vec::new();
    for (l, &g) in lenders.iter().zip(gaps) {
        if g > 0.0 {
            active.push(l);
            targets.push(g);
        } else {
            excluded.push(l.lender.clone());
        }
    }
    if active.len() < 2 {
        return Err(Error::Underdetermined(active.len()));
    }
    let problem = Problem { lenders: active, gaps: targets };
    let etas = cfg.eta_grid();
    let alphas = cfg.alpha_grid();

    // coarse grid: both the plain grid minimum and the per-eta profile
    let rows: Vec<(f64, (f64, f64))> = etas
        .par_iter()
        .map(|&eta| {
            let xs = problem.x(eta)?;
            let grid_best = alphas.iter().map(|&a| problem.objective(&xs, a)).fold(f64::INFINITY, f64::min);
            Ok((grid_best, problem.profile(eta)?))
        })
        .collect::<Result<_>>()?;
    let grid_rss = rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);

    let best_idx = (0..etas.len())
        .min_by(|&a, &b| rows[a].1 .1.total_cmp(&rows[b].1 .1).then(a.cmp(&b)))
        .expect("non-empty grid");
    let mut best = (etas[best_idx], rows[best_idx].1 .0, rows[best_idx].1 .1);

    let lo = etas[best_idx.saturating_sub(1)].ln();
    let hi = etas[(best_idx + 1).min(etas.len() - 1)].ln();
    let (eta, (alpha, f)) = golden_section(|t| problem.profile(t.exp()), lo, hi, cfg.tolerance)?;
    let eta = eta.exp();
    if f < best.2 {
        best = (eta, alpha, f);
    }

    // leftmost eta on the optimal level set
    let scale: f64 = problem.gaps.iter().map(|g| g * g).sum();
    let level = best.2 * (1.0 + 1e-9) + 1e-20 * scale;
    let mut probe: Vec<(f64, f64, f64)> = etas.iter().zip(&rows).map(|(&e, r)| (e, r.1 .0, r.1 .1)).collect();
    probe.push(best);
    probe.sort_by(|a, b| a.0.total_cmp(&b.0));
    let first = probe.iter().position(|p| p.2 <= level).expect("best qualifies");
    if first == 0 {
        best = probe[0];
    } else {
        let (mut a, mut b) = (probe[first - 1].0.ln(), probe[first].0.ln());
        let mut found = probe[first];
        for _ in 0..80 {
            let mid = 0.5 * (a + b);
            let (alpha, f) = problem.profile(mid.exp())?;
            if f <= level {
                b = mid;
                found = (mid.exp(), alpha, f);
            } else {
                a = mid;
            }
        }
        best = found;
    }

    Ok(CalibrationResult {
        alpha: best.1,
        eta: best.0,
        lenders: lenders.iter().map(|l| l.lender.clone()).collect(),
        gaps: gaps.to_vec(),
        excluded,
        rss: best.2,
        grid_rss,
    })
}

/// Golden-section search for the minimum of the second component of `f` on
/// `[lo, hi]`.
fn golden_section<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, (f64, f64))>
where
    F: Fn(f64) -> Result<(f64, f64)>,
{
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1.1 <= f2.1 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(if f1.1 <= f2.1 { (x1, f1) } else { (x2, f2) })
}

/// One lender's calibration inputs under the downturn scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRow {
    pub lender: String,
    pub k: f64,
    pub gamma: f64,
    pub el: f64,
    pub ul: f64,
    pub gap: f64,
}

/// Simulates every lender and evaluates `K` and `Gamma` with the same pd
/// transform, returning the co-exposure inputs, the gap table and the raw
/// simulation results.
#[allow(clippy::type_complexity)]
pub fn simulated_gaps(
    net: &ExposureNetwork<f64>,
    capital: &CapitalParams<f64>,
    stress_factor: f64,
    sim: &SimConfig,
) -> Result<(Vec<LenderCoexposure<f64>>, Vec<GapRow>, Vec<SimResult<f64>>)> {
    sim.validate()?;
    let lenders = lender_coexposures(net, capital, stress_factor, sim.pd_map::<f64>())?;
    let mut rows = Vec::with_capacity(lenders.len());
    let mut sims = Vec::with_capacity(lenders.len());
    for (i, l) in lenders.iter().enumerate() {
        let s = simulate_lender(net, i, sim)?;
        rows.push(GapRow {
            lender: l.lender.clone(),
            k: l.k,
            gamma: l.gamma,
            el: s.el,
            ul: s.ul,
            gap: capital_gap(s.ul, l.k, l.gamma),
        });
        sims.push(s);
    }
    Ok((lenders, rows, sims))
}
