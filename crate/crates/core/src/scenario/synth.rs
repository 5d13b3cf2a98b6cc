use std::collections::HashMap;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{lender_label, Borrower, ExposureNetwork, Lender, Link, StepWeightParams};
use crate::scalar::Real;

/// One traded loan: issuer name, face amount and price (per 100 of face).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Loan {
    pub issuer: String,
    pub amount: f64,
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Ds2Config {
    pub n_lenders: usize,
    pub isolated_frac: f64,
    pub top_exclude_frac: f64,
    pub n_tranches: usize,
    pub min_tranche: f64,
    pub seed: u64,
}

impl Default for Ds2Config {
    fn default() -> Self {
        Ds2Config { n_lenders: 5, isolated_frac: 0.15, top_exclude_frac: 0.10, n_tranches: 3, min_tranche: 0.20, seed: 0 }
    }
}

/// Risk class from a loan price: near par is safest.
fn price_category(price: f64) -> u32 {
    match price {
        p if p >= 97.0 => 1,
        p if p >= 90.0 => 2,
        p if p >= 75.0 => 3,
        _ => 4,
    }
}

/// Syndicated-loan style system: loans are aggregated by issuer, the
/// risk-adjusted amount is `amount / (price / 100)`, a random subset of
/// issuers outside the largest ones becomes single-lender borrowers and every
/// other issuer is split into `n_tranches` random tranches held by distinct
/// lenders, each tranche at least `min_tranche` of the issuer total.
///
/// Borrower risk categories come from the amount-weighted mean price
/// (1 at or above 97, 2 above 90, 3 above 75, else 4).
pub fn generate_ds2_like<T: Real>(cfg: &Ds2Config, loans: &[Loan]) -> Result<ExposureNetwork<T>> {
    let unit = |x: f64| (0.0..1.0).contains(&x);
    if !unit(cfg.isolated_frac) || !unit(cfg.top_exclude_frac) || !(cfg.min_tranche >= 0.0) {
        return Err(Error::InvalidParameter("fractions must lie in [0, 1)".into()));
    }
    if cfg.n_tranches == 0 || cfg.min_tranche * cfg.n_tranches as f64 > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "{} tranches of at least {} do not fit in one issuer",
            cfg.n_tranches, cfg.min_tranche
        )));
    }
    if cfg.n_tranches > cfg.n_lenders {
        return Err(Error::InvalidParameter("more tranches than lenders".into()));
    }

    // issuer -> (amount, adjusted amount), in order of first appearance
    let mut order: Vec<&str> = Vec::new();
    let mut agg: HashMap<&str, (f64, f64)> = HashMap::new();
    for loan in loans {
        if !(loan.amount > 0.0 && loan.price > 0.0) || !loan.amount.is_finite() || !loan.price.is_finite() {
            return Err(Error::InvalidParameter(format!("loan of `{}` needs positive amount and price", loan.issuer)));
        }
        let e = agg.entry(loan.issuer.as_str()).or_insert_with(|| {
            order.push(loan.issuer.as_str());
            (0.0, 0.0)
        });
        e.0 += loan.amount;
        e.1 += loan.amount / (loan.price / 100.0);
    }
    let m = order.len();
    let n_isolated = (cfg.isolated_frac * m as f64).round() as usize;
    let n_top = (cfg.top_exclude_frac * m as f64).ceil() as usize;
    if m < 2 || n_isolated + n_top > m || m - n_isolated == 0 {
        return Err(Error::InvalidParameter(format!("too few issuers ({m}) for the requested split")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut by_size: Vec<usize> = (0..m).collect();
    by_size.sort_by(|&a, &b| agg[order[b]].0.total_cmp(&agg[order[a]].0).then(a.cmp(&b)));
    let mut candidates = by_size[n_top..].to_vec();
    candidates.shuffle(&mut rng);
    let mut isolated = vec![false; m];
    for &k in &candidates[..n_isolated] {
        isolated[k] = true;
    }

    let mut borrowers = Vec::with_capacity(m);
    let mut links = Vec::new();
    let mut cuts = vec![0.0f64; cfg.n_tranches + 1];
    for (k, &name) in order.iter().enumerate() {
        let (amount, adjusted) = agg[name];
        let mean_price = 100.0 * amount / adjusted;
        borrowers.push(Borrower::with_category(name, price_category(mean_price)));
        if isolated[k] {
            let lender = rng.random_range(0..cfg.n_lenders);
            links.push(Link { lender, borrower: k, raw: T::lit(amount), weighted: T::lit(adjusted) });
            continue;
        }
        // uniform point on the simplex from sorted uniforms, then shifted so
        // every tranche keeps the minimum
        cuts[0] = 0.0;
        cuts[cfg.n_tranches] = 1.0;
        for c in cuts.iter_mut().take(cfg.n_tranches).skip(1) {
            *c = rng.random::<f64>();
        }
        cuts[1..cfg.n_tranches].sort_by(f64::total_cmp);
        let free = 1.0 - cfg.min_tranche * cfg.n_tranches as f64;
        let holders = sample(&mut rng, cfg.n_lenders, cfg.n_tranches);
        for (t, lender) in holders.into_iter().enumerate() {
            let frac = cfg.min_tranche + free * (cuts[t + 1] - cuts[t]);
            links.push(Link {
                lender,
                borrower: k,
                raw: T::lit(frac * amount),
                weighted: T::lit(frac * adjusted),
            });
        }
    }
    let lenders = (0..cfg.n_lenders).map(|i| Lender { id: lender_label(i) }).collect();
    ExposureNetwork::from_links(lenders, borrowers, links)
}

/// Random loan book: `issuers` names with one to three loans each,
/// log-normal amounts and prices mostly near par.
pub fn synthetic_loans(issuers: usize, seed: u64) -> Vec<Loan> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amounts = LogNormal::new(3.0, 1.2).expect("valid log-normal");
    let mut loans = Vec::new();
    for k in 0..issuers {
        let discount = if rng.random::<f64>() < 0.8 { rng.random::<f64>() * 8.0 } else { 8.0 + rng.random::<f64>() * 40.0 };
        for _ in 0..rng.random_range(1..=3) {
            loans.push(Loan {
                issuer: format!("ISS{k:05}"),
                amount: amounts.sample(&mut rng),
                price: 100.0 - discount + rng.random::<f64>() * 0.5,
            });
        }
    }
    loans
}

/// Bank-file style system with four risk categories, step-function weights
/// and a configurable overlap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Ds1Config {
    pub n_lenders: usize,
    pub isolated_per_lender: usize,
    pub n_shared: usize,
    /// Category probabilities (categories 1 to 4) for single-lender borrowers.
    pub isolated_category_probs: [f64; 4],
    /// Category probabilities for shared borrowers.
    pub shared_category_probs: [f64; 4],
    /// Default probability attached to each category.
    pub category_pd: [f64; 4],
    pub lgd: f64,
    pub sigma: f64,
    /// Multiplier on the raw exposure of shared borrowers.
    pub shared_exposure_scale: f64,
    pub weights: StepWeightParams<f64>,
}

impl Default for Ds1Config {
    fn default() -> Self {
        Ds1Config {
            n_lenders: 2,
            isolated_per_lender: 300,
            n_shared: 40,
            isolated_category_probs: [0.3, 0.3, 0.25, 0.15],
            shared_category_probs: [0.1, 0.3, 0.35, 0.25],
            category_pd: [0.003, 0.01, 0.03, 0.1],
            lgd: 0.45,
            sigma: 1.0,
            shared_exposure_scale: 1.0,
            weights: StepWeightParams::default(),
        }
    }
}

fn draw_category(rng: &mut impl Rng, probs: &[f64; 4]) -> u32 {
    let total: f64 = probs.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (c, &p) in probs.iter().enumerate() {
        if u < p {
            return c as u32 + 1;
        }
        u -= p;
    }
    4
}

/// Generates a DS1-like network. Each shared borrower is held by two distinct
/// random lenders; raw exposures are log-normal (shared ones scaled by
/// `shared_exposure_scale`) and risk-adjusted with the step weights.
pub fn generate_ds1_like<T: Real>(cfg: &Ds1Config, seed: u64) -> Result<ExposureNetwork<T>> {
    cfg.weights.validate()?;
    if cfg.n_lenders == 0 || (cfg.n_shared > 0 && cfg.n_lenders < 2) {
        return Err(Error::InvalidParameter("shared borrowers need at least two lenders".into()));
    }
    if !(cfg.sigma >= 0.0 && cfg.shared_exposure_scale > 0.0) {
        return Err(Error::InvalidParameter("sigma and shared_exposure_scale must be positive".into()));
    }
    let probs_ok = |p: &[f64; 4]| p.iter().all(|&x| x >= 0.0) && p.iter().sum::<f64>() > 0.0;
    if !probs_ok(&cfg.isolated_category_probs) || !probs_ok(&cfg.shared_category_probs) {
        return Err(Error::InvalidParameter("category probabilities must be non-negative, not all zero".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amounts = LogNormal::new(0.0, cfg.sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let weight = |c: u32| T::lit(cfg.weights.weight(c));

    let mut borrowers: Vec<Borrower<T>> = Vec::new();
    let mut links = Vec::new();
    let push_borrower = |cat: u32, borrowers: &mut Vec<Borrower<T>>| {
        let k = borrowers.len();
        borrowers.push(Borrower {
            id: format!("C{k:05}"),
            pd: Some(T::lit(cfg.category_pd[cat as usize - 1])),
            lgd: Some(T::lit(cfg.lgd)),
            risk_category: Some(cat),
        });
        k
    };
    for lender in 0..cfg.n_lenders {
        for _ in 0..cfg.isolated_per_lender {
            let cat = draw_category(&mut rng, &cfg.isolated_category_probs);
            let k = push_borrower(cat, &mut borrowers);
            let raw = T::lit(amounts.sample(&mut rng));
            links.push(Link { lender, borrower: k, raw, weighted: raw * weight(cat) });
        }
    }
    for _ in 0..cfg.n_shared {
        let cat = draw_category(&mut rng, &cfg.shared_category_probs);
        let k = push_borrower(cat, &mut borrowers);
        for lender in sample(&mut rng, cfg.n_lenders, 2) {
            let raw = T::lit(amounts.sample(&mut rng) * cfg.shared_exposure_scale);
            links.push(Link { lender, borrower: k, raw, weighted: raw * weight(cat) });
        }
    }
    let lenders = (0..cfg.n_lenders).map(|i| Lender { id: lender_label(i) }).collect();
    ExposureNetwork::from_links(lenders, borrowers, links)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tranches_respect_minimum_and_sum_to_one() {
        let loans = synthetic_loans(200, 4);
        let cfg = Ds2Config { seed: 11, ..Default::default() };
        let net: ExposureNetwork<f64> = generate_ds2_like(&cfg, &loans).unwrap();
        assert_eq!(net.n_borrowers(), 200);
        let isolated = (0..200).filter(|&k| net.degree(k) == 1).count();
        assert_eq!(isolated, 30);
        for k in 0..net.n_borrowers() {
            let d = net.degree(k);
            assert!(d == 1 || d == 3);
            if d == 3 {
                let total: f64 = net.column(k).map(|(_, r, _)| r).sum();
                let mut sum = 0.0;
                for (_, r, _) in net.column(k) {
                    assert!(r / total >= 0.2 - 1e-12);
                    sum += r / total;
                }
                assert!((sum - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn no_isolated_means_all_shared() {
        let loans = synthetic_loans(50, 1);
        let cfg = Ds2Config { isolated_frac: 0.0, ..Default::default() };
        let net: ExposureNetwork<f64> = generate_ds2_like(&cfg, &loans).unwrap();
        assert!((0..net.n_borrowers()).all(|k| net.degree(k) == 3));
    }

    #[test]
    fn risk_adjustment_divides_by_price() {
        let loans = vec![
            Loan { issuer: "x".into(), amount: 10.0, price: 80.0 },
            Loan { issuer: "y".into(), amount: 5.0, price: 100.0 },
            Loan { issuer: "x".into(), amount: 6.0, price: 50.0 },
        ];
        let cfg = Ds2Config { n_lenders: 3, top_exclude_frac: 0.0, isolated_frac: 0.0, ..Default::default() };
        let net: ExposureNetwork<f64> = generate_ds2_like(&cfg, &loans).unwrap();
        let w: f64 = net.column(0).map(|(_, _, w)| w).sum();
        assert!((w - (12.5 + 12.0)).abs() < 1e-12);
        assert_eq!(net.borrowers()[0].risk_category, Some(4));
    }

    #[test]
    fn ds2_errors() {
        let loans = synthetic_loans(20, 0);
        let bad = Ds2Config { min_tranche: 0.4, ..Default::default() };
        assert!(generate_ds2_like::<f64>(&bad, &loans).is_err());
        let bad = Ds2Config { n_lenders: 2, ..Default::default() };
        assert!(generate_ds2_like::<f64>(&bad, &loans).is_err());
        assert!(generate_ds2_like::<f64>(&Ds2Config::default(), &loans[..1]).is_err());
    }

    #[test]
    fn deterministic() {
        let loans = synthetic_loans(100, 2);
        let a: ExposureNetwork<f64> = generate_ds2_like(&Ds2Config::default(), &loans).unwrap();
        let b: ExposureNetwork<f64> = generate_ds2_like(&Ds2Config::default(), &loans).unwrap();
        assert_eq!(a.links(), b.links());
        let c: ExposureNetwork<f64> = generate_ds1_like(&Ds1Config::default(), 3).unwrap();
        let d: ExposureNetwork<f64> = generate_ds1_like(&Ds1Config::default(), 3).unwrap();
        assert_eq!(c.links(), d.links());
    }

    #[test]
    fn ds1_shape() {
        let cfg = Ds1Config::default();
        let net: ExposureNetwork<f64> = generate_ds1_like(&cfg, 5).unwrap();
        assert_eq!(net.n_borrowers(), 640);
        let shared = net.overlap_mask().iter().filter(|&&x| x).count();
        assert_eq!(shared, 40);
        for l in net.links() {
            let c = net.borrowers()[l.borrower].risk_category.unwrap();
            assert!((l.weighted - l.raw * cfg.weights.weight(c)).abs() < 1e-12);
        }
    }
}
