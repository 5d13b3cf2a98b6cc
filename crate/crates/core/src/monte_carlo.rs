//! Independent-default loss simulation per lender.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::ExposureNetwork;
use crate::scalar::Real;

/// Iterations simulated per random stream.
const CHUNK: usize = 8192;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub iterations: usize,
    pub q: f64,
    pub seed: u64,
    /// Downturn stress parameter; `None` keeps pds unchanged.
    pub downturn_a: Option<f64>,
    pub keep_samples: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { iterations: 100_000, q: 0.999, seed: 0, downturn_a: None, keep_samples: false }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("iterations must be >= 1".into()));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::InvalidParameter("q must lie in (0,1)".into()));
        }
        if let Some(a) = self.downturn_a {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::InvalidParameter("downturn A must lie in (0,1]".into()));
            }
        }
        Ok(())
    }

    pub fn pd_map<T: Real>(&self) -> impl Fn(T) -> T + Copy {
        let a = self.downturn_a;
        move |pd: T| match a {
            Some(a) => downturn_pd(pd, T::lit(a)),
            None => pd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult<T> {
    pub el: T,
    pub var: T,
    pub ul: T,
    pub iterations: usize,
    pub q: f64,
    pub seed: u64,
    /// Fewer than ten draws lie beyond the quantile.
    pub poorly_resolved: bool,
    /// Sorted losses, kept on request.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss_samples: Option<Vec<T>>,
}

/// Downturn pd `sqrt(A pd)`, capped at one.
pub fn downturn_pd<T: Real>(pd: T, a: T) -> T {
    (a * pd).sqrt().min(T::one())
}

/// Analytic mean `sum s pd lgd` and standard deviation
/// `sqrt(sum (s lgd)^2 pd (1 - pd))` of the simulated loss.
pub fn analytic_moments<T: Real>(shares: &[T], pd: &[T], lgd: &[T]) -> (T, T) {
    let mut mean = T::zero();
    let mut var = T::zero();
    for ((&s, &p), &l) in shares.iter().zip(pd).zip(lgd) {
        mean = mean + s * p * l;
        var = var + (s * l) * (s * l) * p * (T::one() - p);
    }
    (mean, var.sqrt())
}

/// 0-based index of the `ceil(q n)`-th order statistic. `q n` is snapped to
/// the nearest integer when within rounding of it, so 0.999 * 10^5 gives
/// 99900 and not 99901.
pub fn quantile_index(q: f64, n: usize) -> usize {
    let x = q * n as f64;
    let r = x.round();
    let rank = if (x - r).abs() <= 1e-9 * x.max(1.0) { r } else { x.ceil() };
    (rank as usize).clamp(1, n) - 1
}

/// Simulates `iterations` independent default scenarios. In each, borrower
/// `i` defaults when a uniform draw falls below `pd_i`, and the loss is the
/// sum of `s_i lgd_i` over defaulters. Returns expected loss, the VaR order
/// statistic and `UL = VaR - EL`.
///
/// Iterations are split into fixed chunks, each with its own ChaCha8 stream,
/// so the result is identical for any thread count.
pub fn simulate_losses<T: Real>(shares: &[T], pd: &[T], lgd: &[T], cfg: &SimConfig) -> Result<SimResult<T>> {
    cfg.validate()?;
    if shares.len() != pd.len() || shares.len() != lgd.len() {
        return Err(Error::Dimension("shares, pd and lgd differ in length".into()));
    }
    if pd.iter().chain(lgd).any(|&p| !(p >= T::zero() && p <= T::one())) {
        return Err(Error::InvalidParameter("pd and lgd must lie in [0,1]".into()));
    }
    let n = cfg.iterations;
    if (n as f64) * (1.0 - cfg.q) < 10.0 {
        log::warn!("quantile poorly resolved: {} iterations at q = {}", n, cfg.q);
    }
    let mut certain = T::zero();
    let mut random: Vec<(f64, T)> = Vec::new();
    for ((&s, &p), &l) in shares.iter().zip(pd).zip(lgd) {
        let loss = s * l;
        if p >= T::one() {
            certain = certain + loss;
        } else if p > T::zero() && loss > T::zero() {
            random.push((p.as_f64(), loss));
        }
    }
    let n_chunks = n.div_ceil(CHUNK);
    let chunks: Vec<Vec<T>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(n - c * CHUNK);
            (0..len)
                .map(|_| {
                    let mut loss = certain;
                    for &(p, l) in &random {
                        if rng.random::<f64>() < p {
                            loss = loss + l;
                        }
                    }
                    loss
                })
                .collect()
        })
        .collect();
    let mut losses: Vec<T> = chunks.into_iter().flatten().collect();
    let el = losses.iter().copied().sum::<T>() / T::lit(n as f64);
    losses.par_sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite losses"));
    let var = losses[quantile_index(cfg.q, n)];
    Ok(SimResult {
        el,
        var,
        ul: var - el,
        iterations: n,
        q: cfg.q,
        seed: cfg.seed,
        poorly_resolved: (n as f64) * (1.0 - cfg.q) < 10.0,
        loss_samples: cfg.keep_samples.then_some(losses),
    })
}

/// Simulates one lender of a network using raw exposure shares and the
/// configured downturn.
pub fn simulate_lender<T: Real>(net: &ExposureNetwork<T>, lender: usize, cfg: &SimConfig) -> Result<SimResult<T>> {
    let total = net.row_total_raw(lender);
    let map = cfg.pd_map::<T>();
    let mut shares = Vec::new();
    let mut pd = Vec::new();
    let mut lgd = Vec::new();
    for (k, raw, _) in net.row(lender) {
        let b = &net.borrowers()[k];
        shares.push(raw / total);
        pd.push(map(b.pd.ok_or_else(|| Error::MissingPd(b.id.clone()))?));
        lgd.push(b.lgd.ok_or_else(|| Error::MissingLgd(vec![b.id.clone()]))?);
    }
    simulate_losses(&shares, &pd, &lgd, cfg)
}
