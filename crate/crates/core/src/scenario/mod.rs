//! Experiments on the exposure network: risk-preserving randomisation,
//! counterparty downgrades, overlap rewiring, per-borrower stress and
//! synthetic portfolio generators.
//!
//! Stochastic operations take an explicit seed. Trial `t` draws from the
//! ChaCha8 stream `t` of that seed, so results do not depend on how trials
//! are scheduled across threads.

mod downgrade;
mod overlap;
mod randomize;
mod stress;
mod synth;

pub use downgrade::{downgrade, DowngradeReport};
pub use overlap::{grow_overlap, merge_borrowers, OverlapTrajectory};
pub use randomize::{randomize_within_risk, randomized_network, Histogram, LenderFingerprint, RandomizationResult};
pub use stress::{borrower_stress, system_hhi, SensitivityRecord};
pub use synth::{generate_ds1_like, generate_ds2_like, synthetic_loans, Ds1Config, Ds2Config, Loan};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}
