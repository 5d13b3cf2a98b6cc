//! System-wide credit-concentration risk from overlapping loan portfolios.
//!
//! Builds the risk-weighted bipartite lender/borrower network, projects it
//! onto lenders (the impact matrix), derives per-lender and system Dependency
//! Indices, and turns dependency increments into a co-exposure capital add-on
//! on top of IRB capital and the granularity adjustment. Monte Carlo loss
//! simulation and a least-squares fit calibrate the add-on.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the scalar to `f64`, which is what the CLI uses.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod calibration;
pub mod coexposure;
pub mod concentration;
pub mod error;
pub mod ingest;
pub mod irb;
pub mod monte_carlo;
pub mod network;
pub mod projection;
pub mod scalar;
pub mod scenario;

pub use error::{Error, Result};
pub use network::{Borrower, ExposureNetwork, Lender, Link, StepWeightParams};
pub use projection::{asymmetry_check, borrower_projection, impact_matrix, ImpactMatrix};
pub use scalar::Real;

pub type Network = ExposureNetwork<f64>;
pub type Network32 = ExposureNetwork<f32>;
pub type Impact = ImpactMatrix<f64>;
pub type Impact32 = ImpactMatrix<f32>;
pub type Concentration = concentration::ConcentrationReport<f64>;
pub type Capital = irb::CapitalParams<f64>;
pub type Coexposure = coexposure::CoexposureParams<f64>;
pub type Sim = monte_carlo::SimResult<f64>;
