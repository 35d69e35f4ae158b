//! Actuarially fair Pareto optimal (AFPO) risk sharing.
//!
//! A pool of independent participants brings losses `X_i` on a common
//! monetary lattice. The solver finds disutility weights `α` and a multiplier
//! curve `J` such that the Borch rule `h_i(s) = I_i(J(s)/α_i)` allocates every
//! aggregate loss in full while each participant's expected contribution
//! equals their expected loss.
//!
//! * [`dist`]: lattice distributions, FFT aggregation, gamma discretization.
//! * [`preferences`]: disutility families and their inverse marginals.
//! * [`solver`]: the composite fixed-point iteration and its diagnostics.
//! * [`oracles`]: closed-form rules used as ground truth.
//! * [`stochorder`]: convex-order diagnostics by CDF sign changes.
//! * [`config`] and [`app`]: the pool file format and the CLI operations.

pub mod app;
pub mod config;
pub mod dist;
pub mod error;
pub mod oracles;
pub mod preferences;
pub mod roots;
pub mod solver;
pub mod stochorder;
pub mod sum;

pub use dist::{CompoundPoissonSpec, LatticeDistribution};
pub use error::{Error, Result};
pub use preferences::DisutilityModel;
pub use solver::{iterate, FixedPointReport, MultiplierCurve, Pool, SharingRule, SolverSettings, WeightVector};
