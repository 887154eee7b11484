//! Itô's formula for finite-variation Lévy processes and weakly
//! differentiable functions, with barrier-option pricing by PIDE and by
//! Monte Carlo.
//!
//! * [`levy`]: Lévy measures, truncated path simulation, finite-variation
//!   checks.
//! * [`weakfn`]: weakly differentiable test functions and mollification.
//! * [`ito`]: pathwise assembly of the Itô identity, the generator and the
//!   semimartingale decomposition, occupation times.
//! * [`pide`]: implicit-explicit finite differences for the up-and-out call.
//! * [`mc`]: Feynman–Kac Monte Carlo with exact barrier monitoring.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod ito;
pub mod levy;
pub mod mc;
pub mod pide;
pub mod quad;
pub mod rng;
pub mod weakfn;

pub use error::{Error, Result};
pub use ito::{
    generator_apply, ito_residual_study, ito_rhs, martingale_part, occupation_time, GeneratorOptions, ItoDecomposition,
    ResidualRow, SemimartingaleDecomposition, TargetSet,
};
pub use levy::{
    check_assumption_ac, simulate_path, tail_intensity, truncation_bias_bound, LevyMeasure, LevyModel, ModelSpec,
    PathSimulator, SamplePath,
};
pub use mc::{martingale_diagnostic, martingale_drift, price_barrier_mc, BarrierContract, MCEstimate, Monitoring};
pub use pide::{integral_operator, interpolate_price, solve_pide, PideParams, PideSolution};
pub use weakfn::{extend_reflect, mollify, Mollifier, SharedFunction, WeakFunction};

/// Crate version, echoed into output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
