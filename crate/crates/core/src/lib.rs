//! Synchronization analysis and simulation for networks of Goodwin-type
//! cyclic feedback oscillators coupled through saturated diffusive inputs.
//!
//! - [`kinetics`]: the scalar maps (Michaelis-Menten, Hill, saturation, ...)
//! - [`graph`]: coupling graphs, Laplacians and the algebraic connectivity
//! - [`oscillator`]: the cyclic feedback model and the Gonze preset
//! - [`analysis`]: ultimate bounds, secant gains and the coupling threshold
//! - [`netsim`]: network simulation and synchronization metrics
//! - [`scenario`]: JSON scenarios and the `simulate` / `analyze` runners
//! - [`checks`], [`cli`]: the property suite and the command-line front end

// `!(x > 0.0)` is used deliberately so NaN is rejected along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod checks;
pub mod cli;
pub mod error;
pub mod format;
pub mod graph;
pub mod kinetics;
pub mod linalg;
pub mod netsim;
pub mod oscillator;
pub mod scenario;

pub use analysis::{analyze, gain_report, min_coupling_gain, ultimate_bounds, AnalysisReport, GainReport};
pub use error::{Error, Result};
pub use graph::CouplingGraph;
pub use kinetics::KineticFunction;
pub use netsim::{simulate_driven, sync_metric, Network, NetworkState, Protocol, SimConfig, Trajectory};
pub use oscillator::{gonze_model, CfsModel, GonzeParams};
