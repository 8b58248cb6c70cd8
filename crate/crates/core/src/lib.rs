//! Delayed Cucker-Smale flocking: simulation engines and flocking
//! certificates.

pub mod dde;
pub mod analysis;
pub mod diameter;
pub mod digraph;
pub mod discrete;
pub mod error;
pub mod harness;
pub mod interaction;
pub mod network;

pub use analysis::{
    check_continuous, check_discrete, FlockingCertificate, ModelParams, Regime, Verdict,
};
pub use dde::{integrate, InitialHistory, Trajectory};
pub use discrete::{simulate_discrete, DiscreteHistory, DiscreteSystem, DiscreteTrajectory};
pub use diameter::{check_monotone_diameter, DiameterSeries, MonotonicityReport};
pub use digraph::{Digraph, GraphMetrics, Hops};
pub use error::{FlockError, Result};
pub use interaction::{DelayProfile, WeightFunction};
pub use network::Network;
