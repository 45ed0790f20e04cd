//! Simulation and verification of the three-photon GHZ experiment under a
//! contextual pre-existing-state model.
//!
//! Each experimental run carries one pre-existing system polarization state
//! for every one of the eight possible system measurements (a [`Sheet`]).
//! Choosing a measurement only reveals the matching entry. The crate provides
//! the exact quantum predictions ([`polarization`]), the sampler for that
//! model ([`sampler`]), the non-contextual local baseline that cannot satisfy
//! the GHZ parity constraints ([`baseline`]), and a Monte Carlo harness that
//! checks the model against the Born rule ([`harness`]).

pub mod baseline;
pub mod error;
pub mod harness;
pub mod polarization;
pub mod report;
pub mod rng;
pub mod sampler;

pub use baseline::LocalAssignment;
pub use error::{Error, Result};
pub use harness::{ComparisonReport, Policy, RunConfig, TallyTable};
pub use polarization::{
    BornDistribution, Context, ExpansionTable, Hv, Outcome, Setting, StateVector, SystemOutcome,
};
pub use rng::RandomStream;
pub use sampler::{Sheet, SheetReport};
