//! Simulation and analysis toolkit for counterfactual quantum key distribution.
//!
//! A single photon enters a Michelson-type interferometer and is split into a
//! path `a` that never leaves Alice's station and a path `b` that travels to
//! Bob. Bob blocks path `b` only when its polarization equals his own choice, so
//! key bits are created from rounds where the photon was found in path `a` and
//! never crossed the channel.
//!
//! The crate is organised in layers:
//!
//! - [`qcore`]: amplitude-level interferometer model and the exhaustive
//!   collapse-tree enumeration every other layer builds on.
//! - [`adversary`]: intercept-resend and channel-identification eavesdroppers
//!   acting on path `b`, plus Eve's knowledge accounting.
//! - [`protocol`]: randomized rounds, public announcements, sifting, error
//!   estimation and session statistics.
//! - [`oracle`]: hand-derived closed forms for every probability of interest,
//!   kept independent of the branch engine so the two can cross-check.
//! - [`nocloning`]: Schmidt decomposition, reduced density matrices and the
//!   overlap criterion for disturbance-free distinguishability.
//! - [`report`]: text, JSON and CSV encodings for reports and tables.

pub mod adversary;
pub mod error;
pub mod nocloning;
pub mod oracle;
pub mod protocol;
pub mod qcore;
pub mod report;
pub mod rng;

pub use adversary::{EveRoundView, EveStrategy};
pub use error::{Error, Result};
pub use nocloning::{BipartiteState, DensityMatrix, SchmidtForm};
pub use oracle::{AttackReport, DetectionTable, Expectation, QciTable, Verdict};
pub use protocol::{Announcement, Condition, RoundRecord, SessionConfig, SessionReport};
pub use qcore::{BeamSplitter, Branch, BranchTree, Detector, InterferometerConfig, Outcome, Polarization, PulseState};
