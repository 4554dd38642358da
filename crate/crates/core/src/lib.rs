//! Linear-complexity temporal-difference policy evaluation.
//!
//! The crate is organised around the pieces of an off-policy prediction study:
//!
//! - [`mdp`]: random MDPs, feature representations, policy pairs, Baird's counterexample
//!   and transition sampling.
//! - [`learners`]: the thirteen incremental O(d) update rules behind one registry.
//! - [`oracle`]: exact quantities from the MDP parameters (true values, stationary
//!   distribution, TD fixed point, MSPBE) and the brute-force forward view of
//!   true-online HTD(λ).
//! - [`metrics`]: per-step error functionals.
//! - [`harness`]: trials, parameter sweeps, sensitivity curves, aggregation and the
//!   real-time budget simulation.
//!
//! Work items in sweeps are fanned out with rayon when the `parallel` feature is on
//! (the default); without it every [`Execution`] mode runs sequentially.

pub mod error;
pub mod exec;
pub mod harness;
pub mod learners;
pub mod linalg;
pub mod mdp;
pub mod metrics;
pub mod oracle;
pub mod seed;

pub use error::{Error, Result};
pub use exec::Execution;
pub use learners::{Algorithm, HyperParams, LearnerState};
pub use mdp::{FeatureKind, FeatureMap, MdpSpec, PolicyPair, TransitionSample};
