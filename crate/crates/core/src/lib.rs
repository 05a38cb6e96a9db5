//! Codes for q-ary causal adversarial channels with errors and erasures.
//!
//! The crate computes the capacity of the channel, the decoder's reference
//! trajectories, and runs the chunked stochastic code against causal jammers
//! in seeded Monte Carlo experiments.

pub mod adversary;
pub mod capacity;
pub mod codec;
pub mod error;
pub mod params;
pub mod qmath;
pub mod rng;
pub mod sim;
pub mod trajectory;
pub mod verify;

pub use adversary::{Action, Adversary, BabblePush, BaselineKind, Budget};
pub use capacity::{capacity, CapacityResult, ChannelModel};
pub use codec::{bob_decode, Codebook, DecodeOutcome, DecodeResult, ReceivedWord};
pub use error::{Error, Result};
pub use params::ChannelParams;
pub use sim::{run_experiment, run_trial, AdversarySpec, ExperimentSummary, MessagePolicy, Transcript, TrialConfig};
pub use trajectory::{CalvinTrajectory, ErasureProfile, Reference, TrajectorySample, TrajectoryType};
pub use verify::{run_verify, VerifyConfig, VerifyReport};
