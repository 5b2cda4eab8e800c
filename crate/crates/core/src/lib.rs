//! Two-color randomly reinforced urns: exact simulation, path statistics,
//! ensemble verification of the limit laws, and a constructive Skorokhod
//! embedding of the urn martingale into Brownian motion.
//!
//! The crate is `no_std` with `alloc`. Everything here is a pure function of
//! its inputs and an explicit random stream; IO, configuration files and
//! parallel execution live in the companion `rru-lab` crate.
//!
//! Module map:
//!
//! | module        | contents                                                   |
//! |---------------|------------------------------------------------------------|
//! | [`law`]       | reinforcement distributions with validated moments         |
//! | [`urn`]       | urn state, one draw/reinforce step                          |
//! | [`trajectory`]| checkpointed runs, dense prefixes                           |
//! | [`enumerate`] | exact small-horizon law of the urn                          |
//! | [`stats`]     | proportions, mixing scales, log-ratio decomposition, bridges|
//! | [`harness`]   | replicate runs and the statistical checks over ensembles   |
//! | [`skorokhod`] | exit-pair embedding and the embedded urn martingale         |

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod accum;
pub mod enumerate;
pub mod harness;
pub mod ks;
pub mod law;
pub mod math;
pub mod rng;
pub mod schedule;
pub mod skorokhod;
pub mod stats;
pub mod trajectory;
pub mod urn;

pub use law::{LawError, LawKind, ReinforcementLaw};
pub use urn::{Color, DrawRecord, LawPair, Regime, UrnError, UrnState};
