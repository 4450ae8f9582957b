//! Compact flow representations and early traffic classification.
//!
//! The crate is `no_std` (it needs `alloc`) so the representation and
//! classification paths can be embedded next to a packet pipeline. IO,
//! file formats and the command-line front end live in the `echoflow` crate.
//!
//! The main pieces:
//!
//! - [`flow`]: packet records, flow assembly, filtering, balancing and
//!   stratified folds.
//! - [`binning`]: uniform, logarithmic and arbitrary boundary vectors with a
//!   direct-access lookup for packet sizes.
//! - [`repr`]: `dist`, FlowPic, time-series and statistical representations,
//!   including the in-place updates used between early-exit stages.
//! - [`classifier`]: multiclass softmax regression.
//! - [`optimizer`]: boundary selection (uniform, feature selection, JSD, model
//!   accuracy) driven by a Tree-structured Parzen Estimator, plus nested
//!   cross-validation.
//! - [`cascade`]: the confidence-gated early-exit cascade.
//! - [`synth`]: labeled synthetic corpora with planted structure.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod binning;
pub mod cascade;
pub mod classifier;
mod error;
pub mod flow;
pub mod optimizer;
pub mod repr;
pub mod rng;
pub mod synth;

pub use binning::{Binning, Domain};
pub use cascade::{CascadeModel, EcOutcome, ExitSchedule};
pub use classifier::{SoftmaxModel, TrainConfig};
pub use error::{Error, Result};
pub use flow::{Direction, Flow, FlowKey, LabeledDataset, Packet, PacketRecord};
pub use repr::DistRepr;
