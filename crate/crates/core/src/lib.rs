//! Statistical QoS provisioning for fixed-rate transmission over a two-state
//! Markov fading channel fed by Markovian ON/OFF sources.
//!
//! The crate covers the analytic chain from link parameters to delay
//! guarantees, plus a Monte Carlo simulator that checks it:
//!
//! * [`channel`]: SNR, rate and memory decay mapped onto an ON/OFF service chain.
//! * [`capacity`]: closed-form effective capacity and its channel-memory limits.
//! * [`source`]: DTMS, MFS and MMPS arrival models and their effective bandwidths.
//! * [`matching`]: maximum supportable arrival rates where bandwidth meets capacity.
//! * [`optimizer`]: the fixed rate that maximizes effective capacity.
//! * [`qos`]: delay-violation probabilities and reliability/latency tradeoffs.
//! * [`sim`]: slotted queue simulation and importance-sampled estimators of
//!   effective capacity and bandwidth.
//! * [`sweep`]: parameter sweeps that regenerate the figure data as CSV/JSON.
//!
//! ```
//! use qosprov::{capacity, channel::ChannelSpec, QosExponent};
//!
//! let link = ChannelSpec::new(10.0, 3.0, 50.0)?;
//! let c_e = capacity::effective_capacity(&link, QosExponent::new(1.0)?)?;
//! assert!((c_e.value - 1.4448).abs() < 1e-3);
//! # Ok::<(), qosprov::Error>(())
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod channel;
pub mod cli;
pub mod error;
pub mod matching;
pub mod numeric;
pub mod optimizer;
pub mod qos;
pub mod sim;
pub mod source;
pub mod sweep;

pub use capacity::QosExponent;
pub use channel::ChannelSpec;
pub use error::{Error, Result};
pub use source::{SourceFamily, SourceModel};
