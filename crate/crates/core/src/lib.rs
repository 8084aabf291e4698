//! Single-photon driven Λ emitter: dynamics, energetics, environment
//! entropy, a brute-force discrete-mode cross-check and drive optimization.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod entropy;
pub mod error;
pub mod model;
pub mod optimize;
pub mod oracle;
pub mod quad;
pub mod thermo;

pub use error::{Error, Result};
pub use model::{
    envelope_at, make_pulse, EnvelopeShape, InitialMixture, LambdaSystem, PulseSpec, SimGrid,
};
