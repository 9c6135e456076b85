//! Electromagnetic actuator (EMA) with flux fringing, controlled by a
//! backstepping outer loop and a first-order sliding-mode current loop.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: reluctance-network plant, fringing surface models and the
//!   three-state vector field.
//! * [`bounds`]: interval envelopes of reluctance, inductance and force
//!   coefficient; the only plant knowledge the controller uses.
//! * [`controller`]: virtual current, sliding gain, switching law and the
//!   gain certificate.
//! * [`sim`]: fixed-step closed-loop integration and random fringing
//!   realizations.
//! * [`analysis`]: step-response metrics and Lyapunov checks.
//! * [`config`] / [`io`]: TOML scenario files and CSV exchange formats.

// `!(a > b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bounds;
pub mod config;
pub mod controller;
mod error;
pub mod io;
pub mod model;
pub mod sim;

pub use error::{Error, Result};
