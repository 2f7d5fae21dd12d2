//! Link-level simulation and closed-form analysis of adaptive pulse-width
//! OOK over a molecular-absorption THz channel with temporal broadening.
//!
//! The crate is layered bottom-up: [`channel`] models the line-of-sight
//! link, [`waveform`] builds and propagates sampled frames, [`txscheme`]
//! turns bits into pulse plans, [`detector`] decides bits from slot
//! energies, [`analytics`] holds the closed forms, and [`montecarlo`] runs
//! seeded experiments on top of all of them.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod channel;
pub mod detector;
pub mod error;
pub mod montecarlo;
pub mod quadrature;
pub mod special;
pub mod txscheme;
pub mod waveform;

pub use error::{Error, Result};
