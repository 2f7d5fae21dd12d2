//! Closed-form slot energies, ISI, BER and energy-efficiency models.

mod ber;
mod complexity;
mod ee;
mod energy;

pub use ber::*;
pub use complexity::*;
pub use ee::*;
pub use energy::*;
