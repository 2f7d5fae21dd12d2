use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Operation and expected-transmission counts for `N` bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityModel {
    pub conventional_ops: u64,
    pub proposed_ops: u64,
    pub conventional_transmissions: f64,
    pub proposed_transmissions: f64,
}

/// Conventional: one check and one action per bit (`2N`), `N·p` pulses.
/// Proposed: two checks and two actions per pair plus two for an odd tail
/// (`4⌊N/2⌋ + 2δ = 2N`), and `⌊N/2⌋(2p − p²) + δ·p` pulses, which is
/// `N(p − p²/2)` for even `N`.
pub fn complexity_model(n: u64, p: f64) -> Result<ComplexityModel> {
    if n == 0 {
        return domain("N must be at least 1");
    }
    if !(0.0..=1.0).contains(&p) {
        return domain(format!("p must lie in [0, 1], got {p}"));
    }
    let (pairs, tail) = (n / 2, n % 2);
    Ok(ComplexityModel {
        conventional_ops: 2 * n,
        proposed_ops: 4 * pairs + 2 * tail,
        conventional_transmissions: n as f64 * p,
        proposed_transmissions: pairs as f64 * (2.0 * p - p * p) + tail as f64 * p,
    })
}
