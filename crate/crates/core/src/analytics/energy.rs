//! Energy of a broadened pulse `√P_a/(σ√(2π)) · exp(−(t−c)²/(2σ²))` inside
//! a time window, and the ISI / extended-energy specialisations.
//!
//! The squared pulse integrates to `P_a/(4√π σ) · [erf((b−c)/σ) − erf((a−c)/σ)]`
//! over `[a, b]`. The same bracket is often quoted with prefactor
//! `P_a/(2√π σ)`, which follows from dropping the ½ in
//! `∫ exp(−v²/σ²) dv = (σ√π/2)[erf]`; [`PRINTED_PREFACTOR_RATIO`] records
//! that factor so reports can show both.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::special::{erf_diff, fwhm_to_sigma};
use crate::txscheme::CenterRule;

/// Ratio between the `P_a/(2√π σ)` prefactor and the exact `P_a/(4√π σ)`.
pub const PRINTED_PREFACTOR_RATIO: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSlotQuery {
    pub a: f64,
    pub b: f64,
    pub center: f64,
    pub sigma: f64,
    pub p_a: f64,
}

impl GaussianSlotQuery {
    fn check(&self) -> Result<()> {
        if !(self.a < self.b) {
            return domain(format!("slot bounds must satisfy a < b (a = {}, b = {})", self.a, self.b));
        }
        if !(self.sigma > 0.0) {
            return domain(format!("σ must be positive, got {}", self.sigma));
        }
        Ok(())
    }
}

fn prefactor(p_a: f64, sigma: f64) -> f64 {
    p_a / (4.0 * PI.sqrt() * sigma)
}

/// `∫_a^b P_a/(2πσ²) · exp(−(t−c)²/σ²) dt`.
pub fn gaussian_slot_energy(q: &GaussianSlotQuery) -> Result<f64> {
    q.check()?;
    Ok(prefactor(q.p_a, q.sigma) * erf_diff((q.a - q.center) / q.sigma, (q.b - q.center) / q.sigma))
}

/// The same bracket with the `P_a/(2√π σ)` prefactor.
pub fn gaussian_slot_energy_printed(q: &GaussianSlotQuery) -> Result<f64> {
    Ok(PRINTED_PREFACTOR_RATIO * gaussian_slot_energy(q)?)
}

/// Energy of the whole squared pulse, `P_a/(2√π σ)`.
pub fn gaussian_total_energy(p_a: f64, sigma: f64) -> f64 {
    2.0 * prefactor(p_a, sigma)
}

/// ISI from a previous one-bit of width `t_p` into the next slot:
/// `a²·P_a/(4√πσ)·[erf((2T_s−T_p/2)/σ) − erf((T_s−T_p/2)/σ)]`.
pub fn isi_power_conventional(t_s: f64, t_p: f64, sigma: f64, p_a: f64, a_prev: u8) -> Result<f64> {
    if !(t_p > 0.0) || t_p > 2.0 * t_s {
        return domain(format!("ISI form needs 0 < T_p ≤ 2T_s (T_p = {t_p}, T_s = {t_s})"));
    }
    if a_prev == 0 {
        return Ok(0.0);
    }
    let q = GaussianSlotQuery { a: t_s - t_p / 2.0, b: 2.0 * t_s - t_p / 2.0, center: 0.0, sigma, p_a };
    Ok(f64::from(a_prev).powi(2) * gaussian_slot_energy(&q)?)
}

/// ISI of a shrunk pulse: the conventional form with `T_p' = T_p/β` and
/// `σ' = β·T_p'/(2√(2 ln 2)) = T_p/(2√(2 ln 2))`.
pub fn isi_power_shrunk(t_s: f64, t_p: f64, beta: f64, p_a: f64) -> Result<f64> {
    if !(beta >= 1.0) {
        return domain(format!("β_br must be ≥ 1, got {beta}"));
    }
    let sigma_prime = t_p / fwhm_to_sigma();
    isi_power_conventional(t_s, t_p / beta, sigma_prime, p_a, 1)
}

/// Arguments `((2T_s − T_p'/2)/σ', (T_s − T_p'/2)/σ')` of the shrunk-pulse
/// ISI bracket. For `T_p = T_s` they reduce to `2√(2 ln 2)(2 − 1/(2β))` and
/// `2√(2 ln 2)(1 − 1/(2β))`.
pub fn shrunk_isi_erf_arguments(t_s: f64, t_p: f64, beta: f64) -> (f64, f64) {
    let sigma_prime = t_p / fwhm_to_sigma();
    let tp_prime = t_p / beta;
    ((2.0 * t_s - tp_prime / 2.0) / sigma_prime, (t_s - tp_prime / 2.0) / sigma_prime)
}

/// Energy in slot `[k·T_s, (k+1)·T_s]` of a broadened pulse centred at
/// `center`.
pub fn extended_energy(k: i64, t_s: f64, sigma: f64, p_a: f64, center: f64) -> Result<f64> {
    let a = k as f64 * t_s;
    gaussian_slot_energy(&GaussianSlotQuery { a, b: a + t_s, center, sigma, p_a })
}

/// Second-slot energy of a collapsed pair centred in the first slot:
/// `P_a/(4√πσ)·[erf(3T_s/(2σ)) − erf(T_s/(2σ))]`.
pub fn p2_bracket(t_s: f64, sigma: f64, p_a: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return domain(format!("σ must be positive, got {sigma}"));
    }
    Ok(prefactor(p_a, sigma) * erf_diff(t_s / (2.0 * sigma), 3.0 * t_s / (2.0 * sigma)))
}

/// `P_a/(4√πσ)·[erf((2k+1)T_s/(2σ)) − erf((2k−1)T_s/(2σ))]`: slot `k` away
/// from the slot holding the pulse centre.
pub fn multi_run_energy(k: u32, t_s: f64, sigma: f64, p_a: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return domain(format!("σ must be positive, got {sigma}"));
    }
    let k = f64::from(k);
    Ok(prefactor(p_a, sigma) * erf_diff((2.0 * k - 1.0) * t_s / (2.0 * sigma), (2.0 * k + 1.0) * t_s / (2.0 * sigma)))
}

/// Fraction of a collapsed pair's energy that lands in its second slot.
pub fn cob_energy_fraction(t_s: f64, sigma: f64, rule: CenterRule) -> Result<f64> {
    let center = rule.center(0.0, 2, t_s);
    let e = extended_energy(1, t_s, sigma, 1.0, center)?;
    Ok(e / gaussian_total_energy(1.0, sigma))
}

/// Desired, ISI and total energy in one slot of a conventional frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSplit {
    pub desired: f64,
    pub isi: f64,
    /// Energy of the summed field, including cross terms between pulses.
    pub total: f64,
}

/// Slot `slot` of an `N_f = 1` conventional frame where bit `k`'s pulse is
/// centred at `k·T_s + T_p/2`.
pub fn power_split(bits: &[u8], slot: usize, t_s: f64, t_p: f64, sigma: f64, p_a: f64) -> Result<PowerSplit> {
    if slot >= bits.len() {
        return Err(crate::error::Error::Range(format!("slot {slot} outside {} bits", bits.len())));
    }
    let (a, b) = (slot as f64 * t_s, (slot + 1) as f64 * t_s);
    let mut desired = 0.0;
    let mut isi = 0.0;
    for (k, _) in bits.iter().enumerate().filter(|(_, &x)| x == 1) {
        let e = gaussian_slot_energy(&GaussianSlotQuery { a, b, center: k as f64 * t_s + t_p / 2.0, sigma, p_a })?;
        if k == slot {
            desired = e;
        } else {
            isi += e;
        }
    }
    let amp = p_a.sqrt() / (sigma * (2.0 * PI).sqrt());
    let field = |t: f64| -> f64 {
        let s: f64 = bits
            .iter()
            .enumerate()
            .filter(|(_, &x)| x == 1)
            .map(|(k, _)| {
                let x = t - k as f64 * t_s - t_p / 2.0;
                amp * (-x * x / (2.0 * sigma * sigma)).exp()
            })
            .sum();
        s * s
    };
    let total = crate::quadrature::integrate(field, a, b).value;
    Ok(PowerSplit { desired, isi, total })
}
