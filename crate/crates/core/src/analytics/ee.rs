//! Energy-efficiency gains of the adaptive encoder relative to conventional
//! OOK.
//!
//! Several average-gain formulas are in circulation and they disagree; all
//! of them are returned, labelled, and none is preferred.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EePrediction {
    pub p: f64,
    pub beta: f64,
    /// Saving of a `11` pair: one pulse instead of two.
    pub eta_11: f64,
    /// Saving of a `10`/`01` pair: `1 − 1/β`.
    pub eta_10: f64,
    /// `0.5 − 1/β`.
    pub average_inverse_beta: f64,
    /// `0.5 − 0.5/β`, which gives 25 % and 37.5 % at β = 2, 4.
    pub average_half_inverse_beta: f64,
    /// `1 − [p² + 2p(1−p)/β]/(2p)`: expected saving of the disjoint-pairs
    /// encoder as a fraction of conventional energy.
    pub average_exact_accounting: f64,
    /// `p²·η11 + 2p(1−p)·η10`: pattern-probability weighting of the
    /// per-pattern gains.
    pub average_pattern_weighted: f64,
    /// Collapse saving per bit, normalised by `N·N_f·P_a·T_p`: `p²/2`.
    pub collapse_share_of_reference: f64,
    /// Shrink saving per bit on the same normalisation: `p(1−p)(1−1/β)`.
    pub shrink_share_of_reference: f64,
}

pub fn ee_gains(p: f64, beta: f64) -> Result<EePrediction> {
    if !(0.0..=1.0).contains(&p) {
        return domain(format!("p must lie in [0, 1], got {p}"));
    }
    if !(beta >= 1.0) {
        return domain(format!("β_br must be ≥ 1, got {beta}"));
    }
    let eta_11 = 0.5;
    let eta_10 = 1.0 - 1.0 / beta;
    let mut out = EePrediction {
        p,
        beta,
        eta_11,
        eta_10,
        average_inverse_beta: 0.0,
        average_half_inverse_beta: 0.0,
        average_exact_accounting: 0.0,
        average_pattern_weighted: 0.0,
        collapse_share_of_reference: 0.0,
        shrink_share_of_reference: 0.0,
    };
    if p == 0.0 {
        return Ok(out);
    }
    out.average_inverse_beta = 0.5 - 1.0 / beta;
    out.average_half_inverse_beta = 0.5 - 0.5 / beta;
    out.average_exact_accounting = 1.0 - (p * p + 2.0 * p * (1.0 - p) / beta) / (2.0 * p);
    out.average_pattern_weighted = p * p * eta_11 + 2.0 * p * (1.0 - p) * eta_10;
    out.collapse_share_of_reference = p * p / 2.0;
    out.shrink_share_of_reference = p * (1.0 - p) * eta_10;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::txscheme::{encode_adaptive, encode_conventional, plan_energy, EncoderConfig};
    use crate::waveform::PulseConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pattern_gains() {
        for beta in [1.0, 2.0, 3.5, 10.0] {
            assert_eq!(ee_gains(0.5, beta).unwrap().eta_11, 0.5);
        }
        assert_eq!(ee_gains(0.5, 2.0).unwrap().eta_10, 0.5);
        assert_eq!(ee_gains(0.5, 4.0).unwrap().eta_10, 0.75);
    }

    #[test]
    fn average_variants() {
        let g = ee_gains(0.5, 4.0).unwrap();
        assert_eq!(g.average_exact_accounting, 0.625);
        assert_eq!(g.average_inverse_beta, 0.25);
        assert_eq!(g.average_half_inverse_beta, 0.375);
        assert_eq!(g.collapse_share_of_reference, 0.125);
        let g2 = ee_gains(0.5, 2.0).unwrap();
        assert_eq!(g2.average_inverse_beta, 0.0);
        assert_eq!(g2.average_half_inverse_beta, 0.25);
        let z = ee_gains(0.0, 4.0).unwrap();
        assert_eq!(z.average_exact_accounting, 0.0);
        assert!(ee_gains(1.1, 2.0).is_err());
        assert!(ee_gains(0.5, 0.9).is_err());
    }

    #[test]
    fn exact_accounting_matches_pulse_accounting() {
        let cfg = PulseConfig::new(0.5e-9, 2.5e-9, 1, 1.0, 4.0, 16.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let bits: Vec<u8> = (0..200_000).map(|_| rng.random_bool(0.5) as u8).collect();
        let conv = plan_energy(&encode_conventional(&bits, &cfg).unwrap());
        let adap = plan_energy(&encode_adaptive(&bits, &cfg, &EncoderConfig::new(4.0)).unwrap());
        let gain = 1.0 - adap / conv;
        assert!((gain - 0.625).abs() < 0.005, "{gain}");
    }
}
