//! Bit-error probabilities under the Gaussian slot-energy model.
//!
//! Slot-energy variances use `σ² = (Σ E²)/M`, where `M = B·T_s` is the
//! time-bandwidth product of the integration window (the number of
//! independent noise dimensions per slot).

use serde::{Deserialize, Serialize};

use crate::detector::{threshold, EnergyModel, ThresholdRule};
use crate::error::{Error, Result};
use crate::special::{erfc, fwhm_to_sigma, norm_cdf};
use crate::txscheme::CenterRule;

use super::energy::cob_energy_fraction;

/// How ISI energy from the previous one-bit is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum IsiModel {
    /// `E_ISI = α · E_signal`.
    Alpha(f64),
    /// `E_ISI = E_signal · (1 − erf((T_s − T_p/2)/σ))`.
    GaussianTail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerInputs {
    /// Received energy of one conventional (unshrunk) bit, J.
    pub e_signal: f64,
    /// Mean noise energy per slot `E_w`, J.
    pub e_noise: f64,
    pub isi: IsiModel,
    pub beta: f64,
    pub t_s: f64,
    pub t_p: f64,
    pub n_f: usize,
    /// Time-bandwidth product `M = B·T_s`.
    pub dof: f64,
}

impl BerInputs {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Domain(m));
        if !(self.e_signal >= 0.0) || !(self.e_noise >= 0.0) {
            return bad(format!("energies must be non-negative (E_signal = {}, E_w = {})", self.e_signal, self.e_noise));
        }
        if let IsiModel::Alpha(a) = self.isi {
            if !(0.0..1.0).contains(&a) {
                return bad(format!("α must lie in [0, 1), got {a}"));
            }
        }
        if !(self.beta >= 1.0) {
            return bad(format!("β_br must be ≥ 1, got {}", self.beta));
        }
        if !(self.t_s > 0.0) || !(self.t_p > 0.0) || !(self.dof > 0.0) || self.n_f == 0 {
            return bad("T_s, T_p, M must be positive and N_f ≥ 1".into());
        }
        Ok(())
    }

    /// Broadened σ of an unshrunk pulse.
    pub fn sigma(&self) -> f64 {
        self.beta * self.t_p / fwhm_to_sigma()
    }

    pub fn isi_energy(&self) -> f64 {
        match self.isi {
            IsiModel::Alpha(a) => a * self.e_signal,
            IsiModel::GaussianTail => self.e_signal * erfc((self.t_s - self.t_p / 2.0) / self.sigma()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerBreakdown {
    pub model: EnergyModel,
    pub gamma: f64,
    pub fell_back: bool,
    /// `Pr(E_1 < γ)`.
    pub p_miss: f64,
    /// `Pr(E_0 > γ)`.
    pub p_false_alarm: f64,
    /// `½(p_miss + p_false_alarm)`.
    pub ber: f64,
}

/// `½[Φ((γ−μ1)/σ1) + 1 − Φ((γ−μ0)/σ0)]` at the threshold given by `rule`.
/// Indistinguishable hypotheses (`μ1 = μ0`) give ½.
pub fn ber_from_model(model: &EnergyModel, rule: ThresholdRule) -> Result<BerBreakdown> {
    if !(model.sigma0 > 0.0) || !(model.sigma1 > 0.0) {
        return Err(Error::DegenerateModel(format!("zero slot-energy spread (σ1 = {}, σ0 = {})", model.sigma1, model.sigma0)));
    }
    if model.mu1 == model.mu0 {
        return Ok(BerBreakdown { model: *model, gamma: model.mu0, fell_back: false, p_miss: 0.5, p_false_alarm: 0.5, ber: 0.5 });
    }
    let t = threshold(model, rule)?;
    let p_miss = norm_cdf((t.gamma - model.mu1) / model.sigma1);
    let p_false_alarm = norm_cdf(-(t.gamma - model.mu0) / model.sigma0);
    Ok(BerBreakdown {
        model: *model,
        gamma: t.gamma,
        fell_back: t.fell_back,
        p_miss,
        p_false_alarm,
        ber: 0.5 * (p_miss + p_false_alarm),
    })
}

/// Model for a one-slot carrying `e_one` signal energy against a pure-noise
/// zero-slot.
fn isi_free_model(e_one: f64, e_w: f64, dof: f64) -> EnergyModel {
    EnergyModel {
        mu1: e_one + e_w,
        sigma1: ((e_w * e_w + e_one * e_one) / dof).sqrt(),
        mu0: e_w,
        sigma0: (e_w * e_w / dof).sqrt(),
    }
}

/// Conventional OOK with ISI present in both hypotheses.
pub fn ber_conventional(input: &BerInputs, rule: ThresholdRule) -> Result<BerBreakdown> {
    input.validate()?;
    let (es, ei, ew, m) = (input.e_signal, input.isi_energy(), input.e_noise, input.dof);
    let model = EnergyModel {
        mu1: es + ei + ew,
        sigma1: ((es * es + ei * ei + ew * ew) / m).sqrt(),
        mu0: ei + ew,
        sigma0: ((ei * ei + ew * ew) / m).sqrt(),
    };
    ber_from_model(&model, rule)
}

/// Shrunk isolated one: `E_signal/β`, no ISI.
pub fn ber_alternating(input: &BerInputs, rule: ThresholdRule) -> Result<BerBreakdown> {
    input.validate()?;
    ber_from_model(&isi_free_model(input.e_signal / input.beta, input.e_noise, input.dof), rule)
}

/// Each bit of a collapsed `11` pair, detected from the fraction of the
/// pulse energy that lands in its slot.
pub fn ber_cob(input: &BerInputs, rule: ThresholdRule, center: CenterRule) -> Result<BerBreakdown> {
    input.validate()?;
    ber_from_model(&isi_free_model(cob_signal_energy(input, center)?, input.e_noise, input.dof), rule)
}

/// `E_signal,con`: signal energy in the weaker slot of a collapsed pair.
pub fn cob_signal_energy(input: &BerInputs, center: CenterRule) -> Result<f64> {
    let sigma = input.sigma();
    let second = cob_energy_fraction(input.t_s, sigma, center)?;
    let first = match center {
        CenterRule::Geometric => second,
        CenterRule::Leading => crate::special::erf(input.t_s / (2.0 * sigma)),
    };
    Ok(input.e_signal * first.min(second))
}

/// Per-pattern error terms weighted by pattern probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerComponents {
    pub cob: f64,
    pub alternating: f64,
    /// Error rate of an all-zero pair (false alarms on pure noise).
    pub idle: f64,
}

/// `p²·cob + 2p(1−p)·alternating + (1−p)²·idle`.
pub fn ber_average(p: f64, c: &BerComponents) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("p must lie in [0, 1], got {p}")));
    }
    Ok(p * p * c.cob + 2.0 * p * (1.0 - p) * c.alternating + (1.0 - p) * (1.0 - p) * c.idle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inputs(es: f64, ew: f64, alpha: f64, beta: f64) -> BerInputs {
        BerInputs { e_signal: es, e_noise: ew, isi: IsiModel::Alpha(alpha), beta, t_s: 1.0, t_p: 1.0, n_f: 1, dof: 20.0 }
    }

    #[test]
    fn zero_signal_is_a_coin_flip() {
        let b = ber_conventional(&inputs(0.0, 1.0, 0.3, 2.0), ThresholdRule::Midpoint).unwrap();
        assert_eq!(b.ber, 0.5);
        assert!(ber_conventional(&inputs(1.0, 0.0, 0.0, 2.0), ThresholdRule::Midpoint).is_err());
    }

    #[test]
    fn conventional_decreases_with_snr() {
        let mut last = 1.0;
        for snr_db in 0..25 {
            let es = 10f64.powf(f64::from(snr_db) / 10.0);
            let b = ber_conventional(&inputs(es, 1.0, 0.3, 2.0), ThresholdRule::Midpoint).unwrap().ber;
            assert!(b <= last && (0.0..=0.5).contains(&b));
            last = b;
        }
    }

    #[test]
    fn conventional_alpha_terms() {
        let input = inputs(8.0, 1.0, 0.3, 2.0);
        let b = ber_conventional(&input, ThresholdRule::Midpoint).unwrap();
        // ISI shifts both means by α·E_signal, so the midpoint sits E_signal/2
        // from each of them.
        let gap = input.e_signal / 2.0;
        assert!((b.gamma - (1.6 * 8.0 + 2.0) / 2.0).abs() < 1e-12);
        assert_eq!(b.p_false_alarm, norm_cdf(-gap / b.model.sigma0));
        assert_eq!(b.p_miss, norm_cdf(-gap / b.model.sigma1));
    }

    #[test]
    fn alternating_examples() {
        let a = ber_alternating(&inputs(5.0, 1.0, 0.3, 1.0), ThresholdRule::Midpoint).unwrap();
        let c = ber_conventional(&inputs(5.0, 1.0, 0.0, 1.0), ThresholdRule::Midpoint).unwrap();
        assert!((a.ber - c.ber).abs() < 1e-15);

        let input = inputs(6.0, 1.0, 0.0, 3.0);
        let b = ber_alternating(&input, ThresholdRule::Midpoint).unwrap();
        assert_eq!(b.p_miss, norm_cdf(-input.e_signal / (2.0 * input.beta * b.model.sigma1)));

        let mut last = 0.0;
        for i in 0..40 {
            let beta = 1.0 + 0.25 * f64::from(i);
            let p = ber_alternating(&inputs(6.0, 1.0, 0.0, beta), ThresholdRule::Midpoint).unwrap().ber;
            assert!(p > last);
            last = p;
        }
    }

    #[test]
    fn cob_energy_falls_with_broadening() {
        let base = |beta: f64| BerInputs { e_signal: 1.0, ..inputs(1.0, 0.1, 0.0, beta) };
        let mut last = f64::INFINITY;
        for i in 0..=45 {
            let beta = 1.5 + 0.1 * f64::from(i);
            let e = cob_signal_energy(&base(beta), CenterRule::Geometric).unwrap();
            assert!(e < last, "β = {beta}");
            last = e;
        }
        // Leading-centred pairs only start losing energy once the pulse is
        // wide enough to fill the second slot.
        let mut last = f64::INFINITY;
        for i in 0..=25 {
            let beta = 3.5 + 0.1 * f64::from(i);
            let e = cob_signal_energy(&base(beta), CenterRule::Leading).unwrap();
            assert!(e < last, "β = {beta}");
            last = e;
        }
    }

    #[test]
    fn cob_without_broadening_misses_second_bit() {
        let input = BerInputs { t_p: 0.01, beta: 1.0, ..inputs(10.0, 0.1, 0.0, 1.0) };
        let b = ber_cob(&input, ThresholdRule::Midpoint, CenterRule::Leading).unwrap();
        assert_eq!(b.ber, 0.5);
    }

    #[test]
    fn optimal_rule_never_worse() {
        for es in [0.5, 2.0, 5.0, 10.0] {
            let i = inputs(es, 1.0, 0.2, 2.0);
            let mid = ber_conventional(&i, ThresholdRule::Midpoint).unwrap().ber;
            let opt = ber_conventional(&i, ThresholdRule::Optimal).unwrap().ber;
            assert!(opt <= mid + 1e-15);
        }
    }

    #[test]
    fn gaussian_tail_isi() {
        let i = BerInputs { isi: IsiModel::GaussianTail, ..inputs(2.0, 1.0, 0.0, 3.0) };
        let s = 3.0 / fwhm_to_sigma();
        assert!((i.isi_energy() - 2.0 * erfc(0.5 / s)).abs() < 1e-15);
    }

    #[test]
    fn average_weights() {
        let c = BerComponents { cob: 0.1, alternating: 0.2, idle: 0.05 };
        assert_eq!(ber_average(0.0, &c).unwrap(), 0.05);
        assert_eq!(ber_average(1.0, &c).unwrap(), 0.1);
        assert!((ber_average(0.5, &c).unwrap() - (0.025 + 0.1 + 0.0125)).abs() < 1e-16);
        assert!(ber_average(1.5, &c).is_err());
    }

    proptest! {
        #[test]
        fn ber_is_a_probability(es in 0.0f64..100.0, ew in 0.01f64..10.0, alpha in 0.0f64..0.99, beta in 1.0f64..8.0) {
            let i = inputs(es, ew, alpha, beta);
            for b in [
                ber_conventional(&i, ThresholdRule::Midpoint).unwrap().ber,
                ber_alternating(&i, ThresholdRule::Midpoint).unwrap().ber,
                ber_cob(&i, ThresholdRule::Midpoint, CenterRule::Geometric).unwrap().ber,
            ] {
                prop_assert!((0.0..=0.5).contains(&b));
            }
        }

        #[test]
        fn ber_is_continuous(es in 0.1f64..50.0, ew in 0.1f64..5.0, alpha in 0.0f64..0.9) {
            let a = ber_conventional(&inputs(es, ew, alpha, 2.0), ThresholdRule::Midpoint).unwrap().ber;
            let b = ber_conventional(&inputs(es * (1.0 + 1e-9), ew, alpha, 2.0), ThresholdRule::Midpoint).unwrap().ber;
            prop_assert!((a - b).abs() < 1e-6);
        }
    }
}
