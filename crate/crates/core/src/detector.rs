//! Noncoherent energy detection: per-slot energy integration, threshold
//! selection under the Gaussian energy model, and hard decisions.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::SampledWaveform;

/// Per-sample slot energies `Σ y² Δt` over consecutive slots of length `t_s`.
pub fn slot_energies(w: &SampledWaveform, t_s: f64) -> Result<Vec<f64>> {
    let sps_f = w.sample_rate * t_s;
    let sps = sps_f.round();
    if !(sps >= 1.0) || (sps_f - sps).abs() > 1e-6 * sps_f {
        return Err(Error::Framing(format!("slot of {t_s} s is {sps_f} samples, not an integer")));
    }
    let sps = sps as usize;
    if !w.len().is_multiple_of(sps) {
        return Err(Error::Framing(format!("{} samples is not a whole number of {sps}-sample slots", w.len())));
    }
    let dt = 1.0 / w.sample_rate;
    Ok(w.samples.chunks_exact(sps).map(|c| c.iter().map(|x| x * x).sum::<f64>() * dt).collect())
}

/// `E[E_w] = N0 · B · T_s`.
pub fn noise_energy_mean(n0: f64, bandwidth: f64, t_s: f64) -> Result<f64> {
    if !(n0 >= 0.0) || !(bandwidth > 0.0) || !(t_s > 0.0) {
        return Err(Error::Domain(format!("noise energy needs N0 ≥ 0, B > 0, T_s > 0 (got {n0}, {bandwidth}, {t_s})")));
    }
    Ok(n0 * bandwidth * t_s)
}

/// Gaussian statistics of the slot energy under each hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyModel {
    pub mu1: f64,
    pub sigma1: f64,
    pub mu0: f64,
    pub sigma0: f64,
}

impl EnergyModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma1 > 0.0) || !(self.sigma0 > 0.0) {
            return Err(Error::DegenerateModel(format!(
                "standard deviations must be positive (σ1 = {}, σ0 = {})",
                self.sigma1, self.sigma0
            )));
        }
        if !(self.mu1 > self.mu0) {
            return Err(Error::DegenerateModel(format!("μ1 = {} does not exceed μ0 = {}", self.mu1, self.mu0)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdRule {
    #[default]
    Midpoint,
    Optimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub gamma: f64,
    /// The optimal rule found no root in `[μ0, μ1]` and used the midpoint.
    pub fell_back: bool,
}

/// `(μ1 + μ0)/2`.
pub fn threshold_midpoint(mu1: f64, mu0: f64) -> Result<f64> {
    if !(mu1 > mu0) {
        return Err(Error::DegenerateModel(format!("μ1 = {mu1} does not exceed μ0 = {mu0}")));
    }
    Ok(0.5 * (mu1 + mu0))
}

/// Threshold where the two Gaussian densities cross, i.e. the root in
/// `[μ0, μ1]` of `(γ−μ1)²σ0² − (γ−μ0)²σ1² = σ0²σ1² ln(σ0²/σ1²)`.
pub fn threshold_optimal(m: &EnergyModel) -> Result<Threshold> {
    m.validate()?;
    let mid = threshold_midpoint(m.mu1, m.mu0)?;
    let (s0, s1) = (m.sigma0 * m.sigma0, m.sigma1 * m.sigma1);
    if s0 == s1 {
        return Ok(Threshold { gamma: mid, fell_back: false });
    }
    let a = s0 - s1;
    let b = -2.0 * m.mu1 * s0 + 2.0 * m.mu0 * s1;
    let c = m.mu1 * m.mu1 * s0 - m.mu0 * m.mu0 * s1 - s0 * s1 * (s0 / s1).ln();
    let disc = b * b - 4.0 * a * c;
    let mut roots = Vec::with_capacity(2);
    if disc >= 0.0 {
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        if q != 0.0 {
            roots.push(c / q);
        }
        roots.push(q / a);
    }
    let inside = roots
        .into_iter()
        .filter(|r| r.is_finite() && *r >= m.mu0 && *r <= m.mu1)
        .min_by(|x, y| (x - mid).abs().total_cmp(&(y - mid).abs()));
    match inside {
        Some(gamma) => Ok(Threshold { gamma, fell_back: false }),
        None => {
            log::warn!("no optimal threshold in [{}, {}]; using midpoint", m.mu0, m.mu1);
            Ok(Threshold { gamma: mid, fell_back: true })
        }
    }
}

pub fn threshold(m: &EnergyModel, rule: ThresholdRule) -> Result<Threshold> {
    match rule {
        ThresholdRule::Midpoint => {
            m.validate()?;
            Ok(Threshold { gamma: threshold_midpoint(m.mu1, m.mu0)?, fell_back: false })
        }
        ThresholdRule::Optimal => threshold_optimal(m),
    }
}

/// `1` iff the slot energy strictly exceeds `gamma`.
pub fn decide_bits(energies: &[f64], gamma: f64) -> Vec<u8> {
    energies.iter().map(|&e| (e > gamma) as u8).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotEnergyReport {
    pub energies: Vec<f64>,
    pub threshold: f64,
    pub decisions: Vec<u8>,
    pub n_errors: usize,
}

impl SlotEnergyReport {
    /// Decides every slot; errors are counted against `truth` when given.
    pub fn new(energies: Vec<f64>, threshold: f64, truth: Option<&[u8]>) -> Result<Self> {
        let decisions = decide_bits(&energies, threshold);
        let n_errors = match truth {
            Some(t) if t.len() != decisions.len() => {
                return Err(Error::Framing(format!("{} reference bits for {} slots", t.len(), decisions.len())))
            }
            Some(t) => t.iter().zip(&decisions).filter(|(a, b)| a != b).count(),
            None => 0,
        };
        Ok(Self { energies, threshold, decisions, n_errors })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["slot", "energy_j", "decision"])?;
        for (i, (e, d)) in self.energies.iter().zip(&self.decisions).enumerate() {
            w.serialize((i, e, d))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::txscheme::{encode_adaptive, EncoderConfig};
    use crate::waveform::{add_awgn, propagate_gauss_approx, Normalization, PulseConfig};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pdf(x: f64, mu: f64, s: f64) -> f64 {
        (-(x - mu) * (x - mu) / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
    }

    #[test]
    fn slot_energy_examples() {
        let w = SampledWaveform::zeros(40, 10.0, 0.0);
        assert_eq!(slot_energies(&w, 1.0).unwrap(), vec![0.0; 4]);
        assert!(matches!(slot_energies(&w, 0.75), Err(Error::Framing(_))));
        assert!(matches!(slot_energies(&SampledWaveform::zeros(45, 10.0, 0.0), 1.0), Err(Error::Framing(_))));

        let (fs, tp) = (1e3, 0.25);
        let mut w = SampledWaveform::zeros(2000, fs, 0.0);
        for n in 0..w.len() {
            let t = w.time(n);
            if (0.3..0.3 + tp).contains(&t) {
                w.samples[n] = 1.0;
            }
        }
        let e = slot_energies(&w, 1.0).unwrap();
        assert!(((e[0] - tp) / tp).abs() <= 2.0 / (fs * tp));
        assert_eq!(e[1], 0.0);
    }

    #[test]
    fn collapsed_pair_slots_are_symmetric() {
        let cfg = PulseConfig::new(2.5e-9, 2.5e-9, 1, 1.0, 3.0, 16.0).unwrap();
        let plan = encode_adaptive(&[0, 0, 1, 1, 0, 0], &cfg, &EncoderConfig::new(3.0)).unwrap();
        for norm in [Normalization::EnergyPreserving, Normalization::UnitArea] {
            let w = propagate_gauss_approx(&plan, &cfg, 3.0, 1.0, norm).unwrap();
            let e = slot_energies(&w, cfg.t_s()).unwrap();
            assert!(((e[2] - e[3]) / e[2]).abs() <= 1e-6);
        }
    }

    #[test]
    fn noise_energy() {
        assert_eq!(noise_energy_mean(0.0, 1e9, 1e-9).unwrap(), 0.0);
        assert_eq!(noise_energy_mean(1e-21, 45e9, 5e-9).unwrap(), 2.0 * noise_energy_mean(1e-21, 45e9, 2.5e-9).unwrap());
        assert!(noise_energy_mean(1e-21, 0.0, 1e-9).is_err());

        // Simulated noise-only slots: the simulation bandwidth is F_s/2.
        let (fs, ts, n0): (f64, f64, f64) = (20e9, 2.5e-9, 4e-21);
        let sps = (fs * ts).round() as usize;
        let w = add_awgn(SampledWaveform::zeros(10_000 * sps, fs, 0.0), n0, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let e = slot_energies(&w, ts).unwrap();
        let mean = e.iter().sum::<f64>() / e.len() as f64;
        let target = noise_energy_mean(n0, fs / 2.0, ts).unwrap();
        assert!(((mean - target) / target).abs() < 0.01);
    }

    #[test]
    fn midpoint_threshold() {
        assert_eq!(threshold_midpoint(2.0, 0.0).unwrap(), 1.0);
        assert!(matches!(threshold_midpoint(1.0, 1.0), Err(Error::DegenerateModel(_))));
        let (alpha, es, ew) = (0.3, 5.0, 0.7);
        let g = threshold_midpoint((1.0 + alpha) * es + ew, alpha * es + ew).unwrap();
        assert!((g - ((1.0 + 2.0 * alpha) * es + 2.0 * ew) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn optimal_threshold_examples() {
        let m = EnergyModel { mu1: 3.0, sigma1: 0.4, mu0: 1.0, sigma0: 0.4 };
        assert_eq!(threshold_optimal(&m).unwrap().gamma, 2.0);

        let m = EnergyModel { mu1: 3.0, sigma1: 0.5, mu0: 1.0, sigma0: 0.25 };
        let t = threshold_optimal(&m).unwrap();
        assert!(!t.fell_back);
        let (p1, p0) = (pdf(t.gamma, m.mu1, m.sigma1), pdf(t.gamma, m.mu0, m.sigma0));
        assert!(((p1 - p0) / p0).abs() < 1e-9);

        // Bisection on the density difference.
        let diff = |g: f64| pdf(g, m.mu1, m.sigma1) - pdf(g, m.mu0, m.sigma0);
        let (mut lo, mut hi) = (m.mu0, m.mu1);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if diff(lo).signum() == diff(mid).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((t.gamma - 0.5 * (lo + hi)).abs() < 1e-12);

        // Densities that do not cross between the means.
        let m = EnergyModel { mu1: 0.1, sigma1: 0.5, mu0: 0.0, sigma0: 1.0 };
        let t = threshold_optimal(&m).unwrap();
        assert!(t.fell_back);
        assert_eq!(t.gamma, 0.05);
        assert!(threshold_optimal(&EnergyModel { mu1: 1.0, sigma1: 1.0, mu0: 2.0, sigma0: 1.0 }).is_err());
    }

    #[test]
    fn decisions() {
        assert_eq!(decide_bits(&[1.0, 2.0, 0.5], 1.0), vec![0, 1, 0]);
        assert_eq!(decide_bits(&[0.1, 0.2], 5.0), vec![0, 0]);
        let r = SlotEnergyReport::new(vec![0.0, 3.0, 3.0], 1.0, Some(&[0, 1, 0])).unwrap();
        assert_eq!(r.n_errors, 1);
        let mut out = Vec::new();
        r.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "slot,energy_j,decision\n0,0.0,0\n1,3.0,1\n2,3.0,1\n");
    }

    #[test]
    fn noiseless_pair_decodes_from_one_pulse() {
        let cfg = PulseConfig::new(2.5e-9, 2.5e-9, 1, 1.0, 3.0, 16.0).unwrap();
        let bits = [0, 0, 1, 1, 0, 0];
        let plan = encode_adaptive(&bits, &cfg, &EncoderConfig::new(3.0)).unwrap();
        assert_eq!(plan.pulses.len(), 1);
        let w = propagate_gauss_approx(&plan, &cfg, 3.0, 1.0, Normalization::EnergyPreserving).unwrap();
        let e = slot_energies(&w, cfg.t_s()).unwrap();
        let gamma = 0.5 * (e[2] + e[1].max(e[4]));
        assert_eq!(decide_bits(&e, gamma), bits);
    }

    #[test]
    fn false_alarm_tail() {
        let (fs, ts, n0): (f64, f64, f64) = (16e9, 2.5e-9, 1e-21);
        let sps = (fs * ts).round() as usize;
        let w = add_awgn(SampledWaveform::zeros(100_000 * sps, fs, 0.0), n0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let e = slot_energies(&w, ts).unwrap();
        let ew = n0 * fs / 2.0 * ts;
        let dof = sps as f64 / 2.0;
        let gamma = ew + 4.0 * ew / dof.sqrt();
        let fa = decide_bits(&e, gamma).iter().filter(|&&d| d == 1).count() as f64 / e.len() as f64;
        assert!(fa <= 1e-3, "{fa}");
    }

    proptest! {
        #[test]
        fn decisions_are_monotone(e in prop::collection::vec(0.0f64..10.0, 1..32), i in 0usize..32, bump in 0.0f64..5.0, g in 0.0f64..10.0) {
            let before = decide_bits(&e, g);
            let mut raised = e.clone();
            let i = i % e.len();
            raised[i] += bump;
            let after = decide_bits(&raised, g);
            for (a, b) in before.iter().zip(&after) {
                prop_assert!(b >= a);
            }
        }

        #[test]
        fn optimal_equals_midpoint_for_equal_spread(mu0 in -5.0f64..5.0, gap in 0.01f64..10.0, s in 0.01f64..5.0) {
            let m = EnergyModel { mu1: mu0 + gap, sigma1: s, mu0, sigma0: s };
            prop_assert_eq!(threshold_optimal(&m).unwrap().gamma, threshold_midpoint(m.mu1, m.mu0).unwrap());
        }

        #[test]
        fn midpoint_lies_between(mu0 in -5.0f64..5.0, gap in 1e-6f64..10.0) {
            let g = threshold_midpoint(mu0 + gap, mu0).unwrap();
            prop_assert!(g > mu0 && g < mu0 + gap);
        }
    }
}
