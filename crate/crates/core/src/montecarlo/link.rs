//! One simulated link: encoder, propagation, threshold calibration and the
//! noisy energy detector.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::{transfer_function_with_delay, AbsorptionTable, ChannelParams};
use crate::detector::{slot_energies, threshold, threshold_midpoint, EnergyModel, ThresholdRule};
use crate::error::Result;
use crate::special::{fwhm_to_sigma, norm_cdf};
use crate::txscheme::{encode_adaptive, encode_conventional, PulsePlan};
use crate::waveform::{
    propagate_frequency_domain, propagate_gauss_approx, synthesize_frame, LinkChannel, Normalization, PulseConfig,
    SampledWaveform,
};

use super::config::{EncoderSettings, ExperimentConfig, Propagation, Variant};

/// A fully resolved link at one distance.
#[derive(Debug, Clone)]
pub struct Link {
    pub pulse: PulseConfig,
    pub beta: f64,
    pub channel: ChannelParams,
    pub table: AbsorptionTable,
    /// Amplitude gain at the carrier, antenna gains included.
    pub gain: f64,
    pub propagation: Propagation,
    pub normalization: Normalization,
    pub encoder: EncoderSettings,
}

impl Link {
    /// Link at `distance_m`. The sample grid resolves pulses shrunk by
    /// `beta_max`, so links built with the same `beta_max` share it.
    pub fn new(cfg: &ExperimentConfig, distance_m: f64, beta_max: f64) -> Result<Self> {
        let channel = cfg.link.channel(distance_m);
        channel.validate()?;
        let table = cfg.link.absorption.table()?;
        let beta = cfg.link.beta(distance_m);
        let pulse = cfg.pulse.pulse_config(beta_max.max(beta))?;
        let h = transfer_function_with_delay(&channel, &table, channel.carrier_hz, 0.0)?;
        let gain = h.norm() * channel.antenna_power_gain().sqrt();
        Ok(Self {
            pulse,
            beta,
            channel,
            table,
            gain,
            propagation: cfg.sweep.propagation,
            normalization: cfg.sweep.normalization,
            encoder: cfg.encoder.clone(),
        })
    }

    pub fn plan(&self, bits: &[u8], variant: Variant) -> Result<PulsePlan> {
        match variant {
            Variant::Conventional => encode_conventional(bits, &self.pulse),
            Variant::Proposed => encode_adaptive(bits, &self.pulse, &self.encoder.encoder(self.beta, false)),
            Variant::ProposedConserved => encode_adaptive(bits, &self.pulse, &self.encoder.encoder(self.beta, true)),
        }
    }

    /// Noiseless received frame.
    pub fn received(&self, plan: &PulsePlan) -> Result<SampledWaveform> {
        match self.propagation {
            Propagation::GaussApprox => {
                propagate_gauss_approx(plan, &self.pulse, self.beta, self.gain, self.normalization)
            }
            Propagation::ExactFd => {
                let h = LinkChannel { params: &self.channel, table: &self.table, synchronized: true };
                propagate_frequency_domain(&synthesize_frame(plan, &self.pulse)?, &h)
            }
        }
    }

    pub fn samples_per_slot(&self) -> usize {
        self.pulse.samples_per_slot()
    }

    /// Noise degrees of freedom per slot, `M = (F_s/2)·T_s`.
    pub fn dof(&self) -> f64 {
        self.samples_per_slot() as f64 / 2.0
    }

    /// Received energy of one conventional symbol (all `N_f` repetitions),
    /// measured on an isolated one-bit.
    pub fn reference_energy(&self) -> Result<f64> {
        let sigma = self.beta * self.pulse.t_p / fwhm_to_sigma();
        let pad = (10.0 * sigma / self.pulse.t_s()).ceil() as usize + 1;
        let mut bits = vec![0u8; 2 * pad + 1];
        bits[pad] = 1;
        Ok(self.received(&encode_conventional(&bits, &self.pulse)?)?.energy())
    }

    /// Width `β·T_p` of a received conventional pulse.
    pub fn received_width(&self) -> f64 {
        self.beta * self.pulse.t_p
    }
}

pub fn random_bits<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Vec<u8> {
    (0..n).map(|_| u8::from(rng.random_bool(p))).collect()
}

/// Mean and variance of noiseless slot energies, split by the true bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalStats {
    pub mean1: f64,
    pub var1: f64,
    pub mean0: f64,
    pub var0: f64,
}

impl SignalStats {
    pub fn from_slots(energies: &[f64], bits: &[u8]) -> Self {
        let moments = |want: u8| {
            let v: Vec<f64> = energies.iter().zip(bits).filter(|(_, &b)| b == want).map(|(e, _)| *e).collect();
            if v.is_empty() {
                return (0.0, 0.0);
            }
            let m = v.iter().sum::<f64>() / v.len() as f64;
            (m, v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64)
        };
        let (mean1, var1) = moments(1);
        let (mean0, var0) = moments(0);
        Self { mean1, var1, mean0, var0 }
    }

    /// Gaussian energy model after scaling the signal power by `power_scale`
    /// and adding noise of mean energy `e_w` over `dof` dimensions. A slot
    /// carrying signal energy `s` has noise-induced variance
    /// `(E_w² + 2·s·E_w)/M`.
    pub fn model(&self, power_scale: f64, e_w: f64, dof: f64) -> EnergyModel {
        let k = power_scale;
        let spread = |mean: f64, var: f64| (var * k * k + (e_w * e_w + 2.0 * mean * k * e_w) / dof).sqrt();
        EnergyModel {
            mu1: self.mean1 * k + e_w,
            sigma1: spread(self.mean1, self.var1),
            mu0: self.mean0 * k + e_w,
            sigma0: spread(self.mean0, self.var0),
        }
    }
}

/// Detector threshold for a link and variant from a noiseless pilot frame.
pub fn calibrate(
    link: &Link,
    variant: Variant,
    pilot: &[u8],
    power_scale: f64,
    e_w: f64,
    rule: ThresholdRule,
) -> Result<f64> {
    detector_threshold(&pilot_stats(link, variant, pilot)?.model(power_scale, e_w, link.dof()), rule)
}

/// Threshold from a calibrated model. The midpoint needs no spreads, so it
/// also serves noiseless frames.
pub fn detector_threshold(m: &EnergyModel, rule: ThresholdRule) -> Result<f64> {
    match rule {
        ThresholdRule::Midpoint => threshold_midpoint(m.mu1, m.mu0),
        ThresholdRule::Optimal => Ok(threshold(m, rule)?.gamma),
    }
}

/// Threshold halfway across the gap between the weakest one-slot and the
/// strongest zero-slot of a noiseless pilot; `None` when the classes overlap.
pub fn separating_threshold(link: &Link, variant: Variant, pilot: &[u8]) -> Result<Option<f64>> {
    let rx = link.received(&link.plan(pilot, variant)?)?;
    let e = slot_energies(&rx, link.pulse.t_s())?;
    let min1 = e.iter().zip(pilot).filter(|(_, &b)| b == 1).map(|(x, _)| *x).fold(f64::INFINITY, f64::min);
    let max0 = e.iter().zip(pilot).filter(|(_, &b)| b == 0).map(|(x, _)| *x).fold(0.0, f64::max);
    Ok((min1.is_finite() && min1 > max0).then_some(0.5 * (min1 + max0)))
}

pub fn pilot_stats(link: &Link, variant: Variant, pilot: &[u8]) -> Result<SignalStats> {
    Ok(SignalStats::from_slots(&pilot_slots(link, variant, pilot)?, pilot))
}

/// Noiseless slot energies of the pilot frame.
pub fn pilot_slots(link: &Link, variant: Variant, pilot: &[u8]) -> Result<Vec<f64>> {
    slot_energies(&link.received(&link.plan(pilot, variant)?)?, link.pulse.t_s())
}

/// Threshold minimising the expected number of pilot errors when slot `i`
/// has energy `N(k·s_i + E_w, (E_w² + 2·k·s_i·E_w)/M)`.
///
/// Coarse scan over the span of the slot means, then golden-section
/// refinement around the best scan point.
pub fn min_error_threshold(slots: &[f64], bits: &[u8], power_scale: f64, e_w: f64, dof: f64) -> f64 {
    let params: Vec<(f64, f64, bool)> = slots
        .iter()
        .zip(bits)
        .map(|(&s, &b)| {
            let sig = power_scale * s;
            (sig + e_w, ((e_w * e_w + 2.0 * sig * e_w) / dof).sqrt(), b == 1)
        })
        .collect();
    let cost = |g: f64| -> f64 {
        params
            .iter()
            .map(|&(mu, sd, one)| {
                let p_below = if sd > 0.0 { norm_cdf((g - mu) / sd) } else { f64::from(u8::from(mu <= g)) };
                if one { p_below } else { 1.0 - p_below }
            })
            .sum()
    };
    let lo = params.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = params.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return lo;
    }
    const SCAN: usize = 128;
    let step = (hi - lo) / SCAN as f64;
    let best = (0..=SCAN)
        .map(|i| lo + step * i as f64)
        .map(|g| (g, cost(g)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map_or(lo, |(g, _)| g);
    let (mut a, mut b) = ((best - step).max(lo), (best + step).min(hi));
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (b - r * (b - a), a + r * (b - a));
    let (mut fc, mut fd) = (cost(c), cost(d));
    for _ in 0..48 {
        if fc <= fd {
            b = d;
            (d, fd) = (c, fc);
            c = b - r * (b - a);
            fc = cost(c);
        } else {
            a = c;
            (c, fc) = (d, fd);
            d = a + r * (b - a);
            fd = cost(d);
        }
    }
    0.5 * (a + b)
}

/// Slot energies of `amp_scale·signal + n`, with `n` white Gaussian of
/// mean slot energy `e_w`. Noise is drawn on the fly.
pub fn noisy_slot_energies<R: Rng + ?Sized>(
    signal: &SampledWaveform,
    sps: usize,
    amp_scale: f64,
    e_w: f64,
    rng: &mut R,
) -> Vec<f64> {
    let dt = 1.0 / signal.sample_rate;
    let sd = (e_w / (sps as f64 * dt)).sqrt();
    signal
        .samples
        .chunks_exact(sps)
        .map(|slot| {
            let acc: f64 = slot
                .iter()
                .map(|&s| {
                    let z: f64 = rng.sample(StandardNormal);
                    let y = amp_scale * s + sd * z;
                    y * y
                })
                .sum();
            acc * dt
        })
        .collect()
}

pub fn count_errors(energies: &[f64], gamma: f64, truth: &[u8]) -> u64 {
    energies.iter().zip(truth).filter(|(e, &b)| u8::from(**e > gamma) != b).count() as u64
}
