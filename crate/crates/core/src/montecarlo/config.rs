//! Experiment configuration in SI units. Every field has a default so a
//! partially specified config is completed from the reference link budget.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{AbsorptionTable, ChannelParams};
use crate::detector::ThresholdRule;
use crate::error::{Error, Result};
use crate::txscheme::{CenterRule, EncoderConfig, PairingMode};
use crate::waveform::{Normalization, PulseConfig};

use super::exec::Execution;

/// Transmit variant compared in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Conventional,
    /// Adaptive encoder, shrunk pulses keep the nominal power.
    Proposed,
    /// Adaptive encoder, shrunk pulses scaled to `β·P_a` (same energy as a
    /// full pulse).
    ProposedConserved,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Conventional, Variant::Proposed, Variant::ProposedConserved];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Conventional => "conventional",
            Variant::Proposed => "proposed",
            Variant::ProposedConserved => "proposed-conserved",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Propagation {
    /// Each pulse becomes a Gaussian of `σ = β·w/(2√(2 ln 2))`.
    #[default]
    GaussApprox,
    /// DFT filtering with the tabulated transfer function.
    ExactFd,
}

/// How the Monte-Carlo detector threshold is derived from the pilot frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Calibration {
    /// Pool pilot slot energies into one Gaussian per hypothesis and apply
    /// the configured [`ThresholdRule`].
    Moments,
    /// Minimise the expected pilot error count, modelling every pilot slot
    /// as its own Gaussian. `threshold` is ignored.
    #[default]
    MinError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Absorption {
    /// Frequency-flat coefficient, 1/m.
    Constant { k_per_m: f64 },
    Table(AbsorptionTable),
}

impl Absorption {
    pub fn table(&self) -> Result<AbsorptionTable> {
        match self {
            Absorption::Constant { k_per_m } => AbsorptionTable::constant(*k_per_m, 1.0, 1e16),
            Absorption::Table(t) => Ok(t.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSettings {
    pub carrier_hz: f64,
    /// Receiver noise bandwidth used for the link-budget noise energy.
    pub bandwidth_hz: f64,
    pub distances_m: Vec<f64>,
    /// Broadening coefficient, 1/m.
    pub eta_br: f64,
    /// Forces β_br for every distance instead of `1 + η_br·d`.
    pub beta_override: Option<f64>,
    pub gain_tx_dbi: f64,
    pub gain_rx_dbi: f64,
    /// One-sided noise PSD, W/Hz.
    pub n0_w_per_hz: f64,
    pub absorption: Absorption,
}

impl Default for LinkSettings {
    fn default() -> Self {
        Self {
            carrier_hz: 1.12e12,
            bandwidth_hz: 45e9,
            distances_m: vec![5.0, 10.0, 15.0],
            eta_br: 0.2,
            beta_override: None,
            gain_tx_dbi: 20.0,
            gain_rx_dbi: 20.0,
            // −90 dBm/GHz.
            n0_w_per_hz: 1e-21,
            absorption: Absorption::Constant { k_per_m: 0.01 },
        }
    }
}

impl LinkSettings {
    pub fn channel(&self, distance_m: f64) -> ChannelParams {
        ChannelParams {
            carrier_hz: self.carrier_hz,
            bandwidth_hz: self.bandwidth_hz,
            distance_m,
            eta_br: self.eta_br,
            gain_tx_dbi: self.gain_tx_dbi,
            gain_rx_dbi: self.gain_rx_dbi,
            n0_w_per_hz: self.n0_w_per_hz,
        }
    }

    pub fn beta(&self, distance_m: f64) -> f64 {
        self.beta_override.unwrap_or(1.0 + self.eta_br * distance_m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseSettings {
    pub t_p_s: f64,
    pub t_f_s: f64,
    pub n_f: usize,
    /// Transmit power P_a, W.
    pub power_w: f64,
    /// Samples across the narrowest (shrunk) pulse.
    pub oversampling: f64,
}

impl Default for PulseSettings {
    fn default() -> Self {
        Self { t_p_s: 0.5e-9, t_f_s: 2.5e-9, n_f: 1, power_w: 0.01, oversampling: 16.0 }
    }
}

impl PulseSettings {
    pub fn pulse_config(&self, beta_max: f64) -> Result<PulseConfig> {
        PulseConfig::new(self.t_p_s, self.t_f_s, self.n_f, self.power_w, beta_max, self.oversampling)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderSettings {
    pub mode: PairingMode,
    pub n_max: usize,
    pub center: CenterRule,
}

impl Default for EncoderSettings {
    fn default() -> Self {
        Self { mode: PairingMode::DisjointPairs, n_max: 2, center: CenterRule::Geometric }
    }
}

impl EncoderSettings {
    pub fn encoder(&self, beta: f64, conserve_energy: bool) -> EncoderConfig {
        EncoderConfig { beta, conserve_energy, mode: self.mode, n_max: self.n_max, center: self.center }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub seed: u64,
    /// Bits per trial.
    pub bits: usize,
    pub trials: usize,
    /// Probability of a one-bit.
    pub p: f64,
    pub schemes: Vec<Variant>,
    pub snr_db: Vec<f64>,
    pub power_dbm: Vec<f64>,
    pub beta_grid: Vec<f64>,
    pub p_grid: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub threshold: ThresholdRule,
    pub calibration: Calibration,
    pub propagation: Propagation,
    pub normalization: Normalization,
    /// Energy charged per transmitted pulse in counting mode, J.
    pub energy_per_event_j: f64,
    /// Noiseless frame length used to calibrate the detector threshold.
    pub pilot_bits: usize,
    pub execution: Execution,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            seed: 1,
            bits: 10_000,
            trials: 50,
            p: 0.5,
            schemes: Variant::ALL.to_vec(),
            snr_db: (0..=10).map(|i| f64::from(2 * i)).collect(),
            power_dbm: (0..=10).map(|i| f64::from(3 * i)).collect(),
            beta_grid: (2..=12).map(|i| f64::from(i) / 2.0).collect(),
            p_grid: vec![0.3, 0.5, 0.7],
            n_grid: vec![1000, 5000, 10_000],
            threshold: ThresholdRule::Midpoint,
            calibration: Calibration::MinError,
            propagation: Propagation::GaussApprox,
            normalization: Normalization::EnergyPreserving,
            energy_per_event_j: 1e-12,
            pilot_bits: 4096,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub link: LinkSettings,
    pub pulse: PulseSettings,
    pub encoder: EncoderSettings,
    pub sweep: SweepSettings,
}

impl ExperimentConfig {
    /// Collects every invariant violation instead of stopping at the first.
    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        let (l, p, e, s) = (&self.link, &self.pulse, &self.encoder, &self.sweep);
        if !(l.carrier_hz > 0.0) {
            issues.push(format!("carrier must be positive, got {} Hz", l.carrier_hz));
        }
        if !(l.bandwidth_hz > 0.0) {
            issues.push(format!("bandwidth must be positive, got {} Hz", l.bandwidth_hz));
        }
        if l.distances_m.is_empty() {
            issues.push("distance list is empty".into());
        }
        if let Some(d) = l.distances_m.iter().find(|d| !(**d > 0.0)) {
            issues.push(format!("distance must be positive, got {d} m"));
        }
        if !(l.eta_br >= 0.0) {
            issues.push(format!("η_br must be non-negative, got {}", l.eta_br));
        }
        if let Some(b) = l.beta_override.filter(|b| !(*b >= 1.0)) {
            issues.push(format!("β_br override must be ≥ 1, got {b}"));
        }
        if !(l.n0_w_per_hz > 0.0) {
            issues.push(format!("noise PSD must be positive, got {} W/Hz", l.n0_w_per_hz));
        }
        if let Absorption::Constant { k_per_m } = l.absorption {
            if !(k_per_m >= 0.0) {
                issues.push(format!("absorption coefficient must be non-negative, got {k_per_m} /m"));
            }
        }
        if !(p.t_p_s > 0.0) || !(p.t_f_s > 0.0) {
            issues.push(format!("T_p and T_f must be positive (T_p = {:e} s, T_f = {:e} s)", p.t_p_s, p.t_f_s));
        } else if p.t_p_s > p.t_f_s * (1.0 + 1e-12) {
            issues.push(format!("T_p = {:e} s exceeds T_f = {:e} s", p.t_p_s, p.t_f_s));
        }
        if p.n_f == 0 {
            issues.push("N_f must be at least 1".into());
        }
        if !(p.power_w > 0.0) {
            issues.push(format!("transmit power must be positive, got {} W", p.power_w));
        }
        if !(p.oversampling >= 1.0) {
            issues.push(format!("oversampling must be ≥ 1, got {}", p.oversampling));
        }
        if e.n_max < 2 {
            issues.push(format!("n_max must be ≥ 2, got {}", e.n_max));
        }
        if s.trials == 0 {
            issues.push("trials must be ≥ 1".into());
        }
        if s.bits == 0 {
            issues.push("bits per trial must be ≥ 1".into());
        }
        if !(0.0..=1.0).contains(&s.p) {
            issues.push(format!("p must lie in [0, 1], got {}", s.p));
        }
        if s.p_grid.iter().any(|p| !(0.0..=1.0).contains(p)) {
            issues.push("every p in p_grid must lie in [0, 1]".into());
        }
        if s.beta_grid.iter().any(|b| !(*b >= 1.0)) {
            issues.push("every β_br in beta_grid must be ≥ 1".into());
        }
        if s.n_grid.contains(&0) {
            issues.push("n_grid entries must be ≥ 1".into());
        }
        for (name, empty) in [
            ("schemes", s.schemes.is_empty()),
            ("snr_db", s.snr_db.is_empty()),
            ("power_dbm", s.power_dbm.is_empty()),
            ("beta_grid", s.beta_grid.is_empty()),
            ("p_grid", s.p_grid.is_empty()),
            ("n_grid", s.n_grid.is_empty()),
        ] {
            if empty {
                issues.push(format!("{name} grid is empty"));
            }
        }
        if s.snr_db.iter().chain(&s.power_dbm).any(|x| !x.is_finite()) {
            issues.push("sweep grids must be finite".into());
        }
        if !(s.energy_per_event_j >= 0.0) {
            issues.push(format!("energy per event must be non-negative, got {} J", s.energy_per_event_j));
        }
        if s.pilot_bits < 16 {
            issues.push(format!("pilot frame needs at least 16 bits, got {}", s.pilot_bits));
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(issues.join("; ")))
        }
    }

    /// Largest β_br over the configured distances.
    pub fn beta_max(&self) -> f64 {
        self.link.distances_m.iter().map(|&d| self.link.beta(d)).fold(1.0, f64::max)
    }
}

/// First 16 hex digits of the SHA-256 of the canonical JSON encoding.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    let digest = Sha256::digest(&bytes);
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}
