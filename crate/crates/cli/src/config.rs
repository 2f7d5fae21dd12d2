//! TOML experiment files.
//!
//! Physical quantities carry explicit unit suffixes (`tp = "0.5ns"`) and are
//! converted to SI on load; every key is optional and falls back to the
//! library defaults. Unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thz_ook::channel::{AbsorptionTable, GasComponent};
use thz_ook::detector::ThresholdRule;
use thz_ook::montecarlo::{Absorption, Calibration, ExperimentConfig, Propagation, Variant};
use thz_ook::montecarlo::Execution;
use thz_ook::txscheme::{CenterRule, PairingMode};
use thz_ook::waveform::Normalization;

use crate::units::{format_quantity, parse_quantity, Dimension};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Syntax(String),
    /// Every problem found, one entry each.
    #[error("{}", .0.join("; "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub link: LinkSection,
    pub pulse: PulseSection,
    pub encoder: EncoderSection,
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub carrier: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distances: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_br: Option<String>,
    /// Fixed broadening factor, overriding `1 + η·d`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain_tx: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain_rx: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_psd: Option<String>,
    /// Frequency-flat absorption coefficient.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub absorption: Option<String>,
    /// `freq_hz,k_per_m` CSV, relative to the config file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub absorption_file: Option<PathBuf>,
    /// Per-gas cross sections `gas,freq_hz,sigma_m2`; needs `gas_mixing_file`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gas_file: Option<PathBuf>,
    /// `gas,q_per_m3,p_pa,p0_pa,t_k,t_stp_k`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gas_mixing_file: Option<PathBuf>,
    /// Inline `[freq_hz, k_per_m]` rows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub absorption_rows: Option<Vec<(f64, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gas: Option<Vec<GasSection>>,
}

/// Inline gas species, SI units throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasSection {
    pub id: String,
    pub density_per_m3: f64,
    pub pressure_pa: f64,
    pub reference_pressure_pa: f64,
    pub temperature_k: f64,
    pub stp_temperature_k: f64,
    /// `[freq_hz, sigma_m2]` rows.
    pub cross_section: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tp: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tf: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nf: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oversampling: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<PairingMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<CenterRule>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bits: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schemes: Option<Vec<Variant>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power_dbm: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<ThresholdRule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration: Option<Calibration>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub propagation: Option<Propagation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalization: Option<Normalization>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_per_event: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pilot_bits: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub execution: Option<Execution>,
}

/// Reads and validates an experiment file. Relative table paths resolve
/// against the file's directory.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_config_str(&text, base)
}

pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<ExperimentConfig, ConfigError> {
    let file: FileConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let cfg = file.resolve(base_dir)?;
    cfg.validate().map_err(|e| match e {
        thz_ook::Error::Config(msg) => ConfigError::Invalid(msg.split("; ").map(str::to_string).collect()),
        other => ConfigError::Invalid(vec![other.to_string()]),
    })?;
    Ok(cfg)
}

/// Writes `cfg` with every field explicit, in SI units. Tables are inlined.
pub fn serialize_config(cfg: &ExperimentConfig) -> Result<String, ConfigError> {
    toml::to_string(&FileConfig::from_config(cfg)).map_err(|e| ConfigError::Syntax(e.to_string()))
}

struct Diagnostics(Vec<String>);

impl Diagnostics {
    fn quantity(&mut self, key: &str, raw: &Option<String>, dim: Dimension, default: f64) -> f64 {
        match raw {
            None => default,
            Some(s) => parse_quantity(s, dim).unwrap_or_else(|e| {
                self.0.push(format!("{key}: {e}"));
                default
            }),
        }
    }
}

impl FileConfig {
    fn resolve(&self, base: &Path) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        let mut diag = Diagnostics(Vec::new());
        let (l, p, e, s) = (&self.link, &self.pulse, &self.encoder, &self.sweep);

        let link = &mut cfg.link;
        link.carrier_hz = diag.quantity("link.carrier", &l.carrier, Dimension::Frequency, link.carrier_hz);
        link.bandwidth_hz = diag.quantity("link.bandwidth", &l.bandwidth, Dimension::Frequency, link.bandwidth_hz);
        if let Some(ds) = &l.distances {
            link.distances_m = ds
                .iter()
                .enumerate()
                .map(|(i, d)| diag.quantity(&format!("link.distances[{i}]"), &Some(d.clone()), Dimension::Length, 0.0))
                .collect();
        }
        link.eta_br = diag.quantity("link.eta_br", &l.eta_br, Dimension::PerLength, link.eta_br);
        link.beta_override = l.beta;
        link.gain_tx_dbi = diag.quantity("link.gain_tx", &l.gain_tx, Dimension::Gain, link.gain_tx_dbi);
        link.gain_rx_dbi = diag.quantity("link.gain_rx", &l.gain_rx, Dimension::Gain, link.gain_rx_dbi);
        link.n0_w_per_hz = diag.quantity("link.noise_psd", &l.noise_psd, Dimension::NoisePsd, link.n0_w_per_hz);
        if let Some(a) = l.absorption(base, &mut diag) {
            link.absorption = a;
        }

        let pulse = &mut cfg.pulse;
        pulse.t_p_s = diag.quantity("pulse.tp", &p.tp, Dimension::Time, pulse.t_p_s);
        pulse.t_f_s = diag.quantity("pulse.tf", &p.tf, Dimension::Time, pulse.t_f_s);
        pulse.n_f = p.nf.unwrap_or(pulse.n_f);
        pulse.power_w = diag.quantity("pulse.power", &p.power, Dimension::Power, pulse.power_w);
        pulse.oversampling = p.oversampling.unwrap_or(pulse.oversampling);

        let enc = &mut cfg.encoder;
        enc.mode = e.mode.unwrap_or(enc.mode);
        enc.n_max = e.n_max.unwrap_or(enc.n_max);
        enc.center = e.center.unwrap_or(enc.center);

        let sw = &mut cfg.sweep;
        sw.seed = s.seed.unwrap_or(sw.seed);
        sw.bits = s.bits.unwrap_or(sw.bits);
        sw.trials = s.trials.unwrap_or(sw.trials);
        sw.p = s.p.unwrap_or(sw.p);
        override_with(&mut sw.schemes, &s.schemes);
        override_with(&mut sw.snr_db, &s.snr_db);
        override_with(&mut sw.power_dbm, &s.power_dbm);
        override_with(&mut sw.beta_grid, &s.beta_grid);
        override_with(&mut sw.p_grid, &s.p_grid);
        override_with(&mut sw.n_grid, &s.n_grid);
        sw.threshold = s.threshold.unwrap_or(sw.threshold);
        sw.calibration = s.calibration.unwrap_or(sw.calibration);
        sw.propagation = s.propagation.unwrap_or(sw.propagation);
        sw.normalization = s.normalization.unwrap_or(sw.normalization);
        sw.energy_per_event_j =
            diag.quantity("sweep.energy_per_event", &s.energy_per_event, Dimension::Energy, sw.energy_per_event_j);
        sw.pilot_bits = s.pilot_bits.unwrap_or(sw.pilot_bits);
        sw.execution = s.execution.unwrap_or(sw.execution);

        if diag.0.is_empty() {
            Ok(cfg)
        } else {
            Err(ConfigError::Invalid(diag.0))
        }
    }

    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        let (l, p, e, s) = (&cfg.link, &cfg.pulse, &cfg.encoder, &cfg.sweep);
        let q = |v: f64, d: Dimension| Some(format_quantity(v, d));
        let mut link = LinkSection {
            carrier: q(l.carrier_hz, Dimension::Frequency),
            bandwidth: q(l.bandwidth_hz, Dimension::Frequency),
            distances: Some(l.distances_m.iter().map(|&d| format_quantity(d, Dimension::Length)).collect()),
            eta_br: q(l.eta_br, Dimension::PerLength),
            beta: l.beta_override,
            gain_tx: q(l.gain_tx_dbi, Dimension::Gain),
            gain_rx: q(l.gain_rx_dbi, Dimension::Gain),
            noise_psd: q(l.n0_w_per_hz, Dimension::NoisePsd),
            ..LinkSection::default()
        };
        match &l.absorption {
            Absorption::Constant { k_per_m } => link.absorption = q(*k_per_m, Dimension::PerLength),
            Absorption::Table(t) if t.is_per_gas() => {
                link.gas = Some(
                    t.gases()
                        .iter()
                        .map(|g| GasSection {
                            id: g.id.clone(),
                            density_per_m3: g.density,
                            pressure_pa: g.pressure_pa,
                            reference_pressure_pa: g.reference_pressure_pa,
                            temperature_k: g.temperature_k,
                            stp_temperature_k: g.stp_temperature_k,
                            cross_section: g.cross_section.clone(),
                        })
                        .collect(),
                )
            }
            Absorption::Table(t) => link.absorption_rows = Some(t.rows().to_vec()),
        }
        Self {
            link,
            pulse: PulseSection {
                tp: q(p.t_p_s, Dimension::Time),
                tf: q(p.t_f_s, Dimension::Time),
                nf: Some(p.n_f),
                power: q(p.power_w, Dimension::Power),
                oversampling: Some(p.oversampling),
            },
            encoder: EncoderSection { mode: Some(e.mode), n_max: Some(e.n_max), center: Some(e.center) },
            sweep: SweepSection {
                seed: Some(s.seed),
                bits: Some(s.bits),
                trials: Some(s.trials),
                p: Some(s.p),
                schemes: Some(s.schemes.clone()),
                snr_db: Some(s.snr_db.clone()),
                power_dbm: Some(s.power_dbm.clone()),
                beta_grid: Some(s.beta_grid.clone()),
                p_grid: Some(s.p_grid.clone()),
                n_grid: Some(s.n_grid.clone()),
                threshold: Some(s.threshold),
                calibration: Some(s.calibration),
                propagation: Some(s.propagation),
                normalization: Some(s.normalization),
                energy_per_event: q(s.energy_per_event_j, Dimension::Energy),
                pilot_bits: Some(s.pilot_bits),
                execution: Some(s.execution),
            },
        }
    }
}

fn override_with<T: Clone>(slot: &mut Vec<T>, value: &Option<Vec<T>>) {
    if let Some(v) = value {
        slot.clone_from(v);
    }
}

impl LinkSection {
    fn absorption(&self, base: &Path, diag: &mut Diagnostics) -> Option<Absorption> {
        let given = [
            ("absorption", self.absorption.is_some()),
            ("absorption_file", self.absorption_file.is_some()),
            ("gas_file", self.gas_file.is_some() || self.gas_mixing_file.is_some()),
            ("absorption_rows", self.absorption_rows.is_some()),
            ("gas", self.gas.is_some()),
        ];
        let set: Vec<&str> = given.iter().filter(|(_, on)| *on).map(|(k, _)| *k).collect();
        if set.len() > 1 {
            diag.0.push(format!("link: at most one absorption source allowed, got {}", set.join(", ")));
            return None;
        }
        let table = |r: thz_ook::Result<AbsorptionTable>, diag: &mut Diagnostics, what: &str| match r {
            Ok(t) => Some(Absorption::Table(t)),
            Err(e) => {
                diag.0.push(format!("{what}: {e}"));
                None
            }
        };
        let open = |p: &Path, diag: &mut Diagnostics| {
            let full = base.join(p);
            fs::File::open(&full).map_err(|e| diag.0.push(format!("cannot open {}: {e}", full.display()))).ok()
        };
        if let Some(raw) = &self.absorption {
            let k = parse_quantity(raw, Dimension::PerLength).map_err(|e| diag.0.push(format!("link.absorption: {e}")));
            return k.ok().map(|k_per_m| Absorption::Constant { k_per_m });
        }
        if let Some(p) = &self.absorption_file {
            let f = open(p, diag)?;
            return table(AbsorptionTable::from_csv(f), diag, "link.absorption_file");
        }
        if self.gas_file.is_some() || self.gas_mixing_file.is_some() {
            let (Some(cs), Some(mix)) = (&self.gas_file, &self.gas_mixing_file) else {
                diag.0.push("link: gas_file and gas_mixing_file must be given together".into());
                return None;
            };
            let (cs, mix) = (open(cs, diag)?, open(mix, diag)?);
            return table(AbsorptionTable::from_gas_csv(cs, mix), diag, "link.gas_file");
        }
        if let Some(rows) = &self.absorption_rows {
            return table(AbsorptionTable::from_rows(rows.clone()), diag, "link.absorption_rows");
        }
        if let Some(gases) = &self.gas {
            let gases = gases
                .iter()
                .map(|g| GasComponent {
                    id: g.id.clone(),
                    cross_section: g.cross_section.clone(),
                    density: g.density_per_m3,
                    pressure_pa: g.pressure_pa,
                    reference_pressure_pa: g.reference_pressure_pa,
                    temperature_k: g.temperature_k,
                    stp_temperature_k: g.stp_temperature_k,
                })
                .collect();
            return table(AbsorptionTable::from_gases(gases), diag, "link.gas");
        }
        None
    }
}
