//! Line-of-sight THz channel: spreading loss, molecular absorption, bulk
//! delay, and the Gaussian broadening model of the channel impulse response.
//!
//! Absorption is ingested from precomputed tables, either a direct `k(f)`
//! table or per-gas cross sections mixed by the Beer-Lambert scaling
//! `k(f) = Σ_q (p/p0)(T_stp/T) Q^q σ^q(f)`.

use std::f64::consts::PI;
use std::io::Read;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::special::fwhm_to_sigma;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// One gas species: its cross-section table and mixing state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GasComponent {
    pub id: String,
    /// `(frequency Hz, cross section m²)`, strictly increasing in frequency.
    pub cross_section: Vec<(f64, f64)>,
    /// Molecules per cubic metre.
    pub density: f64,
    pub pressure_pa: f64,
    pub reference_pressure_pa: f64,
    pub temperature_k: f64,
    pub stp_temperature_k: f64,
}

impl GasComponent {
    fn prefactor(&self) -> f64 {
        (self.pressure_pa / self.reference_pressure_pa)
            * (self.stp_temperature_k / self.temperature_k)
            * self.density
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionTable {
    rows: Vec<(f64, f64)>,
    gases: Vec<GasComponent>,
}

fn check_monotone(rows: &[(f64, f64)], what: &str) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Table(format!("{what}: table is empty")));
    }
    for w in rows.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::Table(format!(
                "{what}: frequencies not strictly increasing at {} Hz",
                w[1].0
            )));
        }
    }
    for &(f, v) in rows {
        if !f.is_finite() || !v.is_finite() || v < 0.0 {
            return Err(Error::Table(format!("{what}: invalid row ({f}, {v})")));
        }
    }
    Ok(())
}

fn interpolate(rows: &[(f64, f64)], f: f64) -> Result<f64> {
    let (lo, hi) = (rows[0].0, rows[rows.len() - 1].0);
    if !(f >= lo && f <= hi) {
        return Err(Error::Range(format!(
            "frequency {f} Hz outside table range [{lo}, {hi}] Hz"
        )));
    }
    if rows.len() == 1 {
        return Ok(rows[0].1);
    }
    let idx = rows.partition_point(|&(x, _)| x <= f);
    let i = idx.clamp(1, rows.len() - 1);
    let (f0, k0) = rows[i - 1];
    let (f1, k1) = rows[i];
    let w = (f - f0) / (f1 - f0);
    Ok(k0 + w * (k1 - k0))
}

impl AbsorptionTable {
    pub fn from_rows(rows: Vec<(f64, f64)>) -> Result<Self> {
        check_monotone(&rows, "absorption table")?;
        Ok(Self { rows, gases: Vec::new() })
    }

    pub fn from_gases(gases: Vec<GasComponent>) -> Result<Self> {
        if gases.is_empty() {
            return Err(Error::Table("no gas components supplied".into()));
        }
        for g in &gases {
            check_monotone(&g.cross_section, &g.id)?;
            let ok = g.density >= 0.0
                && g.pressure_pa >= 0.0
                && g.reference_pressure_pa > 0.0
                && g.temperature_k > 0.0
                && g.stp_temperature_k > 0.0;
            if !ok {
                return Err(Error::Table(format!("{}: invalid mixing metadata", g.id)));
            }
        }
        Ok(Self { rows: Vec::new(), gases })
    }

    /// Frequency-flat absorption over `[f_lo, f_hi]`.
    pub fn constant(k: f64, f_lo: f64, f_hi: f64) -> Result<Self> {
        Self::from_rows(vec![(f_lo, k), (f_hi, k)])
    }

    /// Covered frequency range `[lo, hi]`.
    pub fn range(&self) -> (f64, f64) {
        if self.gases.is_empty() {
            (self.rows[0].0, self.rows[self.rows.len() - 1].0)
        } else {
            self.gases.iter().fold((f64::NEG_INFINITY, f64::INFINITY), |(lo, hi), g| {
                let cs = &g.cross_section;
                (lo.max(cs[0].0), hi.min(cs[cs.len() - 1].0))
            })
        }
    }

    /// Direct `(frequency Hz, k 1/m)` rows; empty for a per-gas table.
    pub fn rows(&self) -> &[(f64, f64)] {
        &self.rows
    }

    pub fn gases(&self) -> &[GasComponent] {
        &self.gases
    }

    pub fn is_per_gas(&self) -> bool {
        !self.gases.is_empty()
    }

    /// Reads a `freq_hz,k_per_m` CSV.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["freq_hz", "k_per_m"] {
            return Err(Error::Table(format!("expected header freq_hz,k_per_m, got {headers:?}")));
        }
        let mut rows = Vec::new();
        for rec in rdr.deserialize::<(f64, f64)>() {
            rows.push(rec?);
        }
        Self::from_rows(rows)
    }

    /// Reads per-gas cross sections (`gas,freq_hz,sigma_m2`) and the mixing
    /// sidecar (`gas,q_per_m3,p_pa,p0_pa,t_k,t_stp_k`).
    pub fn from_gas_csv<R1: Read, R2: Read>(cross_sections: R1, sidecar: R2) -> Result<Self> {
        #[derive(Deserialize)]
        struct CsRow {
            gas: String,
            freq_hz: f64,
            sigma_m2: f64,
        }
        #[derive(Deserialize)]
        struct MixRow {
            gas: String,
            q_per_m3: f64,
            p_pa: f64,
            p0_pa: f64,
            t_k: f64,
            t_stp_k: f64,
        }
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(sidecar);
        let mut gases: Vec<GasComponent> = Vec::new();
        for rec in rdr.deserialize::<MixRow>() {
            let m = rec?;
            gases.push(GasComponent {
                id: m.gas,
                cross_section: Vec::new(),
                density: m.q_per_m3,
                pressure_pa: m.p_pa,
                reference_pressure_pa: m.p0_pa,
                temperature_k: m.t_k,
                stp_temperature_k: m.t_stp_k,
            });
        }
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(cross_sections);
        for rec in rdr.deserialize::<CsRow>() {
            let r = rec?;
            let gas = gases
                .iter_mut()
                .find(|g| g.id == r.gas)
                .ok_or_else(|| Error::Table(format!("gas {} missing from sidecar", r.gas)))?;
            gas.cross_section.push((r.freq_hz, r.sigma_m2));
        }
        Self::from_gases(gases)
    }
}

/// Absorption coefficient `k(f)` in 1/m, linearly interpolated. Frequencies
/// outside the table are a range error; there is no extrapolation.
pub fn absorption_coefficient(table: &AbsorptionTable, f: f64) -> Result<f64> {
    if table.gases.is_empty() {
        return interpolate(&table.rows, f);
    }
    table.gases.iter().try_fold(0.0, |acc, g| {
        Ok(acc + g.prefactor() * interpolate(&g.cross_section, f)?)
    })
}

/// Free-space amplitude factor `c / (4π f d)`.
pub fn spreading_loss(f: f64, d: f64) -> Result<f64> {
    if !(f > 0.0) || !(d > 0.0) {
        return domain(format!("spreading loss needs f > 0 and d > 0 (f = {f}, d = {d})"));
    }
    Ok(SPEED_OF_LIGHT / (4.0 * PI * f * d))
}

/// Amplitude attenuation `exp(-k d / 2)`.
pub fn molecular_loss(k: f64, d: f64) -> Result<f64> {
    if !(k >= 0.0) {
        return domain(format!("absorption coefficient must be non-negative, got {k}"));
    }
    if !(d > 0.0) {
        return domain(format!("distance must be positive, got {d}"));
    }
    Ok((-0.5 * k * d).exp())
}

/// `β_br = 1 + η_br · d`.
pub fn broadening_factor(eta_br: f64, d: f64) -> Result<f64> {
    if !(eta_br >= 0.0) || !(d >= 0.0) {
        return domain(format!("broadening needs η_br ≥ 0 and d ≥ 0 (η_br = {eta_br}, d = {d})"));
    }
    Ok(1.0 + eta_br * d)
}

/// Standard deviation of the Gaussian channel response that stretches a
/// pulse of width `t_p` to `β · t_p` FWHM.
pub fn gaussian_sigma(beta: f64, t_p: f64) -> Result<f64> {
    if !(beta >= 1.0) {
        return domain(format!("broadening factor must be ≥ 1, got {beta}"));
    }
    if !(t_p > 0.0) {
        return domain(format!("pulse width must be positive, got {t_p}"));
    }
    Ok(beta * t_p / fwhm_to_sigma())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub distance_m: f64,
    /// Broadening coefficient η_br, 1/m.
    pub eta_br: f64,
    pub gain_tx_dbi: f64,
    pub gain_rx_dbi: f64,
    /// One-sided noise PSD, W/Hz.
    pub n0_w_per_hz: f64,
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.distance_m > 0.0) {
            return Err(Error::Config(format!("distance must be positive, got {}", self.distance_m)));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::Config(format!("bandwidth must be positive, got {}", self.bandwidth_hz)));
        }
        if !(self.carrier_hz > 0.0) {
            return Err(Error::Config(format!("carrier must be positive, got {}", self.carrier_hz)));
        }
        if !(self.eta_br >= 0.0) {
            return Err(Error::Config(format!("η_br must be non-negative, got {}", self.eta_br)));
        }
        if !(self.n0_w_per_hz >= 0.0) {
            return Err(Error::Config("noise PSD must be non-negative".into()));
        }
        Ok(())
    }

    /// Propagation delay `d / c`.
    pub fn tau(&self) -> f64 {
        self.distance_m / SPEED_OF_LIGHT
    }

    pub fn beta(&self) -> f64 {
        1.0 + self.eta_br * self.distance_m
    }

    /// Combined linear antenna power gain `G_tx · G_rx`.
    pub fn antenna_power_gain(&self) -> f64 {
        10f64.powf((self.gain_tx_dbi + self.gain_rx_dbi) / 10.0)
    }
}

/// `H(f) = H_s(f) · H_a(f) · exp(-j 2π f τ)` with `τ = d / c`.
pub fn transfer_function(params: &ChannelParams, table: &AbsorptionTable, f: f64) -> Result<Complex64> {
    transfer_function_with_delay(params, table, f, params.tau())
}

/// Same as [`transfer_function`] with an explicit delay. A receiver that is
/// synchronised to the line-of-sight arrival uses `tau = 0`.
pub fn transfer_function_with_delay(
    params: &ChannelParams,
    table: &AbsorptionTable,
    f: f64,
    tau: f64,
) -> Result<Complex64> {
    let hs = spreading_loss(f, params.distance_m)?;
    let k = absorption_coefficient(table, f)?;
    let ha = molecular_loss(k, params.distance_m)?;
    Ok(Complex64::from_polar(hs * ha, -2.0 * PI * f * tau))
}

/// Gaussian approximation of the broadened channel response for a given
/// transmit width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BroadeningModel {
    pub beta: f64,
    pub sigma: f64,
    pub width_tx: f64,
}

impl BroadeningModel {
    pub fn new(beta: f64, width_tx: f64) -> Result<Self> {
        Ok(Self { beta, sigma: gaussian_sigma(beta, width_tx)?, width_tx })
    }

    /// Received FWHM `β · T_p`.
    pub fn width_rx(&self) -> f64 {
        self.beta * self.width_tx
    }
}
