//! Conventional and pattern-aware adaptive OOK encoders.
//!
//! The adaptive encoder shrinks isolated ones to `T_p/β` so that the
//! broadened pulse stays inside its slot, and replaces a run of ones by a
//! single unshrunk pulse whose broadening covers the whole run.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::waveform::PulseConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Conventional,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairingMode {
    /// Bits are processed as disjoint pairs `(b1 b2), (b3 b4), …`.
    #[default]
    DisjointPairs,
    /// Maximal runs of ones are collapsed, split into chunks of `n_max`.
    RunLength,
}

/// Where the collapsed pulse of an `n`-run starting at `i·T_s` is centred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CenterRule {
    /// Midpoint of the covered span, `i·T_s + n·T_s/2`.
    #[default]
    Geometric,
    /// `i·T_s + (n−1)·T_s/2`: centre of the first slot for a pair.
    Leading,
}

impl CenterRule {
    pub fn center(self, start: f64, n: usize, t_s: f64) -> f64 {
        match self {
            CenterRule::Geometric => start + n as f64 * t_s / 2.0,
            CenterRule::Leading => start + (n as f64 - 1.0) * t_s / 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "run")]
pub enum PulseKind {
    /// Conventional full-width pulse for a single one.
    Full,
    /// Width `T_p/β` pulse for an isolated one.
    Shrunk,
    /// Unshrunk pulse standing in for a run of `n` ones.
    Collapsed(usize),
}

impl PulseKind {
    /// Number of one-bits the pulse carries.
    pub fn ones(self) -> usize {
        match self {
            PulseKind::Full | PulseKind::Shrunk => 1,
            PulseKind::Collapsed(n) => n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub center: f64,
    pub width: f64,
    /// √W.
    pub amplitude: f64,
    pub kind: PulseKind,
}

impl Pulse {
    pub fn energy(&self) -> f64 {
        self.amplitude * self.amplitude * self.width
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulsePlan {
    pub pulses: Vec<Pulse>,
    pub n_bits: usize,
    pub slot_duration: f64,
    pub scheme: Scheme,
    pub mode: Option<PairingMode>,
}

impl PulsePlan {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["center_s", "width_s", "amplitude"])?;
        for p in &self.pulses {
            w.serialize((p.center, p.width, p.amplitude))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub beta: f64,
    pub conserve_energy: bool,
    pub mode: PairingMode,
    pub n_max: usize,
    pub center: CenterRule,
}

impl EncoderConfig {
    pub fn new(beta: f64) -> Self {
        Self {
            beta,
            conserve_energy: false,
            mode: PairingMode::DisjointPairs,
            n_max: 2,
            center: CenterRule::Geometric,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 1.0) || !self.beta.is_finite() {
            return Err(Error::Config(format!("β_br must be ≥ 1, got {}", self.beta)));
        }
        if self.n_max < 2 {
            return Err(Error::Config(format!("n_max must be ≥ 2, got {}", self.n_max)));
        }
        Ok(())
    }
}

fn check_bits(bits: &[u8]) -> Result<()> {
    match bits.iter().position(|&b| b > 1) {
        Some(i) => Err(Error::Domain(format!("bit {i} is {} (expected 0 or 1)", bits[i]))),
        None => Ok(()),
    }
}

/// `N_f` pulse centers at spacing `T_f` around `center`.
fn repetitions(center: f64, cfg: &PulseConfig) -> impl Iterator<Item = f64> + '_ {
    let half = (cfg.n_f as f64 - 1.0) / 2.0;
    (0..cfg.n_f).map(move |m| center + (m as f64 - half) * cfg.t_f)
}

/// One width-`T_p`, amplitude-`√P_a` pulse per one-bit and frame.
pub fn encode_conventional(bits: &[u8], cfg: &PulseConfig) -> Result<PulsePlan> {
    check_bits(bits)?;
    let t_s = cfg.t_s();
    if cfg.t_p > t_s {
        return Err(Error::Config(format!("T_p = {} s exceeds T_s = {t_s} s", cfg.t_p)));
    }
    let amp = cfg.p_a.sqrt();
    let mut pulses = Vec::new();
    for (i, _) in bits.iter().enumerate().filter(|(_, &b)| b == 1) {
        let mid = (i as f64 + 0.5) * t_s;
        pulses.extend(repetitions(mid, cfg).map(|c| Pulse { center: c, width: cfg.t_p, amplitude: amp, kind: PulseKind::Full }));
    }
    Ok(PulsePlan { pulses, n_bits: bits.len(), slot_duration: t_s, scheme: Scheme::Conventional, mode: None })
}

struct Builder<'a> {
    cfg: &'a PulseConfig,
    enc: &'a EncoderConfig,
    pulses: Vec<Pulse>,
}

impl Builder<'_> {
    fn shrunk(&mut self, slot: usize) {
        let t_s = self.cfg.t_s();
        let width = self.cfg.t_p / self.enc.beta;
        let power = if self.enc.conserve_energy { self.cfg.p_a * self.enc.beta } else { self.cfg.p_a };
        let mid = (slot as f64 + 0.5) * t_s;
        let amp = power.sqrt();
        let new: Vec<Pulse> = repetitions(mid, self.cfg)
            .map(|c| Pulse { center: c, width, amplitude: amp, kind: PulseKind::Shrunk })
            .collect();
        self.pulses.extend(new);
    }

    fn collapsed(&mut self, start: usize, n: usize) {
        if n == 1 {
            return self.shrunk(start);
        }
        let t_s = self.cfg.t_s();
        let center = self.enc.center.center(start as f64 * t_s, n, t_s);
        let amp = self.cfg.p_a.sqrt();
        let width = self.cfg.t_p;
        let new: Vec<Pulse> = repetitions(center, self.cfg)
            .map(|c| Pulse { center: c, width, amplitude: amp, kind: PulseKind::Collapsed(n) })
            .collect();
        self.pulses.extend(new);
    }
}

/// Pattern-aware adaptive encoder.
pub fn encode_adaptive(bits: &[u8], cfg: &PulseConfig, enc: &EncoderConfig) -> Result<PulsePlan> {
    check_bits(bits)?;
    enc.validate()?;
    let t_s = cfg.t_s();
    if cfg.t_p > t_s {
        return Err(Error::Config(format!("T_p = {} s exceeds T_s = {t_s} s", cfg.t_p)));
    }
    let mut b = Builder { cfg, enc, pulses: Vec::new() };
    match enc.mode {
        PairingMode::DisjointPairs => {
            for (k, pair) in bits.chunks(2).enumerate() {
                let i = 2 * k;
                match pair {
                    [1, 1] => b.collapsed(i, 2),
                    [1, 0] => b.shrunk(i),
                    [0, 1] => b.shrunk(i + 1),
                    [1] => b.shrunk(i),
                    _ => {}
                }
            }
        }
        PairingMode::RunLength => {
            let mut i = 0;
            while i < bits.len() {
                if bits[i] == 0 {
                    i += 1;
                    continue;
                }
                let run = bits[i..].iter().take_while(|&&x| x == 1).count();
                let mut start = i;
                let mut left = run;
                while left > 0 {
                    let n = left.min(enc.n_max);
                    b.collapsed(start, n);
                    start += n;
                    left -= n;
                }
                i += run;
            }
        }
    }
    Ok(PulsePlan { pulses: b.pulses, n_bits: bits.len(), slot_duration: t_s, scheme: Scheme::Adaptive, mode: Some(enc.mode) })
}

pub fn count_transmissions(plan: &PulsePlan) -> usize {
    plan.pulses.len()
}

/// `Σ amplitude² · width`.
pub fn plan_energy(plan: &PulsePlan) -> f64 {
    plan.pulses.iter().map(Pulse::energy).sum()
}

/// Transmit-energy accounting of a plan against conventional OOK on the same
/// bits. All fields in joules; `conventional = actual + collapse_saving +
/// shrink_saving` up to rounding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub conventional: f64,
    pub actual: f64,
    /// Energy not spent because runs were carried by a single pulse.
    pub collapse_saving: f64,
    /// Energy not spent because isolated ones were shrunk.
    pub shrink_saving: f64,
}

impl EnergyBreakdown {
    pub fn gain(&self) -> f64 {
        if self.conventional == 0.0 {
            0.0
        } else {
            1.0 - self.actual / self.conventional
        }
    }
}

pub fn energy_breakdown(plan: &PulsePlan, cfg: &PulseConfig) -> EnergyBreakdown {
    let e_pulse = cfg.p_a * cfg.t_p;
    let mut out = EnergyBreakdown { conventional: 0.0, actual: 0.0, collapse_saving: 0.0, shrink_saving: 0.0 };
    for p in &plan.pulses {
        let reference = p.kind.ones() as f64 * e_pulse;
        let e = p.energy();
        out.conventional += reference;
        out.actual += e;
        match p.kind {
            PulseKind::Full => {}
            PulseKind::Shrunk => out.shrink_saving += reference - e,
            PulseKind::Collapsed(_) => out.collapse_saving += reference - e,
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> PulseConfig {
        PulseConfig::new(0.5e-9, 2.5e-9, 1, 1.0, 4.0, 16.0).unwrap()
    }

    fn random_bits(n: usize, p: f64, seed: u64) -> Vec<u8> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_bool(p) as u8).collect()
    }

    #[test]
    fn conventional_examples() {
        let c = cfg();
        assert!(encode_conventional(&[0, 0, 0], &c).unwrap().pulses.is_empty());
        let plan = encode_conventional(&[1, 1], &c).unwrap();
        assert_eq!(count_transmissions(&plan), 2);
        assert!((plan_energy(&plan) - 2.0 * c.p_a * c.t_p).abs() < 1e-24);
        assert_eq!(count_transmissions(&encode_conventional(&[1, 0, 1, 1], &c).unwrap()), 3);
        assert!(encode_conventional(&[2], &c).is_err());
    }

    #[test]
    fn conventional_count_is_binomial() {
        let n = 10_000;
        let bits = random_bits(n, 0.5, 11);
        let k = count_transmissions(&encode_conventional(&bits, &cfg()).unwrap()) as f64;
        let sd = (n as f64 * 0.25).sqrt();
        assert!((k - 0.5 * n as f64).abs() <= 3.0 * sd);
    }

    #[test]
    fn conventional_repetitions() {
        let c = PulseConfig::new(0.5e-9, 1e-9, 3, 1.0, 2.0, 16.0).unwrap();
        let plan = encode_conventional(&[0, 1], &c).unwrap();
        let centers: Vec<f64> = plan.pulses.iter().map(|p| p.center).collect();
        let expected = [3.5e-9, 4.5e-9, 5.5e-9];
        for (a, b) in centers.iter().zip(expected) {
            assert!((a - b).abs() < 1e-21);
        }
        let k = 5;
        let bits = vec![1; k];
        assert!((plan_energy(&encode_conventional(&bits, &c).unwrap()) - (k * 3) as f64 * c.p_a * c.t_p).abs() < 1e-22);
    }

    #[test]
    fn adaptive_pair_examples() {
        let c = cfg();
        let e_pulse = c.p_a * c.t_p;

        let plan = encode_adaptive(&[1, 1], &c, &EncoderConfig::new(2.0)).unwrap();
        assert_eq!(plan.pulses.len(), 1);
        assert_eq!(plan.pulses[0].width, c.t_p);
        assert!((plan.pulses[0].center - c.t_s()).abs() < 1e-21);
        assert!((plan_energy(&plan) - e_pulse).abs() < 1e-24);

        let plan = encode_adaptive(&[1, 0], &c, &EncoderConfig::new(2.0)).unwrap();
        assert_eq!(plan.pulses.len(), 1);
        assert_eq!(plan.pulses[0].width, c.t_p / 2.0);
        assert!((1.0 - plan_energy(&plan) / e_pulse - 0.5).abs() < 1e-12);

        let plan = encode_adaptive(&[0, 1], &c, &EncoderConfig::new(2.0)).unwrap();
        assert!((plan.pulses[0].center - 1.5 * c.t_s()).abs() < 1e-21);

        let plan = encode_adaptive(&[1, 0], &c, &EncoderConfig::new(1.0)).unwrap();
        assert_eq!(plan.pulses[0].width, c.t_p);

        let plan = encode_adaptive(&[1, 0], &c, &EncoderConfig::new(4.0)).unwrap();
        assert!((plan_energy(&plan) - e_pulse / 4.0).abs() < 1e-24);

        let enc = EncoderConfig { conserve_energy: true, ..EncoderConfig::new(3.0) };
        let plan = encode_adaptive(&[1, 0], &c, &enc).unwrap();
        assert!((plan.pulses[0].amplitude / c.p_a.sqrt() - 3f64.sqrt()).abs() < 1e-12);
        assert!((plan_energy(&plan) - e_pulse).abs() < 1e-22);

        let plan = encode_adaptive(&[1, 0, 1, 1], &c, &EncoderConfig::new(3.0)).unwrap();
        assert_eq!(count_transmissions(&plan), 2);
        assert_eq!(plan.pulses[0].kind, PulseKind::Shrunk);
        assert_eq!(plan.pulses[1].kind, PulseKind::Collapsed(2));

        // Odd tail is treated as an isolated bit.
        let plan = encode_adaptive(&[1, 1, 1], &c, &EncoderConfig::new(3.0)).unwrap();
        assert_eq!(plan.pulses.len(), 2);
        assert_eq!(plan.pulses[1].kind, PulseKind::Shrunk);
        assert!((plan.pulses[1].center - 2.5 * c.t_s()).abs() < 1e-21);

        // `01 10` stays two shrunk pulses: pairs are disjoint.
        let plan = encode_adaptive(&[0, 1, 1, 0], &c, &EncoderConfig::new(3.0)).unwrap();
        assert!(plan.pulses.iter().all(|p| p.kind == PulseKind::Shrunk));
    }

    #[test]
    fn leading_center_rule() {
        let c = cfg();
        let enc = EncoderConfig { center: CenterRule::Leading, ..EncoderConfig::new(3.0) };
        let plan = encode_adaptive(&[0, 0, 1, 1], &c, &enc).unwrap();
        assert!((plan.pulses[0].center - 2.5 * c.t_s()).abs() < 1e-21);
        let ts = 1.0;
        assert_eq!(CenterRule::Leading.center(4.0, 3, ts), 5.0);
        assert_eq!(CenterRule::Geometric.center(4.0, 3, ts), 5.5);
    }

    #[test]
    fn run_length_mode() {
        let c = cfg();
        let enc = EncoderConfig { mode: PairingMode::RunLength, n_max: 3, ..EncoderConfig::new(3.0) };
        let plan = encode_adaptive(&[0, 1, 1, 1, 1, 1, 0, 1, 1, 1, 1], &c, &enc).unwrap();
        let kinds: Vec<PulseKind> = plan.pulses.iter().map(|p| p.kind).collect();
        assert_eq!(
            kinds,
            [PulseKind::Collapsed(3), PulseKind::Collapsed(2), PulseKind::Collapsed(3), PulseKind::Shrunk]
        );
        assert!((plan.pulses[0].center - 2.5 * c.t_s()).abs() < 1e-21);
        // `0110` pairs across the disjoint-pair boundary here.
        let plan = encode_adaptive(&[0, 1, 1, 0], &c, &enc).unwrap();
        assert_eq!(plan.pulses.len(), 1);
        assert!(encode_adaptive(&[1], &c, &EncoderConfig { n_max: 1, ..enc }).is_err());
    }

    #[test]
    fn transmissions_per_bit_near_three_eighths() {
        let c = cfg();
        let enc = EncoderConfig::new(3.0);
        let n = 10_000;
        let mean = (0..50)
            .map(|s| count_transmissions(&encode_adaptive(&random_bits(n, 0.5, s), &c, &enc).unwrap()) as f64 / n as f64)
            .sum::<f64>()
            / 50.0;
        assert!((0.37..=0.38).contains(&mean), "{mean}");
    }

    #[test]
    fn breakdown_identity() {
        let c = cfg();
        let bits = random_bits(1000, 0.5, 3);
        let plan = encode_adaptive(&bits, &c, &EncoderConfig::new(4.0)).unwrap();
        let b = energy_breakdown(&plan, &c);
        let conv = plan_energy(&encode_conventional(&bits, &c).unwrap());
        assert!(((b.conventional - conv) / conv).abs() < 1e-12);
        assert!(((b.actual + b.collapse_saving + b.shrink_saving - conv) / conv).abs() < 1e-12);
        assert!((b.actual - plan_energy(&plan)).abs() < 1e-20);
    }

    #[test]
    fn plan_csv() {
        let c = cfg();
        let plan = encode_adaptive(&[1, 1], &c, &EncoderConfig::new(2.0)).unwrap();
        let mut out = Vec::new();
        plan.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("center_s,width_s,amplitude\n"));
        assert_eq!(text.lines().count(), 2);
    }

    proptest! {
        #[test]
        fn adaptive_never_costs_more(bits in prop::collection::vec(0u8..=1, 0..64), beta in 1.01f64..6.0, run in any::<bool>()) {
            let c = cfg();
            let mode = if run { PairingMode::RunLength } else { PairingMode::DisjointPairs };
            let enc = EncoderConfig { mode, ..EncoderConfig::new(beta) };
            let a = encode_adaptive(&bits, &c, &enc).unwrap();
            let conv = encode_conventional(&bits, &c).unwrap();
            prop_assert!(count_transmissions(&a) <= count_transmissions(&conv));
            if bits.contains(&1) {
                prop_assert!(plan_energy(&a) < plan_energy(&conv));
            }
            crate::waveform::check_plan(&a, &c).unwrap();
        }
    }
}
