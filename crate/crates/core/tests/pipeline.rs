use proptest::prelude::*;
use thz_ook::detector::{decide_bits, slot_energies};
use thz_ook::txscheme::{
    count_transmissions, encode_adaptive, encode_conventional, plan_energy, EncoderConfig, PairingMode, PulseKind,
};
use thz_ook::waveform::{propagate_gauss_approx, synthesize_frame, Normalization, PulseConfig};

const T_F: f64 = 2.5e-9;
const P_A: f64 = 0.01;

fn short_pulses(beta_max: f64) -> PulseConfig {
    PulseConfig::new(T_F / 5.0, T_F, 1, P_A, beta_max, 16.0).unwrap()
}

fn bits() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..=1, 1..48)
}

proptest! {
    #[test]
    fn adaptive_plan_never_costs_more(bits in bits(), beta in 1.0..6.0f64, run_length in any::<bool>()) {
        let cfg = short_pulses(beta);
        let mut enc = EncoderConfig::new(beta);
        if run_length {
            enc.mode = PairingMode::RunLength;
            enc.n_max = 3;
        }
        let conv = encode_conventional(&bits, &cfg).unwrap();
        let adapt = encode_adaptive(&bits, &cfg, &enc).unwrap();
        prop_assert!(count_transmissions(&adapt) <= count_transmissions(&conv));
        prop_assert!(plan_energy(&adapt) <= plan_energy(&conv) * (1.0 + 1e-12));
        let ones: usize = adapt.pulses.iter().map(|p| p.kind.ones()).sum();
        prop_assert_eq!(ones, bits.iter().filter(|&&b| b == 1).count());
    }

    /// Widths that are whole numbers of samples are synthesised exactly.
    #[test]
    fn transmit_frame_energy_matches_plan(bits in bits(), beta in prop::sample::select(vec![1.0, 2.0, 4.0])) {
        let cfg = short_pulses(beta);
        let plan = encode_adaptive(&bits, &cfg, &EncoderConfig::new(beta)).unwrap();
        let frame = synthesize_frame(&plan, &cfg).unwrap();
        let expected = plan_energy(&plan);
        prop_assert!((frame.energy() - expected).abs() <= 1e-9 * expected.max(1e-30));
    }

    /// With received pulses well inside a slot, a fixed threshold recovers
    /// every stream.
    #[test]
    fn noiseless_round_trip_with_short_pulses(bits in bits(), beta in 1.0..2.5f64) {
        let cfg = short_pulses(beta);
        let plan = encode_adaptive(&bits, &cfg, &EncoderConfig::new(beta)).unwrap();
        let rx = propagate_gauss_approx(&plan, &cfg, beta, 1.0, Normalization::EnergyPreserving).unwrap();
        let energies = slot_energies(&rx, cfg.t_s()).unwrap();
        let full = P_A * cfg.t_p;
        prop_assert_eq!(decide_bits(&energies[..bits.len()], 0.2 * full), bits);
    }
}

#[test]
fn pair_patterns_map_to_expected_pulses() {
    let cfg = short_pulses(4.0);
    let plan = encode_adaptive(&[1, 1, 1, 0, 0, 1, 0, 0], &cfg, &EncoderConfig::new(4.0)).unwrap();
    let kinds: Vec<PulseKind> = plan.pulses.iter().map(|p| p.kind).collect();
    assert_eq!(kinds.len(), 3);
    assert!(matches!(kinds[0], PulseKind::Collapsed(2)));
    assert!(kinds[1..].iter().all(|k| *k == PulseKind::Shrunk));
    assert!((plan.pulses[1].width - cfg.t_p / 4.0).abs() < 1e-24);
}
