use thz_ook::montecarlo::{
    config_hash, run_ber_vs_power, run_ee_vs_beta, run_tx_events, Execution, ExperimentConfig, ExperimentReport,
};

fn small() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.sweep.seed = 99;
    cfg.sweep.bits = 2000;
    cfg.sweep.trials = 4;
    cfg
}

fn rendered(r: &ExperimentReport) -> (String, String) {
    (r.to_csv_string().unwrap(), r.to_json_string().unwrap())
}

#[test]
fn identical_config_gives_byte_identical_reports() {
    let cfg = small();
    assert_eq!(rendered(&run_ee_vs_beta(&cfg).unwrap()), rendered(&run_ee_vs_beta(&cfg).unwrap()));
    let mut seq = cfg.clone();
    seq.sweep.execution = Execution::Sequential;
    assert_eq!(run_ee_vs_beta(&seq).unwrap().rows, run_ee_vs_beta(&cfg).unwrap().rows);
}

#[test]
fn config_hash_tracks_every_field() {
    let a = small();
    let mut b = a.clone();
    b.sweep.seed += 1;
    let mut c = a.clone();
    c.pulse.t_p_s *= 1.0 + 1e-15;
    assert_ne!(config_hash(&a), config_hash(&b));
    assert_ne!(config_hash(&a), config_hash(&c));
    assert_eq!(config_hash(&a), config_hash(&a.clone()));
}

/// Quadrupling the trial count halves the standard error of the mean.
#[test]
fn error_bars_shrink_with_trials() {
    let mut cfg = small();
    cfg.sweep.n_grid = vec![4000];
    let width = |trials: usize| {
        let mut c = cfg.clone();
        c.sweep.trials = trials;
        let r = run_tx_events(&c).unwrap();
        let row = r.row("proposed", 4000.0).unwrap();
        row.std / (row.n as f64).sqrt()
    };
    let ratio = width(200) / width(50);
    assert!((0.4..0.6).contains(&ratio), "ratio {ratio}");
}

/// At N = 4000 the expected counts are 2000 and 1500.
#[test]
fn four_thousand_bit_window_counts() {
    let mut cfg = small();
    cfg.sweep.n_grid = vec![4000];
    cfg.sweep.trials = 50;
    let r = run_tx_events(&cfg).unwrap();
    let conv = r.row("conventional", 4000.0).unwrap();
    let prop = r.row("proposed", 4000.0).unwrap();
    assert!(conv.ci_lo <= 2000.0 && 2000.0 <= conv.ci_hi, "{conv:?}");
    assert!(prop.ci_lo <= 1500.0 && 1500.0 <= prop.ci_hi, "{prop:?}");
}

/// Without broadening the three variants transmit identical pulses up to
/// collapse, so their BERs agree within the intervals.
#[test]
fn variants_coincide_without_broadening() {
    let mut cfg = small();
    cfg.link.beta_override = Some(1.0);
    cfg.link.distances_m = vec![10.0];
    cfg.sweep.power_dbm = vec![-10.0, -5.0, 0.0];
    let r = run_ber_vs_power(&cfg).unwrap();
    for &x in &cfg.sweep.power_dbm {
        let rows: Vec<_> = ["proposed@10m", "proposed-conserved@10m"].iter().map(|s| r.row(s, x).unwrap()).collect();
        assert!(rows[0].ci_lo <= rows[1].ci_hi && rows[1].ci_lo <= rows[0].ci_hi, "{rows:?}");
    }
}

/// Under ISI spanning two slots the conventional BER stops improving with
/// power.
#[test]
fn conventional_floor_is_flat_at_high_power() {
    let mut cfg = small();
    cfg.pulse.t_p_s = 1.25e-9;
    cfg.link.distances_m = vec![15.0];
    cfg.sweep.bits = 20_000;
    cfg.sweep.trials = 5;
    cfg.sweep.schemes = vec![thz_ook::montecarlo::Variant::Conventional];
    cfg.sweep.power_dbm = vec![10.0, 15.0, 20.0, 25.0, 30.0, 35.0];
    let r = run_ber_vs_power(&cfg).unwrap();
    let top: Vec<f64> = [25.0, 30.0, 35.0].iter().map(|&x| r.row("conventional@15m", x).unwrap().mean).collect();
    let (lo, hi) = top.iter().fold((f64::MAX, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    assert!(lo > 0.01, "{top:?}");
    assert!((hi - lo) / hi < 0.1, "{top:?}");
}
