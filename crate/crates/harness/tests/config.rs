use plasmotrack_harness::config::DEFAULT_CONFIG;
use plasmotrack_harness::{ExperimentConfig, HarnessError};

fn edited(from: &str, to: &str) -> String {
    assert!(DEFAULT_CONFIG.contains(from), "{from}");
    DEFAULT_CONFIG.replacen(from, to, 1)
}

fn config_error(text: &str) -> String {
    match ExperimentConfig::parse(text) {
        Err(HarnessError::Config(m)) => m,
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn builtin_config_parses_and_round_trips() {
    let cfg = ExperimentConfig::builtin();
    assert_eq!(cfg.seed().unwrap(), 7);
    let again = ExperimentConfig::parse(&cfg.canonical()).unwrap();
    assert_eq!(again.canonical(), cfg.canonical());
}

#[test]
fn unknown_keys_are_rejected() {
    let m = config_error(&edited("gain = 2.0", "gain = 2.0\ngian = 3.0"));
    assert!(m.contains("gian"), "{m}");
    config_error(&format!("{DEFAULT_CONFIG}\n[extras]\nx = 1\n"));
}

#[test]
fn inconsistent_values_are_rejected() {
    config_error(&edited("lengths = [1.0]", "lengths = [1.0, 1.0]"));
    config_error(&edited("dt = 0.01", "dt = 0.03"));
    config_error(&edited("n_low = 4", "n_low = 40"));
    config_error(&edited("delta = 0.1", "delta = 1.5"));
    config_error(&edited("coefficients = [0.2, 1.0, -0.5, 0.25]", "coefficients = [0.2, 1.0, -0.5, 0.25, 0.1]"));
}

#[test]
fn missing_seed_is_a_config_error() {
    let cfg = ExperimentConfig::parse(&edited("seed = 7", "")).unwrap();
    let e = cfg.seed().unwrap_err();
    assert_eq!(e.exit_code(), 2);
}
