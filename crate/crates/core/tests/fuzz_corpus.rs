//! Replays the checked-in fuzz corpus through the same properties the fuzz
//! targets assert, so the seeds stay meaningful on a stable toolchain.

use std::fs;
use std::path::PathBuf;

use dfrc::harness::{emit, parse_schemes, ExperimentConfig, SweepSpec};

fn seeds(target: &str) -> Vec<(PathBuf, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<(PathBuf, String)> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|entry| {
            let path = entry.unwrap().path();
            let text = fs::read_to_string(&path).unwrap();
            (path, text)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn config_seeds() {
    let mut parsed = 0;
    for (path, text) in seeds("config_json") {
        if let Ok(cfg) = ExperimentConfig::from_json_str(&text) {
            assert!(!cfg.points().unwrap().is_empty(), "{}", path.display());
            parsed += 1;
        }
    }
    assert!(parsed >= 3);
}

#[test]
fn sweep_seeds() {
    for (path, text) in seeds("sweep_spec") {
        let spec = SweepSpec::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let values = spec.values().unwrap();
        assert!(values.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(
            SweepSpec::parse(&spec.to_string())
                .unwrap()
                .values()
                .unwrap(),
            values
        );
    }
}

#[test]
fn scheme_seeds() {
    for (_, text) in seeds("schemes") {
        if let Ok(schemes) = parse_schemes(&text) {
            let names: Vec<&str> = schemes.iter().map(|m| m.name()).collect();
            assert_eq!(parse_schemes(&names.join(",")).unwrap(), schemes);
        }
    }
}

#[test]
fn results_seeds() {
    for (path, text) in seeds("results_csv") {
        let records =
            emit::parse_results_csv(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(
            emit::parse_results_csv(&emit::to_csv_string(&records).unwrap()).unwrap(),
            records
        );
    }
    for (path, text) in seeds("results_json") {
        let records =
            emit::parse_results_json(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(
            emit::parse_results_json(&emit::to_json_string(&records).unwrap()).unwrap(),
            records
        );
    }
}
