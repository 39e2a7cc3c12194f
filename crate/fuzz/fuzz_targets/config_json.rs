#![no_main]

use dfrc::harness::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ExperimentConfig::from_json_str(text) {
        // a config that parsed has already been validated
        let points = cfg.points().expect("validated sweep");
        assert!(!points.is_empty());
    }
});
