#![no_main]

use dfrc::harness::SweepSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(spec) = SweepSpec::parse(text) else { return };
    if let Ok(values) = spec.values() {
        assert!(!values.is_empty());
        assert!(values.windows(2).all(|w| w[0] < w[1]));
        let again = SweepSpec::parse(&spec.to_string()).expect("display output parses");
        assert_eq!(again.values().expect("same grid"), values);
    }
});
