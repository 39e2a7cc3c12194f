#![no_main]

use dfrc::harness::parse_schemes;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(schemes) = parse_schemes(text) {
        assert!(!schemes.is_empty());
        let names: Vec<&str> = schemes.iter().map(|m| m.name()).collect();
        assert_eq!(parse_schemes(&names.join(",")).expect("names parse"), schemes);
    }
});
