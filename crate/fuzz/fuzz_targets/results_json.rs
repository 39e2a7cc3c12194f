#![no_main]

use dfrc::harness::emit;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(records) = emit::parse_results_json(text) else { return };
    if let Ok(out) = emit::to_json_string(&records) {
        assert_eq!(emit::parse_results_json(&out).expect("own output parses"), records);
    }
});
