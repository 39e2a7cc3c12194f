#![no_main]

use dfrc::harness::emit;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(records) = emit::parse_results_csv(text) else { return };
    if let Ok(out) = emit::to_csv_string(&records) {
        assert_eq!(emit::parse_results_csv(&out).expect("own output parses"), records);
    }
});
