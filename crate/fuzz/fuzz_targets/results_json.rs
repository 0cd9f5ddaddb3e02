#![no_main]

use biot_fetidp::driver::{read_results_json, write_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(records) = read_results_json(text) {
        let again = write_json(&records).expect("write");
        assert_eq!(read_results_json(&again).expect("round trip").len(), records.len());
    }
});
