#![no_main]

use biot_fetidp::driver::{parse_f64_list, parse_usize_list};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(v) = parse_usize_list(text) {
            let s = v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
            assert_eq!(parse_usize_list(&s).expect("round trip"), v);
        }
        if let Ok(v) = parse_f64_list(text) {
            assert!(v.iter().all(|x| x.is_finite()));
        }
    }
});
