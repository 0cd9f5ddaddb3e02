#![no_main]

use biot_fetidp::linalg::{read_matrix_market, write_matrix_market};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(a) = read_matrix_market(text) {
        let mut out = Vec::new();
        write_matrix_market(&a, &mut out).expect("write");
        let b = read_matrix_market(std::str::from_utf8(&out).expect("utf8")).expect("round trip");
        assert_eq!((a.n_rows(), a.n_cols()), (b.n_rows(), b.n_cols()));
    }
});
