#![no_main]

use biot_fetidp::mesh::parse_mesh_dump;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_mesh_dump(text);
    }
});
