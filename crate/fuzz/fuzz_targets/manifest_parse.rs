#![no_main]

use gsfavar::data::parse_manifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = parse_manifest(text) {
        let back = parse_manifest(&m.to_toml()).expect("serialized manifest parses");
        assert_eq!(back, m);
    }
});
