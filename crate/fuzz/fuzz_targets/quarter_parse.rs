#![no_main]

use gsfavar::data::Quarter;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(q) = text.parse::<Quarter>() {
        assert_eq!(q.to_string().parse::<Quarter>().ok(), Some(q));
    }
});
