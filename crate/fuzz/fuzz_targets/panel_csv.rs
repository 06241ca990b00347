#![no_main]

use gsfavar::data::{build_panel, parse_manifest, parse_raw_csv, LoadOptions};
use libfuzzer_sys::fuzz_target;

const MANIFEST: &str = r#"
[[group]]
id = 1
name = "G1"

[[variable]]
name = "a"
group = 1
tcode = 5
speed = "slow"
role = "panel_x"

[[variable]]
name = "b"
group = 1
tcode = 7
speed = "fast"
role = "panel_x"

[[variable]]
name = "y"
tcode = 1
speed = "fast"
role = "observable_y"
"#;

fuzz_target!(|data: &[u8]| {
    let Ok(raw) = parse_raw_csv(data) else { return };
    assert_eq!(raw.names.len(), raw.columns.len());
    assert!(raw.columns.iter().all(|c| c.len() == raw.dates.len()));
    let manifest = parse_manifest(MANIFEST).expect("fixed manifest parses");
    for forward_fill in [false, true] {
        let _ = build_panel(&raw, &manifest, LoadOptions { forward_fill, min_window: 4 });
    }
});
