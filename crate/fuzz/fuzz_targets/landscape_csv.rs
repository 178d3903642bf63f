#![no_main]

use libfuzzer_sys::fuzz_target;
use pcascape::io::parse_landscape_csv;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_landscape_csv(text, 0.5);
    }
});
