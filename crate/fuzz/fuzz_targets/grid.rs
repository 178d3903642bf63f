#![no_main]

use libfuzzer_sys::fuzz_target;
use pcascape::lattice::SpinConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(c) = SpinConfig::parse_grid(text) {
            let back = SpinConfig::parse_grid(&c.to_grid()).unwrap();
            assert_eq!(back, c);
        }
    }
});
