#![no_main]

use libfuzzer_sys::fuzz_target;
use pcascape::lattice::Torus;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(t) = Torus::parse(text) {
            assert_eq!(Torus::parse(&t.to_string()).unwrap(), t);
        }
    }
});
