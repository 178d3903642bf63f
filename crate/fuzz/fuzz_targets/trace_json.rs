#![no_main]

use libfuzzer_sys::fuzz_target;
use pcascape::paths::PathTrace;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(t) = PathTrace::from_json(text) {
            let back = PathTrace::from_json(&t.to_json()).unwrap();
            assert_eq!(back.states, t.states);
        }
    }
});
