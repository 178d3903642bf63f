#![no_main]

use libfuzzer_sys::fuzz_target;
use pcascape::io::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(c) = ExperimentConfig::parse(text) {
            let _ = c.validate();
            // NaN fields never compare equal, so only check finite ones.
            if c.h.is_finite() && c.betas.iter().chain(&c.epsilons).all(|v| v.is_finite()) {
                assert_eq!(ExperimentConfig::parse(&c.to_manifest()).unwrap(), c);
            }
        }
    }
});
