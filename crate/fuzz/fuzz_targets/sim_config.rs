#![no_main]

use koordsim::config::SimConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = SimConfig::parse(text, None) {
            let again = SimConfig::parse(&cfg.to_string(), None).expect("canonical text parses");
            assert_eq!(again, cfg);
        }
    }
});
