#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(src) = std::str::from_utf8(data) {
        if let Ok((table, _)) = koord::compile(src, 3) {
            assert!(table.events.iter().all(|e| !e.name.is_empty()));
        }
    }
});
