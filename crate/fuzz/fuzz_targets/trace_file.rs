#![no_main]

use koordsim::monitor;
use koordsim::trace::Trace;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(trace) = Trace::parse(text) {
            assert_eq!(Trace::parse(&trace.to_string()).unwrap(), trace);
            let _ = monitor::safety(&trace, 0.5);
            let _ = monitor::visits(&trace, &trace.header_tasks(), 0.2, 1.0);
        }
    }
});
