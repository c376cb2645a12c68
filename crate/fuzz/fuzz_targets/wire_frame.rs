#![no_main]

use koordsim::wire::Frame;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(frame) = Frame::decode(data) {
        // anything that decodes re-encodes to the same frame
        let bytes = frame.encode().expect("decoded frame encodes");
        assert_eq!(Frame::decode(&bytes).unwrap(), frame);
    }
});
