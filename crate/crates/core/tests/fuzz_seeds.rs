//! The fuzz targets' invariants, checked on their corpus seeds so they hold
//! on stable without cargo-fuzz.

use std::path::PathBuf;

use koordsim::config::SimConfig;
use koordsim::trace::Trace;
use koordsim::wire::Frame;

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.display().to_string(), std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn koord_source_seeds_compile() {
    for (name, data) in seeds("koord_source") {
        let src = String::from_utf8(data).unwrap();
        assert!(koord::compile(&src, 3).is_ok(), "{name}");
    }
}

#[test]
fn wire_frame_seeds_round_trip() {
    for (name, data) in seeds("wire_frame") {
        let frame = Frame::decode(&data).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(frame.encode().unwrap(), data, "{name}");
    }
}

#[test]
fn sim_config_seeds_reparse() {
    for (name, data) in seeds("sim_config") {
        let cfg = SimConfig::parse(&String::from_utf8(data).unwrap(), None).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(SimConfig::parse(&cfg.to_string(), None).unwrap(), cfg, "{name}");
    }
}

#[test]
fn trace_file_seeds_reparse() {
    for (name, data) in seeds("trace_file") {
        let trace = Trace::parse(&String::from_utf8(data).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(Trace::parse(&trace.to_string()).unwrap(), trace, "{name}");
        assert!(!trace.header_tasks().is_empty());
    }
}
