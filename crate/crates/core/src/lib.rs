//! Round-synchronous distributed shared memory runtime, vehicle models,
//! planner and simulation harness for Koord programs.

pub mod apps;
pub mod config;
pub mod dsm;
pub mod geom;
pub mod harness;
pub mod monitor;
pub mod motion;
pub mod planner;
pub mod scaling;
pub mod trace;
pub mod transport;
pub mod wire;
