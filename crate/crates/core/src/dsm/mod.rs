//! Round-synchronous distributed shared memory.
//!
//! Every round each agent fixes its view of the shared variables, runs at
//! most one enabled event and broadcasts the cells it wrote. Remote writes
//! become visible at the start of the next round.

mod agent;
mod arbiter;
mod fleet;
mod store;

pub use agent::{Agent, AgentCounters, CallSite, Conflict, Executed, Externals, NoExternals};
pub use arbiter::{AlwaysGrant, Arbiter, LowestPid};
pub use fleet::{Fleet, MsgRecord, RoundReport};
pub use store::{Applied, SharedStore, StoreError, Version};
