//! Drives every agent through one round against a shared transport.

use std::collections::BTreeMap;
use std::sync::Arc;

use koord::lower::ExecutableEventTable;
use koord::{Fault, Value, Vec3};
use rayon::prelude::*;

use super::agent::{Agent, Conflict, Executed, Externals};
use super::arbiter::Arbiter;
use super::store::SharedStore;
use crate::transport::Transport;
use crate::wire::{Frame, MsgKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MsgRecord {
    pub sender: u16,
    pub kind: MsgKind,
    pub var_id: u16,
    pub index: u16,
    pub bytes: usize,
    /// Copies put on the network.
    pub copies: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RoundReport {
    pub round: u32,
    /// Per pid, the event that ran.
    pub events: Vec<Option<Executed>>,
    /// Per pid, the arbitration outcome of an atomic selection.
    pub arbitration: Vec<Option<bool>>,
    /// Per pid, a route actuated this round.
    pub routes: Vec<Option<Vec<Vec3>>>,
    pub messages: Vec<MsgRecord>,
    /// Agents that faulted this round.
    pub faults: Vec<(u16, Fault)>,
    /// `(observer, conflict)` pairs.
    pub conflicts: Vec<(u16, Conflict)>,
}

impl RoundReport {
    pub fn executed(&self) -> usize {
        self.events.iter().flatten().count()
    }

    pub fn grants(&self) -> impl Iterator<Item = u16> + '_ {
        self.arbitration.iter().enumerate().filter(|(_, g)| **g == Some(true)).map(|(p, _)| p as u16)
    }
}

/// What one agent produced in the execute phase: the event it ran, the
/// route it actuated and its write frames.
type AgentOutput = (Option<Executed>, Option<Vec<Vec3>>, Vec<Frame>);

pub struct Fleet {
    agents: Vec<Agent>,
    transport: Box<dyn Transport>,
    arbiter: Box<dyn Arbiter>,
    delta: f64,
}

impl Fleet {
    /// `init` overrides declared initial values by variable name.
    pub fn new(
        table: Arc<ExecutableEventTable>,
        init: &BTreeMap<String, Value>,
        transport: Box<dyn Transport>,
        arbiter: Box<dyn Arbiter>,
        delta: f64,
    ) -> Self {
        let n = transport.num_agents();
        let store = SharedStore::new(&table, n, init);
        let agents = (0..n).map(|pid| Agent::new(pid as u16, n, table.clone(), store.clone())).collect();
        Self { agents, transport, arbiter, delta }
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn agent(&self, pid: usize) -> &Agent {
        &self.agents[pid]
    }

    pub fn transport(&self) -> &dyn Transport {
        self.transport.as_ref()
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    fn poll_all(&mut self, now: f64) {
        for a in &mut self.agents {
            let got = self.transport.poll(a.pid(), now);
            a.deliver(got);
        }
    }

    fn send(&mut self, frame: &Frame, now: f64, log: &mut Vec<MsgRecord>) {
        let bytes = match frame.encode() {
            Ok(b) => b,
            Err(_) => {
                self.transport.stats_mut().send_errors += 1;
                return;
            }
        };
        let copies = self.transport.broadcast(frame.sender, &bytes, now);
        log.push(MsgRecord {
            sender: frame.sender,
            kind: frame.kind,
            var_id: frame.var_id,
            index: frame.index,
            bytes: bytes.len(),
            copies,
        });
    }

    /// Run round `round`, which starts at `round * delta`. `ports` holds
    /// each robot's `(psn, reached)` at the round boundary.
    pub fn round(&mut self, round: u32, ports: &[(Vec3, bool)], ext: &dyn Externals) -> RoundReport {
        let n = self.agents.len();
        let start = f64::from(round) * self.delta;
        let mid = start + self.delta / 2.0;
        self.transport.stats_mut().enter_round(round);
        let faulted: Vec<bool> = self.agents.iter().map(|a| a.fault().is_some()).collect();

        // begin and select
        self.poll_all(start);
        self.agents.par_iter_mut().for_each(|a| {
            let (psn, reached) = ports.get(usize::from(a.pid())).copied().unwrap_or((Vec3::ZERO, true));
            a.begin_round(round, psn, reached);
            a.select(ext);
        });
        let mut report = RoundReport {
            round,
            events: vec![None; n],
            arbitration: vec![None; n],
            routes: vec![None; n],
            ..Default::default()
        };
        for pid in 0..n {
            report.conflicts.extend(self.agents[pid].conflicts().iter().map(|c| (pid as u16, *c)));
        }
        let intents: Vec<Frame> = self.agents.iter().filter_map(Agent::intent).collect();
        for f in &intents {
            self.send(f, start, &mut report.messages);
        }

        // arbitrate halfway through the round
        self.poll_all(mid);
        for (pid, a) in self.agents.iter_mut().enumerate() {
            report.arbitration[pid] = a.arbitrate(self.arbiter.as_ref());
        }
        let grants: Vec<Frame> = self.agents.iter().filter_map(Agent::grant_frame).collect();
        for f in &grants {
            self.send(f, mid, &mut report.messages);
        }

        // execute and commit
        let results: Vec<AgentOutput> = self
            .agents
            .par_iter_mut()
            .map(|a| {
                let done = a.execute(ext);
                let route = a.take_route();
                (done, route, a.commit())
            })
            .collect();
        for (pid, (done, route, frames)) in results.into_iter().enumerate() {
            report.events[pid] = done;
            report.routes[pid] = route;
            for f in &frames {
                self.send(f, mid, &mut report.messages);
            }
        }
        for (pid, a) in self.agents.iter().enumerate() {
            if let (false, Some(f)) = (faulted[pid], a.fault()) {
                report.faults.push((pid as u16, f.clone()));
            }
        }
        report
    }
}
