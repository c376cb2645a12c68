//! One agent's round phases: begin, select, arbitrate, execute, commit.

use std::collections::BTreeMap;
use std::sync::Arc;

use koord::lower::{ExecutableEventTable, VarId};
use koord::{Actuator, Builtin, Env, Fault, Port, Value, Vec3};

use super::arbiter::Arbiter;
use super::store::{Applied, SharedStore, Version};
use crate::wire::{self, Frame, MsgKind, SCALAR_INDEX};

/// Where an external builtin is being called from. `call` counts external
/// calls within the round so repeated calls draw fresh seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CallSite {
    pub pid: u16,
    pub round: u32,
    pub psn: Vec3,
    pub call: u32,
}

/// Host side of `findPath` and `pathIsClear`.
pub trait Externals: Sync {
    fn call(&self, site: &CallSite, builtin: Builtin, args: &[Value]) -> Result<Value, Fault>;
}

/// For programs that never call an external builtin.
pub struct NoExternals;

impl Externals for NoExternals {
    fn call(&self, _: &CallSite, builtin: Builtin, _: &[Value]) -> Result<Value, Fault> {
        Err(Fault::External(format!("`{}` is not available on this host", builtin.name())))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AgentCounters {
    /// Writes applied more than one round after they were sent.
    pub late: u64,
    /// Writes older than the tolerance window.
    pub stale: u64,
    pub malformed: u64,
    pub duplicates: u64,
    /// Same-round writes to one cell from different senders.
    pub conflicts: u64,
}

/// A cell that received same-round writes from two agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conflict {
    pub var: VarId,
    pub cell: Option<usize>,
    pub round: u32,
    pub winner: u16,
    pub loser: u16,
}

/// What an agent did in a round.
#[derive(Debug, Clone, PartialEq)]
pub struct Executed {
    pub event: usize,
    /// `(var, entry)` pairs claimed through `assign`.
    pub claims: Vec<(VarId, usize)>,
}

pub struct Agent {
    pid: u16,
    num_agents: usize,
    table: Arc<ExecutableEventTable>,
    store: SharedStore,
    locals: Vec<Value>,
    round: u32,
    psn: Vec3,
    reached: bool,
    inbox: Vec<Frame>,
    intents: Vec<u16>,
    selected: Option<usize>,
    buffer: BTreeMap<(VarId, Option<usize>), Value>,
    route: Option<Value>,
    claims: Vec<(VarId, usize)>,
    conflicts: Vec<Conflict>,
    fault: Option<Fault>,
    pub counters: AgentCounters,
}

impl Agent {
    pub fn new(pid: u16, num_agents: usize, table: Arc<ExecutableEventTable>, store: SharedStore) -> Self {
        let locals = table.locals.iter().map(|l| l.init.clone()).collect();
        Self {
            pid,
            num_agents,
            table,
            store,
            locals,
            round: 0,
            psn: Vec3::ZERO,
            reached: true,
            inbox: Vec::new(),
            intents: Vec::new(),
            selected: None,
            buffer: BTreeMap::new(),
            route: None,
            claims: Vec::new(),
            conflicts: Vec::new(),
            fault: None,
            counters: AgentCounters::default(),
        }
    }

    pub fn pid(&self) -> u16 {
        self.pid
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn store(&self) -> &SharedStore {
        &self.store
    }

    pub fn table(&self) -> &ExecutableEventTable {
        &self.table
    }

    pub fn local(&self, name: &str) -> Option<&Value> {
        self.table.local_slot(name).map(|i| &self.locals[i])
    }

    pub fn fault(&self) -> Option<&Fault> {
        self.fault.as_ref()
    }

    pub fn selected(&self) -> Option<usize> {
        self.selected
    }

    /// Queue datagrams from the transport.
    pub fn deliver(&mut self, datagrams: Vec<(Vec<u8>, u16)>) {
        for (bytes, from) in datagrams {
            match Frame::decode(&bytes) {
                Ok(f) if f.sender == from && usize::from(f.sender) < self.num_agents => self.inbox.push(f),
                _ => self.counters.malformed += 1,
            }
        }
    }

    /// Apply every write from earlier rounds and latch the motion ports.
    /// Writes for round `round` or later stay queued.
    pub fn begin_round(&mut self, round: u32, psn: Vec3, reached: bool) {
        self.round = round;
        self.psn = psn;
        self.reached = reached;
        self.selected = None;
        self.buffer.clear();
        self.route = None;
        self.claims.clear();
        self.conflicts.clear();
        self.intents.clear();
        let inbox = std::mem::take(&mut self.inbox);
        for f in inbox {
            match f.kind {
                MsgKind::Write if f.round < round => self.apply_write(f),
                MsgKind::Write => self.inbox.push(f),
                MsgKind::AtomicIntent if f.round == round => self.inbox.push(f),
                MsgKind::AtomicIntent if f.round > round => self.inbox.push(f),
                MsgKind::AtomicIntent | MsgKind::AtomicGrant => {}
            }
        }
    }

    fn apply_write(&mut self, f: Frame) {
        if f.round + 2 < self.round {
            self.counters.stale += 1;
        } else if f.round + 1 < self.round {
            self.counters.late += 1;
        }
        let Some(ty) = self.store.ty(f.var_id) else {
            self.counters.malformed += 1;
            return;
        };
        let cell = (f.index != SCALAR_INDEX).then_some(usize::from(f.index));
        let Ok(value) = wire::decode_value(&f.payload, ty) else {
            self.counters.malformed += 1;
            return;
        };
        let previous = self.store.version(f.var_id, cell);
        let version = Version { round: f.round, sender: f.sender };
        match self.store.apply(f.var_id, cell, value, version) {
            Ok(Applied::Duplicate) => self.counters.duplicates += 1,
            Ok(outcome) => {
                if let Some(p) = previous.filter(|p| p.round == f.round && p.sender != f.sender) {
                    self.counters.conflicts += 1;
                    let (winner, loser) = if outcome == Applied::Updated { (f.sender, p.sender) } else { (p.sender, f.sender) };
                    self.conflicts.push(Conflict { var: f.var_id, cell, round: f.round, winner, loser });
                }
            }
            Err(_) => self.counters.malformed += 1,
        }
    }

    /// Conflicts resolved while beginning the current round.
    pub fn conflicts(&self) -> &[Conflict] {
        &self.conflicts
    }

    /// First event in source order whose precondition holds.
    pub fn select(&mut self, ext: &dyn Externals) -> Option<usize> {
        if self.fault.is_some() {
            return None;
        }
        let table = self.table.clone();
        let mut env = self.env(ext);
        let mut chosen = None;
        for i in 0..table.events.len() {
            match table.eval_pre(i, &mut env) {
                Ok(true) => {
                    chosen = Some(i);
                    break;
                }
                Ok(false) => {}
                Err(e) => {
                    self.fault = Some(e);
                    return None;
                }
            }
        }
        // preconditions cannot write, but keep the view clean regardless
        self.buffer.clear();
        self.selected = chosen;
        chosen
    }

    /// Intent to broadcast when the selected event is atomic. The scope is
    /// the event's index.
    pub fn intent(&self) -> Option<Frame> {
        let ev = self.selected?;
        self.table.events[ev].atomic.then(|| Frame {
            kind: MsgKind::AtomicIntent,
            sender: self.pid,
            round: self.round,
            var_id: ev as u16,
            index: SCALAR_INDEX,
            payload: Vec::new(),
        })
    }

    /// Settle the atomic event selected this round against the intents
    /// received so far. Returns `None` if nothing atomic was selected; a
    /// loser drops its event for the round.
    pub fn arbitrate(&mut self, arbiter: &dyn Arbiter) -> Option<bool> {
        let ev = self.selected?;
        if !self.table.events[ev].atomic {
            return None;
        }
        let (now, later): (Vec<Frame>, Vec<Frame>) = std::mem::take(&mut self.inbox)
            .into_iter()
            .partition(|f| f.kind == MsgKind::AtomicIntent && f.round == self.round);
        self.inbox = later;
        self.intents = now.iter().filter(|f| usize::from(f.var_id) == ev).map(|f| f.sender).collect();
        self.intents.sort_unstable();
        self.intents.dedup();
        let granted = arbiter.grant(self.pid, &self.intents);
        if !granted {
            self.selected = None;
        }
        Some(granted)
    }

    /// Rival pids seen by the last arbitration.
    pub fn rivals(&self) -> &[u16] {
        &self.intents
    }

    pub fn grant_frame(&self) -> Option<Frame> {
        let ev = self.selected?;
        self.table.events[ev].atomic.then(|| Frame {
            kind: MsgKind::AtomicGrant,
            sender: self.pid,
            round: self.round,
            var_id: ev as u16,
            index: SCALAR_INDEX,
            payload: Vec::new(),
        })
    }

    /// Run the selected event's effect. Shared writes are buffered; the
    /// agent's own reads see them immediately.
    pub fn execute(&mut self, ext: &dyn Externals) -> Option<Executed> {
        let ev = self.selected?;
        let table = self.table.clone();
        let mut env = self.env(ext);
        if let Err(e) = table.exec_eff(ev, &mut env) {
            self.fault = Some(e);
            self.buffer.clear();
            self.route = None;
            return None;
        }
        Some(Executed { event: ev, claims: self.claims.clone() })
    }

    /// The route actuated by this round's effect.
    pub fn take_route(&mut self) -> Option<Vec<Vec3>> {
        match self.route.take()? {
            Value::List(entries) => Some(entries.iter().map(|e| e.at).collect()),
            Value::Pos(p) => Some(vec![p]),
            _ => None,
        }
    }

    /// Apply buffered writes locally and turn them into one write message
    /// per distinct cell.
    pub fn commit(&mut self) -> Vec<Frame> {
        let buffer = std::mem::take(&mut self.buffer);
        let mut out = Vec::with_capacity(buffer.len());
        let version = Version { round: self.round, sender: self.pid };
        for ((var, cell), value) in buffer {
            let Some(ty) = self.store.ty(var) else { continue };
            let payload = match wire::encode_value(&value, ty) {
                Ok(p) => p,
                Err(e) => {
                    self.fault = Some(Fault::External(format!("cannot send write: {e}")));
                    continue;
                }
            };
            if self.store.apply(var, cell, value, version).is_err() {
                continue;
            }
            let index = cell.map_or(SCALAR_INDEX, |c| c as u16);
            out.push(Frame { kind: MsgKind::Write, sender: self.pid, round: self.round, var_id: var, index, payload });
        }
        out
    }

    fn env<'a>(&'a mut self, ext: &'a dyn Externals) -> AgentEnv<'a> {
        AgentEnv { agent: self, ext, calls: 0 }
    }
}

struct AgentEnv<'a> {
    agent: &'a mut Agent,
    ext: &'a dyn Externals,
    calls: u32,
}

impl Env for AgentEnv<'_> {
    fn pid(&self) -> usize {
        usize::from(self.agent.pid)
    }

    fn num_agents(&self) -> usize {
        self.agent.num_agents
    }

    fn local(&self, slot: usize) -> Value {
        self.agent.locals[slot].clone()
    }

    fn set_local(&mut self, slot: usize, v: Value) {
        self.agent.locals[slot] = v;
    }

    fn shared(&self, var: VarId, cell: Option<usize>) -> Value {
        if let Some(v) = self.agent.buffer.get(&(var, cell)) {
            return v.clone();
        }
        match self.agent.store.get(var, cell) {
            Some(v) => v.clone(),
            None => self.agent.store.ty(var).map_or(Value::Int(0), |t| t.default_value()),
        }
    }

    fn set_shared(&mut self, var: VarId, cell: Option<usize>, v: Value) {
        self.agent.buffer.insert((var, cell), v);
    }

    fn port(&self, port: Port) -> Value {
        match port {
            Port::Psn => Value::Pos(self.agent.psn),
            Port::Reached => Value::Bool(self.agent.reached),
        }
    }

    fn actuate(&mut self, act: Actuator, v: Value) {
        match act {
            Actuator::Route => self.agent.route = Some(v),
        }
    }

    fn external(&mut self, b: Builtin, args: &[Value]) -> Result<Value, Fault> {
        let site = CallSite { pid: self.agent.pid, round: self.agent.round, psn: self.agent.psn, call: self.calls };
        self.calls += 1;
        self.ext.call(&site, b, args)
    }

    fn on_assign(&mut self, var: VarId, index: usize, _owner: u16) {
        self.agent.claims.push((var, index));
    }
}
