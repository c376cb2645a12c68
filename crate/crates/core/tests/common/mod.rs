//! Reference models shared by the dsm and acceptance targets.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use koord::lower::{ExecutableEventTable, VarId};
use koord::{Actuator, Builtin, Env, Fault, Port, Value, Vec3};
use koordsim::dsm::{Fleet, LowestPid, NoExternals};
use koordsim::transport::{self, NetConfig};
use koordsim::geom::Aabb;
use koordsim::motion::VehicleKind;
use koordsim::planner::Workspace;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

// Single-process oracle: all agents read one global state at the start of
// a round and every write lands at the end of it.

struct OracleEnv<'a> {
    pid: usize,
    n: usize,
    table: &'a ExecutableEventTable,
    state: &'a BTreeMap<(VarId, Option<usize>), Value>,
    locals: &'a mut Vec<Value>,
    writes: BTreeMap<(VarId, Option<usize>), Value>,
}

impl Env for OracleEnv<'_> {
    fn pid(&self) -> usize {
        self.pid
    }
    fn num_agents(&self) -> usize {
        self.n
    }
    fn local(&self, slot: usize) -> Value {
        self.locals[slot].clone()
    }
    fn set_local(&mut self, slot: usize, v: Value) {
        self.locals[slot] = v.coerce(self.table.locals[slot].ty).unwrap();
    }
    fn shared(&self, var: VarId, cell: Option<usize>) -> Value {
        self.writes.get(&(var, cell)).or_else(|| self.state.get(&(var, cell))).unwrap().clone()
    }
    fn set_shared(&mut self, var: VarId, cell: Option<usize>, v: Value) {
        self.writes.insert((var, cell), v.coerce(self.table.shared[var as usize].ty).unwrap());
    }
    fn port(&self, port: Port) -> Value {
        match port {
            Port::Psn => Value::Pos(Vec3::ZERO),
            Port::Reached => Value::Bool(true),
        }
    }
    fn actuate(&mut self, _: Actuator, _: Value) {}
    fn external(&mut self, b: Builtin, _: &[Value]) -> Result<Value, Fault> {
        Err(Fault::External(b.name().into()))
    }
}

struct Oracle {
    n: usize,
    table: ExecutableEventTable,
    state: BTreeMap<(VarId, Option<usize>), Value>,
    locals: Vec<Vec<Value>>,
}

impl Oracle {
    fn new(table: ExecutableEventTable, n: usize) -> Self {
        let mut state = BTreeMap::new();
        for (i, v) in table.shared.iter().enumerate() {
            if v.indexed {
                for c in 0..n {
                    state.insert((i as VarId, Some(c)), v.init.clone());
                }
            } else {
                state.insert((i as VarId, None), v.init.clone());
            }
        }
        let locals = vec![table.locals.iter().map(|l| l.init.clone()).collect(); n];
        Self { n, table, state, locals }
    }

    /// Returns per pid the event run and that pid's own view after the round.
    #[allow(clippy::type_complexity)]
    fn round(&mut self) -> (Vec<Option<usize>>, Vec<BTreeMap<(VarId, Option<usize>), Value>>) {
        let snapshot = self.state.clone();
        let (n, table) = (self.n, &self.table);
        let mut selected: Vec<Option<usize>> = self
            .locals
            .iter_mut()
            .enumerate()
            .map(|(pid, locals)| {
                let mut env = OracleEnv { pid, n, table, state: &snapshot, locals, writes: BTreeMap::new() };
                (0..table.events.len()).find(|&e| table.eval_pre(e, &mut env).unwrap())
            })
            .collect();
        for pid in 0..self.n {
            if let Some(e) = selected[pid] {
                let beaten = self.table.events[e].atomic && (0..pid).any(|q| selected[q] == Some(e));
                if beaten {
                    selected[pid] = None;
                }
            }
        }
        let mut views = Vec::new();
        let mut next = snapshot.clone();
        for pid in (0..self.n).rev() {
            let mut env = OracleEnv {
                pid,
                n: self.n,
                table: &self.table,
                state: &snapshot,
                locals: &mut self.locals[pid],
                writes: BTreeMap::new(),
            };
            if let Some(e) = selected[pid] {
                self.table.exec_eff(e, &mut env).unwrap();
            }
            let mut view = snapshot.clone();
            for (k, v) in env.writes {
                view.insert(k, v.clone());
                // descending pid order, so the lowest writer lands last
                next.insert(k, v);
            }
            views.push(view);
        }
        views.reverse();
        self.state = next;
        (selected, views)
    }
}

fn arb_term() -> impl Strategy<Value = String> {
    prop_oneof![
        (0i64..5).prop_map(|k| k.to_string()),
        (0i64..4).prop_map(|k| format!("x[pid + {k}]")),
        (0i64..4).prop_map(|k| format!("y[pid + {k}]")),
        Just("g".to_string()),
        Just("pid".to_string()),
        Just("t".to_string()),
    ]
}

fn arb_int_expr() -> impl Strategy<Value = String> {
    (arb_term(), prop_oneof![Just("+"), Just("-"), Just("*")], arb_term()).prop_map(|(a, op, b)| format!("({a} {op} {b}) % 7"))
}

fn arb_event(i: usize) -> impl Strategy<Value = String> {
    (
        any::<bool>(),
        arb_int_expr(),
        0i64..7,
        prop::collection::vec((0usize..4, arb_int_expr()), 1..4),
    )
        .prop_map(move |(atomic, lhs, k, stmts)| {
            let mut body = String::new();
            for (target, e) in stmts {
                let line = match target {
                    0 => format!("x[pid] = {e}"),
                    1 => format!("y[pid] = {e}"),
                    2 => format!("t = {e}"),
                    _ if atomic => format!("g = {e}"),
                    _ => format!("x[pid] = x[pid] + {e}"),
                };
                body.push_str(&format!("    {line}\n"));
            }
            let kw = if atomic { "atomic event" } else { "event" };
            format!("{kw} E{i} {{\n  pre: {lhs} < {k}\n  eff: {{\n{body}  }}\n}}\n")
        })
}

pub fn arb_program() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::collection::vec(arb_event(0), 1..2), 1..4).prop_map(|evs| {
        let mut src = String::from("allwrite:\n  int x[pid]\n  int y[pid]\n  int g = 1\nlocal:\n  int t = 0\n");
        for (i, e) in evs.into_iter().flatten().enumerate() {
            src.push_str(&e.replacen("E0", &format!("E{i}"), 1));
        }
        src
    })
}


/// Runs `src` on a fleet and on the oracle side by side for `rounds`
/// rounds; describes the first divergence.
pub fn oracle_mismatch(src: &str, n: usize, rounds: u32) -> Option<String> {
    let (table, _) = koord::compile(src, n).unwrap();
    let mut oracle = Oracle::new(table.clone(), n);
    let t = transport::open(&NetConfig::lossless(n), n).unwrap();
    let mut f = Fleet::new(Arc::new(table), &BTreeMap::new(), t, Box::new(LowestPid), 0.1);
    for r in 0..rounds {
        let ports = vec![(Vec3::ZERO, true); n];
        let rep = f.round(r, &ports, &NoExternals);
        let (selected, views) = oracle.round();
        let ran: Vec<Option<usize>> = rep.events.iter().map(|e| e.as_ref().map(|x| x.event)).collect();
        if ran != selected {
            return Some(format!("round {r}: ran {ran:?}, oracle {selected:?}"));
        }
        for (pid, view) in views.iter().enumerate() {
            for ((var, cell), v) in view {
                let got = f.agent(pid).store().get(*var, *cell).unwrap();
                if got != v {
                    return Some(format!("round {r} pid {pid} var {var} cell {cell:?}: {got:?} vs {v:?}"));
                }
            }
        }
    }
    None
}

// Planner oracles

/// Points every `h` metres along a polyline, endpoints included.
pub fn densify(path: &[Vec3], h: f64) -> Vec<Vec3> {
    if path.len() == 1 {
        return path.to_vec();
    }
    let mut out = Vec::new();
    for w in path.windows(2) {
        let n = (w[0].dist(w[1]) / h).ceil().max(1.0) as usize;
        out.extend((0..n).map(|k| w[0] + (w[1] - w[0]) * (k as f64 / n as f64)));
    }
    out.push(*path.last().unwrap());
    out
}

pub fn brute_distance(a: &[Vec3], b: &[Vec3], h: f64) -> f64 {
    let (da, db) = (densify(a, h), densify(b, h));
    da.iter().flat_map(|p| db.iter().map(move |q| p.dist(*q))).fold(f64::INFINITY, f64::min)
}

pub fn random_map(rng: &mut ChaCha8Rng) -> Workspace {
    let mut ws = Workspace::arena(8.0, 7.0, 3.0, 0.5);
    for _ in 0..rng.gen_range(0..8) {
        let c = Vec3::new(rng.gen_range(1.0..7.0), rng.gen_range(1.0..6.0), rng.gen_range(0.0..3.0));
        let h = Vec3::new(rng.gen_range(0.1..0.8), rng.gen_range(0.1..0.8), rng.gen_range(0.2..1.5));
        ws.obstacles.push(Aabb::new(c - h, c + h));
    }
    ws
}

pub fn free_point(rng: &mut ChaCha8Rng, ws: &Workspace, kind: VehicleKind, margin: f64) -> Vec3 {
    loop {
        let z = if kind == VehicleKind::Car { 0.0 } else { rng.gen_range(0.0..3.0) };
        let p = Vec3::new(rng.gen_range(0.0..8.0), rng.gen_range(0.0..7.0), z);
        if ws.is_free(p, margin) {
            return p;
        }
    }
}

pub fn sampled_collision_free(path: &[Vec3], ws: &Workspace) -> bool {
    densify(path, 1e-2).iter().all(|p| ws.is_free(*p, 0.0))
}
