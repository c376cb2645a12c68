//! Lock-step simulation of a fleet: physics every `dt`, a DSM round every
//! `delta`, monitors on every sample.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

use koord::{Builtin, CompileError, Fault, Value, Vec3};
use thiserror::Error;

use crate::config::SimConfig;
use crate::dsm::{Arbiter, CallSite, Externals, Fleet, LowestPid, RoundReport};
use crate::monitor::{self, SafetyReport, VisitReport};
use crate::motion::{MotionState, VehicleModel};
use crate::planner::{self, FindPath, FindPathOutcome, PlannerKind, RrtParams, Workspace};
use crate::trace::{self, Micros, RecordKind, Trace};
use crate::transport::{self, TransportError};
use crate::wire::{MsgKind, SCALAR_INDEX};

/// Largest goal shift, in metres, that still counts as a settled round.
pub const SETTLE_TOL: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("program does not compile:\n{0}")]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Transport(#[from] TransportError),
}

pub struct RunOptions {
    pub arbiter: Box<dyn Arbiter>,
    /// Stop as soon as the app is complete. Off for fixed-length runs.
    pub stop_when_complete: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { arbiter: Box::new(LowestPid), stop_when_complete: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Duration,
    Completed,
    Violation,
    AllFaulted,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Duration => "duration",
            Self::Completed => "completed",
            Self::Violation => "violation",
            Self::AllFaulted => "all_faulted",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub num_robots: usize,
    pub sim_time: f64,
    pub wall_time: f64,
    pub rounds: u64,
    pub termination: Termination,
    /// Simulated time at which the app completed.
    pub completion_time: Option<f64>,
    pub broadcasts: Vec<u64>,
    pub packets_sent: Vec<u64>,
    pub packets_received: Vec<u64>,
    pub bytes_received: Vec<u64>,
    pub dropped: u64,
    pub send_errors: u64,
    pub events: Vec<u64>,
    /// Rounds in which `findPath` found nothing, per pid.
    pub blocked_rounds: Vec<u64>,
    pub tasks_total: usize,
    pub tasks_completed: usize,
    pub conflicts: u64,
    pub stale_messages: u64,
    pub min_distance: f64,
    pub faults: usize,
}

impl Metrics {
    /// Simulated over wall-clock time.
    pub fn rt_factor(&self) -> f64 {
        if self.wall_time > 0.0 {
            self.sim_time / self.wall_time
        } else {
            f64::INFINITY
        }
    }

    fn per_s(&self, x: u64) -> f64 {
        if self.sim_time > 0.0 {
            x as f64 / self.sim_time
        } else {
            0.0
        }
    }

    pub fn total_packets_per_s(&self) -> f64 {
        self.per_s(self.packets_received.iter().sum())
    }

    pub fn total_bytes_per_s(&self) -> f64 {
        self.per_s(self.bytes_received.iter().sum())
    }

    /// `key=value` lines.
    pub fn report(&self) -> String {
        let mut s = String::new();
        let opt = |x: Option<f64>| x.map_or("none".to_string(), |v| format!("{v:.3}"));
        let _ = writeln!(s, "num_robots={}", self.num_robots);
        let _ = writeln!(s, "termination={}", self.termination.as_str());
        let _ = writeln!(s, "sim_time={:.3}", self.sim_time);
        let _ = writeln!(s, "wall_time={:.3}", self.wall_time);
        let _ = writeln!(s, "rt_factor={:.3}", self.rt_factor());
        let _ = writeln!(s, "rounds={}", self.rounds);
        let _ = writeln!(s, "completion_time={}", opt(self.completion_time));
        let _ = writeln!(s, "tasks_total={}", self.tasks_total);
        let _ = writeln!(s, "tasks_completed={}", self.tasks_completed);
        let _ = writeln!(s, "blocked_rounds={}", self.blocked_rounds.iter().sum::<u64>());
        let _ = writeln!(s, "events={}", self.events.iter().sum::<u64>());
        let _ = writeln!(s, "packets_received={}", self.packets_received.iter().sum::<u64>());
        let _ = writeln!(s, "bytes_received={}", self.bytes_received.iter().sum::<u64>());
        let _ = writeln!(s, "packets_per_s={:.3}", self.total_packets_per_s());
        let _ = writeln!(s, "bytes_per_s={:.3}", self.total_bytes_per_s());
        let _ = writeln!(s, "dropped={}", self.dropped);
        let _ = writeln!(s, "send_errors={}", self.send_errors);
        let _ = writeln!(s, "conflicts={}", self.conflicts);
        let _ = writeln!(s, "stale_messages={}", self.stale_messages);
        let _ = writeln!(s, "min_distance={:.6}", self.min_distance);
        let _ = writeln!(s, "faults={}", self.faults);
        s
    }

    /// Per-robot traffic table.
    pub fn robots_csv(&self) -> String {
        let mut s = String::from("pid,broadcasts,packets_sent,packets_received,bytes_received,packets_per_s,bytes_per_s,events,blocked_rounds\n");
        for pid in 0..self.num_robots {
            let _ = writeln!(
                s,
                "{pid},{},{},{},{},{:.3},{:.3},{},{}",
                self.broadcasts[pid],
                self.packets_sent[pid],
                self.packets_received[pid],
                self.bytes_received[pid],
                self.per_s(self.packets_received[pid]),
                self.per_s(self.bytes_received[pid]),
                self.events[pid],
                self.blocked_rounds[pid],
            );
        }
        s
    }
}

pub fn distances_csv(safety: &SafetyReport) -> String {
    let mut s = String::from("time,min_distance\n");
    for (t, d) in &safety.series {
        let _ = writeln!(s, "{},{d}", trace::fmt_time(*t));
    }
    s
}

pub fn positions_csv(trace: &Trace) -> String {
    let mut rows: Vec<(u16, Micros, Vec3)> = trace.poses().map(|(t, pid, p)| (pid, t, p.at)).collect();
    rows.sort_by_key(|r| (r.0, r.1));
    let mut s = String::from("pid,time,x,y,z\n");
    for (pid, t, p) in rows {
        let _ = writeln!(s, "{pid},{},{},{},{}", trace::fmt_time(t), p.x, p.y, p.z);
    }
    s
}

pub fn tasks_csv(visits: &VisitReport) -> String {
    let mut s = String::from("task,x,y,z,claims,claimant,claim_time,visit_start,visit_end\n");
    for (i, t) in visits.tasks.iter().enumerate() {
        let claim = t.claims.first();
        let done = t.completion();
        let time = |x: Option<Micros>| x.map_or(String::new(), trace::fmt_time);
        let _ = writeln!(
            s,
            "{i},{},{},{},{},{},{},{},{}",
            t.at.x,
            t.at.y,
            t.at.z,
            t.claims.len(),
            claim.map_or(String::new(), |c| c.0.to_string()),
            time(claim.map(|c| c.1)),
            time(done.map(|v| v.start)),
            time(done.map(|v| v.end)),
        );
    }
    s
}

pub struct RunOutcome {
    pub trace: Trace,
    pub metrics: Metrics,
    pub safety: SafetyReport,
    /// Present when the program allocates a task list.
    pub visits: Option<VisitReport>,
    pub faults: Vec<(u16, String)>,
}

impl RunOutcome {
    pub fn monitors_pass(&self) -> bool {
        self.safety.pass && self.visits.as_ref().is_none_or(|v| v.pass)
    }

    pub fn passed(&self) -> bool {
        self.monitors_pass() && self.faults.is_empty()
    }
}

/// Serves `findPath` and `pathIsClear` from the planner.
pub struct PlannerHost {
    pub workspace: Workspace,
    pub planners: Vec<PlannerKind>,
    pub params: RrtParams,
    pub seed: u64,
    blocked: Vec<AtomicU64>,
}

impl PlannerHost {
    pub fn new(workspace: Workspace, planners: Vec<PlannerKind>, params: RrtParams, seed: u64) -> Self {
        let blocked = planners.iter().map(|_| AtomicU64::new(0)).collect();
        Self { workspace, planners, params, seed, blocked }
    }

    pub fn blocked(&self) -> Vec<u64> {
        self.blocked.iter().map(|b| b.load(Ordering::Relaxed)).collect()
    }

    fn others(site: &CallSite, routes: &Value) -> Result<Vec<Vec<Vec3>>, Fault> {
        let Value::Array(cells) = routes else {
            return Err(Fault::Type(format!("routes must be a pid-indexed list array, found {}", routes.type_name())));
        };
        cells
            .iter()
            .enumerate()
            .filter(|(pid, _)| *pid != usize::from(site.pid))
            .map(|(_, v)| match v {
                Value::List(es) => Ok(es.iter().map(|e| e.at).collect()),
                other => Err(Fault::Type(format!("route must be list<pos>, found {}", other.type_name()))),
            })
            .collect()
    }
}

fn path_arg(v: &Value) -> Result<Vec<Vec3>, Fault> {
    match v {
        Value::List(es) => Ok(es.iter().map(|e| e.at).collect()),
        other => Err(Fault::Type(format!("path must be list<pos>, found {}", other.type_name()))),
    }
}

impl Externals for PlannerHost {
    fn call(&self, site: &CallSite, builtin: Builtin, args: &[Value]) -> Result<Value, Fault> {
        let pid = usize::from(site.pid);
        match (builtin, args) {
            (Builtin::FindPath, [goal, routes]) => {
                let goal = goal.as_pos().ok_or_else(|| Fault::Type("findPath goal must be pos".into()))?;
                let others = Self::others(site, routes)?;
                let refs: Vec<&[Vec3]> = others.iter().map(Vec::as_slice).collect();
                let seed = planner::mix(self.seed ^ planner::mix((u64::from(site.pid) << 32) | u64::from(site.round)))
                    ^ u64::from(site.call);
                let req = FindPath {
                    start: site.psn,
                    goal,
                    workspace: &self.workspace,
                    planner: self.planners[pid],
                    others: &refs,
                    seed,
                    params: self.params,
                };
                Ok(match planner::find_path(&req) {
                    FindPathOutcome::Path(p) => Value::path(p),
                    FindPathOutcome::Blocked => {
                        self.blocked[pid].fetch_add(1, Ordering::Relaxed);
                        Value::List(Vec::new())
                    }
                })
            }
            (Builtin::PathIsClear, [path, routes]) => {
                let path = path_arg(path)?;
                let others = Self::others(site, routes)?;
                let (res, pos) = planner::split_routes(others.iter().map(Vec::as_slice));
                Ok(Value::Bool(planner::path_is_clear(&path, &res, &pos, self.workspace.d_s)))
            }
            (b, _) => Err(Fault::External(format!("`{}` called with {} arguments", b.name(), args.len()))),
        }
    }
}

fn all_assigned(fleet: &Fleet, var: u16) -> bool {
    fleet.agents().iter().all(|a| match a.store().get(var, None) {
        Some(Value::List(es)) => es.iter().all(|e| e.owner.is_some()),
        _ => false,
    })
}

struct Recorder {
    trace: Trace,
    names: Vec<String>,
    events: Vec<String>,
}

impl Recorder {
    fn round(&mut self, rep: &RoundReport, start: Micros, mid: Micros) {
        for (pid, ev) in rep.events.iter().enumerate() {
            let Some(ev) = ev else { continue };
            let mut p = self.events[ev.event].clone();
            for (var, ix) in &ev.claims {
                let _ = write!(p, " claim={}:{ix}", self.names[usize::from(*var)]);
            }
            self.trace.push(start, pid as u16, RecordKind::Event, p);
        }
        for (pid, a) in rep.arbitration.iter().enumerate() {
            if let Some(granted) = a {
                // the pid's own selection is gone once denied, so name the scope by intent
                let scope = rep
                    .messages
                    .iter()
                    .find(|m| m.sender == pid as u16 && m.kind == MsgKind::AtomicIntent)
                    .map_or("?", |m| self.events[usize::from(m.var_id)].as_str());
                let word = if *granted { "granted" } else { "denied" };
                self.trace.push(mid, pid as u16, RecordKind::Grant, format!("{scope} {word}"));
            }
        }
        for m in &rep.messages {
            let (t, p) = match m.kind {
                MsgKind::Write => {
                    let name = &self.names[usize::from(m.var_id)];
                    let cell = if m.index == SCALAR_INDEX { String::new() } else { format!("[{}]", m.index) };
                    (mid, format!("write {name}{cell} bytes={} copies={}", m.bytes, m.copies))
                }
                MsgKind::AtomicIntent => (start, format!("intent {} copies={}", self.events[usize::from(m.var_id)], m.copies)),
                MsgKind::AtomicGrant => (mid, format!("grant {} copies={}", self.events[usize::from(m.var_id)], m.copies)),
            };
            self.trace.push(t, m.sender, RecordKind::Msg, p);
        }
        for (observer, c) in &rep.conflicts {
            let cell = c.cell.map_or(String::new(), |i| format!("[{i}]"));
            let p = format!("conflict {}{cell} round={} kept={} dropped={}", self.names[usize::from(c.var)], c.round, c.winner, c.loser);
            self.trace.push(start, *observer, RecordKind::Monitor, p);
        }
    }
}

/// Run `cfg` to completion, the end of its duration, or a halting
/// violation. A trace is produced in every case.
pub fn run(cfg: &SimConfig, opts: RunOptions) -> Result<RunOutcome, RunError> {
    let wall = Instant::now();
    let n = cfg.num_robots;
    let (table, _) = koord::compile(&cfg.program.text, n)?;
    let table = Arc::new(table);
    let transport = transport::open(&cfg.net, n)?;
    let mut fleet = Fleet::new(table.clone(), &cfg.init, transport, opts.arbiter, cfg.delta);
    let devices = cfg.robot_devices();
    let models: Vec<VehicleModel> = devices.iter().map(|d| d.model).collect();
    let host = PlannerHost::new(cfg.workspace.clone(), devices.iter().map(|d| d.planner).collect(), cfg.rrt, cfg.seed);
    let mut motion: Vec<MotionState> = cfg.robots.iter().map(|r| MotionState::new(r.start)).collect();

    let mut header = vec![format!("resolved config (program {})", cfg.program.name)];
    header.extend(cfg.to_string().lines().map(str::to_string));
    let mut rec = Recorder {
        trace: Trace::new(header),
        names: table.shared.iter().map(|v| v.name.clone()).collect(),
        events: table.events.iter().map(|e| e.name.clone()).collect(),
    };

    let task_var = table.shared_id("taskList").filter(|&v| !table.shared[usize::from(v)].indexed);
    let spr = cfg.steps_per_round();
    let total_steps = ((cfg.duration / cfg.delta + 1e-9).floor() as u64) * spr;
    let dt_us = trace::to_micros(cfg.dt);
    let half_round = trace::to_micros(cfg.delta) / 2;

    let mut faults: Vec<(u16, String)> = Vec::new();
    let mut events = vec![0u64; n];
    let mut idle_rounds = 0u32;
    let mut quiet_rounds = 0u32;
    let mut any_route = false;
    let mut rounds = 0u64;
    let mut violated = false;
    let mut termination = Termination::Duration;
    let mut end_step = total_steps;

    for k in 0..=total_steps {
        let t = k * dt_us;
        let positions: Vec<Vec3> = motion.iter().map(|m| m.pose.position()).collect();
        if k % spr == 0 && k < total_steps {
            let all_reached = motion.iter().all(|m| m.reached);
            let complete = match task_var {
                Some(v) => all_reached && idle_rounds >= 2 && all_assigned(&fleet, v),
                None if table.uses_motion => all_reached && any_route && quiet_rounds >= 2,
                None => false,
            };
            if complete && opts.stop_when_complete {
                termination = Termination::Completed;
                end_step = k;
            } else if fleet.agents().iter().all(|a| a.fault().is_some()) && n > 0 {
                termination = Termination::AllFaulted;
                end_step = k;
            }
            if end_step == k {
                for (pid, m) in motion.iter().enumerate() {
                    rec.trace.push(t, pid as u16, RecordKind::Pose, trace::pose_payload(positions[pid], m.pose.yaw, m.reached));
                }
                break;
            }
            let round = (k / spr) as u32;
            let ports: Vec<(Vec3, bool)> = motion.iter().map(|m| (m.pose.position(), m.reached)).collect();
            let rep = fleet.round(round, &ports, &host);
            rounds += 1;
            rec.round(&rep, t, t + half_round);
            let mut moved = false;
            for (pid, route) in rep.routes.iter().enumerate() {
                let Some(route) = route else { continue };
                any_route = true;
                let before = motion[pid].route.last().copied();
                if let Err(e) = motion[pid].set_route(&models[pid], route) {
                    let msg = format!("route rejected: {e}");
                    rec.trace.push(t, pid as u16, RecordKind::Monitor, format!("fault {msg}"));
                    faults.push((pid as u16, msg));
                    continue;
                }
                let goal_moved = match (before, route.last()) {
                    (Some(a), Some(b)) => a.dist(*b) > SETTLE_TOL,
                    _ => true,
                };
                moved |= goal_moved;
            }
            quiet_rounds = if moved { 0 } else { quiet_rounds + 1 };
            // a robot still travelling to its task is not idle even if no event fired
            idle_rounds = if rep.executed() == 0 && all_reached { idle_rounds + 1 } else { 0 };
            for (pid, e) in rep.events.iter().enumerate() {
                events[pid] += u64::from(e.is_some());
            }
            for (pid, f) in &rep.faults {
                rec.trace.push(t + half_round, *pid, RecordKind::Monitor, format!("fault {f}"));
                faults.push((*pid, f.to_string()));
            }
        }
        for (pid, m) in motion.iter().enumerate() {
            rec.trace.push(t, pid as u16, RecordKind::Pose, trace::pose_payload(positions[pid], m.pose.yaw, m.reached));
        }
        let (d, i, j) = monitor::min_pairwise(&positions);
        if d < cfg.d_s() && !violated {
            violated = true;
            rec.trace.push(t, i as u16, RecordKind::Monitor, format!("safety violation pids={i},{j} distance={d}"));
            if cfg.halt_on_violation {
                termination = Termination::Violation;
                end_step = k;
                break;
            }
        }
        if k == total_steps {
            break;
        }
        for (m, model) in motion.iter_mut().zip(&models) {
            m.step(model, cfg.dt);
        }
    }
    rec.trace.sort();
    let trace = rec.trace;
    let safety = monitor::safety(&trace, cfg.d_s());
    let visits = task_var.map(|_| monitor::visits(&trace, &cfg.tasks, cfg.eps_v, cfg.delta_v));
    let stats = fleet.transport().stats().clone();
    let sim_time = end_step as f64 * cfg.dt;
    let metrics = Metrics {
        num_robots: n,
        sim_time,
        wall_time: wall.elapsed().as_secs_f64(),
        rounds,
        termination,
        completion_time: (termination == Termination::Completed).then_some(sim_time),
        broadcasts: stats.broadcasts.clone(),
        packets_sent: stats.packets_sent.clone(),
        packets_received: stats.packets_received.clone(),
        bytes_received: stats.bytes_received.clone(),
        dropped: stats.dropped,
        send_errors: stats.send_errors,
        events,
        blocked_rounds: host.blocked(),
        tasks_total: cfg.tasks.len(),
        tasks_completed: visits.as_ref().map_or(0, VisitReport::completed),
        conflicts: fleet.agents().iter().map(|a| a.counters.conflicts).sum(),
        stale_messages: fleet.agents().iter().map(|a| a.counters.stale).sum(),
        min_distance: safety.min,
        faults: faults.len(),
    };
    Ok(RunOutcome { trace, metrics, safety, visits, faults })
}
