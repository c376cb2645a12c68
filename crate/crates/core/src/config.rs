//! Simulation config files.
//!
//! Indentation-nested `key: value` lines. A key with no value opens a block
//! whose children are indented under it; `- item` lines form a list.
//! `robot:` and `device:` may repeat. `#` starts a comment.
//!
//! ```text
//! num_robots: 2
//! program: @task
//! tasks:
//!   - 1.0 1.0 0.0
//! robot:
//!   pid: 0
//!   on_device: car0
//!   start: 0.5 0.5 0.0 0.0
//! device:
//!   bot_name: car0
//!   bot_type: CAR
//!   planner: RRT_CAR
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use koord::{Value, Vec3};
use thiserror::Error;

use crate::apps;
use crate::geom::Aabb;
use crate::motion::{Pose, VehicleKind, VehicleModel};
use crate::planner::{PlannerKind, RrtParams, Workspace};
use crate::transport::{Delay, NetConfig, NetMode};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {path}: {message}")]
pub struct ConfigError {
    pub line: usize,
    /// Dotted key path, with `[i]` for the i-th repeated block.
    pub path: String,
    pub message: String,
}

fn err(line: usize, path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { line, path: path.to_string(), message: message.into() }
}

#[derive(Debug, Clone, PartialEq)]
struct Node {
    key: String,
    value: Option<String>,
    line: usize,
    children: Vec<Node>,
    items: Vec<(usize, String)>,
}

fn parse_tree(text: &str) -> Result<Vec<Node>, ConfigError> {
    struct Open {
        /// Indentation of the block's lines; unknown until its first line.
        indent: Option<usize>,
        path: Vec<usize>,
    }
    fn node<'a>(root: &'a mut Node, path: &[usize]) -> &'a mut Node {
        path.iter().fold(root, |n, &i| &mut n.children[i])
    }
    let mut root = Node { key: String::new(), value: None, line: 0, children: Vec::new(), items: Vec::new() };
    let mut stack = vec![Open { indent: Some(0), path: Vec::new() }];
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or_default();
        if content.trim().is_empty() {
            continue;
        }
        let lead = &content[..content.len() - content.trim_start().len()];
        if lead.contains('\t') {
            return Err(err(line, "", "tabs are not allowed in indentation"));
        }
        let indent = lead.len();
        loop {
            let depth = stack.len();
            match stack[depth - 1].indent {
                Some(ind) if indent == ind => break,
                Some(ind) if indent < ind => {
                    stack.pop();
                }
                Some(_) => {
                    let at = node(&mut root, &stack[depth - 1].path).key.clone();
                    return Err(err(line, &at, "unexpected indentation"));
                }
                None => {
                    let outer = stack[depth - 2].indent.expect("outer block has lines");
                    if indent > outer {
                        stack[depth - 1].indent = Some(indent);
                        break;
                    }
                    stack.pop();
                }
            }
        }
        let top = stack.last().expect("root stays open");
        let path = top.path.clone();
        let parent = node(&mut root, &path);
        let body = content.trim();
        if let Some(item) = body.strip_prefix('-') {
            if path.is_empty() {
                return Err(err(line, "", "list item outside a block"));
            }
            parent.items.push((line, item.trim().to_string()));
            continue;
        }
        let Some((key, value)) = body.split_once(':') else {
            return Err(err(line, &parent.key, format!("expected `key: value`, found `{body}`")));
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(err(line, &parent.key, format!("bad key `{key}`")));
        }
        parent.children.push(Node {
            key: key.to_string(),
            value: (!value.is_empty()).then(|| value.to_string()),
            line,
            children: Vec::new(),
            items: Vec::new(),
        });
        if value.is_empty() {
            let mut child = path;
            child.push(parent.children.len() - 1);
            stack.push(Open { indent: None, path: child });
        }
    }
    Ok(root.children)
}

/// Where the agent program comes from.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgramSource {
    /// `@name` for a shipped app, otherwise the path as written.
    pub name: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotConfig {
    pub pid: u16,
    pub on_device: String,
    pub start: Pose,
    /// UDP port; 0 picks an ephemeral one.
    pub port: u16,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceConfig {
    pub bot_name: String,
    pub planner: PlannerKind,
    pub model: VehicleModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub num_robots: usize,
    pub program: ProgramSource,
    /// Initial values of shared variables, by name.
    pub init: BTreeMap<String, Value>,
    /// Sorted by pid.
    pub robots: Vec<RobotConfig>,
    pub devices: Vec<DeviceConfig>,
    pub delta: f64,
    pub dt: f64,
    pub duration: f64,
    pub seed: u64,
    pub net: NetConfig,
    pub workspace: Workspace,
    pub rrt: RrtParams,
    pub tasks: Vec<Vec3>,
    pub eps_v: f64,
    pub delta_v: f64,
    pub halt_on_violation: bool,
}

pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_DURATION: f64 = 300.0;
pub const DEFAULT_D_S: f64 = 0.5;
pub const DEFAULT_EPS_V: f64 = 0.2;
pub const DEFAULT_DELTA_V: f64 = 1.0;
pub const DEFAULT_ARENA: [f64; 3] = [8.0, 7.0, 3.0];

impl SimConfig {
    /// Config with every default and no robots.
    pub fn empty(program: ProgramSource) -> Self {
        Self {
            num_robots: 0,
            program,
            init: BTreeMap::new(),
            robots: Vec::new(),
            devices: Vec::new(),
            delta: DEFAULT_DELTA,
            dt: DEFAULT_DT,
            duration: DEFAULT_DURATION,
            seed: 0,
            net: NetConfig::lossless(0),
            workspace: Workspace::arena(DEFAULT_ARENA[0], DEFAULT_ARENA[1], DEFAULT_ARENA[2], DEFAULT_D_S),
            rrt: RrtParams::default(),
            tasks: Vec::new(),
            eps_v: DEFAULT_EPS_V,
            delta_v: DEFAULT_DELTA_V,
            halt_on_violation: false,
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| err(0, "", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.parent())
    }

    /// Parse config text. Program paths resolve against `base`.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self, ConfigError> {
        let nodes = parse_tree(text)?;
        let mut b = Builder::default();
        for n in &nodes {
            b.top(n, base)?;
        }
        b.finish()
    }

    pub fn device(&self, name: &str) -> Option<&DeviceConfig> {
        self.devices.iter().find(|d| d.bot_name == name)
    }

    /// Device of each robot in pid order.
    pub fn robot_devices(&self) -> Vec<&DeviceConfig> {
        self.robots.iter().map(|r| self.device(&r.on_device).expect("validated device")).collect()
    }

    pub fn d_s(&self) -> f64 {
        self.workspace.d_s
    }

    /// Physics steps per round.
    pub fn steps_per_round(&self) -> u64 {
        (self.delta / self.dt).round() as u64
    }
}

fn fmt_f(x: f64) -> String {
    let s = format!("{x}");
    if s.contains(['.', 'e', 'i', 'N']) {
        s
    } else {
        format!("{s}.0")
    }
}

fn fmt_v(p: Vec3) -> String {
    format!("{} {} {}", fmt_f(p.x), fmt_f(p.y), fmt_f(p.z))
}

fn fmt_value(v: &Value) -> String {
    match v {
        Value::Int(i) => i.to_string(),
        Value::Float(x) => fmt_f(*x),
        Value::Bool(b) => b.to_string(),
        Value::Pos(p) => format!("pos({}, {}, {})", fmt_f(p.x), fmt_f(p.y), fmt_f(p.z)),
        Value::List(es) => {
            let items: Vec<String> = es.iter().map(|e| fmt_value(&Value::Pos(e.at))).collect();
            format!("[{}]", items.join(", "))
        }
        Value::Array(vs) => vs.iter().map(fmt_value).collect::<Vec<_>>().join(", "),
    }
}

/// Canonical text that parses back to the same config, apart from the
/// program text which is referred to by name.
impl fmt::Display for SimConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        let w = &mut s;
        let _ = writeln!(w, "num_robots: {}", self.num_robots);
        let _ = writeln!(w, "program: {}", self.program.name);
        let _ = writeln!(w, "delta: {}", fmt_f(self.delta));
        let _ = writeln!(w, "dt: {}", fmt_f(self.dt));
        let _ = writeln!(w, "duration: {}", fmt_f(self.duration));
        let _ = writeln!(w, "seed: {}", self.seed);
        let _ = writeln!(w, "d_s: {}", fmt_f(self.workspace.d_s));
        let _ = writeln!(w, "eps_v: {}", fmt_f(self.eps_v));
        let _ = writeln!(w, "delta_v: {}", fmt_f(self.delta_v));
        let _ = writeln!(w, "halt_on_violation: {}", self.halt_on_violation);
        let _ = writeln!(w, "net:");
        let _ = writeln!(w, "  mode: {}", self.net.mode);
        let _ = writeln!(w, "  loss_prob: {}", fmt_f(self.net.loss_prob));
        let delay = match self.net.delay {
            Delay::Fixed(d) => fmt_f(d),
            Delay::Uniform(lo, hi) => format!("uniform {} {}", fmt_f(lo), fmt_f(hi)),
        };
        let _ = writeln!(w, "  delay: {delay}");
        let _ = writeln!(w, "  settle: {}", fmt_f(self.net.settle));
        let _ = writeln!(w, "workspace:");
        let b = &self.workspace.bounds;
        let _ = writeln!(w, "  bounds: {} {}", fmt_v(b.min), fmt_v(b.max));
        for o in &self.workspace.obstacles {
            let _ = writeln!(w, "  obstacle: {} {}", fmt_v(o.min), fmt_v(o.max));
        }
        let r = &self.rrt;
        let _ = writeln!(w, "rrt:");
        let _ = writeln!(w, "  step: {}", fmt_f(r.step));
        let _ = writeln!(w, "  goal_bias: {}", fmt_f(r.goal_bias));
        let _ = writeln!(w, "  max_iters: {}", r.max_iters);
        let _ = writeln!(w, "  margin: {}", fmt_f(r.margin));
        let _ = writeln!(w, "  smooth_rounds: {}", r.smooth_rounds);
        let _ = writeln!(w, "  attempts: {}", r.attempts);
        if !self.tasks.is_empty() {
            let _ = writeln!(w, "tasks:");
            for t in &self.tasks {
                let _ = writeln!(w, "  - {}", fmt_v(*t));
            }
        }
        if !self.init.is_empty() {
            let _ = writeln!(w, "init:");
            for (k, v) in &self.init {
                let _ = writeln!(w, "  {k}: {}", fmt_value(v));
            }
        }
        for rb in &self.robots {
            let p = rb.start;
            let _ = writeln!(w, "robot:");
            let _ = writeln!(w, "  pid: {}", rb.pid);
            let _ = writeln!(w, "  on_device: {}", rb.on_device);
            let _ = writeln!(w, "  start: {} {} {} {}", fmt_f(p.x), fmt_f(p.y), fmt_f(p.z), fmt_f(p.yaw));
            let _ = writeln!(w, "  port: {}", rb.port);
        }
        for d in &self.devices {
            let m = &d.model;
            let _ = writeln!(w, "device:");
            let _ = writeln!(w, "  bot_name: {}", d.bot_name);
            let _ = writeln!(w, "  bot_type: {}", m.kind);
            let _ = writeln!(w, "  planner: {}", d.planner);
            let _ = writeln!(w, "  wheelbase: {}", fmt_f(m.wheelbase));
            let _ = writeln!(w, "  v_max: {}", fmt_f(m.v_max));
            let _ = writeln!(w, "  steer_max: {}", fmt_f(m.steer_max));
            let _ = writeln!(w, "  accel: {}", fmt_f(m.accel));
            let _ = writeln!(w, "  eps_reach: {}", fmt_f(m.eps_reach));
        }
        f.write_str(&s)
    }
}

#[derive(Default)]
struct Builder {
    num_robots: Option<(usize, usize)>,
    program: Option<ProgramSource>,
    init: Vec<(usize, String, String)>,
    robots: Vec<(usize, RobotConfig)>,
    devices: Vec<(usize, DeviceConfig)>,
    scalars: BTreeMap<&'static str, f64>,
    seed: Option<u64>,
    net: Option<NetConfig>,
    bounds: Option<Aabb>,
    obstacles: Vec<(usize, Aabb)>,
    rrt: RrtParams,
    tasks: Vec<Vec3>,
    halt: bool,
    seen: BTreeSet<String>,
}

fn value<'a>(n: &'a Node, path: &str) -> Result<&'a str, ConfigError> {
    if !n.children.is_empty() || !n.items.is_empty() {
        return Err(err(n.line, path, "expected a value, found a block"));
    }
    n.value.as_deref().ok_or_else(|| err(n.line, path, "missing value"))
}

fn float(n: &Node, path: &str) -> Result<f64, ConfigError> {
    let v = value(n, path)?;
    v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| err(n.line, path, format!("expected a number, found `{v}`")))
}

fn positive(n: &Node, path: &str) -> Result<f64, ConfigError> {
    let x = float(n, path)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(err(n.line, path, format!("must be positive, found {x}")))
    }
}

fn int<T: std::str::FromStr>(n: &Node, path: &str) -> Result<T, ConfigError> {
    let v = value(n, path)?;
    v.parse::<T>().map_err(|_| err(n.line, path, format!("expected a non-negative integer, found `{v}`")))
}

fn floats(s: &str, count: usize, line: usize, path: &str) -> Result<Vec<f64>, ConfigError> {
    let xs: Vec<f64> = s
        .split_whitespace()
        .map(|t| t.parse::<f64>().ok().filter(|x| x.is_finite()))
        .collect::<Option<_>>()
        .ok_or_else(|| err(line, path, format!("expected numbers, found `{s}`")))?;
    if xs.len() != count {
        return Err(err(line, path, format!("expected {count} numbers, found {}", xs.len())));
    }
    Ok(xs)
}

fn aabb(s: &str, line: usize, path: &str) -> Result<Aabb, ConfigError> {
    let x = floats(s, 6, line, path)?;
    let b = Aabb::new(Vec3::new(x[0], x[1], x[2]), Vec3::new(x[3], x[4], x[5]));
    if !b.is_valid() {
        return Err(err(line, path, "box minimum exceeds its maximum"));
    }
    Ok(b)
}

/// Split at commas outside brackets and parentheses.
fn split_top(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, c) in s.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(s[start..].trim());
    out
}

impl Builder {
    fn once(&mut self, n: &Node, path: &str) -> Result<(), ConfigError> {
        if !self.seen.insert(path.to_string()) {
            return Err(err(n.line, path, "key given twice"));
        }
        Ok(())
    }

    fn top(&mut self, n: &Node, base: Option<&Path>) -> Result<(), ConfigError> {
        let key = n.key.as_str();
        if !matches!(key, "robot" | "device") {
            self.once(n, key)?;
        }
        match key {
            "num_robots" => {
                let k: usize = int(n, key)?;
                if k == 0 {
                    return Err(err(n.line, key, "must be at least 1"));
                }
                self.num_robots = Some((n.line, k));
            }
            "program" => self.program = Some(program(n, base)?),
            "delta" | "dt" | "duration" | "d_s" | "eps_v" | "delta_v" => {
                let name: &'static str = match key {
                    "delta" => "delta",
                    "dt" => "dt",
                    "duration" => "duration",
                    "d_s" => "d_s",
                    "eps_v" => "eps_v",
                    _ => "delta_v",
                };
                self.scalars.insert(name, positive(n, key)?);
            }
            "seed" => self.seed = Some(int(n, key)?),
            "halt_on_violation" => {
                self.halt = match value(n, key)? {
                    "true" => true,
                    "false" => false,
                    v => return Err(err(n.line, key, format!("expected true or false, found `{v}`"))),
                }
            }
            "net" => self.net = Some(net(n)?),
            "workspace" => {
                for c in &n.children {
                    let path = format!("workspace.{}", c.key);
                    match c.key.as_str() {
                        "bounds" => {
                            self.once(c, &path)?;
                            self.bounds = Some(aabb(value(c, &path)?, c.line, &path)?);
                        }
                        "obstacle" => self.obstacles.push((c.line, aabb(value(c, &path)?, c.line, &path)?)),
                        _ => return Err(err(c.line, &path, "unknown key")),
                    }
                }
                expect_no_items(n, key)?;
            }
            "rrt" => {
                for c in &n.children {
                    let path = format!("rrt.{}", c.key);
                    self.once(c, &path)?;
                    match c.key.as_str() {
                        "step" => self.rrt.step = positive(c, &path)?,
                        "goal_bias" => {
                            let g = float(c, &path)?;
                            if !(0.0..=1.0).contains(&g) {
                                return Err(err(c.line, &path, "must lie in [0, 1]"));
                            }
                            self.rrt.goal_bias = g;
                        }
                        "max_iters" => self.rrt.max_iters = int(c, &path)?,
                        "margin" => {
                            let m = float(c, &path)?;
                            if m < 0.0 {
                                return Err(err(c.line, &path, "must not be negative"));
                            }
                            self.rrt.margin = m;
                        }
                        "smooth_rounds" => self.rrt.smooth_rounds = int(c, &path)?,
                        "attempts" => self.rrt.attempts = int(c, &path)?,
                        _ => return Err(err(c.line, &path, "unknown key")),
                    }
                }
                expect_no_items(n, key)?;
            }
            "tasks" => {
                if n.value.is_some() || !n.children.is_empty() {
                    return Err(err(n.line, key, "expected a list of `- x y z` items"));
                }
                for (line, item) in &n.items {
                    let x = floats(item, 3, *line, key)?;
                    self.tasks.push(Vec3::new(x[0], x[1], x[2]));
                }
            }
            "init" => {
                for c in &n.children {
                    let path = format!("init.{}", c.key);
                    self.once(c, &path)?;
                    self.init.push((c.line, c.key.clone(), value(c, &path)?.to_string()));
                }
                expect_no_items(n, key)?;
            }
            "robot" => {
                let i = self.robots.len();
                self.robots.push((n.line, robot(n, &format!("robot[{i}]"))?));
            }
            "device" => {
                let i = self.devices.len();
                self.devices.push((n.line, device(n, &format!("device[{i}]"))?));
            }
            _ => return Err(err(n.line, key, "unknown key")),
        }
        Ok(())
    }

    fn finish(self) -> Result<SimConfig, ConfigError> {
        let program = self.program.unwrap_or_else(|| ProgramSource { name: "@task".into(), text: apps::TASK.into() });
        let mut c = SimConfig::empty(program);
        let (nr_line, num_robots) = self.num_robots.ok_or_else(|| err(0, "num_robots", "missing"))?;
        c.num_robots = num_robots;
        let get = |k: &str, d: f64| self.scalars.get(k).copied().unwrap_or(d);
        c.delta = get("delta", DEFAULT_DELTA);
        c.dt = get("dt", DEFAULT_DT);
        c.duration = get("duration", DEFAULT_DURATION);
        c.eps_v = get("eps_v", DEFAULT_EPS_V);
        c.delta_v = get("delta_v", DEFAULT_DELTA_V);
        c.workspace.d_s = get("d_s", DEFAULT_D_S);
        c.seed = self.seed.unwrap_or(0);
        c.halt_on_violation = self.halt;
        c.rrt = self.rrt;
        let ratio = c.delta / c.dt;
        if ratio < 1.0 - 1e-9 || (ratio - ratio.round()).abs() > 1e-6 {
            return Err(err(0, "delta", format!("delta {} must be a whole multiple of dt {}", c.delta, c.dt)));
        }
        if let Some(b) = self.bounds {
            c.workspace.bounds = b;
        }
        for (line, o) in self.obstacles {
            if !c.workspace.bounds.contains_box(&o) {
                return Err(err(line, "workspace.obstacle", "obstacle lies outside the bounds"));
            }
            c.workspace.obstacles.push(o);
        }
        for (i, t) in self.tasks.iter().enumerate() {
            if !c.workspace.is_free(*t, 0.0) {
                return Err(err(0, &format!("tasks[{i}]"), "task lies outside the free workspace"));
            }
        }
        c.tasks = self.tasks;

        let mut names = BTreeSet::new();
        for (line, d) in &self.devices {
            if !names.insert(d.bot_name.clone()) {
                return Err(err(*line, "device.bot_name", format!("device `{}` declared twice", d.bot_name)));
            }
        }
        c.devices = self.devices.into_iter().map(|(_, d)| d).collect();

        let mut pids = BTreeSet::new();
        for (line, r) in &self.robots {
            if !pids.insert(r.pid) {
                return Err(err(*line, "robot.pid", format!("duplicate pid {}", r.pid)));
            }
            let Some(dev) = c.devices.iter().find(|d| d.bot_name == r.on_device) else {
                return Err(err(*line, "robot.on_device", format!("unknown device `{}`", r.on_device)));
            };
            if dev.model.kind == VehicleKind::Car && r.start.z != 0.0 {
                return Err(err(*line, "robot.start", "cars start on the ground (z = 0)"));
            }
            if !c.workspace.is_free(r.start.position(), 0.0) {
                return Err(err(*line, "robot.start", "start lies outside the free workspace"));
            }
        }
        if self.robots.len() != num_robots {
            return Err(err(nr_line, "num_robots", format!("{} robots declared, num_robots is {num_robots}", self.robots.len())));
        }
        if let Some(missing) = (0..num_robots as u16).find(|p| !pids.contains(p)) {
            return Err(err(0, "robot.pid", format!("pids must be 0..{num_robots}; {missing} is missing")));
        }
        let mut robots: Vec<RobotConfig> = self.robots.into_iter().map(|(_, r)| r).collect();
        robots.sort_by_key(|r| r.pid);
        let ports: Vec<u16> = robots.iter().map(|r| r.port).collect();
        let mut used = BTreeSet::new();
        for p in ports.iter().filter(|&&p| p != 0) {
            if !used.insert(*p) {
                return Err(err(0, "robot.port", format!("port {p} used twice")));
            }
        }
        c.robots = robots;

        let mut net = self.net.unwrap_or_else(|| NetConfig::lossless(num_robots));
        net.ports = ports;
        net.seed = c.seed;
        c.net = net;

        let table = koord::compile(&c.program.text, num_robots)
            .map_err(|e| err(0, "program", format!("{} does not compile: {e}", c.program.name)))?
            .0;
        for (line, name, text) in self.init {
            let path = format!("init.{name}");
            let Some(var) = table.shared.iter().find(|v| v.name == name) else {
                return Err(err(line, &path, "no shared variable of this name"));
            };
            let parts = split_top(&text);
            let mut vals = Vec::with_capacity(parts.len());
            for p in &parts {
                let v = koord::constant(p).map_err(|e| err(line, &path, e))?;
                let v = v.coerce(var.ty).ok_or_else(|| err(line, &path, format!("expected a {} value", var.ty)))?;
                vals.push(v);
            }
            let v = if vals.len() == 1 {
                vals.pop().expect("one value")
            } else if var.indexed && vals.len() == num_robots {
                Value::Array(vals)
            } else {
                return Err(err(line, &path, format!("expected 1 or {num_robots} values, found {}", vals.len())));
            };
            c.init.insert(name, v);
        }
        if !c.tasks.is_empty() && !c.init.contains_key("taskList") && table.shared_id("taskList").is_some() {
            c.init.insert("taskList".into(), Value::path(c.tasks.iter().copied()));
        }
        Ok(c)
    }
}

fn expect_no_items(n: &Node, path: &str) -> Result<(), ConfigError> {
    match (n.items.first(), &n.value) {
        (Some((line, _)), _) => Err(err(*line, path, "unexpected list item")),
        (_, Some(_)) => Err(err(n.line, path, "expected a block, found a value")),
        _ => Ok(()),
    }
}

fn program(n: &Node, base: Option<&Path>) -> Result<ProgramSource, ConfigError> {
    let v = value(n, "program")?;
    if let Some(name) = v.strip_prefix('@') {
        let text = apps::source(name).ok_or_else(|| err(n.line, "program", format!("no shipped app `{name}`")))?;
        return Ok(ProgramSource { name: v.to_string(), text: text.to_string() });
    }
    let path: PathBuf = match base {
        Some(b) if Path::new(v).is_relative() => b.join(v),
        _ => PathBuf::from(v),
    };
    let text = std::fs::read_to_string(&path).map_err(|e| err(n.line, "program", format!("cannot read {}: {e}", path.display())))?;
    Ok(ProgramSource { name: v.to_string(), text })
}

fn net(n: &Node) -> Result<NetConfig, ConfigError> {
    expect_no_items(n, "net")?;
    let mut cfg = NetConfig::lossless(0);
    let mut seen = BTreeSet::new();
    for c in &n.children {
        let path = format!("net.{}", c.key);
        if !seen.insert(c.key.as_str()) {
            return Err(err(c.line, &path, "key given twice"));
        }
        match c.key.as_str() {
            "mode" => {
                let v = value(c, &path)?;
                cfg.mode = NetMode::parse(v).ok_or_else(|| err(c.line, &path, format!("expected in_process or udp, found `{v}`")))?;
            }
            "loss_prob" => {
                let p = float(c, &path)?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(err(c.line, &path, "must lie in [0, 1]"));
                }
                cfg.loss_prob = p;
            }
            "delay" => {
                let v = value(c, &path)?;
                cfg.delay = if let Some(rest) = v.strip_prefix("uniform") {
                    let x = floats(rest, 2, c.line, &path)?;
                    if x[0] < 0.0 || x[1] < x[0] {
                        return Err(err(c.line, &path, "need 0 <= lo <= hi"));
                    }
                    Delay::Uniform(x[0], x[1])
                } else {
                    let d = float(c, &path)?;
                    if d < 0.0 {
                        return Err(err(c.line, &path, "must not be negative"));
                    }
                    Delay::Fixed(d)
                };
            }
            "settle" => cfg.settle = positive(c, &path)?,
            "base_port" => {
                // kept for configs that assign ports from a base; robots'
                // own `port` keys take precedence
                let _: u16 = int(c, &path)?;
            }
            _ => return Err(err(c.line, &path, "unknown key")),
        }
    }
    Ok(cfg)
}

fn robot(n: &Node, at: &str) -> Result<RobotConfig, ConfigError> {
    expect_no_items(n, at)?;
    let mut pid = None;
    let mut on_device = None;
    let mut start = Pose::new(0.0, 0.0, 0.0, 0.0);
    let mut port = 0;
    let mut seen = BTreeSet::new();
    for c in &n.children {
        let path = format!("{at}.{}", c.key);
        if !seen.insert(c.key.as_str()) {
            return Err(err(c.line, &path, "key given twice"));
        }
        match c.key.as_str() {
            "pid" => pid = Some(int(c, &path)?),
            "on_device" => on_device = Some(value(c, &path)?.to_string()),
            "start" => {
                let v = value(c, &path)?;
                let count = v.split_whitespace().count();
                let x = floats(v, if count == 3 { 3 } else { 4 }, c.line, &path)?;
                start = Pose::new(x[0], x[1], x[2], x.get(3).copied().unwrap_or(0.0));
            }
            "port" => port = int(c, &path)?,
            // names the generated controller on hardware; nothing to do here
            "motion_automaton" => {}
            _ => return Err(err(c.line, &path, "unknown key")),
        }
    }
    Ok(RobotConfig {
        pid: pid.ok_or_else(|| err(n.line, &format!("{at}.pid"), "missing"))?,
        on_device: on_device.ok_or_else(|| err(n.line, &format!("{at}.on_device"), "missing"))?,
        start,
        port,
    })
}

fn device(n: &Node, at: &str) -> Result<DeviceConfig, ConfigError> {
    expect_no_items(n, at)?;
    let mut name = None;
    let mut kind = None;
    let mut planner = None;
    let mut params: Vec<(&Node, String)> = Vec::new();
    let mut seen = BTreeSet::new();
    for c in &n.children {
        let path = format!("{at}.{}", c.key);
        if !seen.insert(c.key.as_str()) {
            return Err(err(c.line, &path, "key given twice"));
        }
        match c.key.as_str() {
            "bot_name" => name = Some(value(c, &path)?.to_string()),
            "bot_type" => {
                let v = value(c, &path)?;
                kind = Some(VehicleKind::parse(v).ok_or_else(|| err(c.line, &path, format!("expected CAR or QUAD, found `{v}`")))?);
            }
            "planner" => {
                let v = value(c, &path)?;
                planner = Some(PlannerKind::parse(v).ok_or_else(|| err(c.line, &path, format!("unknown planner `{v}`")))?);
            }
            "wheelbase" | "v_max" | "steer_max" | "accel" | "eps_reach" => params.push((c, path)),
            // hardware message topics; the simulator has no middleware bus
            "positioning_topic" | "reached_topic" | "waypoint_topic" => {}
            _ => return Err(err(c.line, &path, "unknown key")),
        }
    }
    let kind = kind.ok_or_else(|| err(n.line, &format!("{at}.bot_type"), "missing"))?;
    let mut model = VehicleModel::of_kind(kind);
    for (c, path) in params {
        let x = float(c, &path)?;
        match c.key.as_str() {
            "wheelbase" => model.wheelbase = x,
            "v_max" => model.v_max = x,
            "steer_max" => model.steer_max = x,
            "accel" => model.accel = x,
            _ => model.eps_reach = x,
        }
    }
    model.validate().map_err(|e| err(n.line, at, e.to_string()))?;
    let planner = planner.unwrap_or(match kind {
        VehicleKind::Car => PlannerKind::RrtCar,
        VehicleKind::Quad => PlannerKind::RrtQuad,
    });
    if planner.vehicle() != kind {
        return Err(err(n.line, &format!("{at}.planner"), format!("{planner} does not plan for a {kind}")));
    }
    Ok(DeviceConfig { bot_name: name.ok_or_else(|| err(n.line, &format!("{at}.bot_name"), "missing"))?, planner, model })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINI: &str = "\
num_robots: 2
tasks:
  - 1.0 1.0 0.0
  - 2.0 2.0 1.5
robot:
  pid: 1
  on_device: q
  start: 3 3 1.5
robot:
  pid: 0
  on_device: c
  start: 1 2 0 0.5
device:
  bot_name: c
  bot_type: CAR
device:
  bot_name: q
  bot_type: QUAD
  planner: RRT_SMOOTH_QUAD
";

    #[test]
    fn defaults_fill_in() {
        let c = SimConfig::parse(MINI, None).unwrap();
        assert_eq!(c.num_robots, 2);
        assert_eq!(c.delta, 0.1);
        assert_eq!(c.dt, 0.01);
        assert_eq!(c.d_s(), 0.5);
        assert_eq!(c.robots[0].pid, 0);
        assert_eq!(c.robots[0].start.yaw, 0.5);
        assert_eq!(c.robot_devices()[1].planner, PlannerKind::RrtSmoothQuad);
        assert_eq!(c.robot_devices()[0].planner, PlannerKind::RrtCar);
        assert_eq!(c.steps_per_round(), 10);
        assert!(c.init.contains_key("taskList"));
    }

    #[test]
    fn display_round_trips() {
        let c = SimConfig::parse(MINI, None).unwrap();
        let again = SimConfig::parse(&c.to_string(), None).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn errors_carry_key_paths() {
        let bad = MINI.replace("pid: 1", "pid: 0");
        let e = SimConfig::parse(&bad, None).unwrap_err();
        assert!(e.message.contains("duplicate pid"), "{e}");
        let bad = MINI.replace("on_device: q", "on_device: nope");
        assert!(SimConfig::parse(&bad, None).unwrap_err().message.contains("unknown device"));
        let bad = MINI.replace("  bot_type: QUAD", "  bot_type: QUAD\n  wings: 2");
        let e = SimConfig::parse(&bad, None).unwrap_err();
        assert_eq!(e.path, "device[1].wings");
        assert_eq!(e.line, 19);
        let bad = format!("{MINI}delta: 0.015\n");
        assert_eq!(SimConfig::parse(&bad, None).unwrap_err().path, "delta");
        let bad = format!("{MINI}net:\n  mode: carrier_pigeon\n");
        assert_eq!(SimConfig::parse(&bad, None).unwrap_err().path, "net.mode");
    }

    #[test]
    fn init_values_per_cell() {
        let src = format!("{MINI}program: @averaging\ninit:\n  x: 0.0, 4.0\n");
        let c = SimConfig::parse(&src.replace("tasks:\n  - 1.0 1.0 0.0\n  - 2.0 2.0 1.5\n", ""), None).unwrap();
        assert_eq!(c.init["x"], Value::Array(vec![Value::Float(0.0), Value::Float(4.0)]));
        let src = format!("{MINI}program: @lineform\ninit:\n  target: pos(1, 2, 0)\n");
        let c = SimConfig::parse(&src, None).unwrap();
        assert_eq!(c.init["target"], Value::Pos(Vec3::new(1.0, 2.0, 0.0)));
    }

    #[test]
    fn hardware_keys_are_ignored() {
        let src = MINI.replace(
            "  bot_type: CAR\n",
            "  bot_type: CAR\n  positioning_topic:\n    topic: pose\n    type: PoseStamped\n",
        );
        assert!(SimConfig::parse(&src, None).is_ok());
    }

    #[test]
    fn tree_shape() {
        let t = parse_tree("a: 1\nb:\n  c: 2\n  d:\n    - x\n    - y\ne: 3\n").unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t[1].children.len(), 2);
        assert_eq!(t[1].children[1].items.len(), 2);
        assert!(parse_tree("a: 1\n  b: 2\n").is_err());
        assert!(parse_tree("a:\n    b: 1\n  c: 2\n").is_err());
    }
}
