//! Shipped Koord programs and the scenarios they run in.

use std::f64::consts::PI;
use std::fmt::Write as _;

use koord::Vec3;

use crate::config::{ConfigError, SimConfig};

pub const TASK: &str = include_str!("../apps/task.koord");
pub const LINEFORM: &str = include_str!("../apps/lineform.koord");
pub const SHAPEFORM: &str = include_str!("../apps/shapeform.koord");
pub const AVERAGING: &str = include_str!("../apps/averaging.koord");

pub const NAMES: [&str; 4] = ["task", "lineform", "shapeform", "averaging"];

pub fn source(name: &str) -> Option<&'static str> {
    match name.to_ascii_lowercase().as_str() {
        "task" => Some(TASK),
        "lineform" => Some(LINEFORM),
        "shapeform" => Some(SHAPEFORM),
        "averaging" => Some(AVERAGING),
        _ => None,
    }
}

/// The fixed 20-task list: ten ground tasks and ten aerial ones, every pair
/// at least 1.5 m apart.
pub fn task_list() -> Vec<Vec3> {
    const T: [[f64; 3]; 20] = [
        [1.2, 1.2, 0.0],
        [3.2, 1.0, 0.0],
        [5.2, 1.2, 0.0],
        [7.0, 1.5, 0.0],
        [2.2, 3.0, 0.0],
        [4.4, 3.2, 0.0],
        [6.5, 3.6, 0.0],
        [1.2, 5.0, 0.0],
        [3.4, 5.6, 0.0],
        [5.6, 5.8, 0.0],
        [1.5, 1.8, 1.5],
        [4.2, 1.8, 2.0],
        [6.6, 2.4, 2.5],
        [2.8, 3.9, 2.0],
        [5.2, 4.2, 1.5],
        [1.4, 6.0, 2.5],
        [3.8, 6.2, 1.5],
        [6.6, 5.6, 2.0],
        [7.0, 0.8, 1.5],
        [0.8, 4.2, 1.5],
    ];
    T.iter().map(|t| Vec3::new(t[0], t[1], t[2])).collect()
}

/// `(device, start x y z yaw)` for the Task fleets, in pid order. Quads are
/// the slower fleet on the aerial half of the list, so the third robot is a
/// second quad.
const TASK_FLEET: [(&str, [f64; 4]); 4] = [
    ("car", [0.5, 3.2, 0.0, 0.0]),
    ("quad", [7.5, 6.6, 1.5, 0.0]),
    ("quad", [0.5, 0.5, 1.5, 0.0]),
    ("car", [7.5, 6.5, 0.0, PI]),
];

fn push_device(out: &mut String, name: &str, kind: &str, planner: &str) {
    let _ = writeln!(out, "device:\n  bot_name: {name}\n  bot_type: {kind}\n  planner: {planner}");
}

fn push_robot(out: &mut String, pid: usize, device: &str, start: [f64; 4]) {
    let [x, y, z, yaw] = start;
    let _ = writeln!(out, "robot:\n  pid: {pid}\n  on_device: {device}\n  start: {x} {y} {z} {yaw}");
}

/// Task with `robots` (1 to 4) robots on the fixed task list.
pub fn task_config_text(robots: usize, seed: u64) -> String {
    assert!((1..=TASK_FLEET.len()).contains(&robots), "Task fleets have 1 to 4 robots");
    let mut s = format!("num_robots: {robots}\nprogram: @task\nseed: {seed}\nduration: 400\ntasks:\n");
    for t in task_list() {
        let _ = writeln!(s, "  - {} {} {}", t.x, t.y, t.z);
    }
    for (pid, (dev, start)) in TASK_FLEET.iter().take(robots).enumerate() {
        push_robot(&mut s, pid, dev, *start);
    }
    push_device(&mut s, "car", "CAR", "RRT_SMOOTH_CAR");
    push_device(&mut s, "quad", "QUAD", "RRT_SMOOTH_QUAD");
    s
}

pub const SHAPE_CENTER: Vec3 = Vec3::new(4.0, 3.5, 1.5);
pub const SHAPE_HALF: f64 = 2.0;
/// Half side of the square the Shapeform quads start on.
pub const SHAPE_START_HALF: f64 = 3.0;

/// Point at perimeter fraction `u` in [0, 1) of the square with half side
/// `half` around `c`, walking counterclockwise from the lower left corner.
/// Matches the slot arithmetic in the Shapeform program.
pub fn square_point(c: Vec3, half: f64, u: f64) -> Vec3 {
    let side = (4.0 * u).floor();
    let f = 4.0 * u - side;
    let off = match side as i64 {
        0 => (-half + 2.0 * half * f, -half),
        1 => (half, -half + 2.0 * half * f),
        2 => (half - 2.0 * half * f, half),
        _ => (-half, half - 2.0 * half * f),
    };
    Vec3::new(c.x + off.0, c.y + off.1, c.z)
}

/// Shapeform with `n` quads starting on an outer square, each at the same
/// perimeter fraction as its slot.
pub fn shapeform_config_text(n: usize, seed: u64, duration: f64) -> String {
    let c = SHAPE_CENTER;
    let mut s = format!(
        "num_robots: {n}\nprogram: @shapeform\nseed: {seed}\nduration: {duration}\ninit:\n  center: pos({}, {}, {})\n  half: {SHAPE_HALF}\n",
        c.x, c.y, c.z
    );
    for pid in 0..n {
        let p = square_point(c, SHAPE_START_HALF, pid as f64 / n as f64);
        push_robot(&mut s, pid, "quad", [p.x, p.y, p.z, 0.0]);
    }
    push_device(&mut s, "quad", "QUAD", "RRT_QUAD");
    s
}

/// Lineform with `n` quads scattered around the line y = 3.5, z = 1.5; the
/// end agents anchor the segment from x = 1 to x = 7.
pub fn lineform_config_text(n: usize, seed: u64, duration: f64) -> String {
    let mut s = format!("num_robots: {n}\nprogram: @lineform\nseed: {seed}\nduration: {duration}\n");
    for pid in 0..n {
        let x = if n == 1 { 4.0 } else { 1.0 + 6.0 * pid as f64 / (n - 1) as f64 };
        // interior agents start off the line, alternating sides
        let y = if pid == 0 || pid + 1 == n { 3.5 } else if pid % 2 == 0 { 2.0 } else { 5.0 };
        push_robot(&mut s, pid, "quad", [x, y, 1.5, 0.0]);
    }
    push_device(&mut s, "quad", "QUAD", "RRT_QUAD");
    s
}

/// The one-line averaging program on a ring, one stationary quad per
/// agent so the fleet has somewhere to live.
pub fn averaging_config_text(values: &[f64], duration: f64) -> String {
    let n = values.len();
    let vals: Vec<String> = values.iter().map(|v| format!("{v:?}")).collect();
    let mut s = format!("num_robots: {n}\nprogram: @averaging\nduration: {duration}\ninit:\n  x: {}\n", vals.join(", "));
    for pid in 0..n {
        let p = square_point(SHAPE_CENTER, SHAPE_START_HALF, pid as f64 / n as f64);
        push_robot(&mut s, pid, "quad", [p.x, p.y, p.z, 0.0]);
    }
    push_device(&mut s, "quad", "QUAD", "RRT_QUAD");
    s
}

/// Apps the scaling experiment can run.
pub fn scaling_config(app: &str, n: usize, seed: u64, duration: f64) -> Option<Result<SimConfig, ConfigError>> {
    let text = match app.to_ascii_lowercase().as_str() {
        "shapeform" => shapeform_config_text(n, seed, duration),
        "lineform" => lineform_config_text(n, seed, duration),
        _ => return None,
    };
    Some(SimConfig::parse(&text, None))
}
