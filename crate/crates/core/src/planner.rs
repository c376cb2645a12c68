//! RRT planning, shortcut smoothing, and the route-tube predicates behind
//! `findPath` and `pathIsClear`.

use std::fmt;

use koord::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geom::{self, Aabb};
use crate::motion::VehicleKind;

#[derive(Debug, Clone, PartialEq)]
pub struct Workspace {
    pub bounds: Aabb,
    pub obstacles: Vec<Aabb>,
    pub d_s: f64,
}

impl Workspace {
    /// Empty arena of the given size with its corner at the origin.
    pub fn arena(x: f64, y: f64, z: f64, d_s: f64) -> Self {
        Self { bounds: Aabb::new(Vec3::ZERO, Vec3::new(x, y, z)), obstacles: Vec::new(), d_s }
    }

    pub fn is_free(&self, p: Vec3, margin: f64) -> bool {
        self.bounds.contains(p) && !self.obstacles.iter().any(|o| o.inflate(margin).contains(p))
    }

    pub fn edge_is_free(&self, a: Vec3, b: Vec3, margin: f64) -> bool {
        self.bounds.contains(a)
            && self.bounds.contains(b)
            && !self.obstacles.iter().any(|o| o.inflate(margin).intersects_segment(a, b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlannerKind {
    RrtCar,
    RrtQuad,
    RrtSmoothCar,
    RrtSmoothQuad,
}

impl PlannerKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "RRT_CAR" => Some(Self::RrtCar),
            "RRT_QUAD" => Some(Self::RrtQuad),
            "RRT_SMOOTH_CAR" => Some(Self::RrtSmoothCar),
            "RRT_SMOOTH_QUAD" => Some(Self::RrtSmoothQuad),
            _ => None,
        }
    }

    pub fn vehicle(self) -> VehicleKind {
        match self {
            Self::RrtCar | Self::RrtSmoothCar => VehicleKind::Car,
            Self::RrtQuad | Self::RrtSmoothQuad => VehicleKind::Quad,
        }
    }

    pub fn smooths(self) -> bool {
        matches!(self, Self::RrtSmoothCar | Self::RrtSmoothQuad)
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::RrtCar => "RRT_CAR",
            Self::RrtQuad => "RRT_QUAD",
            Self::RrtSmoothCar => "RRT_SMOOTH_CAR",
            Self::RrtSmoothQuad => "RRT_SMOOTH_QUAD",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrtParams {
    pub step: f64,
    pub goal_bias: f64,
    pub max_iters: usize,
    /// Clearance kept from static obstacles.
    pub margin: f64,
    pub smooth_rounds: usize,
    pub attempts: usize,
}

impl Default for RrtParams {
    fn default() -> Self {
        Self { step: 0.25, goal_bias: 0.1, max_iters: 5000, margin: 0.05, smooth_rounds: 60, attempts: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("start is outside the free workspace")]
    InvalidStart,
    #[error("goal is outside the free workspace")]
    InvalidGoal,
    #[error("car endpoints must lie on the ground plane")]
    NonPlanar,
    #[error("no path found within the iteration budget")]
    Exhausted,
}

/// Edge predicate on top of static obstacles; returns true when the edge is
/// acceptable.
type EdgeOk<'a> = dyn Fn(Vec3, Vec3) -> bool + 'a;

fn sample(rng: &mut ChaCha8Rng, ws: &Workspace, kind: VehicleKind) -> Vec3 {
    let b = ws.bounds;
    let mut axis = |lo: f64, hi: f64| if hi > lo { rng.gen_range(lo..=hi) } else { lo };
    let x = axis(b.min.x, b.max.x);
    let y = axis(b.min.y, b.max.y);
    let z = match kind {
        VehicleKind::Car => 0.0,
        VehicleKind::Quad => axis(b.min.z, b.max.z),
    };
    Vec3::new(x, y, z)
}

/// Plan from `start` to `goal` avoiding static obstacles. The returned path
/// starts at `start` and ends exactly at `goal`.
pub fn rrt_plan(
    start: Vec3,
    goal: Vec3,
    ws: &Workspace,
    kind: VehicleKind,
    seed: u64,
    params: &RrtParams,
) -> Result<Vec<Vec3>, PlanError> {
    rrt_plan_with(start, goal, ws, kind, &mut ChaCha8Rng::seed_from_u64(seed), params, &|_, _| true)
}

fn check_endpoints(start: Vec3, goal: Vec3, ws: &Workspace, kind: VehicleKind, margin: f64) -> Result<(), PlanError> {
    if kind == VehicleKind::Car && (start.z != 0.0 || goal.z != 0.0) {
        return Err(PlanError::NonPlanar);
    }
    if !start.is_finite() || !ws.is_free(start, margin) {
        return Err(PlanError::InvalidStart);
    }
    if !goal.is_finite() || !ws.is_free(goal, margin) {
        return Err(PlanError::InvalidGoal);
    }
    Ok(())
}

fn rrt_plan_with(
    start: Vec3,
    goal: Vec3,
    ws: &Workspace,
    kind: VehicleKind,
    rng: &mut ChaCha8Rng,
    params: &RrtParams,
    edge_ok: &EdgeOk<'_>,
) -> Result<Vec<Vec3>, PlanError> {
    check_endpoints(start, goal, ws, kind, params.margin)?;
    let free = |a: Vec3, b: Vec3| ws.edge_is_free(a, b, params.margin) && edge_ok(a, b);
    if start.dist(goal) < 1e-9 {
        return Ok(vec![start]);
    }
    if free(start, goal) {
        return Ok(vec![start, goal]);
    }
    let mut nodes: Vec<(Vec3, usize)> = vec![(start, 0)];
    for _ in 0..params.max_iters {
        let target = if rng.gen::<f64>() < params.goal_bias { goal } else { sample(rng, ws, kind) };
        let (near, _) = nodes
            .iter()
            .enumerate()
            .map(|(i, (p, _))| (i, p.dist(target)))
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        let from = nodes[near].0;
        let d = from.dist(target);
        if d < 1e-9 {
            continue;
        }
        let new = if d <= params.step { target } else { from + (target - from) * (params.step / d) };
        if !free(from, new) {
            continue;
        }
        nodes.push((new, near));
        let idx = nodes.len() - 1;
        if new.dist(goal) <= params.step && free(new, goal) {
            let mut path = vec![goal];
            let mut i = idx;
            loop {
                let (p, parent) = nodes[i];
                if p.dist(*path.last().unwrap()) > 1e-12 {
                    path.push(p);
                }
                if i == 0 {
                    break;
                }
                i = parent;
            }
            path.reverse();
            return Ok(path);
        }
    }
    Err(PlanError::Exhausted)
}

/// Random shortcutting: repeatedly replace the stretch between two random
/// waypoints with a straight edge when that edge is free.
pub fn smooth(path: &[Vec3], ws: &Workspace, seed: u64, rounds: usize) -> Vec<Vec3> {
    smooth_with(path, ws, &mut ChaCha8Rng::seed_from_u64(seed), rounds, RrtParams::default().margin, &|_, _| true)
}

fn smooth_with(
    path: &[Vec3],
    ws: &Workspace,
    rng: &mut ChaCha8Rng,
    rounds: usize,
    margin: f64,
    edge_ok: &EdgeOk<'_>,
) -> Vec<Vec3> {
    let mut out = path.to_vec();
    for _ in 0..rounds {
        if out.len() < 3 {
            break;
        }
        let i = rng.gen_range(0..out.len() - 2);
        let j = rng.gen_range(i + 2..out.len());
        if ws.edge_is_free(out[i], out[j], margin) && edge_ok(out[i], out[j]) {
            out.drain(i + 1..j);
        }
    }
    out
}

/// Whether the `d_s` tube around `path` stays clear of other robots'
/// reserved tubes and of their current positions.
pub fn path_is_clear(path: &[Vec3], reservations: &[&[Vec3]], positions: &[Vec3], d_s: f64) -> bool {
    let reach = 2.0 * d_s;
    reservations.iter().all(|r| r.is_empty() || geom::polyline_distance(path, r) >= reach)
        && positions.iter().all(|p| geom::polyline_distance(path, std::slice::from_ref(p)) >= reach)
}

/// Split published routes into active reservations and bare positions.
pub fn split_routes<'a>(routes: impl IntoIterator<Item = &'a [Vec3]>) -> (Vec<&'a [Vec3]>, Vec<Vec3>) {
    let mut res = Vec::new();
    let mut pos = Vec::new();
    for r in routes {
        match r.len() {
            0 => {}
            1 => pos.push(r[0]),
            _ => res.push(r),
        }
    }
    (res, pos)
}

/// splitmix64 finalizer, for deriving independent planning seeds.
pub fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub struct FindPath<'a> {
    pub start: Vec3,
    pub goal: Vec3,
    pub workspace: &'a Workspace,
    pub planner: PlannerKind,
    /// Routes published by the other robots.
    pub others: &'a [&'a [Vec3]],
    pub seed: u64,
    pub params: RrtParams,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FindPathOutcome {
    Path(Vec<Vec3>),
    Blocked,
}

/// Plan a path to `goal` that is clear of every other robot's route. Tree
/// growth treats those routes as keep-out tubes, so a returned path needs no
/// further repair.
pub fn find_path(req: &FindPath<'_>) -> FindPathOutcome {
    let kind = req.planner.vehicle();
    let layer_ok = match kind {
        VehicleKind::Car => req.goal.z == 0.0 && req.start.z == 0.0,
        VehicleKind::Quad => req.goal.z > 0.0,
    };
    if !layer_ok {
        return FindPathOutcome::Blocked;
    }
    let d_s = req.workspace.d_s;
    let reach = 2.0 * d_s;
    let keep_out = |p: Vec3| req.others.iter().any(|r| geom::polyline_distance(std::slice::from_ref(&p), r) < reach);
    if keep_out(req.start) || keep_out(req.goal) {
        return FindPathOutcome::Blocked;
    }
    let edge_ok = |a: Vec3, b: Vec3| req.others.iter().all(|r| geom::segment_polyline_distance(a, b, r) >= reach);
    let (reservations, positions) = split_routes(req.others.iter().copied());
    for attempt in 0..req.params.attempts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(req.seed ^ mix(attempt as u64)));
        let Ok(mut path) = rrt_plan_with(req.start, req.goal, req.workspace, kind, &mut rng, &req.params, &edge_ok) else {
            continue;
        };
        if req.planner.smooths() {
            path = smooth_with(&path, req.workspace, &mut rng, req.params.smooth_rounds, req.params.margin, &edge_ok);
        }
        if path_is_clear(&path, &reservations, &positions, d_s) {
            return FindPathOutcome::Path(path);
        }
    }
    FindPathOutcome::Blocked
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    #[test]
    fn straight_shot_in_empty_arena() {
        let ws = Workspace::arena(8.0, 7.0, 3.0, 0.5);
        let p = rrt_plan(v(0., 0., 0.), v(1., 1., 0.), &ws, VehicleKind::Car, 1, &RrtParams::default()).unwrap();
        assert!(geom::path_length(&p) >= 2f64.sqrt() - 1e-12);
        assert_eq!(*p.last().unwrap(), v(1., 1., 0.));
    }

    #[test]
    fn goal_in_obstacle_is_rejected() {
        let mut ws = Workspace::arena(8.0, 7.0, 3.0, 0.5);
        ws.obstacles.push(Aabb::new(v(3., 3., 0.), v(4., 4., 3.)));
        let r = rrt_plan(v(0., 0., 0.), v(3.5, 3.5, 0.), &ws, VehicleKind::Car, 1, &RrtParams::default());
        assert_eq!(r, Err(PlanError::InvalidGoal));
        let r = rrt_plan(v(0., 0., 0.), v(1., 1., 1.), &ws, VehicleKind::Car, 1, &RrtParams::default());
        assert_eq!(r, Err(PlanError::NonPlanar));
    }

    #[test]
    fn smoothing_keeps_straight_paths() {
        let ws = Workspace::arena(8.0, 7.0, 3.0, 0.5);
        let p = vec![v(0., 0., 0.), v(1., 0., 0.)];
        assert_eq!(smooth(&p, &ws, 3, 50), p);
    }

    #[test]
    fn tube_clearance() {
        let a = [v(0., 0., 0.), v(5., 0., 0.)];
        let b = [v(0., 1.5, 0.), v(5., 1.5, 0.)];
        assert!(path_is_clear(&a, &[&b], &[], 0.5));
        let c = [v(2., -2., 0.), v(2., 2., 0.)];
        assert!(!path_is_clear(&a, &[&c], &[], 0.5));
        assert!(!path_is_clear(&a, &[], &[v(2.5, 0.5, 0.)], 0.5));
        // quad passing 1.5 m overhead
        let over = [v(2., -2., 1.5), v(2., 2., 1.5)];
        assert!(path_is_clear(&a, &[&over], &[], 0.5));
    }

    #[test]
    fn layer_mismatch_blocks() {
        let ws = Workspace::arena(8.0, 7.0, 3.0, 0.5);
        let req = FindPath {
            start: v(1., 1., 0.),
            goal: v(3., 3., 2.),
            workspace: &ws,
            planner: PlannerKind::RrtCar,
            others: &[],
            seed: 0,
            params: RrtParams::default(),
        };
        assert_eq!(find_path(&req), FindPathOutcome::Blocked);
    }

    #[test]
    fn seeds_are_spread() {
        assert_ne!(mix(0), mix(1));
        assert_ne!(mix(1) ^ 1, mix(1));
    }
}
