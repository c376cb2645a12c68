use koord::Vec3;
use koordsim::geom::{self, Aabb};
use koordsim::motion::VehicleKind;
use koordsim::planner::{self, FindPath, FindPathOutcome, PlanError, PlannerKind, RrtParams, Workspace};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod common;
use common::{brute_distance, densify, free_point, random_map, sampled_collision_free};

#[test]
fn hundred_random_maps_give_valid_paths() {
    let params = RrtParams::default();
    let mut found = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ws = random_map(&mut rng);
        let kind = if seed % 2 == 0 { VehicleKind::Car } else { VehicleKind::Quad };
        let (s, g) = (free_point(&mut rng, &ws, kind, params.margin), free_point(&mut rng, &ws, kind, params.margin));
        let path = match planner::rrt_plan(s, g, &ws, kind, seed, &params) {
            Ok(p) => p,
            Err(PlanError::Exhausted) => continue,
            Err(e) => panic!("seed {seed}: {e}"),
        };
        found += 1;
        assert_eq!((path[0], *path.last().unwrap()), (s, g));
        assert!(sampled_collision_free(&path, &ws), "seed {seed}");
        if kind == VehicleKind::Car {
            assert!(path.iter().all(|p| p.z == 0.0));
        }
        let smooth = planner::smooth(&path, &ws, seed, 100);
        assert!(geom::path_length(&smooth) <= geom::path_length(&path) + 1e-9, "seed {seed}");
        assert!(sampled_collision_free(&smooth, &ws), "seed {seed}");
        assert_eq!((smooth[0], *smooth.last().unwrap()), (s, g));
    }
    assert!(found >= 90, "only {found} of 100 instances planned");
}

#[test]
fn wall_with_a_gap_is_threaded() {
    let mut ws = Workspace::arena(8.0, 7.0, 3.0, 0.5);
    // wall at x = 4 leaving a gap for 3 < y < 4
    ws.obstacles.push(Aabb::new(Vec3::new(3.8, 0.0, 0.0), Vec3::new(4.2, 3.0, 3.0)));
    ws.obstacles.push(Aabb::new(Vec3::new(3.8, 4.0, 0.0), Vec3::new(4.2, 7.0, 3.0)));
    let params = RrtParams { max_iters: 20_000, ..RrtParams::default() };
    let (s, g) = (Vec3::new(1.0, 1.0, 0.0), Vec3::new(7.0, 6.0, 0.0));
    let path = planner::rrt_plan(s, g, &ws, VehicleKind::Car, 7, &params).unwrap();
    assert!(sampled_collision_free(&path, &ws));
    let crossing = densify(&path, 1e-2).into_iter().find(|p| (p.x - 4.0).abs() < 0.01).unwrap();
    assert!(crossing.y > 3.0 && crossing.y < 4.0, "{crossing}");
}

#[test]
fn smoothing_straightens_a_zigzag() {
    let ws = Workspace::arena(8.0, 7.0, 3.0, 0.5);
    let zig: Vec<Vec3> = (0..9).map(|k| Vec3::new(1.0 + 0.5 * k as f64, if k % 2 == 0 { 2.0 } else { 3.0 }, 1.0)).collect();
    let s = planner::smooth(&zig, &ws, 1, 200);
    assert_eq!(s, [zig[0], zig[8]]);
}

#[test]
fn endpoints_are_checked() {
    let mut ws = Workspace::arena(8.0, 7.0, 3.0, 0.5);
    ws.obstacles.push(Aabb::new(Vec3::new(3.0, 3.0, 0.0), Vec3::new(4.0, 4.0, 1.0)));
    let p = RrtParams::default();
    let inside = Vec3::new(3.5, 3.5, 0.0);
    let free = Vec3::new(1.0, 1.0, 0.0);
    assert_eq!(planner::rrt_plan(inside, free, &ws, VehicleKind::Car, 0, &p), Err(PlanError::InvalidStart));
    assert_eq!(planner::rrt_plan(free, inside, &ws, VehicleKind::Car, 0, &p), Err(PlanError::InvalidGoal));
    assert_eq!(planner::rrt_plan(free, Vec3::new(2.0, 2.0, 1.0), &ws, VehicleKind::Car, 0, &p), Err(PlanError::NonPlanar));
}

fn request<'a>(ws: &'a Workspace, start: Vec3, goal: Vec3, others: &'a [&'a [Vec3]]) -> FindPath<'a> {
    FindPath { start, goal, workspace: ws, planner: PlannerKind::RrtSmoothQuad, others, seed: 5, params: RrtParams::default() }
}

#[test]
fn find_path_respects_reservations_and_retries_after_release() {
    let ws = Workspace::arena(8.0, 7.0, 3.0, 0.5);
    let (s, g) = (Vec3::new(1.0, 3.5, 1.5), Vec3::new(7.0, 3.5, 1.5));
    // another robot's route passes through the goal
    let through_goal = [Vec3::new(7.0, 1.0, 1.5), Vec3::new(7.0, 6.0, 1.5)];
    let others: [&[Vec3]; 1] = [&through_goal];
    assert_eq!(planner::find_path(&request(&ws, s, g, &others)), FindPathOutcome::Blocked);
    // once released it shrinks to a point far away and planning succeeds
    let parked = [Vec3::new(4.0, 6.5, 1.5)];
    let others: [&[Vec3]; 1] = [&parked];
    let FindPathOutcome::Path(path) = planner::find_path(&request(&ws, s, g, &others)) else {
        panic!("still blocked");
    };
    assert!(geom::polyline_distance(&path, &parked) >= 2.0 * ws.d_s);
    assert!(planner::path_is_clear(&path, &[], &parked, ws.d_s));
}

#[test]
fn find_path_detours_around_a_crossing_route() {
    let ws = Workspace::arena(8.0, 7.0, 3.0, 0.5);
    let (s, g) = (Vec3::new(1.0, 3.5, 1.5), Vec3::new(7.0, 3.5, 1.5));
    let wall = [Vec3::new(4.0, 0.0, 1.5), Vec3::new(4.0, 5.0, 1.5)];
    let others: [&[Vec3]; 1] = [&wall];
    let FindPathOutcome::Path(path) = planner::find_path(&request(&ws, s, g, &others)) else {
        panic!("blocked");
    };
    assert!(brute_distance(&path, &wall, 5e-3) >= 2.0 * ws.d_s - 1e-2);
}

fn point() -> impl Strategy<Value = Vec3> {
    (0.0..4.0, 0.0..4.0, 0.0..2.0).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn tube_distance_matches_brute_force(
        a in prop::collection::vec(point(), 1..4),
        b in prop::collection::vec(point(), 1..4),
    ) {
        let exact = geom::polyline_distance(&a, &b);
        let brute = brute_distance(&a, &b, 4e-3);
        prop_assert!(exact <= brute + 1e-9);
        prop_assert!(brute - exact < 1e-2, "exact {exact} brute {brute}");
        let d_s = 0.5;
        let clear = planner::path_is_clear(&a, &[&b], &[], d_s);
        if (brute - 2.0 * d_s).abs() > 1e-2 {
            prop_assert_eq!(clear, brute >= 2.0 * d_s);
        }
    }
}
