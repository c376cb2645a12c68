use koord::Vec3;
use koordsim::motion::{MotionState, Pose, RouteError, VehicleKind, VehicleModel};
use proptest::prelude::*;

const DT: f64 = 0.01;

fn waypoint(kind: VehicleKind) -> impl Strategy<Value = Vec3> {
    let z = match kind {
        VehicleKind::Car => Just(0.0).boxed(),
        VehicleKind::Quad => (0.0..3.0).boxed(),
    };
    (0.0..8.0, 0.0..7.0, z).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn scenario(kind: VehicleKind) -> impl Strategy<Value = (Pose, Vec<Vec3>)> {
    let start = (waypoint(kind), -3.2..3.2).prop_map(|(p, yaw)| Pose::new(p.x, p.y, p.z, yaw));
    (start, prop::collection::vec(waypoint(kind), 1..5))
}

fn kinds() -> impl Strategy<Value = VehicleKind> {
    prop_oneof![Just(VehicleKind::Car), Just(VehicleKind::Quad)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn displacement_bounded_and_reached_latches(
        (kind, (start, route)) in kinds().prop_flat_map(|k| (Just(k), scenario(k)))
    ) {
        let model = VehicleModel::of_kind(kind);
        let mut m = MotionState::new(start);
        m.set_route(&model, &route).unwrap();
        prop_assert!(!m.reached);
        let mut latched: Option<Pose> = None;
        for _ in 0..3000 {
            let before = m.pose.position();
            m.step(&model, DT);
            let after = m.pose.position();
            prop_assert!(before.dist(after) <= model.v_max * DT + 1e-9, "moved {}", before.dist(after));
            if kind == VehicleKind::Car {
                prop_assert_eq!(after.z, 0.0);
            }
            if let Some(p) = latched {
                prop_assert!(m.reached);
                prop_assert_eq!(m.pose, p);
            } else if m.reached {
                prop_assert!(after.dist(*route.last().unwrap()) <= model.eps_reach + 1e-9);
                latched = Some(m.pose);
            }
        }
    }

    #[test]
    fn quad_reaches_any_route((start, route) in scenario(VehicleKind::Quad)) {
        let model = VehicleModel::quad();
        let mut m = MotionState::new(start);
        m.set_route(&model, &route).unwrap();
        let length: f64 = std::iter::once(start.position()).chain(route.iter().copied())
            .collect::<Vec<_>>().windows(2).map(|w| w[0].dist(w[1])).sum();
        let budget = (length / (model.v_max * DT)).ceil() as usize + 2;
        for _ in 0..budget {
            m.step(&model, DT);
        }
        prop_assert!(m.reached);
    }
}

#[test]
fn car_reaches_a_waypoint_behind_it() {
    let model = VehicleModel::car();
    for target in [Vec3::new(2.0, 3.5, 0.0), Vec3::new(3.0, 3.0, 0.0), Vec3::new(3.9, 3.6, 0.0)] {
        let mut m = MotionState::new(Pose::new(4.0, 3.5, 0.0, 0.0));
        m.set_route(&model, &[target]).unwrap();
        let mut t = 0.0;
        while !m.reached && t < 60.0 {
            m.step(&model, DT);
            t += DT;
        }
        assert!(m.reached, "{target} not reached within 60 s");
    }
}

#[test]
fn car_follows_a_square_and_stays_planar() {
    let model = VehicleModel::car();
    let mut m = MotionState::new(Pose::new(1.0, 1.0, 0.0, 0.0));
    let square = [Vec3::new(5.0, 1.0, 0.0), Vec3::new(5.0, 5.0, 0.0), Vec3::new(1.0, 5.0, 0.0), Vec3::new(1.0, 1.0, 0.0)];
    m.set_route(&model, &square).unwrap();
    let mut far_from_start = false;
    for _ in 0..6000 {
        m.step(&model, DT);
        far_from_start |= m.pose.position().dist(Vec3::new(1.0, 1.0, 0.0)) > 3.0;
        if m.reached {
            break;
        }
    }
    assert!(far_from_start && m.reached);
    assert_eq!(m.pose.z, 0.0);
}

#[test]
fn rejected_routes_leave_state_alone() {
    let car = VehicleModel::car();
    let mut m = MotionState::new(Pose::new(1.0, 1.0, 0.0, 0.0));
    assert_eq!(m.set_route(&car, &[]), Err(RouteError::Empty));
    assert_eq!(m.set_route(&car, &[Vec3::new(2.0, 2.0, 1.0)]), Err(RouteError::NonPlanar { index: 0, z: 1.0 }));
    assert_eq!(m.set_route(&car, &[Vec3::new(f64::NAN, 2.0, 0.0)]), Err(RouteError::NonFinite { index: 0 }));
    assert!(m.reached && m.route.is_empty());
}

#[test]
fn a_new_route_clears_reached() {
    let quad = VehicleModel::quad();
    let mut m = MotionState::new(Pose::new(1.0, 1.0, 1.0, 0.0));
    m.set_route(&quad, &[Vec3::new(1.05, 1.0, 1.0)]).unwrap();
    assert!(!m.reached);
    m.step(&quad, DT);
    assert!(m.reached);
    m.set_route(&quad, &[Vec3::new(2.0, 1.0, 1.0)]).unwrap();
    assert!(!m.reached);
}
