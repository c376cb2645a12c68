//! Vehicle models behind the `Motion` ports: a kinematic bicycle car
//! tracking its route with pure pursuit, and a straight-line quadcopter.

use std::f64::consts::PI;
use std::fmt;

use koord::Vec3;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VehicleKind {
    Car,
    Quad,
}

impl VehicleKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "CAR" => Some(VehicleKind::Car),
            "QUAD" => Some(VehicleKind::Quad),
            _ => None,
        }
    }
}

impl fmt::Display for VehicleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VehicleKind::Car => "CAR",
            VehicleKind::Quad => "QUAD",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleModel {
    pub kind: VehicleKind,
    pub wheelbase: f64,
    pub v_max: f64,
    pub steer_max: f64,
    /// Acceleration limit of the car's trapezoidal speed profile.
    pub accel: f64,
    pub eps_reach: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("wheelbase must be positive, got {0}")]
    Wheelbase(f64),
    #[error("v_max must be positive, got {0}")]
    Speed(f64),
    #[error("steer_max must lie in (0, pi/2), got {0}")]
    Steer(f64),
    #[error("accel must be positive, got {0}")]
    Accel(f64),
    #[error("eps_reach must be positive, got {0}")]
    Reach(f64),
}

impl VehicleModel {
    pub fn car() -> Self {
        Self { kind: VehicleKind::Car, wheelbase: 0.3, v_max: 1.0, steer_max: 0.6, accel: 1.0, eps_reach: 0.1 }
    }

    pub fn quad() -> Self {
        Self { kind: VehicleKind::Quad, ..Self::car() }
    }

    pub fn of_kind(kind: VehicleKind) -> Self {
        match kind {
            VehicleKind::Car => Self::car(),
            VehicleKind::Quad => Self::quad(),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let pos = |x: f64| x.is_finite() && x > 0.0;
        if !pos(self.wheelbase) {
            return Err(ModelError::Wheelbase(self.wheelbase));
        }
        if !pos(self.v_max) {
            return Err(ModelError::Speed(self.v_max));
        }
        if !(self.steer_max > 0.0 && self.steer_max < PI / 2.0) {
            return Err(ModelError::Steer(self.steer_max));
        }
        if !pos(self.accel) {
            return Err(ModelError::Accel(self.accel));
        }
        if !pos(self.eps_reach) {
            return Err(ModelError::Reach(self.eps_reach));
        }
        Ok(())
    }

    /// Pure-pursuit lookahead distance.
    pub fn lookahead(&self) -> f64 {
        self.wheelbase.max(2.0 * self.eps_reach)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, z: f64, yaw: f64) -> Self {
        Self { x, y, z, yaw: normalize_angle(yaw) }
    }

    pub fn position(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }
}

/// Wrap into (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// One Euler step of the kinematic bicycle with signed speed `v` and
/// steering angle `phi`.
pub fn bicycle_step(pose: Pose, v: f64, phi: f64, wheelbase: f64, dt: f64) -> Pose {
    Pose {
        x: pose.x + v * pose.yaw.cos() * dt,
        y: pose.y + v * pose.yaw.sin() * dt,
        z: pose.z,
        yaw: normalize_angle(pose.yaw + v / wheelbase * phi.tan() * dt),
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RouteError {
    #[error("route is empty")]
    Empty,
    #[error("waypoint {index} has z = {z}; cars stay on the ground plane")]
    NonPlanar { index: usize, z: f64 },
    #[error("waypoint {index} is not finite")]
    NonFinite { index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Gear {
    Forward,
    Reverse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionState {
    pub pose: Pose,
    /// Speed magnitude; the car's direction of travel is its gear.
    pub speed: f64,
    pub route: Vec<Vec3>,
    pub cursor: usize,
    pub reached: bool,
    /// Where the current route was actuated from; the first tracked
    /// segment starts here.
    anchor: Vec3,
    gear: Gear,
}

// Gear hysteresis on the bearing of the pursuit point.
const REVERSE_ABOVE: f64 = 100.0 * PI / 180.0;
const FORWARD_BELOW: f64 = 80.0 * PI / 180.0;

impl MotionState {
    pub fn new(pose: Pose) -> Self {
        Self { pose, speed: 0.0, route: Vec::new(), cursor: 0, reached: true, anchor: pose.position(), gear: Gear::Forward }
    }

    /// `(psn, reached)`
    pub fn ports(&self) -> (Pose, bool) {
        (self.pose, self.reached)
    }

    pub fn set_route(&mut self, model: &VehicleModel, waypoints: &[Vec3]) -> Result<(), RouteError> {
        if waypoints.is_empty() {
            return Err(RouteError::Empty);
        }
        for (index, w) in waypoints.iter().enumerate() {
            if !w.is_finite() {
                return Err(RouteError::NonFinite { index });
            }
            if model.kind == VehicleKind::Car && w.z != 0.0 {
                return Err(RouteError::NonPlanar { index, z: w.z });
            }
        }
        self.route = waypoints.to_vec();
        self.cursor = 0;
        self.reached = false;
        self.anchor = self.pose.position();
        Ok(())
    }

    pub fn step(&mut self, model: &VehicleModel, dt: f64) {
        if self.reached || self.route.is_empty() {
            self.speed = 0.0;
            return;
        }
        match model.kind {
            VehicleKind::Quad => self.step_quad(model, dt),
            VehicleKind::Car => self.step_car(model, dt),
        }
    }

    fn last(&self) -> usize {
        self.route.len() - 1
    }

    fn step_quad(&mut self, model: &VehicleModel, dt: f64) {
        let mut p = self.pose.position();
        while self.cursor < self.last() && p.dist(self.route[self.cursor]) <= model.eps_reach {
            self.cursor += 1;
        }
        let target = self.route[self.cursor];
        let to = target - p;
        let d = to.norm();
        let travel = (model.v_max * dt).min(d);
        if d > 0.0 {
            p = p + to * (travel / d);
        }
        self.speed = travel / dt;
        self.pose.x = p.x;
        self.pose.y = p.y;
        self.pose.z = p.z;
        if self.cursor == self.last() && p.dist(target) <= model.eps_reach {
            self.reached = true;
            self.speed = 0.0;
        }
    }

    fn segment_start(&self, i: usize) -> Vec3 {
        if i == 0 {
            self.anchor
        } else {
            self.route[i - 1]
        }
    }

    fn step_car(&mut self, model: &VehicleModel, dt: f64) {
        let p = self.pose.position();
        // Advance past intermediate waypoints that are close or already
        // passed along their segment.
        while self.cursor < self.last() {
            let (a, b) = (self.segment_start(self.cursor), self.route[self.cursor]);
            let ab = b - a;
            let len2 = ab.dot(ab);
            let passed = len2 > 0.0 && (p - a).dot(ab) / len2 >= 1.0;
            if p.dist(b) <= model.eps_reach || passed {
                self.cursor += 1;
            } else {
                break;
            }
        }
        let goal = self.route[self.last()];
        if self.cursor == self.last() && p.dist(goal) <= model.eps_reach {
            self.reached = true;
            self.speed = 0.0;
            return;
        }

        let (target, remaining) = self.pursuit_point(p, model.lookahead());
        let dx = target.x - p.x;
        let dy = target.y - p.y;
        let ld = dx.hypot(dy);
        let bearing = normalize_angle(dy.atan2(dx) - self.pose.yaw);

        let wanted = match self.gear {
            Gear::Forward if bearing.abs() > REVERSE_ABOVE => Gear::Reverse,
            Gear::Reverse if bearing.abs() < FORWARD_BELOW => Gear::Forward,
            g => g,
        };
        let v_target = if wanted != self.gear {
            // stop before changing direction
            0.0
        } else {
            model.v_max.min((2.0 * model.accel * remaining).sqrt())
        };
        let dv = model.accel * dt;
        self.speed = if self.speed < v_target { (self.speed + dv).min(v_target) } else { (self.speed - dv).max(v_target) };
        if wanted != self.gear && self.speed == 0.0 {
            self.gear = wanted;
        }

        let phi = if ld < 1e-9 {
            0.0
        } else {
            let raw = match self.gear {
                Gear::Forward => (2.0 * model.wheelbase * bearing.sin() / ld).atan(),
                Gear::Reverse => {
                    let rear = normalize_angle(bearing - PI);
                    -(2.0 * model.wheelbase * rear.sin() / ld).atan()
                }
            };
            raw.clamp(-model.steer_max, model.steer_max)
        };
        let v = match self.gear {
            Gear::Forward => self.speed,
            Gear::Reverse => -self.speed,
        };
        self.pose = bicycle_step(self.pose, v, phi, model.wheelbase, dt);
    }

    /// Point `lookahead` metres along the route past the projection of `p`
    /// onto the current segment, plus the route length remaining from that
    /// projection to the final waypoint.
    fn pursuit_point(&self, p: Vec3, lookahead: f64) -> (Vec3, f64) {
        let (a, b) = (self.segment_start(self.cursor), self.route[self.cursor]);
        let ab = b - a;
        let len = ab.norm();
        let t = if len > 0.0 { ((p - a).dot(ab) / (len * len)).clamp(0.0, 1.0) } else { 1.0 };
        let proj = a + ab * t;
        let mut remaining = proj.dist(b) + self.route[self.cursor..].windows(2).map(|w| w[0].dist(w[1])).sum::<f64>();
        // distance left to the final waypoint never undercuts the straight line
        remaining = remaining.max(p.dist(self.route[self.last()]));

        let mut left = lookahead;
        let mut from = proj;
        let mut i = self.cursor;
        loop {
            let to = self.route[i];
            let seg = from.dist(to);
            if seg >= left {
                return (from + (to - from) * (left / seg), remaining);
            }
            left -= seg;
            if i == self.last() {
                return (to, remaining);
            }
            from = to;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quad_climbs_one_step() {
        let m = VehicleModel::quad();
        let mut s = MotionState::new(Pose::new(0.0, 0.0, 0.0, 0.0));
        s.set_route(&m, &[Vec3::new(0.0, 0.0, 1.0)]).unwrap();
        assert!(!s.reached);
        assert_eq!(s.cursor, 0);
        s.step(&m, 0.1);
        assert!((s.pose.z - 0.1).abs() < 1e-12);
        assert_eq!((s.pose.x, s.pose.y), (0.0, 0.0));
    }

    #[test]
    fn straight_bicycle_step() {
        let p = bicycle_step(Pose::new(0.0, 0.0, 0.0, 0.0), 1.0, 0.0, 0.3, 0.1);
        assert!((p.x - 0.1).abs() < 1e-12);
        assert_eq!(p.yaw, 0.0);
    }

    #[test]
    fn car_rejects_aerial_waypoints() {
        let m = VehicleModel::car();
        let mut s = MotionState::new(Pose::new(0.0, 0.0, 0.0, 0.0));
        let err = s.set_route(&m, &[Vec3::new(1.0, 0.0, 0.0), Vec3::new(1.0, 1.0, 2.0)]).unwrap_err();
        assert_eq!(err, RouteError::NonPlanar { index: 1, z: 2.0 });
        assert!(s.reached);
    }

    #[test]
    fn fresh_state_reports_reached() {
        let s = MotionState::new(Pose::new(0.0, 0.0, 0.0, 0.0));
        assert_eq!(s.ports(), (Pose::new(0.0, 0.0, 0.0, 0.0), true));
    }

    #[test]
    fn degenerate_route_reaches_on_first_step() {
        for m in [VehicleModel::car(), VehicleModel::quad()] {
            let mut s = MotionState::new(Pose::new(1.0, 1.0, 0.0, 0.3));
            s.set_route(&m, &[Vec3::new(1.05, 1.0, 0.0)]).unwrap();
            assert!(!s.reached);
            s.step(&m, 0.01);
            assert!(s.reached, "{:?}", m.kind);
        }
    }

    #[test]
    fn angles_normalize_into_half_open_interval() {
        assert_eq!(normalize_angle(PI), PI);
        assert!((normalize_angle(-PI) - PI).abs() < 1e-12);
        assert!((normalize_angle(3.0 * PI) - PI).abs() < 1e-9);
        assert!((normalize_angle(0.5 - 4.0 * PI) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn model_validation() {
        assert!(VehicleModel::car().validate().is_ok());
        let bad = VehicleModel { steer_max: 2.0, ..VehicleModel::car() };
        assert_eq!(bad.validate(), Err(ModelError::Steer(2.0)));
    }
}
