//! Distances between points, segments, polylines and boxes.

use koord::Vec3;

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    pub fn is_valid(&self) -> bool {
        self.min.is_finite() && self.max.is_finite() && self.min.x <= self.max.x && self.min.y <= self.max.y && self.min.z <= self.max.z
    }

    pub fn contains(&self, p: Vec3) -> bool {
        (self.min.x..=self.max.x).contains(&p.x) && (self.min.y..=self.max.y).contains(&p.y) && (self.min.z..=self.max.z).contains(&p.z)
    }

    pub fn contains_box(&self, o: &Aabb) -> bool {
        self.contains(o.min) && self.contains(o.max)
    }

    pub fn inflate(&self, r: f64) -> Aabb {
        let d = Vec3::new(r, r, r);
        Aabb { min: self.min - d, max: self.max + d }
    }

    pub fn size(&self) -> Vec3 {
        self.max - self.min
    }

    /// Exact segment/box overlap test (slab method).
    pub fn intersects_segment(&self, a: Vec3, b: Vec3) -> bool {
        let d = b - a;
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for (o, dir, lo, hi) in [
            (a.x, d.x, self.min.x, self.max.x),
            (a.y, d.y, self.min.y, self.max.y),
            (a.z, d.z, self.min.z, self.max.z),
        ] {
            if dir.abs() < 1e-15 {
                if o < lo || o > hi {
                    return false;
                }
            } else {
                let (mut ta, mut tb) = ((lo - o) / dir, (hi - o) / dir);
                if ta > tb {
                    std::mem::swap(&mut ta, &mut tb);
                }
                t0 = t0.max(ta);
                t1 = t1.min(tb);
                if t0 > t1 {
                    return false;
                }
            }
        }
        true
    }
}

pub fn point_segment_distance(p: Vec3, a: Vec3, b: Vec3) -> f64 {
    let d = b - a;
    let len2 = d.dot(d);
    if len2 < 1e-18 {
        return p.dist(a);
    }
    let t = ((p - a).dot(d) / len2).clamp(0.0, 1.0);
    p.dist(a + d * t)
}

/// Minimum distance between segments `p1q1` and `p2q2`, via the closest
/// points of the two supporting lines clamped to the segments.
pub fn segment_distance(p1: Vec3, q1: Vec3, p2: Vec3, q2: Vec3) -> f64 {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.dot(d1);
    let e = d2.dot(d2);
    let f = d2.dot(r);
    const EPS: f64 = 1e-18;
    let (s, t) = if a <= EPS && e <= EPS {
        (0.0, 0.0)
    } else if a <= EPS {
        (0.0, (f / e).clamp(0.0, 1.0))
    } else {
        let c = d1.dot(r);
        if e <= EPS {
            ((-c / a).clamp(0.0, 1.0), 0.0)
        } else {
            let b = d1.dot(d2);
            let denom = a * e - b * b;
            let mut s = if denom > EPS { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t = (b * s + f) / e;
            if t < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            }
            (s, t)
        }
    };
    (p1 + d1 * s).dist(p2 + d2 * t)
}

/// Segments of a polyline; a single point is a degenerate segment.
pub fn segments(path: &[Vec3]) -> impl Iterator<Item = (Vec3, Vec3)> + '_ {
    let single = (path.len() == 1).then(|| (path[0], path[0]));
    single.into_iter().chain(path.windows(2).map(|w| (w[0], w[1])))
}

/// Minimum distance between two polylines (infinite if either is empty).
pub fn polyline_distance(a: &[Vec3], b: &[Vec3]) -> f64 {
    let mut best = f64::INFINITY;
    for (p, q) in segments(a) {
        for (r, s) in segments(b) {
            best = best.min(segment_distance(p, q, r, s));
        }
    }
    best
}

pub fn segment_polyline_distance(p: Vec3, q: Vec3, path: &[Vec3]) -> f64 {
    segments(path).map(|(r, s)| segment_distance(p, q, r, s)).fold(f64::INFINITY, f64::min)
}

pub fn path_length(path: &[Vec3]) -> f64 {
    path.windows(2).map(|w| w[0].dist(w[1])).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    #[test]
    fn parallel_and_crossing_segments() {
        assert!((segment_distance(v(0., 0., 0.), v(1., 0., 0.), v(0., 1., 0.), v(1., 1., 0.)) - 1.0).abs() < 1e-12);
        assert!(segment_distance(v(0., 0., 0.), v(1., 1., 0.), v(0., 1., 0.), v(1., 0., 0.)) < 1e-12);
        // skew lines one above the other
        assert!((segment_distance(v(-1., 0., 0.), v(1., 0., 0.), v(0., -1., 2.), v(0., 1., 2.)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_segments() {
        assert!((segment_distance(v(0., 0., 0.), v(0., 0., 0.), v(3., 4., 0.), v(3., 4., 0.)) - 5.0).abs() < 1e-12);
        assert!((segment_distance(v(0., 2., 0.), v(0., 2., 0.), v(-1., 0., 0.), v(1., 0., 0.)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn box_segment_overlap() {
        let b = Aabb::new(v(0., 0., 0.), v(1., 1., 1.));
        assert!(b.intersects_segment(v(-1., 0.5, 0.5), v(2., 0.5, 0.5)));
        assert!(!b.intersects_segment(v(-1., 1.5, 0.5), v(2., 1.5, 0.5)));
        assert!(b.intersects_segment(v(0.5, 0.5, 0.5), v(0.5, 0.5, 0.5)));
        assert!(!b.intersects_segment(v(1.5, 0.0, 0.0), v(3.0, -1.0, 0.0)));
    }

    #[test]
    fn single_point_polyline() {
        let d = polyline_distance(&[v(0., 0., 0.)], &[v(2., -1., 0.), v(2., 1., 0.)]);
        assert!((d - 2.0).abs() < 1e-12);
        assert_eq!(polyline_distance(&[], &[v(0., 0., 0.)]), f64::INFINITY);
    }
}
