//! Small geometric primitives shared across the crate.

use nalgebra::{Point3, Vector3};

pub type Point = Point3<f64>;
pub type Vec3 = Vector3<f64>;

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        min: Point::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
        max: Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
    };

    #[inline]
    pub fn grow_point(&mut self, p: &Point) {
        for a in 0..3 {
            self.min[a] = self.min[a].min(p[a]);
            self.max[a] = self.max[a].max(p[a]);
        }
    }

    #[inline]
    pub fn grow(&mut self, other: &Aabb) {
        for a in 0..3 {
            self.min[a] = self.min[a].min(other.min[a]);
            self.max[a] = self.max[a].max(other.max[a]);
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point>) -> Aabb {
        let mut b = Aabb::EMPTY;
        for p in points {
            b.grow_point(p);
        }
        b
    }

    #[inline]
    pub fn center(&self) -> Point {
        Point::new(
            0.5 * (self.min.x + self.max.x),
            0.5 * (self.min.y + self.max.y),
            0.5 * (self.min.z + self.max.z),
        )
    }

    #[inline]
    pub fn extents(&self) -> Vec3 {
        self.max - self.min
    }

    #[inline]
    pub fn contains(&self, p: &Point) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }

    /// Squared distance from `p` to this box (0 inside).
    #[inline]
    pub fn distance_sq(&self, p: &Point) -> f64 {
        let mut d = 0.0;
        for a in 0..3 {
            let v = if p[a] < self.min[a] {
                self.min[a] - p[a]
            } else if p[a] > self.max[a] {
                p[a] - self.max[a]
            } else {
                0.0
            };
            d += v * v;
        }
        d
    }
}

/// Twice the area vector of a triangle (normal scaled by 2·area).
#[inline]
pub fn triangle_area_vector(a: &Point, b: &Point, c: &Point) -> Vec3 {
    (b - a).cross(&(c - a))
}

#[inline]
pub fn triangle_area(a: &Point, b: &Point, c: &Point) -> f64 {
    0.5 * triangle_area_vector(a, b, c).norm()
}

/// Closest point on triangle `abc` to `p` (Ericson, Real-Time Collision
/// Detection §5.1.5). Exact up to floating precision, no degeneracy
/// assumptions beyond nonzero area.
pub fn closest_point_on_triangle(p: &Point, a: &Point, b: &Point, c: &Point) -> Point {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;

    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }

    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }

    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }

    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

/// Signed solid angle subtended by triangle `abc` at `p`
/// (Van Oosterom–Strackee).
#[inline]
pub fn triangle_solid_angle(p: &Point, a: &Point, b: &Point, c: &Point) -> f64 {
    let ra = a - p;
    let rb = b - p;
    let rc = c - p;
    let la = ra.norm();
    let lb = rb.norm();
    let lc = rc.norm();
    let num = ra.dot(&rb.cross(&rc));
    let den = la * lb * lc + ra.dot(&rb) * lc + rb.dot(&rc) * la + rc.dot(&ra) * lb;
    2.0 * num.atan2(den)
}

/// Conservative triangle–box overlap via the separating-axis test
/// (Akenine-Möller). Touching configurations count as overlap: every axis
/// projection is compared with a small epsilon so boundary contact never
/// separates.
pub fn triangle_box_overlap(center: &Point, half: &Vec3, tri: &[Point; 3]) -> bool {
    const EPS: f64 = 1e-12;

    let v0 = tri[0] - center;
    let v1 = tri[1] - center;
    let v2 = tri[2] - center;

    // Box face normals.
    for a in 0..3 {
        let lo = v0[a].min(v1[a]).min(v2[a]);
        let hi = v0[a].max(v1[a]).max(v2[a]);
        if lo > half[a] + EPS || hi < -half[a] - EPS {
            return false;
        }
    }

    let e0 = v1 - v0;
    let e1 = v2 - v1;
    let e2 = v0 - v2;

    // Triangle normal.
    let n = e0.cross(&e1);
    let d = n.dot(&v0);
    let r = half.x * n.x.abs() + half.y * n.y.abs() + half.z * n.z.abs();
    if d.abs() > r + EPS {
        return false;
    }

    // Nine edge cross products: axis = e_i x unit_axis.
    let axes = |e: &Vec3| {
        [
            Vec3::new(0.0, -e.z, e.y),
            Vec3::new(e.z, 0.0, -e.x),
            Vec3::new(-e.y, e.x, 0.0),
        ]
    };
    for e in [&e0, &e1, &e2] {
        for ax in axes(e) {
            let p0 = ax.dot(&v0);
            let p1 = ax.dot(&v1);
            let p2 = ax.dot(&v2);
            let lo = p0.min(p1).min(p2);
            let hi = p0.max(p1).max(p2);
            let r = half.x * ax.x.abs() + half.y * ax.y.abs() + half.z * ax.z.abs();
            if lo > r + EPS || hi < -r - EPS {
                return false;
            }
        }
    }

    true
}
