//! Bounding-volume hierarchy over mesh faces.
//!
//! Serves two query kinds: exact closest point on the surface, and the
//! far-field dipole approximation of the generalized winding number
//! (Barill et al. style: a node far enough away is replaced by its
//! area-weighted normal dipole).

use crate::geom::{closest_point_on_triangle, triangle_solid_angle, Aabb, Point, Vec3};

const LEAF_SIZE: usize = 4;
/// Far-field acceptance: the query must be this many node radii away.
const WINDING_BETA: f64 = 2.0;

struct Node {
    aabb: Aabb,
    /// Leaf: `[start, end)` into `tri_order`; inner: children `start` and
    /// `start + 1` are never used, so `end == 0` marks an inner node whose
    /// children are `left` and `left + right_offset`.
    start: u32,
    end: u32,
    left: u32,
    right: u32,
    /// Area-weighted normal sum over the subtree (dipole strength).
    dipole: Vec3,
    /// Area-weighted centroid of the subtree.
    centroid: Point,
    /// Max distance from `centroid` to any subtree triangle vertex.
    radius: f64,
}

pub struct Bvh {
    nodes: Vec<Node>,
    tri_order: Vec<u32>,
}

impl Bvh {
    pub fn build(vertices: &[Point], faces: &[[u32; 3]]) -> Bvh {
        let mut tri_order: Vec<u32> = (0..faces.len() as u32).collect();
        let centroids: Vec<Point> = faces
            .iter()
            .map(|f| {
                let a = vertices[f[0] as usize];
                let b = vertices[f[1] as usize];
                let c = vertices[f[2] as usize];
                Point::new(
                    (a.x + b.x + c.x) / 3.0,
                    (a.y + b.y + c.y) / 3.0,
                    (a.z + b.z + c.z) / 3.0,
                )
            })
            .collect();
        let mut bvh = Bvh {
            nodes: Vec::with_capacity(2 * faces.len() / LEAF_SIZE.max(1) + 1),
            tri_order: Vec::new(),
        };
        let n = faces.len();
        bvh.build_rec(vertices, faces, &centroids, &mut tri_order, 0, n);
        bvh.tri_order = tri_order;
        bvh
    }

    fn build_rec(
        &mut self,
        vertices: &[Point],
        faces: &[[u32; 3]],
        centroids: &[Point],
        order: &mut [u32],
        lo: usize,
        hi: usize,
    ) -> u32 {
        let mut aabb = Aabb::EMPTY;
        let mut dipole = Vec3::zeros();
        let mut weighted = Vec3::zeros();
        let mut total_area = 0.0;
        for &t in &order[lo..hi] {
            let f = faces[t as usize];
            let a = vertices[f[0] as usize];
            let b = vertices[f[1] as usize];
            let c = vertices[f[2] as usize];
            aabb.grow_point(&a);
            aabb.grow_point(&b);
            aabb.grow_point(&c);
            let av = (b - a).cross(&(c - a));
            dipole += av * 0.5;
            let area = 0.5 * av.norm();
            total_area += area;
            weighted += Vec3::new(
                (a.x + b.x + c.x) / 3.0,
                (a.y + b.y + c.y) / 3.0,
                (a.z + b.z + c.z) / 3.0,
            ) * area;
        }
        let centroid = if total_area > 0.0 {
            Point::from(weighted / total_area)
        } else {
            aabb.center()
        };
        let mut radius: f64 = 0.0;
        for &t in &order[lo..hi] {
            let f = faces[t as usize];
            for &vi in &f {
                radius = radius.max((vertices[vi as usize] - centroid).norm());
            }
        }

        let idx = self.nodes.len() as u32;
        self.nodes.push(Node {
            aabb,
            start: lo as u32,
            end: hi as u32,
            left: 0,
            right: 0,
            dipole,
            centroid,
            radius,
        });

        if hi - lo > LEAF_SIZE {
            let ext = aabb.extents();
            let axis = if ext.x >= ext.y && ext.x >= ext.z {
                0
            } else if ext.y >= ext.z {
                1
            } else {
                2
            };
            let mid = (lo + hi) / 2;
            order[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
                centroids[a as usize][axis]
                    .partial_cmp(&centroids[b as usize][axis])
                    .unwrap()
                    .then(a.cmp(&b))
            });
            let left = self.build_rec(vertices, faces, centroids, order, lo, mid);
            let right = self.build_rec(vertices, faces, centroids, order, mid, hi);
            let node = &mut self.nodes[idx as usize];
            node.end = 0; // inner marker
            node.left = left;
            node.right = right;
        }
        idx
    }

    /// Squared distance, closest point, and face id.
    pub fn closest_point(
        &self,
        vertices: &[Point],
        faces: &[[u32; 3]],
        p: &Point,
    ) -> (f64, Point, u32) {
        let mut best = (f64::INFINITY, *p, u32::MAX);
        self.closest_rec(vertices, faces, p, 0, &mut best);
        best
    }

    fn closest_rec(
        &self,
        vertices: &[Point],
        faces: &[[u32; 3]],
        p: &Point,
        node: u32,
        best: &mut (f64, Point, u32),
    ) {
        let n = &self.nodes[node as usize];
        if n.aabb.distance_sq(p) >= best.0 {
            return;
        }
        if n.end != 0 {
            for &t in &self.tri_order[n.start as usize..n.end as usize] {
                let f = faces[t as usize];
                let q = closest_point_on_triangle(
                    p,
                    &vertices[f[0] as usize],
                    &vertices[f[1] as usize],
                    &vertices[f[2] as usize],
                );
                let d2 = (q - p).norm_squared();
                if d2 < best.0 {
                    *best = (d2, q, t);
                }
            }
        } else {
            let dl = self.nodes[n.left as usize].aabb.distance_sq(p);
            let dr = self.nodes[n.right as usize].aabb.distance_sq(p);
            let (first, second) = if dl <= dr {
                (n.left, n.right)
            } else {
                (n.right, n.left)
            };
            self.closest_rec(vertices, faces, p, first, best);
            self.closest_rec(vertices, faces, p, second, best);
        }
    }

    pub fn fast_winding(&self, vertices: &[Point], faces: &[[u32; 3]], p: &Point) -> f64 {
        self.winding_rec(vertices, faces, p, 0) / (4.0 * std::f64::consts::PI)
    }

    fn winding_rec(&self, vertices: &[Point], faces: &[[u32; 3]], p: &Point, node: u32) -> f64 {
        let n = &self.nodes[node as usize];
        let r = p - n.centroid;
        let dist = r.norm();
        if dist > WINDING_BETA * n.radius {
            // Dipole far field: solid angle of the aggregated oriented area.
            return -n.dipole.dot(&r) / (dist * dist * dist);
        }
        if n.end != 0 {
            let mut acc = 0.0;
            for &t in &self.tri_order[n.start as usize..n.end as usize] {
                let f = faces[t as usize];
                acc += triangle_solid_angle(
                    p,
                    &vertices[f[0] as usize],
                    &vertices[f[1] as usize],
                    &vertices[f[2] as usize],
                );
            }
            acc
        } else {
            self.winding_rec(vertices, faces, p, n.left)
                + self.winding_rec(vertices, faces, p, n.right)
        }
    }

    /// Check that every leaf box contains its triangles (used by tests).
    #[cfg(test)]
    pub fn leaves_contain_triangles(&self, vertices: &[Point], faces: &[[u32; 3]]) -> bool {
        self.nodes.iter().filter(|n| n.end != 0).all(|n| {
            self.tri_order[n.start as usize..n.end as usize]
                .iter()
                .all(|&t| {
                    faces[t as usize]
                        .iter()
                        .all(|&vi| n.aabb.contains(&vertices[vi as usize]))
                })
        })
    }
}
