//! Triangle meshes, unit-box normalization, and the exact distance /
//! winding oracle used both for the interpolation right-hand side and as
//! the query fallback.

mod bvh;
mod io;

pub use io::{load_mesh, write_obj, LoadReport};

use crate::geom::{triangle_area, triangle_area_vector, triangle_solid_angle, Aabb, Point, Vec3};
use crate::{Error, Result};
use bvh::Bvh;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Whether the field approximates a signed or an unsigned distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMode {
    /// Negative inside, positive outside (closed, orientable input).
    Signed,
    /// Nonnegative everywhere (triangle soups, open meshes).
    Unsigned,
}

/// Uniform scale-and-translate map from model coordinates into the unit box.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct UnitTransform {
    pub scale: f64,
    pub translate: [f64; 3],
}

impl UnitTransform {
    pub const IDENTITY: UnitTransform = UnitTransform {
        scale: 1.0,
        translate: [0.0; 3],
    };

    #[inline]
    pub fn to_unit(&self, p: &Point) -> Point {
        Point::new(
            self.scale * p.x + self.translate[0],
            self.scale * p.y + self.translate[1],
            self.scale * p.z + self.translate[2],
        )
    }

    #[inline]
    pub fn to_model(&self, p: &Point) -> Point {
        Point::new(
            (p.x - self.translate[0]) / self.scale,
            (p.y - self.translate[1]) / self.scale,
            (p.z - self.translate[2]) / self.scale,
        )
    }
}

/// A point drawn on the mesh surface.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceSample {
    pub face: u32,
    /// `(alpha, beta)` with position `alpha*v1 + beta*v2 + (1-alpha-beta)*v3`.
    pub barycentric: (f64, f64),
    pub position: Point,
}

/// An indexed triangle surface with a BVH for distance and winding queries.
///
/// Immutable after construction; all queries are `&self` and safe to call
/// from multiple threads.
pub struct TriangleMesh {
    vertices: Vec<Point>,
    faces: Vec<[u32; 3]>,
    bvh: Bvh,
}

impl TriangleMesh {
    /// Build a mesh from raw arrays, dropping zero-area faces.
    ///
    /// Returns the original indices of the dropped faces alongside the mesh.
    pub fn from_parts(
        vertices: Vec<Point>,
        faces: Vec<[u32; 3]>,
    ) -> Result<(TriangleMesh, Vec<usize>)> {
        if vertices.is_empty() {
            return Err(Error::Mesh("empty mesh: no vertices".into()));
        }
        for v in &vertices {
            if !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()) {
                return Err(Error::Mesh("non-finite vertex coordinate".into()));
            }
        }
        let n = vertices.len() as u32;
        let mut kept = Vec::with_capacity(faces.len());
        let mut dropped = Vec::new();
        for (i, f) in faces.iter().enumerate() {
            if f.iter().any(|&ix| ix >= n) {
                return Err(Error::Mesh(format!(
                    "face {i} references vertex {} out of {n}",
                    f.iter().max().unwrap()
                )));
            }
            let area = triangle_area(
                &vertices[f[0] as usize],
                &vertices[f[1] as usize],
                &vertices[f[2] as usize],
            );
            if area > 0.0 {
                kept.push(*f);
            } else {
                dropped.push(i);
            }
        }
        if kept.is_empty() {
            return Err(Error::Mesh("empty mesh: no faces with positive area".into()));
        }
        let bvh = Bvh::build(&vertices, &kept);
        Ok((
            TriangleMesh {
                vertices,
                faces: kept,
                bvh,
            },
            dropped,
        ))
    }

    #[inline]
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    #[inline]
    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    #[inline]
    pub fn face_points(&self, face: usize) -> [Point; 3] {
        let f = self.faces[face];
        [
            self.vertices[f[0] as usize],
            self.vertices[f[1] as usize],
            self.vertices[f[2] as usize],
        ]
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter())
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.face_points(face);
        triangle_area(&a, &b, &c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|i| self.face_area(i)).sum()
    }

    /// Rescale into the unit box: the longest bounding-box axis maps to
    /// length `1 - 2*margin` and the model is centered in `[0,1]^3`.
    pub fn normalize_to_unit(&self, margin: f64) -> Result<(TriangleMesh, UnitTransform)> {
        if !(0.0..0.25).contains(&margin) {
            return Err(Error::Mesh(format!("margin {margin} outside [0, 0.25)")));
        }
        let bb = self.aabb();
        let ext = bb.extents();
        let longest = ext.x.max(ext.y).max(ext.z);
        if !(longest > 0.0) {
            return Err(Error::Mesh("degenerate bounding box (zero extent)".into()));
        }
        let scale = (1.0 - 2.0 * margin) / longest;
        let c = bb.center();
        let translate = [
            0.5 - scale * c.x,
            0.5 - scale * c.y,
            0.5 - scale * c.z,
        ];
        let transform = UnitTransform { scale, translate };
        let vertices = self.vertices.iter().map(|p| transform.to_unit(p)).collect();
        let (mesh, _) = TriangleMesh::from_parts(vertices, self.faces.clone())?;
        Ok((mesh, transform))
    }

    /// Exact generalized winding number: `(1/4pi)` times the total signed
    /// solid angle of all faces at `p`. The correctness reference for the
    /// BVH-accelerated variant.
    pub fn winding_number(&self, p: &Point) -> f64 {
        let mut total = 0.0;
        for f in &self.faces {
            total += triangle_solid_angle(
                p,
                &self.vertices[f[0] as usize],
                &self.vertices[f[1] as usize],
                &self.vertices[f[2] as usize],
            );
        }
        total / (4.0 * std::f64::consts::PI)
    }

    /// Winding number with a BVH dipole far-field approximation; exact
    /// per-triangle solid angles in the near field.
    #[inline]
    pub fn fast_winding_number(&self, p: &Point) -> f64 {
        self.bvh.fast_winding(&self.vertices, &self.faces, p)
    }

    /// Distance to the surface and the attaining point.
    #[inline]
    pub fn closest_point(&self, p: &Point) -> (f64, Point) {
        let (d2, cp, _) = self.bvh.closest_point(&self.vertices, &self.faces, p);
        (d2.sqrt(), cp)
    }

    /// Signed (negative inside) or unsigned distance from `p` to the surface.
    #[inline]
    pub fn signed_distance(&self, p: &Point, mode: DistanceMode) -> f64 {
        let (d, _) = self.closest_point(p);
        match mode {
            DistanceMode::Unsigned => d,
            DistanceMode::Signed => {
                if self.fast_winding_number(p) > 0.5 {
                    -d
                } else {
                    d
                }
            }
        }
    }

    /// Draw `n` points with face probability proportional to area and the
    /// barycentric pair uniform over each triangle. Deterministic in `seed`.
    pub fn sample_surface(&self, n: usize, seed: u64) -> Vec<SurfaceSample> {
        let mut cdf = Vec::with_capacity(self.faces.len());
        let mut acc = 0.0;
        for i in 0..self.faces.len() {
            acc += self.face_area(i);
            cdf.push(acc);
        }
        let total = acc;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let t = rng.gen::<f64>() * total;
            let face = match cdf.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
                Ok(i) => i,
                Err(i) => i.min(self.faces.len() - 1),
            };
            let (r1, r2) = (rng.gen::<f64>(), rng.gen::<f64>());
            let s = r1.sqrt();
            let alpha = 1.0 - s;
            let beta = s * (1.0 - r2);
            let [a, b, c] = self.face_points(face);
            let gamma = 1.0 - alpha - beta;
            let position = Point::new(
                alpha * a.x + beta * b.x + gamma * c.x,
                alpha * a.y + beta * b.y + gamma * c.y,
                alpha * a.z + beta * b.z + gamma * c.z,
            );
            out.push(SurfaceSample {
                face: face as u32,
                barycentric: (alpha, beta),
                position,
            });
        }
        out
    }

    /// Face normal scaled to twice the face area.
    #[inline]
    pub fn face_area_vector(&self, face: usize) -> Vec3 {
        let [a, b, c] = self.face_points(face);
        triangle_area_vector(&a, &b, &c)
    }
}
