//! Procedural meshes used by tests, benchmarks and the CLI demo paths.
//! All generators are deterministic; watertight shapes are oriented with
//! outward normals.

use crate::extract::marching_cubes_fn;
use crate::geom::{Point, Vec3};
use crate::mesh::TriangleMesh;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn build(vertices: Vec<Point>, faces: Vec<[u32; 3]>) -> TriangleMesh {
    TriangleMesh::from_parts(vertices, faces)
        .expect("procedural mesh is valid")
        .0
}

/// Axis-aligned box surface: 8 vertices, 12 triangles, outward normals.
pub fn box_mesh(min: Point, max: Point) -> TriangleMesh {
    let v = |x: u8, y: u8, z: u8| {
        Point::new(
            if x == 0 { min.x } else { max.x },
            if y == 0 { min.y } else { max.y },
            if z == 0 { min.z } else { max.z },
        )
    };
    let vertices = vec![
        v(0, 0, 0),
        v(1, 0, 0),
        v(0, 1, 0),
        v(1, 1, 0),
        v(0, 0, 1),
        v(1, 0, 1),
        v(0, 1, 1),
        v(1, 1, 1),
    ];
    let faces = vec![
        // z = 0 (normal -z)
        [0, 2, 1],
        [1, 2, 3],
        // z = 1 (+z)
        [4, 5, 6],
        [5, 7, 6],
        // y = 0 (-y)
        [0, 1, 4],
        [1, 5, 4],
        // y = 1 (+y)
        [2, 6, 3],
        [3, 6, 7],
        // x = 0 (-x)
        [0, 4, 2],
        [2, 4, 6],
        // x = 1 (+x)
        [1, 3, 5],
        [3, 7, 5],
    ];
    build(vertices, faces)
}

pub fn unit_cube() -> TriangleMesh {
    box_mesh(Point::new(0.0, 0.0, 0.0), Point::new(1.0, 1.0, 1.0))
}

/// Subdivided icosahedron projected onto the unit sphere.
/// `subdivisions = s` gives `20 * 4^s` faces.
pub fn icosphere(subdivisions: u32) -> TriangleMesh {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut vertices: Vec<Point> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z): &(f64, f64, f64)| {
        let n = (x * x + y * y + z * z).sqrt();
        Point::new(x / n, y / n, z / n)
    })
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoint: std::collections::HashMap<(u32, u32), u32> =
            std::collections::HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let mut mid = [0u32; 3];
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                mid[k] = *midpoint.entry(key).or_insert_with(|| {
                    let pa = vertices[a as usize];
                    let pb = vertices[b as usize];
                    let m = Vec3::new(pa.x + pb.x, pa.y + pb.y, pa.z + pb.z);
                    let m = m / m.norm();
                    vertices.push(Point::new(m.x, m.y, m.z));
                    (vertices.len() - 1) as u32
                });
            }
            next.push([f[0], mid[0], mid[2]]);
            next.push([f[1], mid[1], mid[0]]);
            next.push([f[2], mid[2], mid[1]]);
            next.push([mid[0], mid[1], mid[2]]);
        }
        faces = next;
    }
    build(vertices, faces)
}

/// Torus with major radius 1 and minor radius 0.4, `major x minor` segments
/// (`2 * major * minor` faces).
pub fn torus(major_segments: u32, minor_segments: u32) -> TriangleMesh {
    let (r_major, r_minor) = (1.0, 0.4);
    let mut vertices = Vec::with_capacity((major_segments * minor_segments) as usize);
    for i in 0..major_segments {
        let theta = 2.0 * std::f64::consts::PI * i as f64 / major_segments as f64;
        for j in 0..minor_segments {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / minor_segments as f64;
            let ring = r_major + r_minor * phi.cos();
            vertices.push(Point::new(
                ring * theta.cos(),
                ring * theta.sin(),
                r_minor * phi.sin(),
            ));
        }
    }
    let idx = |i: u32, j: u32| (i % major_segments) * minor_segments + (j % minor_segments);
    let mut faces = Vec::with_capacity((2 * major_segments * minor_segments) as usize);
    for i in 0..major_segments {
        for j in 0..minor_segments {
            let a = idx(i, j);
            let b = idx(i + 1, j);
            let c = idx(i + 1, j + 1);
            let d = idx(i, j + 1);
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    build(vertices, faces)
}

/// L-shaped prism with sharp features: a CAD-like watertight solid.
pub fn l_prism() -> TriangleMesh {
    // Counter-clockwise cross-section in the xy plane.
    let poly = [
        (0.0, 0.0),
        (2.0, 0.0),
        (2.0, 1.0),
        (1.0, 1.0),
        (1.0, 3.0),
        (0.0, 3.0),
    ];
    let (z0, z1) = (0.0, 1.0);
    let n = poly.len() as u32;
    let mut vertices = Vec::with_capacity(2 * poly.len());
    for &(x, y) in &poly {
        vertices.push(Point::new(x, y, z0));
    }
    for &(x, y) in &poly {
        vertices.push(Point::new(x, y, z1));
    }
    let mut faces = Vec::new();
    // Caps: fan from vertex 0 (valid for this L shape).
    for k in 1..poly.len() as u32 - 1 {
        faces.push([0, k + 1, k]); // bottom, normal -z
        faces.push([n, n + k, n + k + 1]); // top, +z
    }
    // Walls, outward for a CCW cross-section.
    for k in 0..n {
        let a = k;
        let b = (k + 1) % n;
        faces.push([a, b, n + b]);
        faces.push([a, n + b, n + a]);
    }
    build(vertices, faces)
}

/// Flat `n x n` grid of the unit square at `z = 0` (open mesh).
pub fn grid_square(n: u32) -> TriangleMesh {
    let mut vertices = Vec::with_capacity(((n + 1) * (n + 1)) as usize);
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Point::new(i as f64 / n as f64, j as f64 / n as f64, 0.0));
        }
    }
    let idx = |i: u32, j: u32| j * (n + 1) + i;
    let mut faces = Vec::with_capacity((2 * n * n) as usize);
    for j in 0..n {
        for i in 0..n {
            faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            faces.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    build(vertices, faces)
}

/// Smooth genus-0 "rock": an icosphere displaced radially by layered
/// sinusoidal detail, so fine features persist below coarse voxel sizes.
pub fn noisy_sphere(subdivisions: u32, octaves: &[(f64, f64)]) -> TriangleMesh {
    let base = icosphere(subdivisions);
    let vertices: Vec<Point> = base
        .vertices()
        .iter()
        .map(|p| {
            let d = p.coords.normalize();
            let mut r = 1.0;
            for &(freq, amp) in octaves {
                r += amp
                    * (freq * d.x + 1.3).sin()
                    * (freq * d.y + 2.1).sin()
                    * (freq * d.z + 0.7).sin();
            }
            Point::new(d.x * r, d.y * r, d.z * r)
        })
        .collect();
    build(vertices, base.faces().to_vec())
}

/// Watertight genus-2 solid: the union of two overlapping tori, extracted
/// with marching cubes.
pub fn genus2(resolution: u32) -> TriangleMesh {
    let torus_sdf = |p: &Point, cx: f64| {
        let (x, y, z) = (p.x - cx, p.y, p.z);
        let q = ((x * x + y * y).sqrt() - 0.5, z);
        (q.0 * q.0 + q.1 * q.1).sqrt() - 0.22
    };
    let f = |p: &Point| torus_sdf(p, -0.45).min(torus_sdf(p, 0.45));
    let out = marching_cubes_fn(
        f,
        0.0,
        resolution,
        Point::new(-1.4, -1.0, -0.5),
        Point::new(1.4, 1.0, 0.5),
    );
    out.to_mesh().expect("genus-2 extraction is non-empty")
}

/// A defective triangle soup for unsigned-distance tests: an icosphere with
/// randomly flipped faces and a fraction of faces detached (shifted off the
/// surface), leaving overlaps and gaps.
pub fn soup(subdivisions: u32, detach_fraction: f64, seed: u64) -> TriangleMesh {
    let base = icosphere(subdivisions);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for fi in 0..base.faces().len() {
        let mut tri = base.face_points(fi);
        if rng.gen::<f64>() < detach_fraction {
            let dir = Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let offset = dir * 0.05;
            for p in tri.iter_mut() {
                *p += offset;
            }
        }
        let flip = rng.gen::<bool>();
        let start = vertices.len() as u32;
        vertices.extend_from_slice(&tri);
        if flip {
            faces.push([start, start + 2, start + 1]);
        } else {
            faces.push([start, start + 1, start + 2]);
        }
    }
    build(vertices, faces)
}
