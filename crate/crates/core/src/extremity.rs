//! Extremity detection: enumerate the finite candidate set where the field
//! can attain its extremes over the mesh, and reduce it to the shell
//! interval `(eps1, eps2)`.
//!
//! Within one depth-0 cell the field is trilinear, so its restriction to a
//! triangle `v = alpha*v1 + beta*v2 + (1-alpha-beta)*v3` is a bivariate
//! cubic `H(alpha, beta)`. The candidates are the interior critical points
//! of `H` (a quartic after eliminating `alpha` from the quadratic gradient
//! system), the critical points of the cubic edge restrictions, and the
//! sub-triangle vertices. Triangles crossing grid planes are first clipped
//! into per-cell sub-triangles.

use crate::field::ImplicitField;
use crate::geom::{triangle_area, Point};
use crate::hash::MortonMap;
use crate::mesh::TriangleMesh;
use crate::quartic::{solve_quadratic, solve_quartic};
use crate::svo::{morton_interleave, SparseVoxelOctree};
use rayon::prelude::*;

/// Simplex membership tolerance for reported barycentric pairs.
const SIMPLEX_TOL: f64 = 1e-10;
/// Candidates closer than this in (alpha, beta) are merged.
const DEDUP_TOL: f64 = 1e-9;
/// Sub-triangles below this area contribute vertex candidates only.
const SLIVER_AREA: f64 = 1e-16;
/// Degeneracy threshold for the closed-form elimination.
const DEGENERACY_EPS: f64 = 1e-12;

/// The rigorously computed extreme values of the field over the surface.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ShellInterval {
    /// Minimum of the field over the candidate set.
    pub eps1: f64,
    /// Maximum of the field over the candidate set.
    pub eps2: f64,
}

impl ShellInterval {
    pub fn new(eps1: f64, eps2: f64) -> ShellInterval {
        ShellInterval { eps1, eps2 }
    }

    #[inline]
    pub fn thickness(&self) -> f64 {
        self.eps2 - self.eps1
    }

    #[inline]
    pub fn contains(&self, value: f64) -> bool {
        value >= self.eps1 && value <= self.eps2
    }

    /// Whether both extremes carry the same sign (flagged, not clamped: a
    /// coarse fit can in principle stay one-sided).
    pub fn same_signed(&self) -> bool {
        self.eps1.signum() == self.eps2.signum() && self.eps1 != 0.0 && self.eps2 != 0.0
    }

    /// The unsigned-mode interval `[0, max(|eps1|, |eps2|)]` used for
    /// open meshes and soups.
    pub fn udf_interval(&self) -> (f64, f64) {
        (0.0, self.eps1.abs().max(self.eps2.abs()))
    }
}

/// Where a candidate sits on its sub-triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateKind {
    Interior,
    Edge,
    Vertex,
}

/// A surface point at which the field may attain its extreme over the mesh.
#[derive(Debug, Clone, Copy)]
pub struct CandidatePoint {
    pub face: u32,
    pub sub_tri: u32,
    /// `(alpha, beta)` with `v = alpha*v1 + beta*v2 + (1-alpha-beta)*v3`
    /// on the sub-triangle.
    pub barycentric: (f64, f64),
    pub position: Point,
    pub kind: CandidateKind,
    pub value: f64,
}

/// Candidate counts from a shell computation.
#[derive(Debug, Clone, Copy, Default, serde::Serialize)]
pub struct ExtremityStats {
    pub sub_triangles: usize,
    pub interior_candidates: usize,
    pub edge_candidates: usize,
    pub vertex_candidates: usize,
    /// Sub-triangles routed to the Newton-grid fallback.
    pub fallback_sub_triangles: usize,
}

impl ExtremityStats {
    fn merge(mut self, other: ExtremityStats) -> ExtremityStats {
        self.sub_triangles += other.sub_triangles;
        self.interior_candidates += other.interior_candidates;
        self.edge_candidates += other.edge_candidates;
        self.vertex_candidates += other.vertex_candidates;
        self.fallback_sub_triangles += other.fallback_sub_triangles;
        self
    }
}

// ---------------------------------------------------------------------------
// Bivariate polynomials up to total degree 3 in (alpha, beta).
//
// Flat coefficient order by total degree: 1; a, b; a2, ab, b2; a3, a2b, ab2,
// b3.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Default)]
struct Poly2 {
    c: [f64; 10],
}

#[inline]
fn p2_index(i: usize, j: usize) -> usize {
    let d = i + j;
    d * (d + 1) / 2 + j
}

impl Poly2 {
    fn linear(c0: f64, ca: f64, cb: f64) -> Poly2 {
        let mut p = Poly2::default();
        p.c[0] = c0;
        p.c[1] = ca;
        p.c[2] = cb;
        p
    }

    fn add_scaled(&mut self, other: &Poly2, s: f64) {
        for (a, b) in self.c.iter_mut().zip(other.c.iter()) {
            *a += s * b;
        }
    }

    /// Product with a linear polynomial; the result must stay within
    /// total degree 3.
    fn mul_linear(&self, l: &Poly2) -> Poly2 {
        let mut out = Poly2::default();
        for d in 0..=2usize {
            for j in 0..=d {
                let i = d - j;
                let v = self.c[p2_index(i, j)];
                if v == 0.0 {
                    continue;
                }
                out.c[p2_index(i, j)] += v * l.c[0];
                out.c[p2_index(i + 1, j)] += v * l.c[1];
                out.c[p2_index(i, j + 1)] += v * l.c[2];
            }
        }
        debug_assert!(
            (0..=3usize).all(|j| self.c[p2_index(3 - j, j)] == 0.0),
            "mul_linear would exceed degree 3"
        );
        out
    }

    /// Coefficients of d/d alpha as a quadratic
    /// `[a1 a^2, a2 b^2, a3 ab, a4 a, a5 b, a6]`.
    fn grad_alpha(&self) -> [f64; 6] {
        [
            3.0 * self.c[p2_index(3, 0)],
            self.c[p2_index(1, 2)],
            2.0 * self.c[p2_index(2, 1)],
            2.0 * self.c[p2_index(2, 0)],
            self.c[p2_index(1, 1)],
            self.c[p2_index(1, 0)],
        ]
    }

    fn grad_beta(&self) -> [f64; 6] {
        [
            self.c[p2_index(2, 1)],
            3.0 * self.c[p2_index(0, 3)],
            2.0 * self.c[p2_index(1, 2)],
            self.c[p2_index(1, 1)],
            2.0 * self.c[p2_index(0, 2)],
            self.c[p2_index(0, 1)],
        ]
    }
}

#[inline]
fn quad_eval(q: &[f64; 6], a: f64, b: f64) -> f64 {
    q[0] * a * a + q[1] * b * b + q[2] * a * b + q[3] * a + q[4] * b + q[5]
}

/// Build `H(alpha, beta)`: the trilinear cell form restricted to a triangle
/// given in cell-local coordinates.
fn restrict_to_triangle(t: &[f64; 8], tri_local: &[Point; 3]) -> Poly2 {
    let [v1, v2, v3] = tri_local;
    let lin = |axis: usize| {
        Poly2::linear(
            v3[axis],
            v1[axis] - v3[axis],
            v2[axis] - v3[axis],
        )
    };
    let x = lin(0);
    let y = lin(1);
    let z = lin(2);
    let xy = x.mul_linear(&y);
    let yz = y.mul_linear(&z);
    let xz = x.mul_linear(&z);
    let xyz = xy.mul_linear(&z);

    let mut h = Poly2::default();
    h.c[0] += t[0];
    h.add_scaled(&x, t[1]);
    h.add_scaled(&y, t[2]);
    h.add_scaled(&z, t[3]);
    h.add_scaled(&xy, t[4]);
    h.add_scaled(&yz, t[5]);
    h.add_scaled(&xz, t[6]);
    h.add_scaled(&xyz, t[7]);
    h
}

// ---------------------------------------------------------------------------
// Interior critical points.
// ---------------------------------------------------------------------------

/// Univariate polynomial product accumulating into `out` (index = power).
fn poly_mul_acc(a: &[f64], b: &[f64], s: f64, out: &mut [f64]) {
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += s * x * y;
        }
    }
}

/// Newton-polish a root of the gradient system; returns the refined pair.
fn newton_polish(ga: &[f64; 6], gb: &[f64; 6], mut a: f64, mut b: f64) -> (f64, f64) {
    for _ in 0..3 {
        let f1 = quad_eval(ga, a, b);
        let f2 = quad_eval(gb, a, b);
        let j11 = 2.0 * ga[0] * a + ga[2] * b + ga[3];
        let j12 = 2.0 * ga[1] * b + ga[2] * a + ga[4];
        let j21 = 2.0 * gb[0] * a + gb[2] * b + gb[3];
        let j22 = 2.0 * gb[1] * b + gb[2] * a + gb[4];
        let det = j11 * j22 - j12 * j21;
        if det.abs() < 1e-300 {
            break;
        }
        let da = (f1 * j22 - f2 * j12) / det;
        let db = (f2 * j11 - f1 * j21) / det;
        if !(da.is_finite() && db.is_finite()) {
            break;
        }
        a -= da;
        b -= db;
        if da.abs() + db.abs() < 1e-15 {
            break;
        }
    }
    (a, b)
}

/// Fallback for degenerate eliminations: Newton starts on a grid over the
/// simplex. The closed form has removable singularities; rigor must not
/// depend on them.
fn newton_grid_roots(ga: &[f64; 6], gb: &[f64; 6], gscale: f64) -> Vec<(f64, f64)> {
    const GRID: usize = 64;
    let tol = 1e-11 * gscale.max(1.0);
    let mut found: Vec<(f64, f64)> = Vec::new();
    for gi in 0..GRID {
        for gj in 0..GRID - gi {
            let a0 = (gi as f64 + 0.5) / GRID as f64;
            let b0 = (gj as f64 + 0.5) / GRID as f64;
            if a0 + b0 > 1.0 {
                continue;
            }
            let (a, b) = newton_polish(ga, gb, a0, b0);
            if !(a.is_finite() && b.is_finite()) {
                continue;
            }
            if quad_eval(ga, a, b).abs() > tol || quad_eval(gb, a, b).abs() > tol {
                continue;
            }
            if in_simplex(a, b)
                && !found
                    .iter()
                    .any(|&(x, y)| (x - a).abs() < DEDUP_TOL && (y - b).abs() < DEDUP_TOL)
            {
                found.push((a, b));
            }
        }
    }
    found
}

#[inline]
fn in_simplex(a: f64, b: f64) -> bool {
    a >= -SIMPLEX_TOL && b >= -SIMPLEX_TOL && a + b <= 1.0 + SIMPLEX_TOL
}

/// Interior critical points of the trilinear form restricted to a triangle
/// in cell-local coordinates: solve the quadratic gradient system by
/// eliminating `alpha`, reducing to a quartic in `beta`.
pub fn interior_critical_points(t: &[f64; 8], tri_local: &[Point; 3]) -> Vec<(f64, f64)> {
    let h = restrict_to_triangle(t, tri_local);
    let ga = h.grad_alpha();
    let gb = h.grad_beta();
    critical_points_of_gradient(&ga, &gb).0
}

fn critical_points_of_gradient(ga: &[f64; 6], gb: &[f64; 6]) -> (Vec<(f64, f64)>, bool) {
    let gscale = ga
        .iter()
        .chain(gb.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if gscale == 0.0 {
        // Constant field on the triangle: no isolated critical points;
        // vertices already witness the value.
        return (Vec::new(), false);
    }
    let inv = 1.0 / gscale;
    let mut a: [f64; 6] = std::array::from_fn(|i| ga[i] * inv);
    let mut b: [f64; 6] = std::array::from_fn(|i| gb[i] * inv);

    // The elimination solves for alpha out of b1*dHa - a1*dHb, then
    // substitutes into dHa; that substitution is informative only when a1
    // dominates, so swap the pair if needed.
    if a[0].abs() < b[0].abs() {
        std::mem::swap(&mut a, &mut b);
    }
    if a[0].abs() < DEGENERACY_EPS {
        // Neither component carries an alpha^2 term: the rational
        // elimination degenerates.
        return (newton_grid_roots(ga, gb, gscale), true);
    }

    // alpha(beta) = N(beta) / D(beta).
    let n = [
        a[0] * b[5] - a[5] * b[0],
        a[0] * b[4] - a[4] * b[0],
        a[0] * b[1] - a[1] * b[0],
    ];
    let d = [a[3] * b[0] - a[0] * b[3], a[2] * b[0] - a[0] * b[2]];

    // Substitute into dHa * D^2 = 0:
    // a1 N^2 + a2 b^2 D^2 + a3 N b D + a4 N D + a5 b D^2 + a6 D^2 = 0.
    let mut q = [0.0f64; 5];
    let bd = [0.0, d[0], d[1]]; // beta * D
    let mut d2 = [0.0f64; 3];
    poly_mul_acc(&d, &d, 1.0, &mut d2);
    let b2d2 = [0.0, 0.0, d2[0], d2[1], d2[2]]; // beta^2 D^2
    let bd2 = [0.0, d2[0], d2[1], d2[2]]; // beta D^2
    poly_mul_acc(&n, &n, a[0], &mut q);
    for (i, &v) in b2d2.iter().enumerate() {
        q[i] += a[1] * v;
    }
    poly_mul_acc(&n, &bd, a[2], &mut q);
    poly_mul_acc(&n, &d, a[3], &mut q);
    for (i, &v) in bd2.iter().enumerate() {
        q[i] += a[4] * v;
    }
    for (i, &v) in d2.iter().enumerate() {
        q[i] += a[5] * v;
    }

    let qscale = q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if qscale == 0.0 {
        return (newton_grid_roots(ga, gb, gscale), true);
    }

    let mut out: Vec<(f64, f64)> = Vec::new();
    // A near-vanishing leading coefficient demotes the degree inside the
    // quartic solver, but the depressed-quartic shift is then poorly
    // conditioned; keep the closed-form roots and union the grid fallback.
    let mut need_fallback = q[4].abs() < DEGENERACY_EPS * qscale;
    for beta in solve_quartic(q[4], q[3], q[2], q[1], q[0]) {
        if !(-0.25..=1.25).contains(&beta) {
            continue;
        }
        let denom = d[0] + d[1] * beta;
        if denom.abs() < DEGENERACY_EPS {
            need_fallback = true;
            continue;
        }
        let alpha = (n[0] + n[1] * beta + n[2] * beta * beta) / denom;
        let (alpha, beta) = newton_polish(ga, gb, alpha, beta);
        if !in_simplex(alpha, beta) {
            continue;
        }
        // Squaring during elimination can inject spurious roots; keep only
        // genuine gradient zeros.
        let tol = 1e-7 * gscale.max(1.0);
        if quad_eval(ga, alpha, beta).abs() > tol || quad_eval(gb, alpha, beta).abs() > tol {
            continue;
        }
        if !out
            .iter()
            .any(|&(x, y)| (x - alpha).abs() < DEDUP_TOL && (y - beta).abs() < DEDUP_TOL)
        {
            out.push((alpha, beta));
        }
    }

    if need_fallback {
        for (a2, b2) in newton_grid_roots(ga, gb, gscale) {
            if !out
                .iter()
                .any(|&(x, y)| (x - a2).abs() < DEDUP_TOL && (y - b2).abs() < DEDUP_TOL)
            {
                out.push((a2, b2));
            }
        }
        return (out, true);
    }
    (out, false)
}

// ---------------------------------------------------------------------------
// Edge critical points.
// ---------------------------------------------------------------------------

/// Critical points of the three cubic edge restrictions, mapped back to
/// (alpha, beta). The derivative along each edge is quadratic and solved in
/// closed form.
pub fn boundary_critical_points(t: &[f64; 8], tri_local: &[Point; 3]) -> Vec<(f64, f64)> {
    let h = restrict_to_triangle(t, tri_local);
    let mut out = Vec::new();

    // Edge alpha = 0: cubic in beta.
    let c = [
        h.c[p2_index(0, 0)],
        h.c[p2_index(0, 1)],
        h.c[p2_index(0, 2)],
        h.c[p2_index(0, 3)],
    ];
    for r in edge_roots(&c) {
        out.push((0.0, r));
    }
    // Edge beta = 0: cubic in alpha.
    let c = [
        h.c[p2_index(0, 0)],
        h.c[p2_index(1, 0)],
        h.c[p2_index(2, 0)],
        h.c[p2_index(3, 0)],
    ];
    for r in edge_roots(&c) {
        out.push((r, 0.0));
    }
    // Edge alpha + beta = 1: substitute (alpha, beta) = (1 - t, t).
    let mut c = [0.0f64; 4];
    let one_minus_t = [1.0, -1.0];
    for d in 0..=3usize {
        for j in 0..=d {
            let i = d - j;
            let v = h.c[p2_index(i, j)];
            if v == 0.0 {
                continue;
            }
            // v * (1-t)^i * t^j
            let mut pow = [0.0f64; 4];
            pow[0] = 1.0;
            let mut deg = 0;
            for _ in 0..i {
                let mut next = [0.0f64; 4];
                poly_mul_acc(&pow[..=deg], &one_minus_t, 1.0, &mut next);
                pow = next;
                deg += 1;
            }
            for (p, &x) in pow.iter().enumerate().take(deg + 1) {
                if p + j < 4 {
                    c[p + j] += v * x;
                }
            }
        }
    }
    for r in edge_roots(&c) {
        out.push((1.0 - r, r));
    }
    out
}

/// In-range roots of the derivative of a cubic `c0 + c1 t + c2 t^2 + c3 t^3`.
fn edge_roots(c: &[f64; 4]) -> Vec<f64> {
    solve_quadratic(3.0 * c[3], 2.0 * c[2], c[1])
        .into_iter()
        .filter(|r| (0.0..=1.0).contains(r))
        .collect()
}

// ---------------------------------------------------------------------------
// Triangle splitting.
// ---------------------------------------------------------------------------

/// Clip a triangle against the depth-0 grid planes crossing its bounding
/// box, then fan-triangulate. Every returned sub-triangle lies within one
/// depth-0 cell; total area is preserved.
pub fn split_triangle(tri: &[Point; 3], svo: &SparseVoxelOctree) -> Vec<[Point; 3]> {
    let w = svo.cell_width(0);
    let mut polys: Vec<Vec<Point>> = vec![tri.to_vec()];
    for axis in 0..3usize {
        let lo = tri[0][axis].min(tri[1][axis]).min(tri[2][axis]);
        let hi = tri[0][axis].max(tri[1][axis]).max(tri[2][axis]);
        let first = (lo / w).ceil() as i64;
        let last = (hi / w).floor() as i64;
        for plane_idx in first..=last {
            let plane = plane_idx as f64 * w;
            if plane <= lo || plane >= hi {
                continue;
            }
            let mut next = Vec::with_capacity(polys.len() + 4);
            for poly in polys {
                let (below, above) = split_polygon(&poly, axis, plane);
                if below.len() >= 3 {
                    next.push(below);
                }
                if above.len() >= 3 {
                    next.push(above);
                }
            }
            polys = next;
        }
    }
    let mut out = Vec::with_capacity(polys.len() * 2);
    for poly in polys {
        for i in 1..poly.len() - 1 {
            out.push([poly[0], poly[i], poly[i + 1]]);
        }
    }
    out
}

fn split_polygon(poly: &[Point], axis: usize, plane: f64) -> (Vec<Point>, Vec<Point>) {
    let mut below = Vec::with_capacity(poly.len() + 1);
    let mut above = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let cur = poly[i];
        let nxt = poly[(i + 1) % poly.len()];
        let sc = cur[axis] - plane;
        let sn = nxt[axis] - plane;
        if sc <= 0.0 {
            below.push(cur);
        }
        if sc >= 0.0 {
            above.push(cur);
        }
        if (sc < 0.0 && sn > 0.0) || (sc > 0.0 && sn < 0.0) {
            let t = sc / (sc - sn);
            let mut p = Point::new(
                cur.x + (nxt.x - cur.x) * t,
                cur.y + (nxt.y - cur.y) * t,
                cur.z + (nxt.z - cur.z) * t,
            );
            p[axis] = plane; // exact on the cut plane
            below.push(p);
            above.push(p);
        }
    }
    (below, above)
}

// ---------------------------------------------------------------------------
// Per-face candidate enumeration and the shell reduction.
// ---------------------------------------------------------------------------

fn face_candidates(
    field: &ImplicitField,
    mesh: &TriangleMesh,
    face: usize,
    coeff_cache: &mut MortonMap<[f64; 8]>,
    out: &mut Vec<CandidatePoint>,
) -> ExtremityStats {
    let mut stats = ExtremityStats::default();
    let tri = mesh.face_points(face);
    let svo = field.svo();
    let w = svo.cell_width(0);
    let sub_tris = split_triangle(&tri, svo);
    stats.sub_triangles = sub_tris.len();

    for (sub_id, sub) in sub_tris.iter().enumerate() {
        let mut push = |alpha: f64, beta: f64, kind: CandidateKind| {
            let a = alpha.max(0.0);
            let b = beta.max(0.0);
            let g = (1.0 - a - b).max(0.0);
            let position = Point::new(
                a * sub[0].x + b * sub[1].x + g * sub[2].x,
                a * sub[0].y + b * sub[1].y + g * sub[2].y,
                a * sub[0].z + b * sub[1].z + g * sub[2].z,
            );
            let value = field.evaluate(&position);
            out.push(CandidatePoint {
                face: face as u32,
                sub_tri: sub_id as u32,
                barycentric: (alpha, beta),
                position,
                kind,
                value,
            });
        };

        // Vertices always witness.
        push(1.0, 0.0, CandidateKind::Vertex);
        push(0.0, 1.0, CandidateKind::Vertex);
        push(0.0, 0.0, CandidateKind::Vertex);
        stats.vertex_candidates += 3;

        if triangle_area(&sub[0], &sub[1], &sub[2]) < SLIVER_AREA {
            continue;
        }

        // Cell-local coordinates; the centroid picks the lattice box (the
        // field is trilinear over any depth-0 box, so boundary ambiguity is
        // harmless).
        let centroid = Point::new(
            (sub[0].x + sub[1].x + sub[2].x) / 3.0,
            (sub[0].y + sub[1].y + sub[2].y) / 3.0,
            (sub[0].z + sub[1].z + sub[2].z) / 3.0,
        );
        let (ci, cj, ck) = svo.lattice_of(&centroid, 0);
        let coeffs = *coeff_cache
            .entry(morton_interleave(ci, cj, ck))
            .or_insert_with(|| field.box_trilinear_coeffs(ci, cj, ck));
        let origin = Point::new(ci as f64 * w, cj as f64 * w, ck as f64 * w);
        let local: [Point; 3] = std::array::from_fn(|i| {
            Point::new(
                (sub[i].x - origin.x) / w,
                (sub[i].y - origin.y) / w,
                (sub[i].z - origin.z) / w,
            )
        });

        let h = restrict_to_triangle(&coeffs, &local);
        let ga = h.grad_alpha();
        let gb = h.grad_beta();
        let (interior, used_fallback) = critical_points_of_gradient(&ga, &gb);
        if used_fallback {
            stats.fallback_sub_triangles += 1;
        }
        for (a, b) in interior {
            push(a, b, CandidateKind::Interior);
            stats.interior_candidates += 1;
        }
        for (a, b) in boundary_critical_points(&coeffs, &local) {
            push(a, b, CandidateKind::Edge);
            stats.edge_candidates += 1;
        }
    }
    stats
}

/// Enumerate every candidate for every face. Debug/inspection path; the
/// shell computation reduces per face without materializing all candidates.
pub fn collect_candidates(field: &ImplicitField, mesh: &TriangleMesh) -> Vec<CandidatePoint> {
    (0..mesh.faces().len())
        .into_par_iter()
        .map(|face| {
            let mut cache = MortonMap::default();
            let mut out = Vec::new();
            face_candidates(field, mesh, face, &mut cache, &mut out);
            out
        })
        .reduce(Vec::new, |mut a, mut b| {
            a.append(&mut b);
            a
        })
}

/// Evaluate the field at every candidate point of every face and reduce to
/// the global extremes. Stores the interval in the field and returns it
/// with candidate counts.
pub fn compute_shell_interval(
    field: &mut ImplicitField,
    mesh: &TriangleMesh,
) -> (ShellInterval, ExtremityStats) {
    let (lo, hi, stats) = (0..mesh.faces().len())
        .into_par_iter()
        .map(|face| {
            let mut cache = MortonMap::default();
            let mut cands = Vec::new();
            let stats = face_candidates(field, mesh, face, &mut cache, &mut cands);
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for c in &cands {
                lo = lo.min(c.value);
                hi = hi.max(c.value);
            }
            (lo, hi, stats)
        })
        .reduce(
            || (f64::INFINITY, f64::NEG_INFINITY, ExtremityStats::default()),
            |x, y| (x.0.min(y.0), x.1.max(y.1), x.2.merge(y.2)),
        );
    let shell = ShellInterval::new(lo, hi);
    field.set_shell(shell);
    (shell, stats)
}

/// Write candidates as CSV: `face,kind,alpha,beta,x,y,z,f`.
pub fn dump_candidates_csv(
    field: &ImplicitField,
    mesh: &TriangleMesh,
    path: impl AsRef<std::path::Path>,
) -> crate::Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "face,kind,alpha,beta,x,y,z,f")?;
    for c in collect_candidates(field, mesh) {
        let kind = match c.kind {
            CandidateKind::Interior => "interior",
            CandidateKind::Edge => "edge",
            CandidateKind::Vertex => "vertex",
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            c.face,
            kind,
            c.barycentric.0,
            c.barycentric.1,
            c.position.x,
            c.position.y,
            c.position.z,
            c.value
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests;
