//! Interpolation system assembly and its conjugate-gradient least-squares
//! solve.
//!
//! One equation per grid point across all depths: the field evaluated at
//! grid point `g` must equal the (signed or unsigned) distance from `g` to
//! the mesh. The matrix is sparse (each row touches at most eight corners
//! per depth) and in general singular — coincident grid points at different
//! depths produce duplicated rows — so the solver minimizes the residual on
//! the normal equations instead of factorizing.

use crate::geom::Point;
use crate::mesh::{DistanceMode, TriangleMesh};
use crate::svo::{morton_interleave, SparseVoxelOctree};
use rayon::prelude::*;

/// CSR matrix of basis values at grid points plus the distance right-hand
/// side. Rows and columns are ordered depth-major, then ascending Morton.
pub struct SparseSystem {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    rhs: Vec<f64>,
    /// Global column index base per depth.
    level_offsets: Vec<usize>,
}

/// Convergence report for [`solve_coefficients`].
#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    /// `‖Aᵀ(Aλ − b)‖ / ‖Aᵀb‖` at exit.
    pub normal_residual: f64,
    /// `‖Aλ − b‖ / ‖b‖` at exit.
    pub relative_residual: f64,
    pub converged: bool,
}

impl SparseSystem {
    /// Build a system directly from (row, col, value) triplets; rows and
    /// columns share the index space. Mostly useful for solver tests and
    /// tooling.
    pub fn from_triplets(n: usize, triplets: &[(u32, u32, f64)], rhs: Vec<f64>) -> SparseSystem {
        assert_eq!(rhs.len(), n);
        let mut sorted = triplets.to_vec();
        sorted.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(sorted.len());
        let mut vals = Vec::with_capacity(sorted.len());
        for &(r, c, v) in &sorted {
            row_ptr[r as usize + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseSystem {
            n,
            row_ptr,
            cols,
            vals,
            rhs,
            level_offsets: vec![0, n],
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn level_offsets(&self) -> &[usize] {
        &self.level_offsets
    }

    /// Row entries as (column, value) pairs.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (u32, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    /// y = A x, parallel over rows.
    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        y.par_iter_mut().enumerate().for_each(|(r, out)| {
            let mut acc = 0.0;
            for e in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[e] * x[self.cols[e] as usize];
            }
            *out = acc;
        });
    }

    /// y = Aᵀ x without materializing the transpose: contiguous row ranges
    /// scatter into per-range buffers which are then summed in fixed order,
    /// so results do not depend on scheduling.
    pub fn mul_transpose(&self, x: &[f64], y: &mut [f64], scratch: &mut Vec<Vec<f64>>) {
        let parts = rayon::current_num_threads().max(1);
        scratch.resize_with(parts, Vec::new);
        let chunk = self.n.div_ceil(parts);
        scratch.par_iter_mut().enumerate().for_each(|(t, buf)| {
            buf.clear();
            buf.resize(self.n, 0.0);
            let lo = t * chunk;
            let hi = ((t + 1) * chunk).min(self.n);
            for r in lo..hi {
                let xi = x[r];
                if xi == 0.0 {
                    continue;
                }
                for e in self.row_ptr[r]..self.row_ptr[r + 1] {
                    buf[self.cols[e] as usize] += self.vals[e] * xi;
                }
            }
        });
        y.fill(0.0);
        for buf in scratch.iter() {
            for (o, v) in y.iter_mut().zip(buf.iter()) {
                *o += v;
            }
        }
    }

    /// Max |A[p][q] - A[q][p]| over stored entries (dense probe, test use).
    pub fn asymmetry(&self) -> f64 {
        let mut map = std::collections::HashMap::new();
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                map.insert((r as u32, c), v);
            }
        }
        let mut worst = 0.0f64;
        for (&(r, c), &v) in &map {
            let tv = map.get(&(c, r)).copied().unwrap_or(0.0);
            worst = worst.max((v - tv).abs());
        }
        worst
    }
}

/// Deterministic parallel dot product: fixed-size chunks reduced in order.
fn det_dot(a: &[f64], b: &[f64]) -> f64 {
    const CHUNK: usize = 8192;
    let partials: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(ca, cb)| ca.iter().zip(cb).map(|(x, y)| x * y).sum())
        .collect();
    partials.iter().sum()
}

/// The nonzero basis weights at point `p` for depth `depth`: up to eight
/// (corner Morton, weight) pairs of the containing lattice box.
fn corner_weights(
    svo: &SparseVoxelOctree,
    depth: u32,
    p: &Point,
    out: &mut Vec<(u64, f64)>,
) {
    let n = 1u32 << (svo.height() - depth);
    let inv_w = n as f64;
    let mut idx = [0u32; 3];
    let mut frac = [0.0f64; 3];
    for a in 0..3 {
        let t = p[a] * inv_w;
        let i = (t.floor().max(0.0) as u32).min(n - 1);
        idx[a] = i;
        frac[a] = t - i as f64;
    }
    let wx = [1.0 - frac[0], frac[0]];
    let wy = [1.0 - frac[1], frac[1]];
    let wz = [1.0 - frac[2], frac[2]];
    for dz in 0..2u32 {
        for dy in 0..2u32 {
            for dx in 0..2u32 {
                let w = wx[dx as usize] * wy[dy as usize] * wz[dz as usize];
                if w == 0.0 {
                    continue;
                }
                out.push((
                    morton_interleave(idx[0] + dx, idx[1] + dy, idx[2] + dz),
                    w,
                ));
            }
        }
    }
}

/// Assemble the collocation system over all grid points of the octree.
pub fn assemble_system(
    svo: &SparseVoxelOctree,
    mesh: &TriangleMesh,
    mode: DistanceMode,
) -> SparseSystem {
    let height = svo.height();
    let mut level_offsets = Vec::with_capacity(height as usize + 2);
    let mut n = 0usize;
    for depth in 0..=height {
        level_offsets.push(n);
        n += svo.grid_point_count(depth);
    }
    level_offsets.push(n);

    // Row positions, depth-major then Morton.
    let positions: Vec<Point> = (0..=height)
        .flat_map(|depth| {
            svo.grid_mortons(depth)
                .iter()
                .map(move |&m| svo.grid_position(depth, m))
        })
        .collect();

    // Entries per row, assembled in parallel chunks and spliced in order.
    const ROWS_PER_CHUNK: usize = 2048;
    let chunks: Vec<(Vec<u32>, Vec<u32>, Vec<f64>)> = positions
        .par_chunks(ROWS_PER_CHUNK)
        .map(|chunk| {
            let mut lens = Vec::with_capacity(chunk.len());
            let mut cols = Vec::new();
            let mut vals = Vec::new();
            let mut scratch = Vec::with_capacity(8);
            for p in chunk {
                let mut count = 0u32;
                for depth in 0..=height {
                    scratch.clear();
                    corner_weights(svo, depth, p, &mut scratch);
                    for &(m, w) in &scratch {
                        if let Some(rank) = svo.grid_rank(depth, m) {
                            cols.push((level_offsets[depth as usize] + rank as usize) as u32);
                            vals.push(w);
                            count += 1;
                        }
                    }
                }
                lens.push(count);
            }
            (lens, cols, vals)
        })
        .collect();

    let total_nnz: usize = chunks.iter().map(|(_, c, _)| c.len()).sum();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::with_capacity(total_nnz);
    let mut vals = Vec::with_capacity(total_nnz);
    row_ptr.push(0usize);
    for (lens, ccols, cvals) in chunks {
        for len in lens {
            row_ptr.push(row_ptr.last().unwrap() + len as usize);
        }
        cols.extend_from_slice(&ccols);
        vals.extend_from_slice(&cvals);
    }

    let rhs: Vec<f64> = positions
        .par_iter()
        .map(|p| mesh.signed_distance(p, mode))
        .collect();

    SparseSystem {
        n,
        row_ptr,
        cols,
        vals,
        rhs,
        level_offsets,
    }
}

/// Least-squares conjugate gradient (CGLS) on the normal equations, with
/// column-norm scaling. Terminates when `‖Aᵀ(Aλ−b)‖/‖Aᵀb‖ <= tol` or after
/// `max_iter` iterations; the returned coefficients are usable either way.
pub fn solve_coefficients(
    system: &SparseSystem,
    tol: f64,
    max_iter: usize,
) -> (Vec<f64>, SolveStats) {
    let n = system.n;

    // Column 2-norms; every column holds its own unit diagonal entry, so
    // norms are >= 1 and the scaling is always invertible.
    let mut col_norm = vec![0.0f64; n];
    for (&c, &v) in system.cols.iter().zip(system.vals.iter()) {
        col_norm[c as usize] += v * v;
    }
    for d in col_norm.iter_mut() {
        *d = d.sqrt().max(1e-300);
    }

    let mut scratch: Vec<Vec<f64>> = Vec::new();
    let mut y = vec![0.0f64; n]; // scaled unknowns, lambda = y / col_norm
    let mut r = system.rhs.clone();
    let mut s = vec![0.0f64; n];
    let mut q = vec![0.0f64; n];
    let mut tmp = vec![0.0f64; n];

    // s = D^-1 Aᵀ r
    system.mul_transpose(&r, &mut s, &mut scratch);
    // Unscaled reference: ‖Aᵀ b‖.
    let atb_norm = det_dot(&s, &s).sqrt().max(1e-300);
    s.par_iter_mut().zip(col_norm.par_iter()).for_each(|(v, d)| *v /= d);

    let mut p = s.clone();
    let mut gamma = det_dot(&s, &s);
    let mut normal_residual = f64::INFINITY;
    let mut iterations = 0usize;
    let mut converged = false;

    for iter in 0..max_iter {
        iterations = iter;
        // Unscaled normal residual ‖Aᵀ r‖ = ‖D s‖.
        tmp.par_iter_mut()
            .zip(s.par_iter().zip(col_norm.par_iter()))
            .for_each(|(t, (v, d))| *t = v * d);
        normal_residual = det_dot(&tmp, &tmp).sqrt() / atb_norm;
        if normal_residual <= tol {
            converged = true;
            break;
        }

        // q = A D^-1 p
        tmp.par_iter_mut()
            .zip(p.par_iter().zip(col_norm.par_iter()))
            .for_each(|(t, (v, d))| *t = v / d);
        system.mul(&tmp, &mut q);
        let qq = det_dot(&q, &q);
        if qq == 0.0 {
            converged = true;
            break;
        }
        let alpha = gamma / qq;
        y.par_iter_mut().zip(p.par_iter()).for_each(|(v, pv)| *v += alpha * pv);
        r.par_iter_mut().zip(q.par_iter()).for_each(|(v, qv)| *v -= alpha * qv);

        system.mul_transpose(&r, &mut s, &mut scratch);
        s.par_iter_mut().zip(col_norm.par_iter()).for_each(|(v, d)| *v /= d);
        let gamma_new = det_dot(&s, &s);
        let beta = gamma_new / gamma;
        gamma = gamma_new;
        p.par_iter_mut().zip(s.par_iter()).for_each(|(v, sv)| *v = sv + beta * *v);
    }

    let lambda: Vec<f64> = y
        .iter()
        .zip(col_norm.iter())
        .map(|(v, d)| v / d)
        .collect();

    // Residual on the original equations.
    system.mul(&lambda, &mut q);
    q.par_iter_mut()
        .zip(system.rhs.par_iter())
        .for_each(|(v, b)| *v -= b);
    let b_norm = det_dot(&system.rhs, &system.rhs).sqrt().max(1e-300);
    let relative_residual = det_dot(&q, &q).sqrt() / b_norm;

    (
        lambda,
        SolveStats {
            iterations,
            normal_residual,
            relative_residual,
            converged,
        },
    )
}
