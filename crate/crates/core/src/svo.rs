//! Sparse voxel octree: conservative voxelization at resolution `2^-K` and
//! bottom-up construction with sibling completion, plus Morton-coded point
//! location.
//!
//! Depth 0 is the finest level (cell width `2^(0-K)`), depth `K` is the unit
//! root cell `[0,1]^3`. Grid points are cell corners; points at equal
//! positions but different depths are distinct entries.

use crate::geom::{triangle_box_overlap, Point, Vec3};
use crate::hash::{MortonMap, MortonSet};
use crate::mesh::TriangleMesh;
use crate::{Error, Result};
use rayon::prelude::*;

/// Practical octree height bounds: below 2 the hierarchy is trivial, above
/// 12 the dense lattice index exceeds desk scale.
pub const MIN_HEIGHT: u32 = 2;
pub const MAX_HEIGHT: u32 = 12;

fn spread(mut w: u64) -> u64 {
    w &= 0x0000_0000_001f_ffff;
    w = (w | w << 32) & 0x001f_0000_0000_ffff;
    w = (w | w << 16) & 0x001f_0000_ff00_00ff;
    w = (w | w << 8) & 0x010f_00f0_0f00_f00f;
    w = (w | w << 4) & 0x10c3_0c30_c30c_30c3;
    w = (w | w << 2) & 0x1249_2492_4924_9249;
    w
}

fn compact(mut w: u64) -> u32 {
    w &= 0x1249_2492_4924_9249;
    w = (w ^ (w >> 2)) & 0x30c3_0c30_c30c_30c3;
    w = (w ^ (w >> 4)) & 0xf00f_00f0_0f00_f00f;
    w = (w ^ (w >> 8)) & 0x00ff_0000_ff00_00ff;
    w = (w ^ (w >> 16)) & 0x00ff_0000_0000_ffff;
    w = (w ^ (w >> 32)) & 0x0000_0000_001f_ffff;
    w as u32
}

/// Interleave lattice coordinates, x in the lowest bit.
#[inline]
pub fn morton_interleave(i: u32, j: u32, k: u32) -> u64 {
    spread(i as u64) | (spread(j as u64) << 1) | (spread(k as u64) << 2)
}

/// Inverse of [`morton_interleave`].
#[inline]
pub fn morton_deinterleave(code: u64) -> (u32, u32, u32) {
    (compact(code), compact(code >> 1), compact(code >> 2))
}

/// A cubic cell at a given depth, identified by the Morton code of its
/// integer lattice coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellKey {
    pub depth: u32,
    pub morton: u64,
}

impl CellKey {
    /// Encode lattice coordinates at `depth` within an octree of height
    /// `height`. Coordinates must be below `2^(height-depth)`.
    pub fn encode(i: u32, j: u32, k: u32, depth: u32, height: u32) -> Result<CellKey> {
        let n = 1u32 << (height - depth);
        if i >= n || j >= n || k >= n {
            return Err(Error::Svo(format!(
                "lattice ({i},{j},{k}) out of range for depth {depth} (max {n})"
            )));
        }
        Ok(CellKey {
            depth,
            morton: morton_interleave(i, j, k),
        })
    }

    #[inline]
    pub fn lattice(&self) -> (u32, u32, u32) {
        morton_deinterleave(self.morton)
    }
}

struct Level {
    cells_sorted: Vec<u64>,
    cell_set: MortonSet,
    /// Corner lattice Morton codes, ascending.
    grid_sorted: Vec<u64>,
    grid_index: MortonMap<u32>,
    /// Inclusive lattice bounds of the corners, for cheap far rejection.
    corner_lo: [u32; 3],
    corner_hi: [u32; 3],
}

impl Level {
    fn from_cells(cells_sorted: Vec<u64>) -> Level {
        let mut grid_sorted: Vec<u64> = cells_sorted
            .par_iter()
            .flat_map_iter(|&m| {
                let (i, j, k) = morton_deinterleave(m);
                (0..8u32).map(move |c| {
                    morton_interleave(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1))
                })
            })
            .collect();
        grid_sorted.par_sort_unstable();
        grid_sorted.dedup();
        Level::from_cells_and_grid(cells_sorted, grid_sorted)
    }

    fn from_cells_and_grid(cells_sorted: Vec<u64>, grid_sorted: Vec<u64>) -> Level {
        let cell_set: MortonSet = cells_sorted.iter().copied().collect();
        let grid_index: MortonMap<u32> = grid_sorted
            .iter()
            .enumerate()
            .map(|(i, &m)| (m, i as u32))
            .collect();
        let mut corner_lo = [u32::MAX; 3];
        let mut corner_hi = [0u32; 3];
        for &m in &grid_sorted {
            let (i, j, k) = morton_deinterleave(m);
            for (a, v) in [i, j, k].into_iter().enumerate() {
                corner_lo[a] = corner_lo[a].min(v);
                corner_hi[a] = corner_hi[a].max(v);
            }
        }
        Level {
            cells_sorted,
            cell_set,
            grid_sorted,
            grid_index,
            corner_lo,
            corner_hi,
        }
    }

    /// Rebuild the cell set from corner points alone: a cell is assumed
    /// present iff all 8 of its corners are. Used when deserializing, where
    /// only (corner, coefficient) pairs are stored; the reconstruction can
    /// only add cells whose box carries a valid trilinear patch anyway.
    fn from_grid(grid_sorted: Vec<u64>, lattice_cells: u32) -> Level {
        let grid_set: MortonSet = grid_sorted.iter().copied().collect();
        let mut cells_sorted: Vec<u64> = grid_sorted
            .iter()
            .filter_map(|&m| {
                let (i, j, k) = morton_deinterleave(m);
                if i >= lattice_cells || j >= lattice_cells || k >= lattice_cells {
                    return None;
                }
                let all_corners = (1..8u32).all(|c| {
                    grid_set.contains(&morton_interleave(
                        i + (c & 1),
                        j + ((c >> 1) & 1),
                        k + ((c >> 2) & 1),
                    ))
                });
                all_corners.then(|| morton_interleave(i, j, k))
            })
            .collect();
        cells_sorted.sort_unstable();
        Level::from_cells_and_grid(cells_sorted, grid_sorted)
    }
}

/// Per-depth sets of occupied cells and their corner grid points.
pub struct SparseVoxelOctree {
    height: u32,
    levels: Vec<Level>,
}

/// Conservative voxelization: a depth-0 cell is kept iff its closed cube
/// overlaps some triangle, so every triangle is fully covered by kept cells.
pub fn voxelize(mesh: &TriangleMesh, height: u32) -> Result<Vec<CellKey>> {
    if !(MIN_HEIGHT..=MAX_HEIGHT).contains(&height) {
        return Err(Error::Svo(format!(
            "octree height {height} outside [{MIN_HEIGHT}, {MAX_HEIGHT}]"
        )));
    }
    let n = 1u32 << height;
    let w = 1.0 / n as f64;
    let clamp = |x: f64| -> u32 { (x.floor().max(0.0) as u32).min(n - 1) };
    let mut mortons: Vec<u64> = (0..mesh.faces().len())
        .into_par_iter()
        .flat_map_iter(|face| {
            let tri = mesh.face_points(face);
            let mut lo = [u32::MAX; 3];
            let mut hi = [0u32; 3];
            for a in 0..3 {
                let min = tri[0][a].min(tri[1][a]).min(tri[2][a]);
                let max = tri[0][a].max(tri[1][a]).max(tri[2][a]);
                // Closed-cube overlap can reach one cell beyond the bbox
                // when the triangle touches a lattice plane exactly.
                lo[a] = clamp(min / w - 1.0);
                hi[a] = clamp(max / w + 1.0);
            }
            let mut out = Vec::new();
            let half = Vec3::new(0.5 * w, 0.5 * w, 0.5 * w);
            for i in lo[0]..=hi[0] {
                for j in lo[1]..=hi[1] {
                    for k in lo[2]..=hi[2] {
                        let center = Point::new(
                            (i as f64 + 0.5) * w,
                            (j as f64 + 0.5) * w,
                            (k as f64 + 0.5) * w,
                        );
                        if triangle_box_overlap(&center, &half, &tri) {
                            out.push(morton_interleave(i, j, k));
                        }
                    }
                }
            }
            out
        })
        .collect();
    mortons.par_sort_unstable();
    mortons.dedup();
    Ok(mortons
        .into_iter()
        .map(|morton| CellKey { depth: 0, morton })
        .collect())
}

/// Bottom-up construction: at each depth every present cell's seven siblings
/// are added and parents formed, up to the root.
pub fn build_svo(leaf_cells: &[CellKey], height: u32) -> Result<SparseVoxelOctree> {
    if !(1..=MAX_HEIGHT).contains(&height) {
        return Err(Error::Svo(format!(
            "octree height {height} outside [1, {MAX_HEIGHT}]"
        )));
    }
    if leaf_cells.is_empty() {
        return Err(Error::Svo("empty leaf cell set".into()));
    }
    if let Some(bad) = leaf_cells.iter().find(|c| c.depth != 0) {
        return Err(Error::Svo(format!(
            "leaf cell at depth {} (expected 0)",
            bad.depth
        )));
    }

    let mut levels = Vec::with_capacity(height as usize + 1);
    let mut current: Vec<u64> = leaf_cells.iter().map(|c| c.morton).collect();
    current.sort_unstable();
    current.dedup();
    for _depth in 0..height {
        let mut parents: Vec<u64> = current.iter().map(|m| m >> 3).collect();
        parents.dedup(); // sorted input keeps parents sorted
        let completed: Vec<u64> = parents
            .iter()
            .flat_map(|p| (0..8u64).map(move |c| (p << 3) | c))
            .collect();
        levels.push(Level::from_cells(completed));
        current = parents;
    }
    debug_assert_eq!(current, vec![0]);
    levels.push(Level::from_cells(vec![0]));
    Ok(SparseVoxelOctree { height, levels })
}

impl SparseVoxelOctree {
    #[inline]
    pub fn height(&self) -> u32 {
        self.height
    }

    /// Cell width at `depth`: `2^(depth - K)`.
    #[inline]
    pub fn cell_width(&self, depth: u32) -> f64 {
        1.0 / (1u64 << (self.height - depth)) as f64
    }

    pub fn cell_count(&self, depth: u32) -> usize {
        self.levels[depth as usize].cells_sorted.len()
    }

    pub fn grid_point_count(&self, depth: u32) -> usize {
        self.levels[depth as usize].grid_sorted.len()
    }

    pub fn total_cells(&self) -> usize {
        self.levels.iter().map(|l| l.cells_sorted.len()).sum()
    }

    pub fn total_grid_points(&self) -> usize {
        self.levels.iter().map(|l| l.grid_sorted.len()).sum()
    }

    #[inline]
    pub fn contains_cell(&self, key: &CellKey) -> bool {
        self.levels[key.depth as usize].cell_set.contains(&key.morton)
    }

    pub fn cells(&self, depth: u32) -> impl Iterator<Item = CellKey> + '_ {
        self.levels[depth as usize]
            .cells_sorted
            .iter()
            .map(move |&morton| CellKey { depth, morton })
    }

    /// Corner Morton codes at `depth`, ascending.
    pub fn grid_mortons(&self, depth: u32) -> &[u64] {
        &self.levels[depth as usize].grid_sorted
    }

    /// Rank of a corner Morton code within its depth, if present.
    #[inline]
    pub fn grid_rank(&self, depth: u32, corner_morton: u64) -> Option<u32> {
        self.levels[depth as usize]
            .grid_index
            .get(&corner_morton)
            .copied()
    }

    /// Inclusive corner-lattice bounds at `depth`.
    #[inline]
    pub fn corner_bounds(&self, depth: u32) -> ([u32; 3], [u32; 3]) {
        let l = &self.levels[depth as usize];
        (l.corner_lo, l.corner_hi)
    }

    /// Rebuild an octree from per-depth corner Morton lists (ascending), as
    /// stored in the `.its` format.
    pub fn from_grid_levels(height: u32, grids: Vec<Vec<u64>>) -> Result<SparseVoxelOctree> {
        if grids.len() != height as usize + 1 {
            return Err(Error::Svo(format!(
                "expected {} grid levels, got {}",
                height + 1,
                grids.len()
            )));
        }
        let levels = grids
            .into_iter()
            .enumerate()
            .map(|(depth, g)| Level::from_grid(g, 1u32 << (height - depth as u32)))
            .collect();
        Ok(SparseVoxelOctree { height, levels })
    }

    /// Unit-space position of a corner lattice point at `depth`.
    #[inline]
    pub fn grid_position(&self, depth: u32, corner_morton: u64) -> Point {
        let (i, j, k) = morton_deinterleave(corner_morton);
        let w = self.cell_width(depth);
        Point::new(i as f64 * w, j as f64 * w, k as f64 * w)
    }

    /// Distinct corner points of depth-`depth` cells with their unit-space
    /// positions, in ascending corner-Morton order.
    pub fn collect_grid_points(&self, depth: u32) -> Vec<((u32, u32, u32), Point)> {
        self.grid_mortons(depth)
            .iter()
            .map(|&m| (morton_deinterleave(m), self.grid_position(depth, m)))
            .collect()
    }

    /// Lattice coordinates of the cell containing `p` at `depth`, using
    /// half-open cubes with the far domain boundary closed at 1.0.
    #[inline]
    pub fn lattice_of(&self, p: &Point, depth: u32) -> (u32, u32, u32) {
        let n = 1u32 << (self.height - depth);
        let w = self.cell_width(depth);
        let f = |x: f64| -> u32 { ((x / w).floor().max(0.0) as u32).min(n - 1) };
        (f(p.x), f(p.y), f(p.z))
    }

    /// The containing cell at every depth whose cell exists, finest first.
    /// `None` when `p` lies outside the root cell.
    pub fn locate_chain(&self, p: &Point) -> Option<Vec<CellKey>> {
        if !(0.0..=1.0).contains(&p.x) || !(0.0..=1.0).contains(&p.y) || !(0.0..=1.0).contains(&p.z)
        {
            return None;
        }
        let mut chain = Vec::with_capacity(self.height as usize + 1);
        for depth in 0..=self.height {
            let (i, j, k) = self.lattice_of(p, depth);
            let key = CellKey {
                depth,
                morton: morton_interleave(i, j, k),
            };
            if self.contains_cell(&key) {
                chain.push(key);
            }
        }
        Some(chain)
    }

    /// Check sibling completeness and the parent-coverage chain.
    pub fn check_invariants(&self) -> Result<()> {
        for depth in 0..self.height {
            let level = &self.levels[depth as usize];
            for &m in &level.cells_sorted {
                let parent = m >> 3;
                for c in 0..8u64 {
                    let sibling = (parent << 3) | c;
                    if !level.cell_set.contains(&sibling) {
                        return Err(Error::Svo(format!(
                            "depth {depth}: cell {m:#x} missing sibling {sibling:#x}"
                        )));
                    }
                }
                if !self.levels[depth as usize + 1].cell_set.contains(&parent) {
                    return Err(Error::Svo(format!(
                        "depth {depth}: cell {m:#x} missing parent {parent:#x}"
                    )));
                }
            }
        }
        if self.levels[self.height as usize].cells_sorted != vec![0] {
            return Err(Error::Svo("root level is not exactly the unit cell".into()));
        }
        Ok(())
    }
}
