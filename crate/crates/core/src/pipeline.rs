//! One-stop build pipeline: normalize, voxelize, octree, assemble, solve,
//! shell interval. Produces the field plus a stage-by-stage report.

use crate::extremity::{compute_shell_interval, ExtremityStats, ShellInterval};
use crate::field::{assemble_system, solve_coefficients, ImplicitField, SolveStats};
use crate::mesh::{DistanceMode, TriangleMesh, UnitTransform};
use crate::svo::{build_svo, voxelize};
use crate::Result;
use std::time::Instant;

#[derive(Debug, Clone, Copy)]
pub struct BuildParams {
    pub height: u32,
    pub mode: DistanceMode,
    /// Relative normal-equation residual target.
    pub tol: f64,
    /// Solver iteration cap; 0 means the default `10 * N`.
    pub max_iter: usize,
    pub margin: f64,
}

impl Default for BuildParams {
    fn default() -> Self {
        BuildParams {
            height: 6,
            mode: DistanceMode::Signed,
            tol: 1e-8,
            max_iter: 0,
            margin: 1.0 / 16.0,
        }
    }
}

/// Wall time (seconds) and size counters for each build stage.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BuildReport {
    pub height: u32,
    pub mode: String,
    pub faces: usize,
    pub leaf_cells: usize,
    pub total_cells: usize,
    pub grid_points: usize,
    pub eps1: f64,
    pub eps2: f64,
    pub thickness: f64,
    /// `[0, max(|eps1|, |eps2|)]` upper bound, the open-mesh reading.
    pub udf_bound: f64,
    /// Both extremes carry the same sign (reported, never clamped).
    pub same_signed_shell: bool,
    pub solver_iterations: usize,
    pub solver_converged: bool,
    pub normal_residual: f64,
    pub relative_residual: f64,
    pub candidate_sub_triangles: usize,
    pub fallback_sub_triangles: usize,
    pub seconds_normalize: f64,
    pub seconds_voxelize: f64,
    pub seconds_octree: f64,
    pub seconds_assemble: f64,
    pub seconds_solve: f64,
    pub seconds_shell: f64,
    pub seconds_total: f64,
}

pub struct BuildOutput {
    pub field: ImplicitField,
    pub unit_mesh: TriangleMesh,
    pub transform: UnitTransform,
    pub shell: ShellInterval,
    pub stats: ExtremityStats,
    pub solve: SolveStats,
    pub report: BuildReport,
}

/// Run the full construction on a model-space mesh.
pub fn build_field(mesh: &TriangleMesh, params: &BuildParams) -> Result<BuildOutput> {
    let total = Instant::now();

    let t = Instant::now();
    let (unit_mesh, transform) = mesh.normalize_to_unit(params.margin)?;
    let seconds_normalize = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let leaves = voxelize(&unit_mesh, params.height)?;
    let seconds_voxelize = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let svo = build_svo(&leaves, params.height)?;
    let seconds_octree = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let system = assemble_system(&svo, &unit_mesh, params.mode);
    let seconds_assemble = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let max_iter = if params.max_iter == 0 {
        10 * system.len()
    } else {
        params.max_iter
    };
    let (lambda, solve) = solve_coefficients(&system, params.tol, max_iter);
    let seconds_solve = t.elapsed().as_secs_f64();

    let offsets = system.level_offsets().to_vec();
    let lambdas: Vec<Vec<f64>> = (0..=params.height as usize)
        .map(|d| lambda[offsets[d]..offsets[d + 1]].to_vec())
        .collect();
    let mut field = ImplicitField::new(svo, lambdas, transform, params.mode)?;

    let t = Instant::now();
    let (shell, stats) = compute_shell_interval(&mut field, &unit_mesh);
    let seconds_shell = t.elapsed().as_secs_f64();

    let report = BuildReport {
        height: params.height,
        mode: match params.mode {
            DistanceMode::Signed => "signed".into(),
            DistanceMode::Unsigned => "unsigned".into(),
        },
        faces: unit_mesh.faces().len(),
        leaf_cells: leaves.len(),
        total_cells: field.svo().total_cells(),
        grid_points: field.svo().total_grid_points(),
        eps1: shell.eps1,
        eps2: shell.eps2,
        thickness: shell.thickness(),
        udf_bound: shell.udf_interval().1,
        same_signed_shell: shell.same_signed(),
        solver_iterations: solve.iterations,
        solver_converged: solve.converged,
        normal_residual: solve.normal_residual,
        relative_residual: solve.relative_residual,
        candidate_sub_triangles: stats.sub_triangles,
        fallback_sub_triangles: stats.fallback_sub_triangles,
        seconds_normalize,
        seconds_voxelize,
        seconds_octree,
        seconds_assemble,
        seconds_solve,
        seconds_shell,
        seconds_total: total.elapsed().as_secs_f64(),
    };

    Ok(BuildOutput {
        unit_mesh,
        transform,
        shell,
        stats,
        solve,
        report,
        field,
    })
}
