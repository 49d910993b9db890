//! Inside-outside classification through the shell interval, with an exact
//! winding-number fallback for the ambiguous band, plus the benchmarking
//! harness.
//!
//! A query point whose field value clears the band `[eps1, eps2]` is
//! classified directly; inside the band the point is either reported as
//! `OnSurface` or resolved exactly against the mesh, per policy. Points
//! outside the root cell are declared `Outside` outright: the normalized
//! model lies strictly inside the root, and routing them through `f = 0`
//! (always inside the band) would force a fallback for every far point.

use crate::field::ImplicitField;
use crate::geom::{Aabb, Point};
use crate::mesh::TriangleMesh;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::time::Instant;

/// What to do when the field value falls inside the shell band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FallbackPolicy {
    /// Report the point as on-surface.
    OnSurface,
    /// Resolve exactly with the winding-number oracle (requires the mesh).
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Inside,
    Outside,
    OnSurface,
    ResolvedInside,
    ResolvedOutside,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Inside => "Inside",
            Label::Outside => "Outside",
            Label::OnSurface => "OnSurface",
            Label::ResolvedInside => "ResolvedInside",
            Label::ResolvedOutside => "ResolvedOutside",
        }
    }

    /// Collapse resolved labels onto their plain meaning.
    pub fn is_inside(&self) -> Option<bool> {
        match self {
            Label::Inside | Label::ResolvedInside => Some(true),
            Label::Outside | Label::ResolvedOutside => Some(false),
            Label::OnSurface => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Classification {
    pub label: Label,
    pub f_value: f64,
    pub used_fallback: bool,
}

/// Classify a model-space point against the shell.
pub fn classify(
    field: &ImplicitField,
    p: &Point,
    policy: FallbackPolicy,
    mesh: Option<&TriangleMesh>,
) -> Result<Classification> {
    let shell = field
        .shell()
        .ok_or_else(|| Error::Query("field has no shell interval; run a full build".into()))?;
    if policy == FallbackPolicy::Exact && mesh.is_none() {
        return Err(Error::Query("exact fallback policy requires the mesh".into()));
    }
    let unit = field.transform().to_unit(p);
    if !(0.0..=1.0).contains(&unit.x)
        || !(0.0..=1.0).contains(&unit.y)
        || !(0.0..=1.0).contains(&unit.z)
    {
        return Ok(Classification {
            label: Label::Outside,
            f_value: 0.0,
            used_fallback: false,
        });
    }
    let f = field.evaluate(&unit);
    if f < shell.eps1 {
        return Ok(Classification {
            label: Label::Inside,
            f_value: f,
            used_fallback: false,
        });
    }
    if f > shell.eps2 {
        return Ok(Classification {
            label: Label::Outside,
            f_value: f,
            used_fallback: false,
        });
    }
    match policy {
        FallbackPolicy::OnSurface => Ok(Classification {
            label: Label::OnSurface,
            f_value: f,
            used_fallback: false,
        }),
        FallbackPolicy::Exact => {
            let inside = mesh.unwrap().fast_winding_number(p) > 0.5;
            Ok(Classification {
                label: if inside {
                    Label::ResolvedInside
                } else {
                    Label::ResolvedOutside
                },
                f_value: f,
                used_fallback: true,
            })
        }
    }
}

/// Timing and accuracy summary for a batch classification.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct BatchSummary {
    pub count: usize,
    pub mean_micros: f64,
    pub fallback_rate: f64,
    /// Agreement vs. the winding oracle, when a mesh is available.
    /// `OnSurface` counts as correct iff the oracle distance magnitude is
    /// within the shell thickness.
    pub agreement: Option<f64>,
}

/// Classify a batch of model-space points in parallel (deterministic output
/// order).
pub fn classify_batch(
    field: &ImplicitField,
    points: &[Point],
    policy: FallbackPolicy,
    mesh: Option<&TriangleMesh>,
) -> Result<(Vec<Classification>, BatchSummary)> {
    let shell = field
        .shell()
        .ok_or_else(|| Error::Query("field has no shell interval; run a full build".into()))?;
    if policy == FallbackPolicy::Exact && mesh.is_none() {
        return Err(Error::Query("exact fallback policy requires the mesh".into()));
    }
    if points.is_empty() {
        return Ok((
            Vec::new(),
            BatchSummary {
                count: 0,
                mean_micros: 0.0,
                fallback_rate: 0.0,
                agreement: None,
            },
        ));
    }
    let start = Instant::now();
    let results: Vec<Classification> = points
        .par_iter()
        .map(|p| classify(field, p, policy, mesh).expect("validated above"))
        .collect();
    let elapsed = start.elapsed().as_secs_f64();
    let fallbacks = results.iter().filter(|c| c.used_fallback).count();

    let agreement = mesh.map(|m| {
        let thickness = shell.thickness();
        let correct: usize = points
            .par_iter()
            .zip(results.par_iter())
            .filter(|(p, c)| {
                let inside = m.fast_winding_number(p) > 0.5;
                match c.label.is_inside() {
                    Some(claim) => claim == inside,
                    None => {
                        let (d, _) = m.closest_point(p);
                        d <= thickness
                    }
                }
            })
            .count();
        correct as f64 / points.len() as f64
    });

    Ok((
        results,
        BatchSummary {
            count: points.len(),
            mean_micros: elapsed * 1e6 / points.len() as f64,
            fallback_rate: fallbacks as f64 / points.len() as f64,
            agreement,
        },
    ))
}

/// One row of the benchmark CSV.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BenchRow {
    pub box_size: f64,
    pub backend: &'static str,
    pub mean_micros: f64,
    pub fallback_rate: f64,
    pub agreement: f64,
}

/// Uniform points in the model bounding box scaled by `factor` about its
/// center. Deterministic in `seed`.
pub fn sample_box_points(mesh: &TriangleMesh, factor: f64, n: usize, seed: u64) -> Vec<Point> {
    let bb = mesh.aabb();
    let c = bb.center();
    let half = bb.extents() * (0.5 * factor);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            Point::new(
                c.x + half.x * rng.gen_range(-1.0..1.0),
                c.y + half.y * rng.gen_range(-1.0..1.0),
                c.z + half.z * rng.gen_range(-1.0..1.0),
            )
        })
        .collect()
}

/// Compare mean query times of (a) the exact winding oracle, (b) the
/// shell-only path, and (c) shell plus exact fallback, per sampling-box
/// size.
pub fn bench_compare(
    field: &ImplicitField,
    mesh: &TriangleMesh,
    box_sizes: &[f64],
    n: usize,
    seed: u64,
) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for (bi, &size) in box_sizes.iter().enumerate() {
        if n == 0 {
            continue;
        }
        let points = sample_box_points(mesh, size, n, seed.wrapping_add(bi as u64));

        // (a) exact oracle: winding-number sign for every point.
        let start = Instant::now();
        let oracle: Vec<bool> = points
            .par_iter()
            .map(|p| mesh.fast_winding_number(p) > 0.5)
            .collect();
        let oracle_micros = start.elapsed().as_secs_f64() * 1e6 / n as f64;
        rows.push(BenchRow {
            box_size: size,
            backend: "exact",
            mean_micros: oracle_micros,
            fallback_rate: 0.0,
            agreement: 1.0,
        });

        // (b) shell only.
        let shell = field.shell().ok_or_else(|| {
            Error::Query("field has no shell interval; run a full build".into())
        })?;
        let start = Instant::now();
        let shell_results: Vec<Classification> = points
            .par_iter()
            .map(|p| classify(field, p, FallbackPolicy::OnSurface, None).unwrap())
            .collect();
        let shell_micros = start.elapsed().as_secs_f64() * 1e6 / n as f64;
        let band = shell_results.iter().filter(|c| c.label == Label::OnSurface).count();
        let correct = points
            .iter()
            .zip(shell_results.iter())
            .zip(oracle.iter())
            .filter(|((p, c), &inside)| match c.label.is_inside() {
                Some(claim) => claim == inside,
                None => mesh.closest_point(p).0 <= shell.thickness(),
            })
            .count();
        rows.push(BenchRow {
            box_size: size,
            backend: "shell",
            mean_micros: shell_micros,
            fallback_rate: band as f64 / n as f64,
            agreement: correct as f64 / n as f64,
        });

        // (c) shell + exact fallback.
        let start = Instant::now();
        let fallback_count = points
            .par_iter()
            .map(|p| classify(field, p, FallbackPolicy::Exact, Some(mesh)).unwrap())
            .filter(|c| c.used_fallback)
            .count();
        let fb_micros = start.elapsed().as_secs_f64() * 1e6 / n as f64;
        rows.push(BenchRow {
            box_size: size,
            backend: "shell+exact",
            mean_micros: fb_micros,
            fallback_rate: fallback_count as f64 / n as f64,
            agreement: 1.0,
        });
    }
    Ok(rows)
}

/// Render benchmark rows as the CSV format
/// `boxSize,backend,meanMicros,fallbackRate,agreement`.
pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("boxSize,backend,meanMicros,fallbackRate,agreement\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.4},{:.6},{:.6}\n",
            r.box_size, r.backend, r.mean_micros, r.fallback_rate, r.agreement
        ));
    }
    out
}

/// Extent helper used by the CLI for validation messages.
pub fn model_bounds(mesh: &TriangleMesh) -> Aabb {
    mesh.aabb()
}
