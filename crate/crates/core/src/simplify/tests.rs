use super::*;
use crate::extremity::ShellInterval;
use crate::mesh::DistanceMode;
use crate::pipeline::{build_field, BuildParams};
use crate::shapes;

fn directed_edge_counts(mesh: &TriangleMesh) -> std::collections::HashMap<(u32, u32), u32> {
    let mut out = std::collections::HashMap::new();
    for f in mesh.faces() {
        for k in 0..3 {
            *out.entry((f[k], f[(k + 1) % 3])).or_insert(0) += 1;
        }
    }
    out
}

fn max_undirected_edge_faces(mesh: &TriangleMesh) -> u32 {
    let mut undirected: std::collections::HashMap<(u32, u32), u32> =
        std::collections::HashMap::new();
    for f in mesh.faces() {
        for k in 0..3 {
            let (a, b) = (f[k], f[(k + 1) % 3]);
            *undirected.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    undirected.values().copied().max().unwrap_or(0)
}

#[test]
fn quadric_error_vanishes_on_planes() {
    let square = shapes::grid_square(2);
    let quadrics = compute_quadrics(&square);
    // Any in-plane point has zero error against the pure face planes; the
    // boundary constraints are perpendicular to the square plane, so points
    // ON the boundary still read zero.
    let q = &quadrics[0]; // corner vertex (on two boundary edges)
    let err = q.error(&Point::new(0.0, 0.0, 0.0));
    assert!(err.abs() <= 1e-12, "{err}");
    // Off the plane the error grows.
    assert!(q.error(&Point::new(0.0, 0.0, 0.5)) > 1e-3);
}

#[test]
fn vertex_error_is_zero_at_own_position() {
    let mesh = shapes::icosphere(2);
    let quadrics = compute_quadrics(&mesh);
    for (v, q) in mesh.vertices().iter().zip(quadrics.iter()) {
        assert!(q.error(v).abs() <= 1e-12);
    }
}

#[test]
fn cube_corner_is_unique_minimizer() {
    let cube = shapes::unit_cube();
    let quadrics = compute_quadrics(&cube);
    // Corner 0 sits at the intersection of three orthogonal planes.
    let corner = cube.vertices()[0];
    let q = &quadrics[0];
    assert!(q.error(&corner).abs() <= 1e-12);
    let off = Point::new(corner.x + 0.1, corner.y, corner.z);
    assert!(q.error(&off) > 1e-4);
}

#[test]
fn optimal_contraction_solves_known_minimizer() {
    // Three orthogonal planes through m: the quadric minimum is exactly m.
    let m = Point::new(0.3, -0.2, 0.7);
    let mut q = Quadric::from_plane(&crate::geom::Vec3::new(1.0, 0.0, 0.0), -m.x, 1.0);
    q.add(&Quadric::from_plane(&crate::geom::Vec3::new(0.0, 1.0, 0.0), -m.y, 1.0));
    q.add(&Quadric::from_plane(&crate::geom::Vec3::new(0.0, 0.0, 1.0), -m.z, 1.0));
    let v = optimal_contraction(&q, &Point::new(0.0, 0.0, 0.0), &Point::new(1.0, 1.0, 1.0));
    assert!((v - m).norm() <= 1e-9, "{v:?}");
}

#[test]
fn singular_quadric_falls_back_to_midpoint() {
    // A single plane: every in-plane point has zero error; the tie must
    // break toward the midpoint.
    let q = Quadric::from_plane(&crate::geom::Vec3::new(0.0, 0.0, 1.0), 0.0, 1.0);
    let a = Point::new(0.0, 0.0, 0.0);
    let b = Point::new(1.0, 0.0, 0.0);
    let v = optimal_contraction(&q, &a, &b);
    assert_eq!(v, Point::new(0.5, 0.0, 0.0));
    // Optimality always holds against the three fallback candidates.
    let mid = Point::new(0.5, 0.0, 0.0);
    assert!(q.error(&v) <= q.error(&a).min(q.error(&b)).min(q.error(&mid)) + 1e-15);
}

#[test]
fn planar_square_simplifies_under_constraint() {
    let square = shapes::grid_square(16); // 512 faces
    let out = build_field(
        &square,
        &BuildParams {
            height: 4,
            mode: DistanceMode::Unsigned,
            ..Default::default()
        },
    )
    .unwrap();
    let (simplified, report) =
        simplify(&square, Some(&out.field), SimplifyMode::Constrained, 60).unwrap();
    assert!(simplified.faces().len() <= 60, "{}", simplified.faces().len());
    assert!(!report.early_exhausted);
    let shell = out.field.shell().unwrap();
    for f in &report.accepted_f_values {
        assert!(*f > shell.eps1 && *f < shell.eps2);
    }
}

#[test]
fn tiny_shell_starves_the_heap() {
    let mesh = shapes::icosphere(2);
    let mut out = build_field(
        &mesh,
        &BuildParams {
            height: 4,
            ..Default::default()
        },
    )
    .unwrap();
    // Artificially shrink the band so every curved-target collapse fails.
    out.field.set_shell(ShellInterval::new(-1e-9, 1e-9));
    let (simplified, report) =
        simplify(&mesh, Some(&out.field), SimplifyMode::Constrained, 40).unwrap();
    assert!(report.early_exhausted);
    assert!(simplified.faces().len() > 40);
    assert!(report.rejected_shell > 0);
}

#[test]
fn gamma_zero_reproduces_plain_qem_exactly() {
    let mesh = shapes::torus(24, 12);
    let out = build_field(
        &mesh,
        &BuildParams {
            height: 4,
            ..Default::default()
        },
    )
    .unwrap();
    let (plain, _) = simplify(&mesh, None, SimplifyMode::PlainQem, 120).unwrap();
    let (zero_gamma, _) = simplify(
        &mesh,
        Some(&out.field),
        SimplifyMode::GlobalTerm { gamma: 0.0 },
        120,
    )
    .unwrap();
    assert_eq!(plain.faces(), zero_gamma.faces());
    assert_eq!(plain.vertices().len(), zero_gamma.vertices().len());
    for (a, b) in plain.vertices().iter().zip(zero_gamma.vertices()) {
        assert_eq!(a, b, "collapse sequences must agree bitwise");
    }
}

#[test]
fn simplification_is_deterministic() {
    let mesh = shapes::icosphere(3);
    let run = || simplify(&mesh, None, SimplifyMode::PlainQem, 200).unwrap().0;
    let a = run();
    let b = run();
    assert_eq!(a.faces(), b.faces());
    for (x, y) in a.vertices().iter().zip(b.vertices()) {
        assert_eq!(x, y);
    }
}

#[test]
fn output_stays_manifold() {
    let mesh = shapes::icosphere(3);
    let (simplified, _) = simplify(&mesh, None, SimplifyMode::PlainQem, 100).unwrap();
    assert!(max_undirected_edge_faces(&simplified) <= 2);
    // A closed input stays closed: every directed edge matched.
    let directed = directed_edge_counts(&simplified);
    for (&(a, b), &c) in &directed {
        assert_eq!(c, 1);
        assert_eq!(directed.get(&(b, a)), Some(&1), "boundary edge {a}-{b} appeared");
    }
}

#[test]
fn constrained_collapses_respect_shell_post_hoc() {
    let mesh = shapes::icosphere(3);
    let out = build_field(
        &mesh,
        &BuildParams {
            height: 5,
            ..Default::default()
        },
    )
    .unwrap();
    let (_, report) = simplify(&mesh, Some(&out.field), SimplifyMode::Constrained, 300).unwrap();
    let shell = out.field.shell().unwrap();
    assert!(report.accepted_collapses > 0);
    for f in &report.accepted_f_values {
        assert!(*f > shell.eps1 && *f < shell.eps2, "audit violation: {f}");
    }
    assert_eq!(report.accepted_f_values.len(), report.accepted_collapses);
}

#[test]
fn rejects_bad_targets() {
    let mesh = shapes::icosphere(1);
    assert!(simplify(&mesh, None, SimplifyMode::PlainQem, 3).is_err());
    assert!(simplify(&mesh, None, SimplifyMode::Constrained, 40).is_err());
}
