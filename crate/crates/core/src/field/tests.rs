use super::*;
use crate::mesh::{DistanceMode, TriangleMesh, UnitTransform};
use crate::shapes;
use crate::svo::{build_svo, voxelize, CellKey};
use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn basis_1d_shape() {
    assert_eq!(basis_1d(0.0), 1.0);
    assert_eq!(basis_1d(0.5), 0.5);
    assert_eq!(basis_1d(-0.5), 0.5);
    assert_eq!(basis_1d(1.0), 0.0);
    assert_eq!(basis_1d(-1.0), 0.0);
    assert_eq!(basis_1d(2.0), 0.0);
    assert_eq!(basis_1d(-2.0), 0.0);
}

#[test]
fn basis_3d_products() {
    let g = Point::new(0.5, 0.5, 0.5);
    assert_eq!(basis_3d(&g, &g, 0.25), 1.0);
    let v = Point::new(0.625, 0.625, 0.625);
    assert_relative_eq!(basis_3d(&v, &g, 0.25), 0.125);
    let v = Point::new(0.75, 0.5, 0.5);
    assert_eq!(basis_3d(&v, &g, 0.25), 0.0);
}

/// A small field fixture over a sphere mesh.
fn sphere_field(height: u32) -> (ImplicitField, TriangleMesh) {
    let mesh = shapes::icosphere(2);
    let (unit, transform) = mesh.normalize_to_unit(1.0 / 16.0).unwrap();
    let svo = build_svo(&voxelize(&unit, height).unwrap(), height).unwrap();
    let system = assemble_system(&svo, &unit, DistanceMode::Signed);
    let (lambda, stats) = solve_coefficients(&system, 1e-8, 10 * system.len());
    assert!(stats.converged, "solver must converge on small fixtures");
    let offsets = system.level_offsets().to_vec();
    let lambdas: Vec<Vec<f64>> = (0..=height as usize)
        .map(|d| lambda[offsets[d]..offsets[d + 1]].to_vec())
        .collect();
    (
        ImplicitField::new(svo, lambdas, transform, DistanceMode::Signed).unwrap(),
        unit,
    )
}

#[test]
fn same_depth_block_is_identity() {
    let mesh = shapes::icosphere(1);
    let (unit, _) = mesh.normalize_to_unit(1.0 / 16.0).unwrap();
    let svo = build_svo(&voxelize(&unit, 3).unwrap(), 3).unwrap();
    let system = assemble_system(&svo, &unit, DistanceMode::Signed);
    let offsets = system.level_offsets().to_vec();
    let depth_of = |idx: u32| -> usize {
        (0..offsets.len() - 1)
            .find(|&d| (idx as usize) >= offsets[d] && (idx as usize) < offsets[d + 1])
            .unwrap()
    };
    for r in 0..system.len() {
        let rd = depth_of(r as u32);
        let mut diag = None;
        for (c, v) in system.row(r) {
            if depth_of(c) == rd {
                assert_eq!(c as usize, r, "same-depth off-diagonal must vanish");
                diag = Some(v);
            }
        }
        assert_eq!(diag, Some(1.0), "each basis is 1 at its own center");
    }
}

#[test]
fn coincident_cross_depth_entries_are_one() {
    // K=2 single-leaf SVO: the origin corner exists at depths 0 and 1 at the
    // same position.
    let leaf = CellKey::encode(0, 0, 0, 0, 2).unwrap();
    let svo = build_svo(&[leaf], 2).unwrap();
    let verts = vec![
        Point::new(0.1, 0.1, 0.1),
        Point::new(0.2, 0.1, 0.1),
        Point::new(0.1, 0.2, 0.1),
    ];
    let (mesh, _) = TriangleMesh::from_parts(verts, vec![[0, 1, 2]]).unwrap();
    let system = assemble_system(&svo, &mesh, DistanceMode::Unsigned);
    let offsets = system.level_offsets().to_vec();
    // Row of the depth-0 origin corner, column of the depth-1 origin corner.
    let r0 = offsets[0] + svo.grid_rank(0, 0).unwrap() as usize;
    let c1 = (offsets[1] + svo.grid_rank(1, 0).unwrap() as usize) as u32;
    let entry = system.row(r0).find(|&(c, _)| c == c1).map(|(_, v)| v);
    assert_eq!(entry, Some(1.0));
    // And symmetrically for coincident positions.
    let r1 = offsets[1] + svo.grid_rank(1, 0).unwrap() as usize;
    let c0 = (offsets[0] + svo.grid_rank(0, 0).unwrap() as usize) as u32;
    let entry = system.row(r1).find(|&(c, _)| c == c0).map(|(_, v)| v);
    assert_eq!(entry, Some(1.0));
}

#[test]
fn assembly_matches_dense_oracle() {
    // Brute-force double loop over all grid-point pairs.
    let mesh = shapes::icosphere(1);
    let (unit, _) = mesh.normalize_to_unit(1.0 / 16.0).unwrap();
    let height = 3;
    let svo = build_svo(&voxelize(&unit, height).unwrap(), height).unwrap();
    let system = assemble_system(&svo, &unit, DistanceMode::Signed);

    let mut points: Vec<(u32, Point)> = Vec::new();
    for depth in 0..=height {
        for &m in svo.grid_mortons(depth) {
            points.push((depth, svo.grid_position(depth, m)));
        }
    }
    assert_eq!(points.len(), system.len());
    for (r, &(_, gp)) in points.iter().enumerate() {
        let mut dense: Vec<(u32, f64)> = Vec::new();
        for (c, &(cd, gq)) in points.iter().enumerate() {
            let w = svo.cell_width(cd);
            let v = basis_3d(&gp, &gq, w);
            if v != 0.0 {
                dense.push((c as u32, v));
            }
        }
        let sparse: Vec<(u32, f64)> = system.row(r).collect();
        assert_eq!(sparse.len(), dense.len(), "row {r} sparsity differs");
        for (s, d) in sparse.iter().zip(dense.iter()) {
            assert_eq!(s.0, d.0);
            assert!((s.1 - d.1).abs() <= 1e-12);
        }
    }
}

#[test]
fn identity_system_solves_immediately() {
    let n = 64;
    let triplets: Vec<(u32, u32, f64)> = (0..n as u32).map(|i| (i, i, 1.0)).collect();
    let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
    let system = SparseSystem::from_triplets(n, &triplets, rhs.clone());
    let (x, stats) = solve_coefficients(&system, 1e-12, 100);
    assert!(stats.iterations <= 2);
    for (a, b) in x.iter().zip(rhs.iter()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn duplicate_rows_stay_consistent() {
    // Singular but consistent: duplicated equations.
    let triplets = vec![
        (0u32, 0u32, 1.0),
        (0, 1, 1.0),
        (1, 0, 1.0),
        (1, 1, 1.0),
        (2, 2, 1.0),
    ];
    let system = SparseSystem::from_triplets(3, &triplets, vec![2.0, 2.0, 5.0]);
    let (x, stats) = solve_coefficients(&system, 1e-10, 1000);
    assert!(stats.converged);
    assert!((x[0] + x[1] - 2.0).abs() < 1e-9);
    assert!((x[2] - 5.0).abs() < 1e-9);
}

#[test]
fn random_sparse_system_matches_dense_least_squares() {
    use nalgebra::{DMatrix, DVector};
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for n in [40usize, 120, 200] {
        let mut triplets = Vec::new();
        for i in 0..n as u32 {
            triplets.push((i, i, 1.0));
            for _ in 0..4 {
                let j = rng.gen_range(0..n as u32);
                triplets.push((i, j, rng.gen_range(-0.5..0.5)));
            }
        }
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let system = SparseSystem::from_triplets(n, &triplets, rhs.clone());
        let (x, _) = solve_coefficients(&system, 1e-12, 40 * n);

        let mut dense = DMatrix::zeros(n, n);
        for &(r, c, v) in &triplets {
            dense[(r as usize, c as usize)] += v;
        }
        let b = DVector::from_vec(rhs);
        let svd = dense.clone().svd(true, true);
        let x_ref = svd.solve(&b, 1e-12).unwrap();
        let res_cgls = (&dense * DVector::from_vec(x.clone()) - &b).norm();
        let res_ref = (&dense * x_ref - &b).norm();
        assert!(
            (res_cgls - res_ref).abs() <= 1e-8 * (1.0 + res_ref),
            "n={n}: cgls residual {res_cgls}, svd residual {res_ref}"
        );
    }
}

#[test]
fn partition_of_unity_on_full_grid() {
    // All depth-0 cells of a K=2 tree, coefficients 1 at depth 0.
    let height = 2u32;
    let mut leaves = Vec::new();
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                leaves.push(CellKey::encode(i, j, k, 0, height).unwrap());
            }
        }
    }
    let svo = build_svo(&leaves, height).unwrap();
    let lambdas: Vec<Vec<f64>> = (0..=height)
        .map(|d| {
            let n = svo.grid_point_count(d);
            if d == 0 {
                vec![1.0; n]
            } else {
                vec![0.0; n]
            }
        })
        .collect();
    let field = ImplicitField::new(
        svo,
        lambdas,
        UnitTransform::IDENTITY,
        DistanceMode::Signed,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..500 {
        let p = Point::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>());
        assert!((field.evaluate(&p) - 1.0).abs() <= 1e-12, "at {p:?}");
    }
    // Boundary points included.
    for p in [
        Point::new(0.0, 0.0, 0.0),
        Point::new(1.0, 1.0, 1.0),
        Point::new(0.5, 0.0, 1.0),
    ] {
        assert!((field.evaluate(&p) - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn zero_coefficients_zero_field() {
    let (field, _) = {
        let mesh = shapes::icosphere(1);
        let (unit, transform) = mesh.normalize_to_unit(1.0 / 16.0).unwrap();
        let svo = build_svo(&voxelize(&unit, 2).unwrap(), 2).unwrap();
        let lambdas: Vec<Vec<f64>> = (0..=2)
            .map(|d| vec![0.0; svo.grid_point_count(d)])
            .collect();
        (
            ImplicitField::new(svo, lambdas, transform, DistanceMode::Signed).unwrap(),
            unit,
        )
    };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let p = Point::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>());
        assert_eq!(field.evaluate(&p), 0.0);
    }
}

#[test]
fn evaluate_matches_exhaustive_sum() {
    let (field, _) = sphere_field(3);
    let svo = field.svo();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..1000 {
        let p = Point::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>());
        let mut brute = 0.0;
        for depth in 0..=svo.height() {
            let w = svo.cell_width(depth);
            for (rank, &m) in svo.grid_mortons(depth).iter().enumerate() {
                let g = svo.grid_position(depth, m);
                brute += field.lambdas(depth)[rank] * basis_3d(&p, &g, w);
            }
        }
        let fast = field.evaluate(&p);
        assert!(
            (fast - brute).abs() <= 1e-12,
            "at {p:?}: fast {fast}, brute {brute}"
        );
    }
}

#[test]
fn outside_root_evaluates_to_zero() {
    let (field, _) = sphere_field(2);
    assert_eq!(field.evaluate(&Point::new(2.0, 0.5, 0.5)), 0.0);
    assert_eq!(field.evaluate(&Point::new(-0.1, 0.5, 0.5)), 0.0);
}

#[test]
fn grid_interpolation_residual_small() {
    let mesh = shapes::icosphere(2);
    let (unit, _) = mesh.normalize_to_unit(1.0 / 16.0).unwrap();
    let svo = build_svo(&voxelize(&unit, 4).unwrap(), 4).unwrap();
    let system = assemble_system(&svo, &unit, DistanceMode::Signed);
    let (lambda, stats) = solve_coefficients(&system, 1e-8, 10 * system.len());
    assert!(stats.relative_residual <= 10.0 * 1e-8 + 1e-9, "{stats:?}");
    assert!(lambda.iter().all(|v| v.is_finite()));
}

#[test]
fn trilinear_constant_and_reconstruction() {
    let (field, _) = sphere_field(3);
    let svo = field.svo();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let cells: Vec<CellKey> = svo.cells(0).collect();
    for _ in 0..50 {
        let cell = cells[rng.gen_range(0..cells.len())];
        let t = field.cell_trilinear_coeffs(&cell).unwrap();
        let (i, j, k) = cell.lattice();
        let w = svo.cell_width(0);
        for _ in 0..100 {
            let (x, y, z) = (rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>());
            let p = Point::new((i as f64 + x) * w, (j as f64 + y) * w, (k as f64 + z) * w);
            let reconstructed = t[0]
                + t[1] * x
                + t[2] * y
                + t[3] * z
                + t[4] * x * y
                + t[5] * y * z
                + t[6] * x * z
                + t[7] * x * y * z;
            let direct = field.evaluate(&p);
            assert!(
                (reconstructed - direct).abs() <= 1e-12,
                "cell {cell:?} at ({x},{y},{z}): {reconstructed} vs {direct}"
            );
        }
    }

    // Constant corner values produce a constant-only coefficient vector.
    let t = corner_values_to_trilinear(&[3.25; 8]);
    assert_eq!(t, [3.25, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    // Corner values equal to the local x coordinate produce a pure ramp.
    let mut c = [0.0f64; 8];
    for (n, v) in c.iter_mut().enumerate() {
        *v = (n & 1) as f64;
    }
    assert_eq!(corner_values_to_trilinear(&c), [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
}

#[test]
fn evaluate_is_locally_lipschitz() {
    let (field, _) = sphere_field(3);
    let svo = field.svo();
    let w = svo.cell_width(0);
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let cells: Vec<CellKey> = svo.cells(0).collect();
    for _ in 0..200 {
        let cell = cells[rng.gen_range(0..cells.len())];
        let t = field.cell_trilinear_coeffs(&cell).unwrap();
        let lipschitz = (t[1].abs() + t[2].abs() + t[3].abs() + t[4].abs() + t[5].abs()
            + t[6].abs()
            + 2.0 * t[7].abs())
            / w;
        let (i, j, k) = cell.lattice();
        let p = Point::new(
            (i as f64 + rng.gen_range(0.2..0.8)) * w,
            (j as f64 + rng.gen_range(0.2..0.8)) * w,
            (k as f64 + rng.gen_range(0.2..0.8)) * w,
        );
        let delta = 1e-9;
        let q = Point::new(p.x + delta, p.y, p.z);
        assert!((field.evaluate(&q) - field.evaluate(&p)).abs() <= lipschitz * delta + 1e-15);
    }
}

#[test]
fn eval_cache_agrees_with_plain_path() {
    let (mut field, unit) = sphere_field(4);
    let plain: Vec<f64> = unit
        .sample_surface(500, 77)
        .iter()
        .map(|s| field.evaluate(&s.position))
        .collect();
    field.enable_eval_cache();
    assert!(field.has_eval_cache());
    for (s, &expect) in unit.sample_surface(500, 77).iter().zip(plain.iter()) {
        let got = field.evaluate(&s.position);
        assert!((got - expect).abs() <= 1e-13, "{got} vs {expect}");
    }
}

#[test]
fn its_round_trip_bit_exact() {
    let (mut field, _) = sphere_field(3);
    field.set_shell(crate::extremity::ShellInterval::new(-0.01625, 0.0153));
    let dir = std::env::temp_dir().join("its-core-field-tests");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("sphere.its");
    save_its(&field, &path).unwrap();
    let loaded = load_its(&path).unwrap();

    assert_eq!(loaded.height(), field.height());
    assert_eq!(loaded.mode(), field.mode());
    assert_eq!(loaded.transform(), field.transform());
    assert_eq!(loaded.shell(), field.shell());
    for depth in 0..=field.height() {
        assert_eq!(loaded.svo().grid_mortons(depth), field.svo().grid_mortons(depth));
        assert_eq!(loaded.lambdas(depth), field.lambdas(depth));
    }
    // Loaded fields evaluate identically.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let p = Point::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>());
        assert_eq!(field.evaluate(&p), loaded.evaluate(&p));
    }
    // Saving the loaded field reproduces the bytes.
    let path2 = dir.join("sphere2.its");
    save_its(&loaded, &path2).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
}

#[test]
fn its_load_rejects_corruption() {
    let (field, _) = sphere_field(2);
    let dir = std::env::temp_dir().join("its-core-field-tests");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("corrupt.its");
    save_its(&field, &path).unwrap();

    let mut bytes = std::fs::read(&path).unwrap();
    bytes[0] = b'X';
    std::fs::write(&path, &bytes).unwrap();
    assert!(load_its(&path).is_err(), "bad magic must fail");

    let good = {
        let path = dir.join("good.its");
        save_its(&field, &path).unwrap();
        std::fs::read(&path).unwrap()
    };
    let truncated = &good[..good.len() - 7];
    let tpath = dir.join("trunc.its");
    std::fs::write(&tpath, truncated).unwrap();
    assert!(load_its(&tpath).is_err(), "truncation must fail");
}
