//! Randomized invariants of the discretization building blocks.

use curveflow::geometry::{apply_mass, mass_matrix};
use curveflow::numcheck::{fd_divergence_with_norm, FdConfig};
use curveflow::{kernels, solve_dense, CurveSet, Polyline, Vertex};
use nalgebra::{DMatrix, Vector2, Vector3};
use proptest::prelude::*;

fn vec3() -> impl Strategy<Value = Vector3<f64>> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(x, y, z)| Vector3::new(x, y, z))
}

fn unit3() -> impl Strategy<Value = Vector3<f64>> {
    vec3().prop_filter("not too short", |v| v.norm() > 0.2).prop_map(|v| v.normalize())
}

/// Random-walk polyline with steps of length 0.1..1 so that no segment is
/// degenerate.
fn polyline(dimension: usize) -> impl Strategy<Value = CurveSet> {
    (
        prop::collection::vec((unit3(), 0.1..1.0f64, 0.05..0.5f64), 2..10),
        any::<bool>(),
    )
        .prop_filter_map("valid curve", move |(steps, closed)| {
            let mut p = Vector3::zeros();
            let verts: Vec<_> = steps
                .iter()
                .map(|(dir, len, eps)| {
                    let mut d = *dir;
                    if dimension == 2 {
                        d.z = 0.0;
                    }
                    let v = Vertex::new(p, Vector3::zeros(), *eps);
                    p += d * *len;
                    v
                })
                .collect();
            let closed = closed && verts.len() >= 3;
            let line = if closed { Polyline::closed(verts) } else { Polyline::open(verts) };
            CurveSet::new(dimension, 1.0, vec![line]).ok()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hat_functions_partition_unity(cs in polyline(3)) {
        for y in cs.samples() {
            prop_assert!((y.shape[0] + y.shape[1] - 1.0).abs() < 1e-15);
            prop_assert!(y.shape.iter().all(|&s| (0.0..=1.0).contains(&s)));
            let ones = vec![1.0; cs.vertex_count()];
            prop_assert!((y.interpolate(&ones) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn quadrature_weights_sum_to_length(cs in polyline(3)) {
        for (k, s) in cs.segments().iter().enumerate() {
            let total: f64 = cs.samples_of(k).iter().map(|y| y.weight).sum();
            prop_assert!((total - s.length()).abs() <= 1e-14 * s.length());
        }
    }

    #[test]
    fn quadrature_is_exact_through_degree_five(coeffs in prop::collection::vec(-3.0..3.0f64, 6), cs in polyline(2)) {
        for (k, s) in cs.segments().iter().enumerate() {
            // Integrate p(t) = sum c_j t^j along the segment in arc length.
            let exact: f64 = coeffs.iter().enumerate().map(|(j, c)| c / (j + 1) as f64).sum::<f64>() * s.length();
            let quad: f64 = cs
                .samples_of(k)
                .iter()
                .map(|y| {
                    let t = (y.position - s.start).norm() / s.length();
                    y.weight * coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
                })
                .sum();
            prop_assert!((quad - exact).abs() <= 1e-12 * (1.0 + exact.abs()) * s.length().max(1.0));
        }
    }

    #[test]
    fn mass_matrix_is_spd_and_integrates_hats(cs in polyline(3)) {
        let m = mass_matrix(&cs);
        prop_assert_eq!(&m, &m.transpose());
        prop_assert!(m.clone().cholesky().is_some());
        // Row sums are the integrals of the hat functions.
        let mut hat_integrals = vec![0.0; cs.vertex_count()];
        for s in cs.segments() {
            hat_integrals[s.a] += 0.5 * s.length();
            hat_integrals[s.b] += 0.5 * s.length();
        }
        for (i, expected) in hat_integrals.iter().enumerate() {
            prop_assert!((m.row(i).sum() - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn mass_application_matches_matrix(cs in polyline(2), seed in prop::collection::vec(-1.0..1.0f64, 10)) {
        let values: Vec<f64> = (0..cs.vertex_count()).map(|i| seed[i % seed.len()]).collect();
        let dense = mass_matrix(&cs) * nalgebra::DVector::from_vec(values.clone());
        for (a, b) in apply_mass(&cs, &values).iter().zip(dense.iter()) {
            prop_assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn stokeslets_are_symmetric_and_even(d in vec3(), eps in 0.05..1.0f64, mu in 0.1..5.0f64) {
        let s = kernels::stokeslet_3d(&d, eps, mu);
        prop_assert_eq!(s, s.transpose());
        prop_assert_eq!(s, kernels::stokeslet_3d(&-d, eps, mu));
        prop_assert!(s.symmetric_eigenvalues().iter().all(|&l| l > 0.0));
        let d2 = Vector2::new(d.x, d.y);
        let s2 = kernels::stokeslet_2d(&d2, eps, mu);
        prop_assert_eq!(s2, s2.transpose());
        prop_assert_eq!(s2, kernels::stokeslet_2d(&-d2, eps, mu));
    }

    #[test]
    fn rotlet_is_odd_and_perpendicular(d in vec3(), t in unit3(), eps in 0.05..1.0f64) {
        let u = kernels::rotlet_velocity(&d, &t, eps, 1.0);
        prop_assert_eq!(u, -kernels::rotlet_velocity(&-d, &t, eps, 1.0));
        prop_assert!(u.dot(&t).abs() <= 1e-14 * (1.0 + u.norm()));
        prop_assert!(u.dot(&d).abs() <= 1e-14 * (1.0 + u.norm() * d.norm()));
    }

    #[test]
    fn kernel_columns_are_divergence_free(d in vec3(), f in vec3(), t in unit3(), eps in 0.05..1.0f64) {
        let cfg = FdConfig::default();
        let (div, norm) = fd_divergence_with_norm(
            |x: &[f64; 3]| {
                let u = kernels::stokeslet_3d(&Vector3::new(x[0], x[1], x[2]), eps, 1.0) * f
                    + kernels::rotlet_velocity(&Vector3::new(x[0], x[1], x[2]), &t, eps, 1.0);
                [u.x, u.y, u.z]
            },
            &[d.x, d.y, d.z],
            &cfg,
        )
        .unwrap();
        prop_assert!(div.abs() <= 1e-6 * norm.max(1e-12), "div {div:e} norm {norm:e}");
    }

    #[test]
    fn lu_solves_diagonally_dominant_systems(n in 1usize..40, entries in prop::collection::vec(-1.0..1.0f64, 1600), rhs in prop::collection::vec(-1.0..1.0f64, 40)) {
        let a = DMatrix::from_fn(n, n, |i, j| entries[i * 40 + j] + if i == j { 2.0 * n as f64 } else { 0.0 });
        let b = &rhs[..n];
        let report = solve_dense(&a, b).unwrap();
        prop_assert!(report.relative_residual < 1e-13);
        let check = a.clone().lu().solve(&nalgebra::DVector::from_column_slice(b)).unwrap();
        for (x, y) in report.solution.iter().zip(check.iter()) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }
}
