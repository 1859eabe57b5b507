//! Field reconstruction against independent oracles, and the structural
//! properties every solved field must have.

mod common;

use common::{random_curveset, random_point_away, random_unit, random_vec};
use curveflow::field::velocity_from_samples;
use curveflow::numcheck::{curl_of, fd_divergence_with_norm, fd_jacobian, FdConfig};
use curveflow::{kernels, sample_grid, solve, CurveSet, GridSpec, Point, Polyline, Representation, Solution, SolveMode, Vertex};
use nalgebra::{Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn v3(x: f64, y: f64, z: f64) -> Vector3<f64> {
    Vector3::new(x, y, z)
}

/// Largest pointwise difference, normalized by the largest reference
/// magnitude over the same points.
fn normwise(a: &[Vector3<f64>], b: &[Vector3<f64>]) -> f64 {
    let scale = b.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

fn field(sol: &Solution, points: &[Point]) -> Vec<Vector3<f64>> {
    points.iter().map(|p| sol.velocity_at(p)).collect()
}

fn points_near(rng: &mut ChaCha8Rng, cs: &CurveSet, n: usize) -> Vec<Point> {
    (0..n).map(|_| random_point_away(rng, cs, cs.min_eps())).collect()
}

#[test]
fn zero_unknowns_give_zero_field() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cs = random_curveset(&mut rng, 3);
    let n = cs.vertex_count();
    let sol = Solution::new(cs, vec![Vector3::zeros(); n], None, SolveMode::Coupled, Representation::CurveIntegral).unwrap();
    for _ in 0..10 {
        let x = random_vec(&mut rng, 2.0);
        assert_eq!(sol.velocity_at(&x), Vector3::zeros());
        assert_eq!(sol.angular_velocity_at(&x).unwrap(), Vector3::zeros());
    }
}

#[test]
fn single_segment_matches_fine_line_integral() {
    let (a, b) = (v3(0.1, -0.05, 0.2), v3(0.25, 0.05, 0.1));
    let (ea, eb) = (0.3, 0.4);
    let (fa, fb) = (v3(1.0, -0.5, 0.25), v3(-0.3, 0.8, 0.6));
    let (ta, tb) = (0.7, -0.2);
    let cs = CurveSet::new(
        3,
        1.3,
        vec![Polyline::open(vec![Vertex::new(a, Vector3::zeros(), ea), Vertex::new(b, Vector3::zeros(), eb)])],
    )
    .unwrap();
    let sol = Solution::new(cs, vec![fa, fb], Some(vec![ta, tb]), SolveMode::Coupled, Representation::CurveIntegral).unwrap();

    let panels = 1_000_000;
    let tangent = (b - a).normalize();
    let h = (b - a).norm() / panels as f64;
    for x in [v3(1.2, 0.4, -0.3), v3(-0.6, 0.9, 0.8), v3(0.2, -1.0, 0.5)] {
        let mut u = Vector3::zeros();
        for i in 0..=panels {
            let t = i as f64 / panels as f64;
            let w = if i == 0 || i == panels { 0.5 * h } else { h };
            let y = a + (b - a) * t;
            let eps = (1.0 - t) * ea + t * eb;
            let f = fa * (1.0 - t) + fb * t;
            let tau = ta * (1.0 - t) + tb * t;
            u += (kernels::stokeslet_3d(&(x - y), eps, 1.3) * f + kernels::rotlet_velocity(&(x - y), &tangent, eps, 1.3) * tau) * w;
        }
        let err = (sol.velocity_at(&x) - u).norm() / u.norm();
        assert!(err <= 1e-6, "{err:.3e}");
    }
}

#[test]
fn cached_sources_match_reference_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for dim in [2, 3] {
        let cs = random_curveset(&mut rng, dim);
        let mode = if dim == 3 { SolveMode::Coupled } else { SolveMode::VelocityOnly };
        let sol = solve(&cs, mode).unwrap();
        for x in points_near(&mut rng, &cs, 20) {
            let (fast, slow) = (sol.velocity_at(&x), velocity_from_samples(&sol, &x));
            assert!((fast - slow).norm() <= 1e-13 * slow.norm().max(1e-300), "{fast} vs {slow}");
        }
    }
}

#[test]
fn angular_velocity_is_half_the_curl() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cs = random_curveset(&mut rng, 3);
    let sol = solve(&cs, SolveMode::Coupled).unwrap();
    let cfg = FdConfig::for_scene(cs.bbox_diagonal());
    let f = |p: &[f64; 3]| {
        let u = sol.velocity_at(&v3(p[0], p[1], p[2]));
        [u.x, u.y, u.z]
    };
    let mut worst: f64 = 0.0;
    for x in points_near(&mut rng, &cs, 20) {
        let curl = curl_of(&fd_jacobian(f, &[x.x, x.y, x.z], &cfg).unwrap());
        let expected = v3(curl[0], curl[1], curl[2]) * 0.5;
        let w = sol.angular_velocity_at(&x).unwrap();
        worst = worst.max((w - expected).norm() / expected.norm());
    }
    assert!(worst <= 1e-4, "{worst:.3e}");
}

#[test]
fn angular_velocity_rejects_2d() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let sol = solve(&random_curveset(&mut rng, 2), SolveMode::VelocityOnly).unwrap();
    assert!(sol.angular_velocity_at(&Point::zeros()).is_err());
    assert!(sol.sample_points(&[Point::zeros()], true).is_err());
}

#[test]
fn solved_fields_are_divergence_free() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for dim in [2, 3] {
        for _ in 0..3 {
            let cs = random_curveset(&mut rng, dim);
            let mode = if dim == 3 { SolveMode::Coupled } else { SolveMode::VelocityOnly };
            let sol = solve(&cs, mode).unwrap();
            let cfg = FdConfig::for_scene(cs.bbox_diagonal());
            for x in points_near(&mut rng, &cs, 20) {
                let (div, norm) = if dim == 2 {
                    fd_divergence_with_norm(
                        |p: &[f64; 2]| {
                            let u = sol.velocity_at(&v3(p[0], p[1], 0.0));
                            [u.x, u.y]
                        },
                        &[x.x, x.y],
                        &cfg,
                    )
                    .unwrap()
                } else {
                    fd_divergence_with_norm(
                        |p: &[f64; 3]| {
                            let u = sol.velocity_at(&v3(p[0], p[1], p[2]));
                            [u.x, u.y, u.z]
                        },
                        &[x.x, x.y, x.z],
                        &cfg,
                    )
                    .unwrap()
                };
                assert!(div.abs() <= 1e-4 * (norm + 1e-12), "dim {dim}: div {div:.3e}, |J| {norm:.3e}");
            }
        }
    }
}

#[test]
fn divergence_estimate_converges_at_second_order_without_extrapolation() {
    // Without Richardson, halving h should cut the (truncation-dominated)
    // divergence estimate by about four.
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cs = random_curveset(&mut rng, 3);
    let sol = solve(&cs, SolveMode::Coupled).unwrap();
    let x = random_point_away(&mut rng, &cs, cs.max_eps());
    let f = |p: &[f64; 3]| {
        let u = sol.velocity_at(&v3(p[0], p[1], p[2]));
        [u.x, u.y, u.z]
    };
    let at = |h: f64| fd_divergence_with_norm(f, &[x.x, x.y, x.z], &FdConfig::new(h, false)).unwrap().0;
    let (d1, d2) = (at(4e-2), at(2e-2));
    let ratio = d1 / d2;
    assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn translation_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for dim in [2, 3] {
        let cs = random_curveset(&mut rng, dim);
        let mode = if dim == 3 { SolveMode::Coupled } else { SolveMode::VelocityOnly };
        let mut offset = random_vec(&mut rng, 2.0);
        if dim == 2 {
            offset.z = 0.0;
        }
        let moved = cs
            .map_vertices(|v| Vertex { position: v.position + offset, ..*v })
            .unwrap();
        let points = points_near(&mut rng, &cs, 30);
        let shifted: Vec<_> = points.iter().map(|p| p + offset).collect();
        let err = normwise(&field(&solve(&moved, mode).unwrap(), &shifted), &field(&solve(&cs, mode).unwrap(), &points));
        assert!(err <= 1e-12, "dim {dim}: {err:.3e}");
    }
}

#[test]
fn rotation_equivariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..3 {
        let cs = random_curveset(&mut rng, 3);
        let rot = Rotation3::new(random_unit(&mut rng) * rng.gen_range(0.1..3.0));
        let turned = cs
            .map_vertices(|v| Vertex {
                position: rot * v.position,
                velocity: rot * v.velocity,
                ..*v
            })
            .unwrap();
        let points = points_near(&mut rng, &cs, 30);
        let rotated_points: Vec<_> = points.iter().map(|p| rot * p).collect();
        let sol = solve(&cs, SolveMode::Coupled).unwrap();
        let expected: Vec<_> = field(&sol, &points).iter().map(|u| rot * u).collect();
        let got = field(&solve(&turned, SolveMode::Coupled).unwrap(), &rotated_points);
        let err = normwise(&got, &expected);
        assert!(err <= 1e-10, "{err:.3e}");
        let w_expected: Vec<_> = points.iter().map(|p| rot * sol.angular_velocity_at(p).unwrap()).collect();
        let turned_sol = solve(&turned, SolveMode::Coupled).unwrap();
        let w_got: Vec<_> = rotated_points.iter().map(|p| turned_sol.angular_velocity_at(p).unwrap()).collect();
        assert!(normwise(&w_got, &w_expected) <= 1e-10);
    }
}

#[test]
fn linearity_in_constraints() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for dim in [2, 3] {
        let base = random_curveset(&mut rng, dim);
        let mode = if dim == 3 { SolveMode::Coupled } else { SolveMode::VelocityOnly };
        let alt = base
            .map_vertices(|v| {
                let mut u = random_vec(&mut rng, 1.0);
                if dim == 2 {
                    u.z = 0.0;
                }
                Vertex {
                    velocity: u,
                    angular_speed: (dim == 3).then(|| rng.gen_range(-1.0..1.0)),
                    ..*v
                }
            })
            .unwrap();
        let (alpha, beta) = (1.7, -0.6);
        let combo = {
            let mut pairs = base.vertices().zip(alt.vertices()).map(|(a, b)| {
                (
                    a.velocity * alpha + b.velocity * beta,
                    (dim == 3).then(|| a.angular_speed.unwrap_or(0.0) * alpha + b.angular_speed.unwrap_or(0.0) * beta),
                )
            });
            base.map_vertices(|v| {
                let (u, w) = pairs.next().unwrap();
                Vertex {
                    velocity: u,
                    angular_speed: w,
                    ..*v
                }
            })
            .unwrap()
        };
        let points = points_near(&mut rng, &base, 30);
        let (fa, fb) = (field(&solve(&base, mode).unwrap(), &points), field(&solve(&alt, mode).unwrap(), &points));
        let expected: Vec<_> = fa.iter().zip(&fb).map(|(a, b)| a * alpha + b * beta).collect();
        let err = normwise(&field(&solve(&combo, mode).unwrap(), &points), &expected);
        assert!(err <= 1e-12, "dim {dim}: {err:.3e}");
    }
}

#[test]
fn superposition_of_fixed_forces() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (a, b) = (random_curveset(&mut rng, 3), random_curveset(&mut rng, 3));
    let b = b.map_vertices(|v| Vertex { position: v.position + v3(3.0, 0.0, 0.0), ..*v }).unwrap();
    let b = CurveSet::new(3, a.mu(), b.polylines().to_vec()).unwrap();
    let (sa, sb) = (solve(&a, SolveMode::Coupled).unwrap(), solve(&b, SolveMode::Coupled).unwrap());
    let union = CurveSet::new(3, a.mu(), a.polylines().iter().chain(b.polylines()).cloned().collect()).unwrap();
    let forces = sa.forces().iter().chain(sb.forces()).copied().collect();
    let torques = sa.torques().unwrap().iter().chain(sb.torques().unwrap()).copied().collect();
    let joint = Solution::new(union, forces, Some(torques), SolveMode::Coupled, Representation::CurveIntegral).unwrap();
    for _ in 0..20 {
        let x = random_vec(&mut rng, 3.0);
        let (sum, u) = (sa.velocity_at(&x) + sb.velocity_at(&x), joint.velocity_at(&x));
        assert!((sum - u).norm() <= 1e-12 * u.norm().max(1e-300));
    }
}

#[test]
fn decoupled_is_sum_of_single_channel_solves() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..3 {
        let cs = random_curveset(&mut rng, 3);
        let dec = solve(&cs, SolveMode::Decoupled).unwrap();
        let vel = solve(&cs, SolveMode::VelocityOnly).unwrap();
        let ang = solve(&cs, SolveMode::AngularOnly).unwrap();
        for x in points_near(&mut rng, &cs, 30) {
            let (u, sum) = (dec.velocity_at(&x), vel.velocity_at(&x) + ang.velocity_at(&x));
            assert!((u - sum).norm() <= 1e-12 * sum.norm(), "{u} vs {sum}");
        }
    }
}

#[test]
fn doubling_unknowns_doubles_fields() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let cs = random_curveset(&mut rng, 3);
    let sol = solve(&cs, SolveMode::Coupled).unwrap();
    let twice = Solution::new(
        cs.clone(),
        sol.forces().iter().map(|f| f * 2.0).collect(),
        Some(sol.torques().unwrap().iter().map(|t| t * 2.0).collect()),
        SolveMode::Coupled,
        Representation::CurveIntegral,
    )
    .unwrap();
    for x in points_near(&mut rng, &cs, 10) {
        assert_eq!(twice.velocity_at(&x), sol.velocity_at(&x) * 2.0);
        assert_eq!(twice.angular_velocity_at(&x).unwrap(), sol.angular_velocity_at(&x).unwrap() * 2.0);
    }
}

#[test]
fn grid_corners_and_exact_agreement() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let cs = random_curveset(&mut rng, 3);
    let sol = solve(&cs, SolveMode::Coupled).unwrap();
    let grid = GridSpec::new(vec![-1.0, -0.5, 0.0], vec![1.0, 0.5, 2.0], vec![2, 2, 2]);
    let samples = sample_grid(&sol, &grid, true).unwrap();
    assert_eq!(samples.len(), 8);
    let mut corners: Vec<_> = samples.iter().map(|s| (s.position.x, s.position.y, s.position.z)).collect();
    corners.dedup();
    assert_eq!(corners.len(), 8);
    assert!(samples
        .iter()
        .all(|s| [-1.0, 1.0].contains(&s.position.x) && [-0.5, 0.5].contains(&s.position.y) && [0.0, 2.0].contains(&s.position.z)));

    let grid = GridSpec::new(vec![-1.0, -1.0, -1.0], vec![1.0, 1.0, 1.0], vec![4, 3, 5]);
    for s in sample_grid(&sol, &grid, true).unwrap() {
        assert_eq!(s.velocity, sol.velocity_at(&s.position));
        assert_eq!(s.angular_velocity.unwrap(), sol.angular_velocity_at(&s.position).unwrap());
    }
}

#[test]
fn point_evaluation_is_order_preserving() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let cs = random_curveset(&mut rng, 2);
    let sol = solve(&cs, SolveMode::VelocityOnly).unwrap();
    let points: Vec<_> = (0..2000).map(|_| random_vec(&mut rng, 2.0).component_mul(&v3(1.0, 1.0, 0.0))).collect();
    let samples = sol.sample_points(&points, false).unwrap();
    for (p, s) in points.iter().zip(&samples) {
        assert_eq!(s.position, *p);
        assert_eq!(s.velocity, sol.velocity_at(p));
        assert!(s.angular_velocity.is_none());
    }
}
