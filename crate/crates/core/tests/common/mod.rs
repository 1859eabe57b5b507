#![allow(dead_code)]

use curveflow::assembly::DofLayout;
use curveflow::geometry::Segment;
use curveflow::{kernels, CurveSet, Point, Polyline, Vertex};
use nalgebra::{DMatrix, Vector3};
use rand::Rng;

pub fn random_unit(rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n < 1.0 {
            return v / n;
        }
    }
}

pub fn random_vec(rng: &mut impl Rng, scale: f64) -> Vector3<f64> {
    Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale
}

fn flatten(v: Vector3<f64>, dimension: usize) -> Vector3<f64> {
    if dimension == 2 {
        Vector3::new(v.x, v.y, 0.0)
    } else {
        v
    }
}

/// One or two random-walk polylines with random constraints and
/// per-vertex eps between 0.08 and 0.25.
pub fn random_curveset(rng: &mut impl Rng, dimension: usize) -> CurveSet {
    let curves = rng.gen_range(1..=2);
    let polylines = (0..curves)
        .map(|_| {
            let n = rng.gen_range(3..=8);
            let closed = n >= 4 && rng.gen_bool(0.3);
            let mut p = flatten(random_vec(rng, 1.0), dimension);
            let mut dir = flatten(random_unit(rng), dimension).normalize();
            let verts = (0..n)
                .map(|_| {
                    let mut v = Vertex::new(p, flatten(random_vec(rng, 1.0), dimension), rng.gen_range(0.08..0.25));
                    if dimension == 3 && rng.gen_bool(0.7) {
                        v = v.with_angular_speed(rng.gen_range(-1.0..1.0));
                    }
                    let turn = flatten(random_vec(rng, 0.8), dimension);
                    dir = (dir + turn).normalize();
                    p += dir * rng.gen_range(0.2..0.5);
                    v
                })
                .collect();
            Polyline { vertices: verts, closed }
        })
        .collect();
    CurveSet::new(dimension, rng.gen_range(0.5..2.0), polylines).expect("random scene is valid")
}

/// Random point in the padded bounding box at least `min_dist` from every
/// curve; 2D points have z = 0.
pub fn random_point_away(rng: &mut impl Rng, cs: &CurveSet, min_dist: f64) -> Point {
    let (lo, hi) = cs.bounding_box();
    let pad = 0.5;
    loop {
        let mut p = Point::zeros();
        for k in 0..cs.dimension() {
            p[k] = rng.gen_range(lo[k] - pad..hi[k] + pad);
        }
        if cs.distance_to(&p) >= min_dist {
            return p;
        }
    }
}

pub fn arr3(v: Vector3<f64>) -> [f64; 3] {
    [v.x, v.y, v.z]
}

/// Trapezoid nodes on a segment: (position, weight, hat values, eps).
pub fn panel_nodes(s: &Segment, panels: usize) -> Vec<(Vector3<f64>, f64, [f64; 2], f64)> {
    let h = s.length() / panels as f64;
    (0..=panels)
        .map(|i| {
            let t = i as f64 / panels as f64;
            let w = if i == 0 || i == panels { 0.5 * h } else { h };
            (s.point_at(t), w, [1.0 - t, t], (1.0 - t) * s.eps_a + t * s.eps_b)
        })
        .collect()
}

pub fn brute_force_matrix(cs: &CurveSet, layout: &DofLayout, panels: usize) -> DMatrix<f64> {
    let d = cs.dimension();
    let mu = cs.mu();
    let mut m = DMatrix::zeros(layout.size(), layout.size());
    let nodes: Vec<_> = cs.segments().iter().map(|s| panel_nodes(s, panels)).collect();
    for (sx, xs) in cs.segments().iter().zip(&nodes) {
        let tx = (sx.end - sx.start).normalize();
        for (sy, ys) in cs.segments().iter().zip(&nodes) {
            let ty = (sy.end - sy.start).normalize();
            for &(x, wx, px, _) in xs {
                for &(y, wy, py, eps) in ys {
                    let disp = x - y;
                    let w = wx * wy;
                    let mut ss = [[0.0; 3]; 3];
                    if layout.force {
                        if d == 3 {
                            let s = kernels::stokeslet_3d(&disp, eps, mu);
                            for r in 0..3 {
                                for k in 0..3 {
                                    ss[r][k] = s[(r, k)];
                                }
                            }
                        } else {
                            let s = kernels::stokeslet_2d(&disp.xy(), eps, mu);
                            for r in 0..2 {
                                for k in 0..2 {
                                    ss[r][k] = s[(r, k)];
                                }
                            }
                        }
                    }
                    for (a, &vi) in [sx.a, sx.b].iter().enumerate() {
                        for (b, &vj) in [sy.a, sy.b].iter().enumerate() {
                            let c = w * px[a] * py[b];
                            if layout.force {
                                for r in 0..d {
                                    for k in 0..d {
                                        m[(layout.force_index(vi, r), layout.force_index(vj, k))] += c * ss[r][k];
                                    }
                                }
                            }
                            if layout.force && layout.torque {
                                let rot = kernels::rotlet_velocity(&disp, &ty, eps, mu);
                                let fta = kernels::force_to_angular(&disp, &tx, eps, mu);
                                for r in 0..d {
                                    m[(layout.force_index(vi, r), layout.torque_index(vj))] += c * rot[r];
                                    m[(layout.torque_index(vi), layout.force_index(vj, r))] += c * fta[r];
                                }
                            }
                            if layout.torque {
                                m[(layout.torque_index(vi), layout.torque_index(vj))] +=
                                    c * kernels::torque_to_angular(&disp, &tx, &ty, eps, mu);
                            }
                        }
                    }
                }
            }
        }
    }
    m
}

/// Entrywise relative error. Entries the oracle puts below `1e-3` of the
/// largest entry (structural zeros and off-diagonals that nearly cancel) are
/// compared against that floor instead of their own size.
pub fn worst_relative(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let floor = 1e-3 * b.amax();
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs() / y.abs().max(floor))
        .fold(0.0, f64::max)
}
