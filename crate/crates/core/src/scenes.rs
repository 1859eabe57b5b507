//! Reference scenes used by the acceptance suite, the CLI examples and the
//! benchmarks. All are deterministic.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;

use crate::geometry::{CurveSet, Point, Polyline, Vertex};

fn v3(x: f64, y: f64, z: f64) -> Vector3<f64> {
    Vector3::new(x, y, z)
}

/// Unit tangents of a closed loop by central differences of its vertices.
fn loop_tangents(points: &[Point]) -> Vec<Vector3<f64>> {
    let n = points.len();
    (0..n)
        .map(|i| (points[(i + 1) % n] - points[(i + n - 1) % n]).normalize())
        .collect()
}

/// Point on a rounded rectangle of half-extents `(hx, hy)` and corner radius
/// `r`, at arc length `s` measured counter-clockwise from the left end of the
/// bottom edge.
fn rounded_rect_point(hx: f64, hy: f64, r: f64, s: f64) -> Point {
    let (w, h) = (2.0 * (hx - r), 2.0 * (hy - r));
    let quarter = 0.5 * PI * r;
    let pieces = [w, quarter, h, quarter, w, quarter, h, quarter];
    let mut s = s.rem_euclid(pieces.iter().sum());
    for (k, &len) in pieces.iter().enumerate() {
        if s <= len || k == pieces.len() - 1 {
            let (cx, cy) = (hx - r, hy - r);
            return match k {
                0 => v3(-cx + s, -hy, 0.0),
                2 => v3(hx, -cy + s, 0.0),
                4 => v3(cx - s, hy, 0.0),
                6 => v3(-hx, cy - s, 0.0),
                _ => {
                    let (ox, oy, a0) = match k {
                        1 => (cx, -cy, -0.5 * PI),
                        3 => (cx, cy, 0.0),
                        5 => (-cx, cy, 0.5 * PI),
                        _ => (-cx, -cy, PI),
                    };
                    let a = a0 + s / r;
                    v3(ox + r * a.cos(), oy + r * a.sin(), 0.0)
                }
            };
        }
        s -= len;
    }
    unreachable!()
}

/// Closed 2D rounded rectangle (2 x 1, long horizontal bottom edge) with a
/// uniform horizontal velocity constraint, sampled at `n` vertices of equal
/// arc-length spacing starting at the left end of the bottom edge.
pub fn rounded_rectangle(n: usize, eps: f64) -> CurveSet {
    let (hx, hy, r) = (1.0, 0.5, 0.25);
    let perimeter = 4.0 * (hx - r) + 4.0 * (hy - r) + TAU * r;
    let verts = (0..n)
        .map(|i| {
            let p = rounded_rect_point(hx, hy, r, perimeter * i as f64 / n as f64);
            Vertex::new(p, v3(1.0, 0.0, 0.0), eps)
        })
        .collect();
    CurveSet::new(2, 1.0, vec![Polyline::closed(verts)]).expect("valid scene")
}

/// Radius of a rabbit-like outline: a round body with two long ears.
fn bunny_radius(theta: f64) -> f64 {
    let bump = |c: f64, w: f64| {
        let mut d = (theta - c).rem_euclid(TAU);
        if d > PI {
            d -= TAU;
        }
        (-(d / w).powi(2)).exp()
    };
    0.32 + 0.05 * (theta - 0.3).cos() + 0.04 * (2.0 * theta).cos() + 0.30 * bump(1.30, 0.13) + 0.26 * bump(1.85, 0.13)
}

/// Closed bunny-like outline in the z = 0 plane, about 1 across, with a
/// constant-magnitude tangential velocity. `dimension` is 2 or 3.
pub fn bunny(n: usize, eps: f64, speed: f64, dimension: usize) -> CurveSet {
    let raw: Vec<Point> = (0..n)
        .map(|i| {
            let t = TAU * i as f64 / n as f64;
            let r = bunny_radius(t);
            v3(r * t.cos(), r * t.sin(), 0.0)
        })
        .collect();
    let (mut lo, mut hi) = (raw[0], raw[0]);
    for p in &raw {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let center = (lo + hi) * 0.5;
    let scale = 1.0 / (hi - lo).max();
    let points: Vec<Point> = raw.iter().map(|p| (p - center) * scale).collect();
    let tangents = loop_tangents(&points);
    let verts = points
        .iter()
        .zip(&tangents)
        .map(|(p, t)| Vertex::new(*p, t * speed, eps))
        .collect();
    CurveSet::new(dimension, 1.0, vec![Polyline::closed(verts)]).expect("valid scene")
}

/// Outward unit normals (in the z = 0 plane) of a counter-clockwise loop.
pub fn planar_outward_normals(cs: &CurveSet) -> Vec<Vector3<f64>> {
    let points: Vec<Point> = cs.vertices().map(|v| v.position).collect();
    loop_tangents(&points).iter().map(|t| v3(t.y, -t.x, 0.0)).collect()
}

/// Four straight curves around the origin, each with a constant-magnitude
/// velocity pointing at the center.
pub fn four_inward(dimension: usize, per_curve: usize, eps: f64) -> CurveSet {
    let (dist, half) = (1.0, 0.4);
    let polylines = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)]
        .into_iter()
        .map(|(nx, ny)| {
            let normal = v3(nx, ny, 0.0);
            let along = v3(-ny, nx, 0.0);
            let verts = (0..per_curve)
                .map(|i| {
                    let s = -half + 2.0 * half * i as f64 / (per_curve - 1) as f64;
                    Vertex::new(normal * dist + along * s, -normal, eps)
                })
                .collect();
            Polyline::open(verts)
        })
        .collect();
    CurveSet::new(dimension, 1.0, polylines).expect("valid scene")
}

/// Closed 3D loop with an out-of-plane wobble carrying a constant tangential
/// velocity and a constant angular speed about the tangent.
pub fn twisted_loop(n: usize, eps: f64, speed: f64, omega: f64) -> CurveSet {
    let points: Vec<Point> = (0..n)
        .map(|i| {
            let t = TAU * i as f64 / n as f64;
            v3(t.cos(), 0.8 * t.sin(), 0.25 * (3.0 * t).sin())
        })
        .collect();
    let tangents = loop_tangents(&points);
    let verts = points
        .iter()
        .zip(&tangents)
        .map(|(p, t)| Vertex::new(*p, t * speed, eps).with_angular_speed(omega))
        .collect();
    CurveSet::new(3, 1.0, vec![Polyline::closed(verts)]).expect("valid scene")
}

/// Open 3D spiral of `n` vertices carrying tangential velocity and angular
/// speed; sized like a scene-scale control curve.
pub fn spiral(n: usize, eps: f64) -> CurveSet {
    let turns = 3.0;
    let points: Vec<Point> = (0..n)
        .map(|i| {
            let s = i as f64 / (n - 1) as f64;
            let a = TAU * turns * s;
            let r = 0.3 + 0.7 * s;
            v3(r * a.cos(), r * a.sin(), 2.0 * s)
        })
        .collect();
    let verts = (0..n)
        .map(|i| {
            let prev = points[i.saturating_sub(1)];
            let next = points[(i + 1).min(n - 1)];
            let t = (next - prev).normalize();
            Vertex::new(points[i], t, eps).with_angular_speed(0.5)
        })
        .collect();
    CurveSet::new(3, 1.0, vec![Polyline::open(verts)]).expect("valid scene")
}
