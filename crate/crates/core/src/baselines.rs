//! Collocation and point-force discretizations, and the residual profile
//! used to compare them against the Galerkin solve.

use nalgebra::{DMatrix, Vector3};
use serde::Serialize;

use crate::assembly::{stokeslet_block, DofLayout, SolveMode};
use crate::error::SolveError;
use crate::field::{Representation, Solution, SystemStats};
use crate::geometry::{CurveSet, Point};
use crate::linsolve::solve_dense;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Galerkin,
    Collocation,
    Point,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Galerkin => "galerkin",
            Method::Collocation => "collocation",
            Method::Point => "point",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "galerkin" => Ok(Method::Galerkin),
            "collocation" => Ok(Method::Collocation),
            "point" => Ok(Method::Point),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

/// Velocity-only solve with any of the three discretizations.
pub fn solve_with(cs: &CurveSet, method: Method) -> Result<Solution, SolveError> {
    match method {
        Method::Galerkin => crate::solver::solve(cs, SolveMode::VelocityOnly),
        Method::Collocation => solve_collocation(cs),
        Method::Point => solve_pointwise(cs),
    }
}

fn velocity_layout(cs: &CurveSet) -> DofLayout {
    DofLayout::new(cs.dimension(), cs.vertex_count(), true, false)
}

fn stacked_velocities(cs: &CurveSet, layout: &DofLayout) -> Vec<f64> {
    let mut b = vec![0.0; layout.size()];
    for (i, v) in cs.vertices().enumerate() {
        for c in 0..layout.dimension {
            b[layout.force_index(i, c)] = v.velocity[c];
        }
    }
    b
}

fn finish(
    cs: &CurveSet,
    layout: &DofLayout,
    matrix: DMatrix<f64>,
    evaluations: u64,
    representation: Representation,
) -> Result<Solution, SolveError> {
    let b = stacked_velocities(cs, layout);
    let report = solve_dense(&matrix, &b)?;
    let forces = (0..cs.vertex_count())
        .map(|v| {
            let mut f = Vector3::zeros();
            for c in 0..layout.dimension {
                f[c] = report.solution[layout.force_index(v, c)];
            }
            f
        })
        .collect();
    let stats = SystemStats {
        size: layout.size(),
        relative_residual: report.relative_residual,
        pivot_min: report.pivot_min,
        kernel_evaluations: evaluations,
    };
    let sol = Solution::new(cs.clone(), forces, None, SolveMode::VelocityOnly, representation)
        .expect("baseline output matches the curve set layout");
    Ok(sol.with_stats(vec![stats]))
}

/// Enforces the curve-integral velocity to equal the constraint exactly at
/// each vertex.
pub fn solve_collocation(cs: &CurveSet) -> Result<Solution, SolveError> {
    let layout = velocity_layout(cs);
    let (m, evaluations) = collocation_matrix(cs);
    finish(cs, &layout, m, evaluations, Representation::CurveIntegral)
}

/// Rows are the quadrature of the curve-integral velocity at each vertex, as
/// a linear map of the vertex forces. Returns the matrix and the number of
/// kernel evaluations.
pub fn collocation_matrix(cs: &CurveSet) -> (DMatrix<f64>, u64) {
    let layout = velocity_layout(cs);
    let (d, mu) = (cs.dimension(), cs.mu());
    let mut m = DMatrix::zeros(layout.size(), layout.size());
    let mut evaluations = 0;
    for (i, v) in cs.vertices().enumerate() {
        for y in cs.samples() {
            evaluations += 1;
            let s = stokeslet_block(d, &(v.position - y.position), y.eps, mu);
            for (b, &j) in y.dof_ids.iter().enumerate() {
                let c = y.weight * y.shape[b];
                for r in 0..d {
                    for k in 0..d {
                        m[(layout.force_index(i, r), layout.force_index(j, k))] += c * s[(r, k)];
                    }
                }
            }
        }
    }
    (m, evaluations)
}

/// Classic regularized-Stokeslet solve with isolated point forces at the
/// vertices, each regularized with its vertex `eps`.
pub fn solve_pointwise(cs: &CurveSet) -> Result<Solution, SolveError> {
    let layout = velocity_layout(cs);
    let (d, mu) = (cs.dimension(), cs.mu());
    let verts: Vec<_> = cs.vertices().collect();
    let mut m = DMatrix::zeros(layout.size(), layout.size());
    for (i, xi) in verts.iter().enumerate() {
        for (j, xj) in verts.iter().enumerate() {
            let s = stokeslet_block(d, &(xi.position - xj.position), xj.eps, mu);
            for r in 0..d {
                for k in 0..d {
                    m[(layout.force_index(i, r), layout.force_index(j, k))] = s[(r, k)];
                }
            }
        }
    }
    let n = verts.len() as u64;
    finish(cs, &layout, m, n * n, Representation::PointForces)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleKind {
    Vertex,
    Midpoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualSample {
    pub position: Point,
    pub kind: SampleKind,
    pub velocity_error: Vector3<f64>,
    /// Tangential angular-velocity error, for modes that constrain it.
    pub angular_error: Option<f64>,
    /// Magnitude of the constraint the error is measured against.
    pub target: f64,
}

impl ResidualSample {
    pub fn magnitude(&self) -> f64 {
        (self.velocity_error.norm_squared() + self.angular_error.map_or(0.0, |w| w * w)).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualProfile {
    pub samples: Vec<ResidualSample>,
    pub rms: f64,
    pub max: f64,
}

fn rms_of<'a>(values: impl Iterator<Item = f64> + 'a) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v * v, c + 1));
    if count == 0 {
        0.0
    } else {
        (sum / count as f64).sqrt()
    }
}

impl ResidualProfile {
    pub fn rms_at(&self, kind: SampleKind) -> f64 {
        rms_of(self.samples.iter().filter(|s| s.kind == kind).map(|s| s.magnitude()))
    }

    pub fn max_at(&self, kind: SampleKind) -> f64 {
        self.samples
            .iter()
            .filter(|s| s.kind == kind)
            .map(|s| s.magnitude())
            .fold(0.0, f64::max)
    }

    /// Root mean square of the constraint magnitudes at samples of `kind`.
    pub fn target_rms_at(&self, kind: SampleKind) -> f64 {
        rms_of(self.samples.iter().filter(|s| s.kind == kind).map(|s| s.target))
    }
}

/// Reconstructs the field at every vertex and segment midpoint and compares
/// it with the interpolated constraints.
///
/// Velocity errors are reported unless the solve was angular-only; angular
/// errors (about the local tangent) are reported for every mode with torque
/// unknowns. The tangent at a vertex is the normalized sum of its adjacent
/// segment directions.
pub fn residual_profile(sol: &Solution) -> ResidualProfile {
    let cs = sol.curveset();
    let mode = sol.mode();
    let with_velocity = mode.has_forces();
    let with_angular = mode.has_torques() && cs.dimension() == 3;

    let n = cs.vertex_count();
    let mut vertex_tangent = vec![Vector3::zeros(); n];
    for s in cs.segments() {
        let t = (s.end - s.start).normalize();
        vertex_tangent[s.a] += t;
        vertex_tangent[s.b] += t;
    }
    let speeds = cs.angular_speeds();
    let velocities = cs.velocities();

    let mut points: Vec<(Point, SampleKind, Vector3<f64>, f64, Vector3<f64>)> = Vec::new();
    for (i, v) in cs.vertices().enumerate() {
        let t = vertex_tangent[i];
        let t = if t.norm() > 1e-12 { t.normalize() } else { Vector3::zeros() };
        points.push((v.position, SampleKind::Vertex, v.velocity, speeds[i], t));
    }
    for s in cs.segments() {
        let u = (velocities[s.a] + velocities[s.b]) * 0.5;
        let w = 0.5 * (speeds[s.a] + speeds[s.b]);
        points.push((s.midpoint(), SampleKind::Midpoint, u, w, (s.end - s.start).normalize()));
    }

    let samples: Vec<ResidualSample> = points
        .into_iter()
        .map(|(p, kind, u, w, t)| {
            let velocity_error = if with_velocity {
                sol.velocity_at(&p) - u
            } else {
                Vector3::zeros()
            };
            let angular_error = with_angular.then(|| {
                let omega = sol.angular_velocity_at(&p).expect("3D solution");
                omega.dot(&t) - w
            });
            let target = ((if with_velocity { u.norm_squared() } else { 0.0 })
                + if with_angular { w * w } else { 0.0 })
            .sqrt();
            ResidualSample {
                position: p,
                kind,
                velocity_error,
                angular_error,
                target,
            }
        })
        .collect();

    let rms = rms_of(samples.iter().map(|s| s.magnitude()));
    let max = samples.iter().map(|s| s.magnitude()).fold(0.0, f64::max);
    ResidualProfile { samples, rms, max }
}
