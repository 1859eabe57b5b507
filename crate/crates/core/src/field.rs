//! Velocity and angular-velocity reconstruction from solved forces and
//! torques.

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::{sample_velocity, stokeslet_block, SolveMode};
use crate::error::{FieldError, ValidationError};
use crate::geometry::{CurveSet, Point};
use crate::kernels;

/// How the solved unknowns are spread in space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    /// Hat-interpolated densities integrated along the curves.
    CurveIntegral,
    /// Isolated regularized point forces at the vertices.
    PointForces,
}

/// Residual and conditioning information for each linear system solved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemStats {
    pub size: usize,
    pub relative_residual: f64,
    pub pivot_min: f64,
    pub kernel_evaluations: u64,
}

/// Source term at one quadrature sample (or vertex), premultiplied by its
/// quadrature weight.
#[derive(Debug, Clone, Copy)]
struct Source {
    position: Point,
    tangent: Vector3<f64>,
    eps: f64,
    force: Vector3<f64>,
    torque: f64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    curveset: CurveSet,
    forces: Vec<Vector3<f64>>,
    torques: Option<Vec<f64>>,
    mode: SolveMode,
    representation: Representation,
    stats: Vec<SystemStats>,
    relative_residual: f64,
    sources: Vec<Source>,
}

impl Solution {
    /// Bundles solved unknowns with their curve set. `torques` must be
    /// present (length N) for 3D curve sets and absent in 2D; missing torques
    /// in 3D are filled with zeros.
    pub fn new(
        curveset: CurveSet,
        forces: Vec<Vector3<f64>>,
        torques: Option<Vec<f64>>,
        mode: SolveMode,
        representation: Representation,
    ) -> Result<Self, ValidationError> {
        let n = curveset.vertex_count();
        if forces.len() != n {
            return Err(ValidationError::SolutionLength {
                what: "forces",
                expected: n,
                found: forces.len(),
            });
        }
        let torques = match (curveset.dimension(), torques) {
            (2, Some(_)) => {
                return Err(ValidationError::SolutionLength {
                    what: "torques",
                    expected: 0,
                    found: n,
                })
            }
            (2, None) => None,
            (_, None) => Some(vec![0.0; n]),
            (_, Some(t)) if t.len() != n => {
                return Err(ValidationError::SolutionLength {
                    what: "torques",
                    expected: n,
                    found: t.len(),
                })
            }
            (_, Some(t)) => Some(t),
        };
        for (i, f) in forces.iter().enumerate() {
            if !f.iter().all(|c| c.is_finite()) || (curveset.dimension() == 2 && f.z != 0.0) {
                return Err(ValidationError::NonFinite { vertex: i, what: "force" });
            }
        }
        if let Some(t) = &torques {
            if let Some(i) = t.iter().position(|v| !v.is_finite()) {
                return Err(ValidationError::NonFinite { vertex: i, what: "torque" });
            }
        }
        if representation == Representation::PointForces && torques.as_ref().is_some_and(|t| t.iter().any(|&v| v != 0.0)) {
            return Err(ValidationError::SolutionLength {
                what: "point-force torques",
                expected: 0,
                found: n,
            });
        }
        let sources = build_sources(&curveset, &forces, torques.as_deref(), representation);
        Ok(Self {
            curveset,
            forces,
            torques,
            mode,
            representation,
            stats: Vec::new(),
            relative_residual: 0.0,
            sources,
        })
    }

    pub fn with_stats(mut self, stats: Vec<SystemStats>) -> Self {
        self.relative_residual = stats.iter().map(|s| s.relative_residual).fold(0.0, f64::max);
        self.stats = stats;
        self
    }

    /// Records a residual for a solution loaded without its system stats.
    pub fn with_relative_residual(mut self, residual: f64) -> Self {
        self.relative_residual = residual;
        self
    }

    pub fn curveset(&self) -> &CurveSet {
        &self.curveset
    }

    pub fn forces(&self) -> &[Vector3<f64>] {
        &self.forces
    }

    pub fn torques(&self) -> Option<&[f64]> {
        self.torques.as_deref()
    }

    pub fn mode(&self) -> SolveMode {
        self.mode
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn stats(&self) -> &[SystemStats] {
        &self.stats
    }

    /// Largest relative residual among the solved systems.
    pub fn relative_residual(&self) -> f64 {
        self.relative_residual
    }

    pub fn dimension(&self) -> usize {
        self.curveset.dimension()
    }

    /// Velocity at `x`. In 2D the third coordinate of `x` is ignored and the
    /// result has a zero third component.
    pub fn velocity_at(&self, x: &Point) -> Vector3<f64> {
        let d = self.dimension();
        let mu = self.curveset.mu();
        let mut u = Vector3::zeros();
        for s in &self.sources {
            let disp = x - s.position;
            u += stokeslet_block(d, &disp, s.eps, mu) * s.force;
            if s.torque != 0.0 {
                u += kernels::rotlet_velocity(&disp, &s.tangent, s.eps, mu) * s.torque;
            }
        }
        if d == 2 {
            u.z = 0.0;
        }
        u
    }

    /// Angular velocity (half the curl of the velocity) at `x`; 3D only.
    pub fn angular_velocity_at(&self, x: &Point) -> Result<Vector3<f64>, FieldError> {
        if self.dimension() != 3 {
            return Err(FieldError::DimensionError);
        }
        let mu = self.curveset.mu();
        let mut w = Vector3::zeros();
        for s in &self.sources {
            let disp = x - s.position;
            w += kernels::angular_velocity_vector_from_force(&disp, &s.force, s.eps, mu);
            if s.torque != 0.0 {
                w += kernels::angular_velocity_vector_from_torque(&disp, &s.tangent, s.eps, mu) * s.torque;
            }
        }
        Ok(w)
    }

    /// Evaluates the field at many points in parallel, preserving order.
    pub fn sample_points(&self, points: &[Point], want_angular: bool) -> Result<Vec<FieldSample>, FieldError> {
        if want_angular && self.dimension() != 3 {
            return Err(FieldError::DimensionError);
        }
        Ok(points
            .par_iter()
            .map(|p| self.sample(p, want_angular))
            .collect())
    }

    fn sample(&self, p: &Point, want_angular: bool) -> FieldSample {
        FieldSample {
            position: *p,
            velocity: self.velocity_at(p),
            angular_velocity: want_angular.then(|| self.angular_velocity_at(p).expect("3D checked by caller")),
        }
    }
}

fn build_sources(
    cs: &CurveSet,
    forces: &[Vector3<f64>],
    torques: Option<&[f64]>,
    representation: Representation,
) -> Vec<Source> {
    match representation {
        Representation::CurveIntegral => cs
            .samples()
            .iter()
            .map(|y| Source {
                position: y.position,
                tangent: y.tangent,
                eps: y.eps,
                force: y.interpolate_vec(forces) * y.weight,
                torque: torques.map_or(0.0, |t| y.interpolate(t) * y.weight),
            })
            .collect(),
        Representation::PointForces => cs
            .vertices()
            .zip(forces)
            .map(|(v, f)| Source {
                position: v.position,
                tangent: Vector3::zeros(),
                eps: v.eps,
                force: *f,
                torque: 0.0,
            })
            .collect(),
    }
}

/// Reference evaluation straight from the quadrature samples, without the
/// cached sources. Used to cross-check the fast path.
pub fn velocity_from_samples(sol: &Solution, x: &Point) -> Vector3<f64> {
    let cs = sol.curveset();
    let torques = sol.torques();
    cs.samples().iter().fold(Vector3::zeros(), |acc, y| {
        let f = y.interpolate_vec(sol.forces()) * y.weight;
        let tau = torques.map_or(0.0, |t| y.interpolate(t) * y.weight);
        acc + sample_velocity(cs.dimension(), cs.mu(), x, y, &f, tau)
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub position: Point,
    pub velocity: Vector3<f64>,
    pub angular_velocity: Option<Vector3<f64>>,
}

/// Node-inclusive axis-aligned grid.
///
/// Nodes along an axis with `n > 1` points are `min + (max - min) * i / (n - 1)`;
/// an axis with a single node uses `min`, so `min == max` describes a slice.
/// Samples are stored row-major: the last axis varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub res: Vec<usize>,
}

impl GridSpec {
    pub fn new(min: Vec<f64>, max: Vec<f64>, res: Vec<usize>) -> Self {
        Self { min, max, res }
    }

    pub fn check(&self, dimension: usize) -> Result<(), FieldError> {
        if self.min.len() != dimension || self.max.len() != dimension || self.res.len() != dimension {
            return Err(FieldError::EmptyBounds);
        }
        if self.res.iter().any(|&r| r == 0) {
            return Err(FieldError::EmptyResolution);
        }
        for k in 0..dimension {
            let (lo, hi) = (self.min[k], self.max[k]);
            if !(lo.is_finite() && hi.is_finite()) || lo > hi || (lo == hi && self.res[k] > 1) {
                return Err(FieldError::EmptyBounds);
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.res.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn axis_coordinate(&self, axis: usize, i: usize) -> f64 {
        let n = self.res[axis];
        if n == 1 {
            self.min[axis]
        } else if i + 1 == n {
            self.max[axis]
        } else {
            self.min[axis] + (self.max[axis] - self.min[axis]) * (i as f64 / (n - 1) as f64)
        }
    }

    /// Node positions in storage order.
    pub fn positions(&self) -> Vec<Point> {
        let d = self.res.len();
        let total = self.len();
        (0..total)
            .map(|flat| {
                let mut rest = flat;
                let mut p = Point::zeros();
                for axis in (0..d).rev() {
                    let i = rest % self.res[axis];
                    rest /= self.res[axis];
                    p[axis] = self.axis_coordinate(axis, i);
                }
                p
            })
            .collect()
    }
}

pub fn sample_grid(sol: &Solution, grid: &GridSpec, want_angular: bool) -> Result<Vec<FieldSample>, FieldError> {
    grid.check(sol.dimension())?;
    sol.sample_points(&grid.positions(), want_angular)
}
