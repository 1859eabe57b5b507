//! Galerkin system assembly.
//!
//! For every ordered pair of segments the 3 x 3 tensor-product Gauss rule
//! accumulates `w_x w_y phi_i(x) K(x - y) phi_j(y)` into the block of
//! vertices `(i, j)`, with `K` the kernel linking the column unknown to the
//! row constraint and `eps` taken at the trial point `y`.

use nalgebra::{DMatrix, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::SolveError;
use crate::geometry::{apply_mass, CurveSet, QuadratureSample};
use crate::kernels;
use crate::linsolve::{solve_dense, SolveReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum SolveMode {
    /// Forces only, matching velocity constraints.
    #[default]
    #[serde(rename = "velocity")]
    VelocityOnly,
    /// Torques only, matching tangential angular-velocity constraints.
    #[serde(rename = "angular")]
    AngularOnly,
    /// Forces and torques in one joint system.
    #[serde(rename = "coupled")]
    Coupled,
    /// Independent velocity and angular solves whose fields are summed.
    #[serde(rename = "decoupled")]
    Decoupled,
}

impl SolveMode {
    pub fn needs_3d(self) -> bool {
        !matches!(self, SolveMode::VelocityOnly)
    }

    pub fn has_forces(self) -> bool {
        !matches!(self, SolveMode::AngularOnly)
    }

    pub fn has_torques(self) -> bool {
        !matches!(self, SolveMode::VelocityOnly)
    }

    pub fn name(self) -> &'static str {
        match self {
            SolveMode::VelocityOnly => "velocity",
            SolveMode::AngularOnly => "angular",
            SolveMode::Coupled => "coupled",
            SolveMode::Decoupled => "decoupled",
        }
    }

    pub fn check(self, cs: &CurveSet) -> Result<(), SolveError> {
        if self.needs_3d() && cs.dimension() != 3 {
            return Err(SolveError::ModeDimensionMismatch {
                mode: self,
                dimension: cs.dimension(),
            });
        }
        Ok(())
    }
}

impl std::str::FromStr for SolveMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "velocity" => Ok(SolveMode::VelocityOnly),
            "angular" => Ok(SolveMode::AngularOnly),
            "coupled" => Ok(SolveMode::Coupled),
            "decoupled" => Ok(SolveMode::Decoupled),
            other => Err(format!("unknown solve mode `{other}`")),
        }
    }
}

/// Maps `(vertex, channel)` to a row/column of an assembled system.
///
/// All force unknowns come first, vertex-major with `dimension` components
/// each, followed by one torque unknown per vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofLayout {
    pub dimension: usize,
    pub vertices: usize,
    pub force: bool,
    pub torque: bool,
}

impl DofLayout {
    pub fn new(dimension: usize, vertices: usize, force: bool, torque: bool) -> Self {
        Self {
            dimension,
            vertices,
            force,
            torque,
        }
    }

    fn force_dofs(&self) -> usize {
        if self.force {
            self.dimension * self.vertices
        } else {
            0
        }
    }

    pub fn size(&self) -> usize {
        self.force_dofs() + if self.torque { self.vertices } else { 0 }
    }

    #[inline]
    pub fn force_index(&self, vertex: usize, component: usize) -> usize {
        debug_assert!(self.force && component < self.dimension);
        vertex * self.dimension + component
    }

    #[inline]
    pub fn torque_index(&self, vertex: usize) -> usize {
        debug_assert!(self.torque);
        self.force_dofs() + vertex
    }

    /// Number of kernel blocks (force/torque to velocity/angular) in use.
    pub fn blocks(&self) -> usize {
        let k = self.force as usize + self.torque as usize;
        k * k
    }

    fn channels(&self) -> usize {
        (if self.force { self.dimension } else { 0 }) + self.torque as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseSystem {
    pub matrix: DMatrix<f64>,
    /// Mass-weighted vertex constraints.
    pub rhs_known: Vec<f64>,
    pub layout: DofLayout,
    pub kernel_evaluations: u64,
}

impl DenseSystem {
    pub fn solve(&self) -> Result<SolveReport, SolveError> {
        solve_dense(&self.matrix, &self.rhs_known)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Assembled {
    Single(DenseSystem),
    Decoupled {
        velocity: DenseSystem,
        angular: DenseSystem,
    },
}

impl Assembled {
    pub fn systems(&self) -> Vec<&DenseSystem> {
        match self {
            Assembled::Single(s) => vec![s],
            Assembled::Decoupled { velocity, angular } => vec![velocity, angular],
        }
    }
}

/// Layouts used by a mode, one per system (two for `Decoupled`).
pub fn layouts_for(cs: &CurveSet, mode: SolveMode) -> Vec<DofLayout> {
    let (d, n) = (cs.dimension(), cs.vertex_count());
    match mode {
        SolveMode::VelocityOnly => vec![DofLayout::new(d, n, true, false)],
        SolveMode::AngularOnly => vec![DofLayout::new(d, n, false, true)],
        SolveMode::Coupled => vec![DofLayout::new(d, n, true, true)],
        SolveMode::Decoupled => vec![DofLayout::new(d, n, true, false), DofLayout::new(d, n, false, true)],
    }
}

pub fn assemble_system(cs: &CurveSet, mode: SolveMode) -> Result<Assembled, SolveError> {
    mode.check(cs)?;
    let mut systems = layouts_for(cs, mode).into_iter().map(|layout| {
        let (matrix, kernel_evaluations) = assemble_matrix(cs, &layout);
        DenseSystem {
            matrix,
            rhs_known: known_for_layout(cs, &layout),
            layout,
            kernel_evaluations,
        }
    });
    let first = systems.next().expect("at least one layout");
    Ok(match systems.next() {
        None => Assembled::Single(first),
        Some(angular) => Assembled::Decoupled {
            velocity: first,
            angular,
        },
    })
}

/// Mass-weighted known vector. For `Decoupled` the velocity rows come first,
/// followed by the angular rows, as in the two systems.
pub fn assemble_known(cs: &CurveSet, mode: SolveMode) -> Result<Vec<f64>, SolveError> {
    mode.check(cs)?;
    Ok(layouts_for(cs, mode)
        .iter()
        .flat_map(|layout| known_for_layout(cs, layout))
        .collect())
}

fn known_for_layout(cs: &CurveSet, layout: &DofLayout) -> Vec<f64> {
    let n = cs.vertex_count();
    let mut out = vec![0.0; layout.size()];
    if layout.force {
        let velocities = cs.velocities();
        for c in 0..layout.dimension {
            let channel: Vec<f64> = velocities.iter().map(|v| v[c]).collect();
            for (i, m) in apply_mass(cs, &channel).into_iter().enumerate() {
                out[layout.force_index(i, c)] = m;
            }
        }
    }
    if layout.torque {
        let weighted = apply_mass(cs, &cs.angular_speeds());
        for (i, m) in weighted.into_iter().enumerate().take(n) {
            out[layout.torque_index(i)] = m;
        }
    }
    out
}

/// Rows contributed by one test segment: `2 * channels` rows (both segment
/// endpoints) over all columns.
struct Strip {
    rows: [usize; 2],
    data: Vec<f64>,
    kernel_evaluations: u64,
}

const STRIP_BATCH: usize = 64;

/// Dense Galerkin matrix for `layout`, plus the number of kernel evaluations.
pub fn assemble_matrix(cs: &CurveSet, layout: &DofLayout) -> (DMatrix<f64>, u64) {
    let size = layout.size();
    let mut matrix = DMatrix::zeros(size, size);
    let mut evaluations = 0;
    let segments: Vec<usize> = (0..cs.segments().len()).collect();
    for batch in segments.chunks(STRIP_BATCH) {
        let strips: Vec<Strip> = batch.par_iter().map(|&s| test_segment_strip(cs, layout, s)).collect();
        for strip in strips {
            scatter_strip(&mut matrix, layout, &strip);
            evaluations += strip.kernel_evaluations;
        }
    }
    (matrix, evaluations)
}

/// Local row `(end, channel)` of a strip; channel `dimension` is the torque.
#[inline]
fn local_row(channels: usize, end: usize, channel: usize) -> usize {
    end * channels + channel
}

fn scatter_strip(matrix: &mut DMatrix<f64>, layout: &DofLayout, strip: &Strip) {
    let size = layout.size();
    let channels = layout.channels();
    for (end, &vertex) in strip.rows.iter().enumerate() {
        for ch in 0..channels {
            let global = row_index(layout, vertex, ch);
            let src = &strip.data[local_row(channels, end, ch) * size..][..size];
            for (col, v) in src.iter().enumerate() {
                matrix[(global, col)] += v;
            }
        }
    }
}

/// Global row of local channel `ch` (force components first, then torque).
#[inline]
fn row_index(layout: &DofLayout, vertex: usize, ch: usize) -> usize {
    if layout.force && ch < layout.dimension {
        layout.force_index(vertex, ch)
    } else {
        layout.torque_index(vertex)
    }
}

fn test_segment_strip(cs: &CurveSet, layout: &DofLayout, s: usize) -> Strip {
    let size = layout.size();
    let channels = layout.channels();
    let seg = cs.segments()[s];
    let mut data = vec![0.0; 2 * channels * size];
    let mut evaluations = 0u64;
    let d = layout.dimension;
    let mu = cs.mu();
    let torque_ch = if layout.force { d } else { 0 };

    for x in cs.samples_of(s) {
        for y in cs.samples() {
            let w = x.weight * y.weight;
            let disp = x.position - y.position;
            let eps = y.eps;
            // Hat-weighted coefficient for (test end a, trial end b).
            let coef = |a: usize, b: usize| w * x.shape[a] * y.shape[b];

            if layout.force {
                evaluations += 1;
                let s3 = stokeslet_block(d, &disp, eps, mu);
                for a in 0..2 {
                    for b in 0..2 {
                        let c = coef(a, b);
                        for r in 0..d {
                            let row = &mut data[local_row(channels, a, r) * size..][..size];
                            for k in 0..d {
                                row[layout.force_index(y.dof_ids[b], k)] += c * s3[(r, k)];
                            }
                        }
                    }
                }
            }
            if layout.force && layout.torque {
                evaluations += 2;
                let rot = kernels::rotlet_velocity(&disp, &y.tangent, eps, mu);
                let fta = kernels::force_to_angular(&disp, &x.tangent, eps, mu);
                for a in 0..2 {
                    for b in 0..2 {
                        let c = coef(a, b);
                        let tcol = layout.torque_index(y.dof_ids[b]);
                        for r in 0..d {
                            data[local_row(channels, a, r) * size + tcol] += c * rot[r];
                        }
                        let row = &mut data[local_row(channels, a, torque_ch) * size..][..size];
                        for k in 0..d {
                            row[layout.force_index(y.dof_ids[b], k)] += c * fta[k];
                        }
                    }
                }
            }
            if layout.torque {
                evaluations += 1;
                let tta = kernels::torque_to_angular(&disp, &x.tangent, &y.tangent, eps, mu);
                for a in 0..2 {
                    for b in 0..2 {
                        let tcol = layout.torque_index(y.dof_ids[b]);
                        data[local_row(channels, a, torque_ch) * size + tcol] += coef(a, b) * tta;
                    }
                }
            }
        }
    }
    Strip {
        rows: [seg.a, seg.b],
        data,
        kernel_evaluations: evaluations,
    }
}

/// Stokeslet of the curve set's dimension, padded to 3 x 3 in 2D.
#[inline]
pub(crate) fn stokeslet_block(dimension: usize, disp: &Vector3<f64>, eps: f64, mu: f64) -> nalgebra::Matrix3<f64> {
    if dimension == 3 {
        kernels::stokeslet_3d(disp, eps, mu)
    } else {
        let s = kernels::stokeslet_2d(&disp.xy(), eps, mu);
        let mut out = nalgebra::Matrix3::zeros();
        out.fixed_view_mut::<2, 2>(0, 0).copy_from(&s);
        out
    }
}

/// Velocity induced at `x` by a quadrature sample carrying force `f` and
/// torque `tau` (already weighted).
#[inline]
pub(crate) fn sample_velocity(
    dimension: usize,
    mu: f64,
    x: &Vector3<f64>,
    y: &QuadratureSample,
    f: &Vector3<f64>,
    tau: f64,
) -> Vector3<f64> {
    let disp = x - y.position;
    let mut u = stokeslet_block(dimension, &disp, y.eps, mu) * f;
    if tau != 0.0 {
        u += kernels::rotlet_velocity(&disp, &y.tangent, y.eps, mu) * tau;
    }
    u
}
