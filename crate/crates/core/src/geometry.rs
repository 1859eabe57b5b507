//! Control curves, per-vertex constraints and the quadrature rule used on
//! every polyline segment.
//!
//! Vertices of a [`CurveSet`] are numbered globally in the order they appear:
//! polyline 0 first, then polyline 1, and so on, each in its stored order.
//! A closed polyline adds one implicit segment from its last vertex back to
//! its first and does not duplicate any vertex.
//!
//! Points and vectors are stored as 3-vectors; in 2D the third component is
//! always zero.

use nalgebra::{DMatrix, Vector3};

use crate::error::ValidationError;

pub type Point = Vector3<f64>;

/// Relative tolerance (times the bounding-box diagonal) below which a segment
/// is considered degenerate.
pub const DEGENERATE_SEGMENT_TOL: f64 = 1e-12;

/// Gauss-Legendre nodes on [0, 1].
pub const GAUSS_NODES: [f64; 3] = [
    0.5 - 0.387_298_334_620_741_7,
    0.5,
    0.5 + 0.387_298_334_620_741_7,
];

/// Gauss-Legendre weights on [0, 1].
pub const GAUSS_WEIGHTS: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub position: Point,
    pub velocity: Vector3<f64>,
    /// Angular speed about the local curve tangent (3D only).
    pub angular_speed: Option<f64>,
    /// Regularization radius, which doubles as the influence distance.
    pub eps: f64,
}

impl Vertex {
    pub fn new(position: Point, velocity: Vector3<f64>, eps: f64) -> Self {
        Self {
            position,
            velocity,
            angular_speed: None,
            eps,
        }
    }

    pub fn with_angular_speed(mut self, omega: f64) -> Self {
        self.angular_speed = Some(omega);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub vertices: Vec<Vertex>,
    pub closed: bool,
}

impl Polyline {
    pub fn open(vertices: Vec<Vertex>) -> Self {
        Self {
            vertices,
            closed: false,
        }
    }

    pub fn closed(vertices: Vec<Vertex>) -> Self {
        Self {
            vertices,
            closed: true,
        }
    }

    pub fn segment_count(&self) -> usize {
        match (self.vertices.len(), self.closed) {
            (0 | 1, _) => 0,
            (n, true) => n,
            (n, false) => n - 1,
        }
    }

    /// Local vertex indices of segment `s`.
    pub fn segment_ends(&self, s: usize) -> (usize, usize) {
        let n = self.vertices.len();
        (s, (s + 1) % n)
    }
}

/// Untyped vertex as it arrives from a file or request body.
#[derive(Debug, Clone, PartialEq)]
pub struct RawVertex {
    pub p: Vec<f64>,
    pub v: Vec<f64>,
    pub omega: Option<f64>,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawPolyline {
    pub closed: bool,
    pub vertices: Vec<RawVertex>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawCurveSet {
    pub dimension: usize,
    pub mu: f64,
    pub curves: Vec<RawPolyline>,
}

/// One segment of a validated curve set, addressed by global vertex ids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: usize,
    pub b: usize,
    pub start: Point,
    pub end: Point,
    pub eps_a: f64,
    pub eps_b: f64,
}

impl Segment {
    pub fn length(&self) -> f64 {
        (self.end - self.start).norm()
    }

    pub fn point_at(&self, t: f64) -> Point {
        self.start + (self.end - self.start) * t
    }

    pub fn midpoint(&self) -> Point {
        self.point_at(0.5)
    }
}

/// A Gauss point on a segment together with everything the kernels need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSample {
    pub position: Point,
    /// Arc-length weight.
    pub weight: f64,
    pub tangent: Vector3<f64>,
    pub eps: f64,
    /// Hat-function values of the two segment endpoints.
    pub shape: [f64; 2],
    pub dof_ids: [usize; 2],
}

impl QuadratureSample {
    /// Blends per-vertex scalars with the sample's hat functions.
    #[inline]
    pub fn interpolate(&self, values: &[f64]) -> f64 {
        self.shape[0] * values[self.dof_ids[0]] + self.shape[1] * values[self.dof_ids[1]]
    }

    #[inline]
    pub fn interpolate_vec(&self, values: &[Vector3<f64>]) -> Vector3<f64> {
        values[self.dof_ids[0]] * self.shape[0] + values[self.dof_ids[1]] * self.shape[1]
    }
}

fn segment_samples(seg: &Segment) -> [QuadratureSample; 3] {
    let delta = seg.end - seg.start;
    let length = delta.norm();
    let tangent = delta / length;
    std::array::from_fn(|k| {
        let t = GAUSS_NODES[k];
        QuadratureSample {
            position: seg.start + delta * t,
            weight: GAUSS_WEIGHTS[k] * length,
            tangent,
            eps: (1.0 - t) * seg.eps_a + t * seg.eps_b,
            shape: [1.0 - t, t],
            dof_ids: [seg.a, seg.b],
        }
    })
}

/// Three Gauss-Legendre samples per segment of a single polyline. Vertex ids
/// in the result are local to the polyline.
pub fn segment_quadrature(p: &Polyline) -> Vec<QuadratureSample> {
    (0..p.segment_count())
        .flat_map(|s| {
            let (a, b) = p.segment_ends(s);
            let seg = Segment {
                a,
                b,
                start: p.vertices[a].position,
                end: p.vertices[b].position,
                eps_a: p.vertices[a].eps,
                eps_b: p.vertices[b].eps,
            };
            segment_samples(&seg)
        })
        .collect()
}

/// Hat-function blend of the endpoint constraints of segment `segment` at
/// parameter `t`. Returns the velocity and, if either endpoint has one, the
/// angular speed (a missing endpoint value counts as zero).
pub fn interpolate_constraints(
    p: &Polyline,
    segment: usize,
    t: f64,
) -> (Vector3<f64>, Option<f64>) {
    let (a, b) = p.segment_ends(segment);
    let (va, vb) = (&p.vertices[a], &p.vertices[b]);
    let velocity = va.velocity * (1.0 - t) + vb.velocity * t;
    let omega = match (va.angular_speed, vb.angular_speed) {
        (None, None) => None,
        (wa, wb) => Some((1.0 - t) * wa.unwrap_or(0.0) + t * wb.unwrap_or(0.0)),
    };
    (velocity, omega)
}

/// A validated set of control curves. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSet {
    dimension: usize,
    mu: f64,
    polylines: Vec<Polyline>,
    offsets: Vec<usize>,
    segments: Vec<Segment>,
    samples: Vec<QuadratureSample>,
}

impl CurveSet {
    /// Validates typed polylines. Vectors of 2D curve sets must have a zero
    /// third component.
    pub fn new(dimension: usize, mu: f64, polylines: Vec<Polyline>) -> Result<Self, ValidationError> {
        if dimension != 2 && dimension != 3 {
            return Err(ValidationError::UnsupportedDimension(dimension));
        }
        if !(mu.is_finite() && mu > 0.0) {
            return Err(ValidationError::NonPositiveViscosity(mu));
        }
        if polylines.is_empty() {
            return Err(ValidationError::NoCurves);
        }

        let mut offsets = Vec::with_capacity(polylines.len());
        let mut next = 0;
        for (c, p) in polylines.iter().enumerate() {
            if p.vertices.len() < 2 {
                return Err(ValidationError::EmptyCurve {
                    curve: c,
                    count: p.vertices.len(),
                });
            }
            offsets.push(next);
            for (k, v) in p.vertices.iter().enumerate() {
                check_vertex(dimension, next + k, v)?;
            }
            next += p.vertices.len();
        }

        let (lo, hi) = bounds_of(polylines.iter().flat_map(|p| p.vertices.iter().map(|v| v.position)));
        let tol = DEGENERATE_SEGMENT_TOL * (hi - lo).norm();

        let mut segments = Vec::new();
        for (p, &offset) in polylines.iter().zip(&offsets) {
            for s in 0..p.segment_count() {
                let (a, b) = p.segment_ends(s);
                let seg = Segment {
                    a: offset + a,
                    b: offset + b,
                    start: p.vertices[a].position,
                    end: p.vertices[b].position,
                    eps_a: p.vertices[a].eps,
                    eps_b: p.vertices[b].eps,
                };
                let len = seg.length();
                if len <= tol || len == 0.0 {
                    return Err(ValidationError::DegenerateSegment { from: seg.a, to: seg.b });
                }
                segments.push(seg);
            }
        }
        let samples = segments.iter().flat_map(segment_samples).collect();

        Ok(Self {
            dimension,
            mu,
            polylines,
            offsets,
            segments,
            samples,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn polylines(&self) -> &[Polyline] {
        &self.polylines
    }

    /// Total number of vertices, N.
    pub fn vertex_count(&self) -> usize {
        self.offsets.last().copied().unwrap_or(0) + self.polylines.last().map_or(0, |p| p.vertices.len())
    }

    /// Global index of the first vertex of each polyline.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn vertices(&self) -> impl Iterator<Item = &Vertex> + '_ {
        self.polylines.iter().flat_map(|p| p.vertices.iter())
    }

    pub fn vertex(&self, global: usize) -> &Vertex {
        let c = self.offsets.partition_point(|&o| o <= global) - 1;
        &self.polylines[c].vertices[global - self.offsets[c]]
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// All quadrature samples, three per segment, in segment order.
    pub fn samples(&self) -> &[QuadratureSample] {
        &self.samples
    }

    pub fn samples_of(&self, segment: usize) -> &[QuadratureSample] {
        &self.samples[3 * segment..3 * segment + 3]
    }

    pub fn has_angular_constraints(&self) -> bool {
        self.vertices().any(|v| v.angular_speed.is_some())
    }

    pub fn min_eps(&self) -> f64 {
        self.vertices().map(|v| v.eps).fold(f64::INFINITY, f64::min)
    }

    pub fn max_eps(&self) -> f64 {
        self.vertices().map(|v| v.eps).fold(0.0, f64::max)
    }

    /// Axis-aligned bounds of the vertex positions.
    pub fn bounding_box(&self) -> (Point, Point) {
        bounds_of(self.vertices().map(|v| v.position))
    }

    pub fn bbox_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    /// Per-vertex velocity constraints in global order.
    pub fn velocities(&self) -> Vec<Vector3<f64>> {
        self.vertices().map(|v| v.velocity).collect()
    }

    /// Per-vertex angular speeds in global order, absent values as zero.
    pub fn angular_speeds(&self) -> Vec<f64> {
        self.vertices().map(|v| v.angular_speed.unwrap_or(0.0)).collect()
    }

    /// Distance from `x` to the nearest segment.
    pub fn distance_to(&self, x: &Point) -> f64 {
        self.segments
            .iter()
            .map(|s| {
                let d = s.end - s.start;
                let t = ((x - s.start).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
                (x - s.point_at(t)).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Rebuilds the curve set with every vertex transformed by `f`.
    pub fn map_vertices(&self, mut f: impl FnMut(&Vertex) -> Vertex) -> Result<Self, ValidationError> {
        let polylines = self
            .polylines
            .iter()
            .map(|p| Polyline {
                vertices: p.vertices.iter().map(&mut f).collect(),
                closed: p.closed,
            })
            .collect();
        Self::new(self.dimension, self.mu, polylines)
    }
}

fn check_vertex(dimension: usize, index: usize, v: &Vertex) -> Result<(), ValidationError> {
    if !v.position.iter().all(|c| c.is_finite()) {
        return Err(ValidationError::NonFinite { vertex: index, what: "position" });
    }
    if !v.velocity.iter().all(|c| c.is_finite()) {
        return Err(ValidationError::NonFinite { vertex: index, what: "velocity" });
    }
    if !v.eps.is_finite() {
        return Err(ValidationError::NonFinite { vertex: index, what: "eps" });
    }
    if v.eps <= 0.0 {
        return Err(ValidationError::NonPositiveEps { vertex: index, eps: v.eps });
    }
    if let Some(w) = v.angular_speed {
        if dimension == 2 {
            return Err(ValidationError::AngularConstraintIn2D { vertex: index });
        }
        if !w.is_finite() {
            return Err(ValidationError::NonFinite { vertex: index, what: "angular speed" });
        }
    }
    if dimension == 2 && (v.position.z != 0.0 || v.velocity.z != 0.0) {
        return Err(ValidationError::DimensionMismatch {
            vertex: index,
            what: "position",
            expected: 2,
            found: 3,
        });
    }
    Ok(())
}

fn bounds_of(points: impl Iterator<Item = Point>) -> (Point, Point) {
    let mut lo = Point::repeat(f64::INFINITY);
    let mut hi = Point::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(&p);
        hi = hi.sup(&p);
    }
    (lo, hi)
}

fn to_vector(
    dimension: usize,
    vertex: usize,
    what: &'static str,
    comps: &[f64],
) -> Result<Vector3<f64>, ValidationError> {
    if comps.len() != dimension {
        return Err(ValidationError::DimensionMismatch {
            vertex,
            what,
            expected: dimension,
            found: comps.len(),
        });
    }
    let mut out = Vector3::zeros();
    out.as_mut_slice()[..dimension].copy_from_slice(comps);
    Ok(out)
}

/// Checks a raw curve description and fixes the global vertex numbering.
pub fn validate_curveset(raw: &RawCurveSet) -> Result<CurveSet, ValidationError> {
    if raw.dimension != 2 && raw.dimension != 3 {
        return Err(ValidationError::UnsupportedDimension(raw.dimension));
    }
    let mut global = 0;
    let mut polylines = Vec::with_capacity(raw.curves.len());
    for curve in &raw.curves {
        let mut vertices = Vec::with_capacity(curve.vertices.len());
        for rv in &curve.vertices {
            let position = to_vector(raw.dimension, global, "position", &rv.p)?;
            let velocity = to_vector(raw.dimension, global, "velocity", &rv.v)?;
            vertices.push(Vertex {
                position,
                velocity,
                angular_speed: rv.omega,
                eps: rv.eps,
            });
            global += 1;
        }
        polylines.push(Polyline {
            vertices,
            closed: curve.closed,
        });
    }
    CurveSet::new(raw.dimension, raw.mu, polylines)
}

/// Lumps `CurveSet` back into its raw form (component counts follow the
/// dimension).
pub fn to_raw(cs: &CurveSet) -> RawCurveSet {
    let d = cs.dimension();
    RawCurveSet {
        dimension: d,
        mu: cs.mu(),
        curves: cs
            .polylines()
            .iter()
            .map(|p| RawPolyline {
                closed: p.closed,
                vertices: p
                    .vertices
                    .iter()
                    .map(|v| RawVertex {
                        p: v.position.as_slice()[..d].to_vec(),
                        v: v.velocity.as_slice()[..d].to_vec(),
                        omega: v.angular_speed,
                        eps: v.eps,
                    })
                    .collect(),
            })
            .collect(),
    }
}

/// Consistent mass matrix of the piecewise-linear hat functions, N x N.
pub fn mass_matrix(cs: &CurveSet) -> DMatrix<f64> {
    let n = cs.vertex_count();
    let mut m = DMatrix::zeros(n, n);
    for s in cs.segments() {
        let l = s.length();
        m[(s.a, s.a)] += l / 3.0;
        m[(s.b, s.b)] += l / 3.0;
        m[(s.a, s.b)] += l / 6.0;
        m[(s.b, s.a)] += l / 6.0;
    }
    m
}

/// Applies the mass matrix to one scalar channel without forming it.
pub fn apply_mass(cs: &CurveSet, values: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    for s in cs.segments() {
        let l = s.length();
        let (va, vb) = (values[s.a], values[s.b]);
        out[s.a] += l / 3.0 * va + l / 6.0 * vb;
        out[s.b] += l / 6.0 * va + l / 3.0 * vb;
    }
    out
}
