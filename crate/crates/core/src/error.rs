use thiserror::Error;

/// Coarse failure classes shared by the command line (exit codes) and the
/// HTTP API (error codes).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// The input could not be read or decoded.
    Parse,
    /// The input decoded but describes something invalid.
    Validation,
    /// The numerics failed (singular system, non-finite values).
    Numeric,
}

impl ErrorClass {
    pub fn code(self) -> &'static str {
        match self {
            ErrorClass::Parse => "parse",
            ErrorClass::Validation => "validation",
            ErrorClass::Numeric => "numeric",
        }
    }

    pub fn exit_code(self) -> u8 {
        match self {
            ErrorClass::Parse => 2,
            ErrorClass::Validation => 3,
            ErrorClass::Numeric => 4,
        }
    }
}

/// Reasons a raw curve description is rejected.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("curve set has no polylines")]
    NoCurves,
    #[error("polyline {curve} has {count} vertices, at least 2 are required")]
    EmptyCurve { curve: usize, count: usize },
    #[error("non-finite value in {what} of vertex {vertex}")]
    NonFinite { vertex: usize, what: &'static str },
    #[error("vertex {vertex} has non-positive eps {eps}")]
    NonPositiveEps { vertex: usize, eps: f64 },
    #[error("vertex {vertex}: {what} has {found} components, expected {expected}")]
    DimensionMismatch {
        vertex: usize,
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("vertex {vertex} carries an angular speed but the curve set is 2D")]
    AngularConstraintIn2D { vertex: usize },
    #[error("segment from vertex {from} to vertex {to} has (near) zero length")]
    DegenerateSegment { from: usize, to: usize },
    #[error("unsupported dimension {0}, expected 2 or 3")]
    UnsupportedDimension(usize),
    #[error("viscosity must be positive and finite, got {0}")]
    NonPositiveViscosity(f64),
    #[error("{what}: expected {expected} entries, found {found}")]
    SolutionLength {
        what: &'static str,
        expected: usize,
        found: usize,
    },
}

impl ValidationError {
    /// Global index of the vertex the error refers to, when there is one.
    pub fn vertex(&self) -> Option<usize> {
        match *self {
            ValidationError::NonFinite { vertex, .. }
            | ValidationError::NonPositiveEps { vertex, .. }
            | ValidationError::DimensionMismatch { vertex, .. }
            | ValidationError::AngularConstraintIn2D { vertex } => Some(vertex),
            ValidationError::DegenerateSegment { from, .. } => Some(from),
            _ => None,
        }
    }

    pub fn class(&self) -> ErrorClass {
        ErrorClass::Validation
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("solve mode {mode:?} requires a 3D curve set, got dimension {dimension}")]
    ModeDimensionMismatch {
        mode: crate::SolveMode,
        dimension: usize,
    },
    #[error("matrix is singular: pivot {pivot:e} at column {column} below threshold {threshold:e}")]
    SingularMatrix {
        column: usize,
        pivot: f64,
        threshold: f64,
    },
    #[error("non-finite entry in linear system")]
    NonFinite,
    #[error("linear system is not square: {rows}x{cols} with rhs of length {rhs}")]
    Shape { rows: usize, cols: usize, rhs: usize },
}

impl SolveError {
    pub fn class(&self) -> ErrorClass {
        match self {
            SolveError::ModeDimensionMismatch { .. } => ErrorClass::Validation,
            _ => ErrorClass::Numeric,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("angular velocity is only defined for 3D solutions")]
    DimensionError,
    #[error("grid bounds are empty or inverted")]
    EmptyBounds,
    #[error("grid resolution must be at least 1 per axis")]
    EmptyResolution,
    #[error("non-finite value in finite-difference stencil")]
    NonFinite,
}

impl FieldError {
    pub fn class(&self) -> ErrorClass {
        match self {
            FieldError::NonFinite => ErrorClass::Numeric,
            _ => ErrorClass::Validation,
        }
    }
}
