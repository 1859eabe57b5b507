//! JSON curve/solution documents and CSV field tables.
//!
//! JSON numbers are written in shortest round-trip form and parsed with
//! correct rounding, so a saved solution evaluates bit-identically after
//! reloading. CSV values carry 17 significant digits for the same reason.

use std::io::{Read, Write};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::SolveMode;
use crate::error::{ErrorClass, ValidationError};
use crate::field::{FieldSample, Representation, Solution};
use crate::geometry::{to_raw, validate_curveset, CurveSet, Point, RawCurveSet, RawPolyline, RawVertex};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(#[from] ValidationError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl IoError {
    /// Unreadable input counts as a parse failure.
    pub fn class(&self) -> ErrorClass {
        match self {
            IoError::Parse(_) | IoError::Io(_) => ErrorClass::Parse,
            IoError::Validation(e) => e.class(),
        }
    }
}

fn default_mu() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexFile {
    pub p: Vec<f64>,
    pub v: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveFile {
    #[serde(default)]
    pub closed: bool,
    pub vertices: Vec<VertexFile>,
}

/// Problem statement: curves, constraints, viscosity and solve mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpecFile {
    pub dimension: usize,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default)]
    pub mode: SolveMode,
    pub curves: Vec<CurveFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverInfo {
    pub relative_residual: f64,
}

/// A curve spec together with its solved per-vertex forces and torques.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFile {
    pub dimension: usize,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default)]
    pub mode: SolveMode,
    pub curves: Vec<CurveFile>,
    pub forces: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub torques: Option<Vec<f64>>,
    pub solver: SolverInfo,
}

impl CurveSpecFile {
    pub fn from_json(text: &str) -> Result<Self, IoError> {
        serde_json::from_str(text).map_err(|e| IoError::Parse(e.to_string()))
    }

    pub fn to_raw(&self) -> RawCurveSet {
        raw_from(self.dimension, self.mu, &self.curves)
    }

    pub fn curveset(&self) -> Result<CurveSet, IoError> {
        Ok(validate_curveset(&self.to_raw())?)
    }

    pub fn from_curveset(cs: &CurveSet, mode: SolveMode) -> Self {
        Self {
            dimension: cs.dimension(),
            mu: cs.mu(),
            mode,
            curves: curves_from(cs),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

impl SolutionFile {
    pub fn from_json(text: &str) -> Result<Self, IoError> {
        serde_json::from_str(text).map_err(|e| IoError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn from_solution(sol: &Solution) -> Self {
        let cs = sol.curveset();
        let d = cs.dimension();
        Self {
            dimension: d,
            mu: cs.mu(),
            mode: sol.mode(),
            curves: curves_from(cs),
            forces: sol.forces().iter().map(|f| f.as_slice()[..d].to_vec()).collect(),
            torques: sol.torques().map(|t| t.to_vec()),
            solver: SolverInfo {
                relative_residual: sol.relative_residual(),
            },
        }
    }

    pub fn to_solution(&self) -> Result<Solution, IoError> {
        let cs = validate_curveset(&raw_from(self.dimension, self.mu, &self.curves))?;
        let d = cs.dimension();
        let forces = self
            .forces
            .iter()
            .enumerate()
            .map(|(i, f)| {
                if f.len() != d {
                    return Err(ValidationError::DimensionMismatch {
                        vertex: i,
                        what: "force",
                        expected: d,
                        found: f.len(),
                    });
                }
                let mut out = Vector3::zeros();
                out.as_mut_slice()[..d].copy_from_slice(f);
                Ok(out)
            })
            .collect::<Result<Vec<_>, _>>()?;
        if d == 3 && self.torques.is_none() && self.mode.has_torques() {
            return Err(ValidationError::SolutionLength {
                what: "torques",
                expected: cs.vertex_count(),
                found: 0,
            }
            .into());
        }
        let sol = Solution::new(cs, forces, self.torques.clone(), self.mode, Representation::CurveIntegral)?;
        Ok(sol.with_relative_residual(self.solver.relative_residual))
    }
}

fn raw_from(dimension: usize, mu: f64, curves: &[CurveFile]) -> RawCurveSet {
    RawCurveSet {
        dimension,
        mu,
        curves: curves
            .iter()
            .map(|c| RawPolyline {
                closed: c.closed,
                vertices: c
                    .vertices
                    .iter()
                    .map(|v| RawVertex {
                        p: v.p.clone(),
                        v: v.v.clone(),
                        omega: v.omega,
                        eps: v.eps,
                    })
                    .collect(),
            })
            .collect(),
    }
}

fn curves_from(cs: &CurveSet) -> Vec<CurveFile> {
    to_raw(cs)
        .curves
        .into_iter()
        .map(|c| CurveFile {
            closed: c.closed,
            vertices: c
                .vertices
                .into_iter()
                .map(|v| VertexFile {
                    p: v.p,
                    v: v.v,
                    omega: v.omega,
                    eps: v.eps,
                })
                .collect(),
        })
        .collect()
}

const AXES: [&str; 3] = ["x", "y", "z"];
const VELOCITY: [&str; 3] = ["u", "v", "w"];
const ANGULAR: [&str; 3] = ["wx", "wy", "wz"];

/// Reads a point list with header `x,y[,z]`.
pub fn read_points_csv(reader: impl Read, dimension: usize) -> Result<Vec<Point>, IoError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| IoError::Parse(e.to_string()))?.clone();
    let expected = &AXES[..dimension];
    if headers.len() != dimension || headers.iter().zip(expected).any(|(h, e)| h != *e) {
        return Err(IoError::Parse(format!(
            "expected header `{}`, found `{}`",
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut points = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| IoError::Parse(e.to_string()))?;
        let mut p = Point::zeros();
        for (k, field) in record.iter().enumerate() {
            p[k] = field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| IoError::Parse(format!("row {}: invalid number `{field}`", line + 2)))?;
        }
        points.push(p);
    }
    Ok(points)
}

/// Header of a field table: coordinates, velocity, optional angular velocity.
pub fn field_csv_header(dimension: usize, angular: bool) -> String {
    let mut cols: Vec<&str> = AXES[..dimension].to_vec();
    cols.extend(&VELOCITY[..dimension]);
    if angular {
        cols.extend(ANGULAR);
    }
    cols.join(",")
}

/// Scientific notation with 17 significant digits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_field_csv(
    mut out: impl Write,
    dimension: usize,
    samples: &[FieldSample],
    angular: bool,
) -> std::io::Result<()> {
    writeln!(out, "{}", field_csv_header(dimension, angular))?;
    let mut row = Vec::with_capacity(9);
    for s in samples {
        row.clear();
        row.extend(s.position.iter().take(dimension).map(|&v| format_f64(v)));
        row.extend(s.velocity.iter().take(dimension).map(|&v| format_f64(v)));
        if angular {
            let w = s.angular_velocity.unwrap_or_else(Vector3::zeros);
            row.extend(w.iter().map(|&v| format_f64(v)));
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
