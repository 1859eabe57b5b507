//! Stateless HTTP JSON API over the curveflow solver.
//!
//! Every request carries everything it needs: `/api/solve` takes a curve
//! spec and returns a solution document, and `/api/field` and `/api/grid`
//! take that solution back to evaluate the field. Numeric values are
//! serialized in shortest round-trip form, so they are bit-identical to the
//! library (and to the command-line tool).
//!
//! ```no_run
//! # async fn run() -> std::io::Result<()> {
//! let addr = std::net::SocketAddr::from(([127, 0, 0, 1], curveflow_service::DEFAULT_PORT));
//! curveflow_service::serve(addr).await
//! # }
//! ```

use std::net::SocketAddr;

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use curveflow::io::{CurveSpecFile, IoError, SolutionFile};
use curveflow::{sample_grid, solve, ErrorClass, FieldError, FieldSample, GridSpec, Point, SolveError, Solution, SystemStats};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::CorsLayer;

pub const DEFAULT_PORT: u16 = 8080;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    /// One of `parse`, `validation`, `numeric`, as in the command line's
    /// exit-code taxonomy.
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
    #[serde(skip)]
    status: StatusCode,
}

impl ApiError {
    fn new(class: ErrorClass, message: impl Into<String>, detail: Option<Value>) -> Self {
        let status = match class {
            ErrorClass::Parse | ErrorClass::Validation => StatusCode::BAD_REQUEST,
            ErrorClass::Numeric => StatusCode::UNPROCESSABLE_ENTITY,
        };
        Self {
            code: class.code().to_owned(),
            message: message.into(),
            detail,
            status,
        }
    }

    fn parse(message: impl Into<String>) -> Self {
        Self::new(ErrorClass::Parse, message, None)
    }

    fn validation(message: impl Into<String>, detail: Option<Value>) -> Self {
        Self::new(ErrorClass::Validation, message, detail)
    }
}

impl From<IoError> for ApiError {
    fn from(e: IoError) -> Self {
        let detail = match &e {
            IoError::Validation(v) => v.vertex().map(|i| json!({ "vertex": i })),
            _ => None,
        };
        Self::new(e.class(), e.to_string(), detail)
    }
}

impl From<SolveError> for ApiError {
    fn from(e: SolveError) -> Self {
        let detail = match &e {
            SolveError::SingularMatrix { column, pivot, threshold } => {
                Some(json!({ "column": column, "pivot": pivot, "threshold": threshold }))
            }
            _ => None,
        };
        Self::new(e.class(), e.to_string(), detail)
    }
}

impl From<FieldError> for ApiError {
    fn from(e: FieldError) -> Self {
        Self::new(e.class(), e.to_string(), None)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveResponse {
    pub solution: SolutionFile,
    /// One entry per linear system (two for decoupled solves).
    pub stats: Vec<StatsBody>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsBody {
    pub size: usize,
    pub relative_residual: f64,
    pub pivot_min: f64,
    pub kernel_evaluations: u64,
}

impl From<&SystemStats> for StatsBody {
    fn from(s: &SystemStats) -> Self {
        Self {
            size: s.size,
            relative_residual: s.relative_residual,
            pivot_min: s.pivot_min,
            kernel_evaluations: s.kernel_evaluations,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldRequest {
    pub solution: SolutionFile,
    pub points: Vec<Vec<f64>>,
    #[serde(default)]
    pub angular: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldResponse {
    pub velocities: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angular: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRequest {
    pub solution: SolutionFile,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub res: Vec<usize>,
    #[serde(default)]
    pub angular: bool,
}

/// Grid samples flattened row-major (last axis fastest) with the metadata
/// needed to index them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResponse {
    pub dimension: usize,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub res: Vec<usize>,
    pub count: usize,
    pub positions: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angular: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
}

fn decode<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::parse(e.to_string()))
}

/// Solves a curve spec.
pub fn solve_spec(spec: &CurveSpecFile) -> Result<SolveResponse, ApiError> {
    let cs = spec.curveset()?;
    let sol = solve(&cs, spec.mode)?;
    Ok(SolveResponse {
        solution: SolutionFile::from_solution(&sol),
        stats: sol.stats().iter().map(StatsBody::from).collect(),
    })
}

fn points_from(rows: &[Vec<f64>], dimension: usize) -> Result<Vec<Point>, ApiError> {
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            if row.len() != dimension {
                return Err(ApiError::validation(
                    format!("point {i} has {} coordinates, expected {dimension}", row.len()),
                    Some(json!({ "point": i })),
                ));
            }
            let mut p = Point::zeros();
            p.as_mut_slice()[..dimension].copy_from_slice(row);
            Ok(p)
        })
        .collect()
}

fn split_samples(samples: &[FieldSample], dimension: usize, angular: bool) -> (Vec<Vec<f64>>, Option<Vec<Vec<f64>>>) {
    let velocities = samples.iter().map(|s| s.velocity.as_slice()[..dimension].to_vec()).collect();
    let spins = angular.then(|| {
        samples
            .iter()
            .map(|s| s.angular_velocity.map_or_else(Vec::new, |w| w.as_slice().to_vec()))
            .collect()
    });
    (velocities, spins)
}

fn load(solution: &SolutionFile, angular: bool) -> Result<Solution, ApiError> {
    let sol = solution.to_solution()?;
    if angular && sol.dimension() != 3 {
        return Err(FieldError::DimensionError.into());
    }
    Ok(sol)
}

/// Evaluates the field of a solution at the requested points.
pub fn evaluate(req: &FieldRequest) -> Result<FieldResponse, ApiError> {
    let sol = load(&req.solution, req.angular)?;
    let points = points_from(&req.points, sol.dimension())?;
    let samples = sol.sample_points(&points, req.angular)?;
    let (velocities, angular) = split_samples(&samples, sol.dimension(), req.angular);
    Ok(FieldResponse { velocities, angular })
}

/// Samples the field of a solution on a node-inclusive grid.
pub fn grid(req: &GridRequest) -> Result<GridResponse, ApiError> {
    let sol = load(&req.solution, req.angular)?;
    let d = sol.dimension();
    let spec = GridSpec::new(req.min.clone(), req.max.clone(), req.res.clone());
    let samples = sample_grid(&sol, &spec, req.angular)?;
    let (velocities, angular) = split_samples(&samples, d, req.angular);
    Ok(GridResponse {
        dimension: d,
        min: req.min.clone(),
        max: req.max.clone(),
        res: req.res.clone(),
        count: samples.len(),
        positions: samples.iter().map(|s| s.position.as_slice()[..d].to_vec()).collect(),
        velocities,
        angular,
    })
}

/// Decodes the body and runs `work` on the blocking pool so that long solves
/// never stall the runtime (or `/health`).
async fn run<Req, Resp>(
    body: Result<Bytes, BytesRejection>,
    work: fn(&Req) -> Result<Resp, ApiError>,
) -> Result<Json<Resp>, ApiError>
where
    Req: DeserializeOwned + Send + 'static,
    Resp: Send + 'static,
{
    let body = body.map_err(|rejection| {
        let mut e = ApiError::parse(rejection.body_text());
        e.status = rejection.status();
        e
    })?;
    let req: Req = decode(&body)?;
    tokio::task::spawn_blocking(move || work(&req))
        .await
        .map_err(|e| ApiError::new(ErrorClass::Numeric, format!("worker failed: {e}"), None))?
        .map(Json)
}

async fn solve_handler(body: Result<Bytes, BytesRejection>) -> Result<Json<SolveResponse>, ApiError> {
    run(body, solve_spec).await
}

async fn field_handler(body: Result<Bytes, BytesRejection>) -> Result<Json<FieldResponse>, ApiError> {
    run(body, evaluate).await
}

async fn grid_handler(body: Result<Bytes, BytesRejection>) -> Result<Json<GridResponse>, ApiError> {
    run(body, grid).await
}

async fn health() -> Json<Health> {
    Json(Health {
        status: "ok".to_owned(),
        version: VERSION.to_owned(),
    })
}

async fn not_found() -> ApiError {
    let mut e = ApiError::parse("no such endpoint");
    e.status = StatusCode::NOT_FOUND;
    e
}

async fn method_not_allowed() -> ApiError {
    let mut e = ApiError::parse("method not allowed on this endpoint");
    e.status = StatusCode::METHOD_NOT_ALLOWED;
    e
}

pub fn router() -> Router {
    Router::new()
        .route("/api/solve", post(solve_handler))
        .route("/api/field", post(field_handler))
        .route("/api/grid", post(grid_handler))
        .route("/health", get(health))
        .fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .layer(CorsLayer::permissive())
}

/// Serves the API until the process is stopped.
pub async fn serve(addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router()).await
}
