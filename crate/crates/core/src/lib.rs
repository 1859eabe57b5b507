//! Incompressible velocity fields authored along polyline control curves.
//!
//! Users prescribe velocities (and, in 3D, tangential angular velocities) at
//! polyline vertices. The constraints are met in a Galerkin sense by
//! regularized Stokeslet and rotlet densities spread along the curves, and
//! the resulting divergence-free field can be evaluated anywhere.
//!
//! ```
//! use curveflow::{solve, CurveSet, Polyline, SolveMode, Vertex};
//! use nalgebra::Vector3;
//!
//! let curve = Polyline::open(vec![
//!     Vertex::new(Vector3::new(0.0, 0.0, 0.0), Vector3::new(1.0, 0.0, 0.0), 0.1),
//!     Vertex::new(Vector3::new(1.0, 0.0, 0.0), Vector3::new(1.0, 0.0, 0.0), 0.1),
//! ]);
//! let cs = CurveSet::new(3, 1.0, vec![curve]).unwrap();
//! let sol = solve(&cs, SolveMode::VelocityOnly).unwrap();
//! let u = sol.velocity_at(&Vector3::new(0.5, 0.2, 0.0));
//! assert!(u.x > 0.0);
//! ```

pub mod assembly;
pub mod baselines;
pub mod error;
pub mod field;
pub mod geometry;
pub mod io;
pub mod kernels;
pub mod linsolve;
pub mod numcheck;
pub mod scenes;
pub mod solver;

pub use assembly::{assemble_known, assemble_system, Assembled, DenseSystem, DofLayout, SolveMode};
pub use error::{ErrorClass, FieldError, SolveError, ValidationError};
pub use field::{sample_grid, FieldSample, GridSpec, Representation, Solution, SystemStats};
pub use geometry::{validate_curveset, CurveSet, Point, Polyline, QuadratureSample, RawCurveSet, Vertex};
pub use linsolve::{solve_dense, SolveReport};
pub use solver::solve;
