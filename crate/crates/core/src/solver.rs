//! Assemble, solve and package the Galerkin system for a curve set.

use nalgebra::Vector3;

use crate::assembly::{assemble_system, Assembled, DenseSystem, SolveMode};
use crate::error::SolveError;
use crate::field::{Representation, Solution, SystemStats};
use crate::geometry::CurveSet;
use crate::linsolve::SolveReport;

fn stats(sys: &DenseSystem, report: &SolveReport) -> SystemStats {
    SystemStats {
        size: sys.layout.size(),
        relative_residual: report.relative_residual,
        pivot_min: report.pivot_min,
        kernel_evaluations: sys.kernel_evaluations,
    }
}

fn unpack_forces(sys: &DenseSystem, x: &[f64]) -> Vec<Vector3<f64>> {
    let l = &sys.layout;
    (0..l.vertices)
        .map(|v| {
            let mut f = Vector3::zeros();
            for c in 0..l.dimension {
                f[c] = x[l.force_index(v, c)];
            }
            f
        })
        .collect()
}

fn unpack_torques(sys: &DenseSystem, x: &[f64]) -> Vec<f64> {
    (0..sys.layout.vertices).map(|v| x[sys.layout.torque_index(v)]).collect()
}

/// Solves for the per-vertex forces (and torques) that meet the curve
/// constraints in the Galerkin sense.
pub fn solve(cs: &CurveSet, mode: SolveMode) -> Result<Solution, SolveError> {
    let n = cs.vertex_count();
    let (forces, torques, stats) = match assemble_system(cs, mode)? {
        Assembled::Single(sys) => {
            let report = sys.solve()?;
            let forces = if sys.layout.force {
                unpack_forces(&sys, &report.solution)
            } else {
                vec![Vector3::zeros(); n]
            };
            let torques = sys.layout.torque.then(|| unpack_torques(&sys, &report.solution));
            (forces, torques, vec![stats(&sys, &report)])
        }
        Assembled::Decoupled { velocity, angular } => {
            let rv = velocity.solve()?;
            let ra = angular.solve()?;
            (
                unpack_forces(&velocity, &rv.solution),
                Some(unpack_torques(&angular, &ra.solution)),
                vec![stats(&velocity, &rv), stats(&angular, &ra)],
            )
        }
    };
    let sol = Solution::new(cs.clone(), forces, torques, mode, Representation::CurveIntegral)
        .expect("solver output matches the curve set layout");
    Ok(sol.with_stats(stats))
}
