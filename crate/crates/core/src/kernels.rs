//! Regularized fundamental solutions of the Stokes equations.
//!
//! Every kernel takes the displacement `d = x - y` from the source point `y`
//! to the evaluation point `x`, the regularization radius `eps > 0` and the
//! viscosity `mu`. With `r_eps = sqrt(|d|^2 + eps^2)` nothing is singular,
//! including `d = 0`. All kernels scale as `1 / mu`.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

/// Velocity at `x` per unit force at `y`, 3D.
#[inline]
pub fn stokeslet_3d(d: &Vector3<f64>, eps: f64, mu: f64) -> Matrix3<f64> {
    let r2 = d.norm_squared();
    let e2 = eps * eps;
    let re2 = r2 + e2;
    let re3 = re2 * re2.sqrt();
    let c = 1.0 / (8.0 * PI * mu * re3);
    let mut s = d * d.transpose() * c;
    let diag = (r2 + 2.0 * e2) * c;
    s[(0, 0)] += diag;
    s[(1, 1)] += diag;
    s[(2, 2)] += diag;
    s
}

/// Velocity at `x` per unit force at `y`, 2D.
#[inline]
pub fn stokeslet_2d(d: &Vector2<f64>, eps: f64, mu: f64) -> Matrix2<f64> {
    let e2 = eps * eps;
    let re2 = d.norm_squared() + e2;
    let c = 1.0 / (4.0 * PI * mu);
    let diag = c * (e2 / re2 - 0.5 * re2.ln());
    let mut s = d * d.transpose() * (c / re2);
    s[(0, 0)] += diag;
    s[(1, 1)] += diag;
    s
}

/// `(2 r_eps^2 + 3 eps^2) / r_eps^5`, shared by the rotlet and the
/// force-to-angular kernel.
#[inline]
fn rotlet_radial(d: &Vector3<f64>, eps: f64) -> f64 {
    let e2 = eps * eps;
    let re2 = d.norm_squared() + e2;
    let re5 = re2 * re2 * re2.sqrt();
    (2.0 * re2 + 3.0 * e2) / re5
}

/// Velocity at `x` per unit torque about the source tangent `t_y`.
#[inline]
pub fn rotlet_velocity(d: &Vector3<f64>, t_y: &Vector3<f64>, eps: f64, mu: f64) -> Vector3<f64> {
    d.cross(t_y) * (rotlet_radial(d, eps) / (4.0 * PI * mu))
}

/// Tangential angular velocity at `x` (about `t_x`) per unit torque about
/// `t_y`.
#[inline]
pub fn torque_to_angular(d: &Vector3<f64>, t_x: &Vector3<f64>, t_y: &Vector3<f64>, eps: f64, mu: f64) -> f64 {
    let (a, b) = torque_angular_coeffs(d, eps, mu);
    a * t_x.dot(t_y) + b * d.dot(t_x) * d.dot(t_y)
}

#[inline]
fn torque_angular_coeffs(d: &Vector3<f64>, eps: f64, mu: f64) -> (f64, f64) {
    let r2 = d.norm_squared();
    let e2 = eps * eps;
    let re2 = r2 + e2;
    let re7 = re2 * re2 * re2 * re2.sqrt();
    let c = -1.0 / (8.0 * PI * mu * re7);
    (
        c * (10.0 * e2 * e2 - 7.0 * e2 * r2 - 2.0 * r2 * r2),
        c * (21.0 * e2 + 6.0 * r2),
    )
}

/// Covector mapping a force at `y` to the tangential angular velocity at `x`
/// about `t_x`.
#[inline]
pub fn force_to_angular(d: &Vector3<f64>, t_x: &Vector3<f64>, eps: f64, mu: f64) -> Vector3<f64> {
    d.cross(t_x) * (rotlet_radial(d, eps) / (16.0 * PI * mu))
}

/// Full angular velocity (half the curl) at `x` of the field of force `f`.
#[inline]
pub fn angular_velocity_vector_from_force(d: &Vector3<f64>, f: &Vector3<f64>, eps: f64, mu: f64) -> Vector3<f64> {
    d.cross(f) * (-rotlet_radial(d, eps) / (16.0 * PI * mu))
}

/// Full angular velocity at `x` per unit torque about `t_y`.
#[inline]
pub fn angular_velocity_vector_from_torque(d: &Vector3<f64>, t_y: &Vector3<f64>, eps: f64, mu: f64) -> Vector3<f64> {
    let (a, b) = torque_angular_coeffs(d, eps, mu);
    t_y * a + d * (b * d.dot(t_y))
}
