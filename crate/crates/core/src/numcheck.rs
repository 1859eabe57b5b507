//! Central finite differences with optional Richardson extrapolation.
//!
//! These are the oracles the kernel identities and the incompressibility
//! checks are measured against; they only ever call the field as a black box.

use crate::error::FieldError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    pub h: f64,
    /// Combine steps `h` and `h/2` as `(4 D(h/2) - D(h)) / 3`.
    pub richardson: bool,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self {
            h: 1e-4,
            richardson: true,
        }
    }
}

impl FdConfig {
    pub fn new(h: f64, richardson: bool) -> Self {
        assert!(h > 0.0, "finite-difference step must be positive");
        Self { h, richardson }
    }

    /// Step of `1e-4` times the scene's bounding-box diagonal.
    pub fn for_scene(bbox_diagonal: f64) -> Self {
        let h = if bbox_diagonal > 0.0 { 1e-4 * bbox_diagonal } else { 1e-4 };
        Self::new(h, true)
    }
}

fn central<const D: usize>(
    f: &impl Fn(&[f64; D]) -> [f64; D],
    x: &[f64; D],
    axis: usize,
    h: f64,
) -> Result<[f64; D], FieldError> {
    let mut xp = *x;
    let mut xm = *x;
    xp[axis] += h;
    xm[axis] -= h;
    let (fp, fm) = (f(&xp), f(&xm));
    let mut out = [0.0; D];
    for i in 0..D {
        out[i] = (fp[i] - fm[i]) / (2.0 * h);
        if !out[i].is_finite() {
            return Err(FieldError::NonFinite);
        }
    }
    Ok(out)
}

/// Jacobian `J[i][k] = d f_i / d x_k`.
pub fn fd_jacobian<const D: usize>(
    f: impl Fn(&[f64; D]) -> [f64; D],
    x: &[f64; D],
    cfg: &FdConfig,
) -> Result<[[f64; D]; D], FieldError> {
    let mut jac = [[0.0; D]; D];
    for k in 0..D {
        let coarse = central(&f, x, k, cfg.h)?;
        let column = if cfg.richardson {
            let fine = central(&f, x, k, 0.5 * cfg.h)?;
            std::array::from_fn(|i| (4.0 * fine[i] - coarse[i]) / 3.0)
        } else {
            coarse
        };
        for i in 0..D {
            jac[i][k] = column[i];
        }
    }
    Ok(jac)
}

pub fn fd_divergence<const D: usize>(
    f: impl Fn(&[f64; D]) -> [f64; D],
    x: &[f64; D],
    cfg: &FdConfig,
) -> Result<f64, FieldError> {
    let jac = fd_jacobian(f, x, cfg)?;
    Ok((0..D).map(|k| jac[k][k]).sum())
}

pub fn fd_curl(
    f: impl Fn(&[f64; 3]) -> [f64; 3],
    x: &[f64; 3],
    cfg: &FdConfig,
) -> Result<[f64; 3], FieldError> {
    let j = fd_jacobian(f, x, cfg)?;
    Ok(curl_of(&j))
}

pub fn curl_of(j: &[[f64; 3]; 3]) -> [f64; 3] {
    [j[2][1] - j[1][2], j[0][2] - j[2][0], j[1][0] - j[0][1]]
}

pub fn frobenius<const D: usize>(j: &[[f64; D]; D]) -> f64 {
    j.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

/// Divergence and Jacobian norm from a single stencil evaluation.
pub fn fd_divergence_with_norm<const D: usize>(
    f: impl Fn(&[f64; D]) -> [f64; D],
    x: &[f64; D],
    cfg: &FdConfig,
) -> Result<(f64, f64), FieldError> {
    let j = fd_jacobian(f, x, cfg)?;
    Ok(((0..D).map(|k| j[k][k]).sum(), frobenius(&j)))
}
