//! Penalized Fischer-Burmeister NCP function
//!
//! ```text
//!     phi(y, v) = alpha * (y + v - sqrt(y^2 + v^2)) + (1 - alpha) * y_+ * v_+
//! ```
//!
//! whose zero set is exactly `{y >= 0, v >= 0, y v = 0}`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, QpError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NcpConfig {
    /// Weight of the Fischer-Burmeister part, in `(0, 1)`.
    pub alpha: f64,
    /// Unit-ball element `(xi, zeta)` selected from the generalized gradient at the origin.
    pub origin_direction: (f64, f64),
}

impl Default for NcpConfig {
    fn default() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        NcpConfig {
            alpha: 0.95,
            origin_direction: (s, s),
        }
    }
}

impl NcpConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        NcpConfig {
            alpha,
            ..Default::default()
        }
    }

    pub fn check(&self) -> Result<(), QpError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(QpError::InvalidConfig(format!(
                "alpha = {} must lie in (0, 1)",
                self.alpha
            )));
        }
        let (xi, zeta) = self.origin_direction;
        let norm_sq = xi * xi + zeta * zeta;
        if norm_sq.is_nan() || norm_sq > 1.0 + 1e-12 {
            return Err(QpError::InvalidConfig(
                "origin_direction must lie in the unit ball".into(),
            ));
        }
        Ok(())
    }
}

/// Element `(d_y, d_v)` of the generalized gradient of `phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativePair {
    pub d_y: f64,
    pub d_v: f64,
}

/// `y + v - sqrt(y^2 + v^2)`, evaluated without cancellation when `y + v > 0`.
#[inline]
fn fb_part(y: f64, v: f64) -> f64 {
    let r = y.hypot(v);
    let s = y + v;
    if s > 0.0 {
        2.0 * y * v / (s + r)
    } else {
        s - r
    }
}

/// `1 - x / r` for `r = hypot(x, other) > 0`, stable when `x` is close to `r`.
#[inline]
fn one_minus_ratio(x: f64, other: f64, r: f64) -> f64 {
    if x > 0.0 {
        other * other / (r * (r + x))
    } else {
        1.0 - x / r
    }
}

fn finite(y: f64, v: f64) -> Result<(), QpError> {
    if y.is_finite() && v.is_finite() {
        Ok(())
    } else {
        Err(QpError::NonFinite("ncp argument"))
    }
}

#[inline]
pub(crate) fn phi_unchecked(y: f64, v: f64, alpha: f64) -> f64 {
    alpha * fb_part(y, v) + (1.0 - alpha) * y.max(0.0) * v.max(0.0)
}

#[inline]
pub(crate) fn phi_derivative_unchecked(y: f64, v: f64, cfg: &NcpConfig) -> DerivativePair {
    let alpha = cfg.alpha;
    if y == 0.0 && v == 0.0 {
        let (xi, zeta) = cfg.origin_direction;
        return DerivativePair {
            d_y: alpha * (1.0 - xi),
            d_v: alpha * (1.0 - zeta),
        };
    }
    let r = y.hypot(v);
    let pen = 1.0 - alpha;
    let d_y = alpha * one_minus_ratio(y, v, r) + if y > 0.0 { pen * v.max(0.0) } else { 0.0 };
    let d_v = alpha * one_minus_ratio(v, y, r) + if v > 0.0 { pen * y.max(0.0) } else { 0.0 };
    DerivativePair { d_y, d_v }
}

pub fn phi(y: f64, v: f64, cfg: &NcpConfig) -> Result<f64, QpError> {
    finite(y, v)?;
    Ok(phi_unchecked(y, v, cfg.alpha))
}

/// Elementwise [`phi`].
pub fn phi_vec(
    y: &DVector<f64>,
    v: &DVector<f64>,
    cfg: &NcpConfig,
) -> Result<DVector<f64>, QpError> {
    check_len("v", y.len(), v.len())?;
    if y.iter().chain(v.iter()).any(|x| !x.is_finite()) {
        return Err(QpError::NonFinite("ncp argument"));
    }
    Ok(y.zip_map(v, |yi, vi| phi_unchecked(yi, vi, cfg.alpha)))
}

/// Generalized derivative of [`phi`].
///
/// At smooth points this is the classical gradient. At the origin the
/// configured `origin_direction` picks the Clarke element, and the penalty
/// term contributes nothing on the kinks `y = 0` or `v = 0`.
pub fn phi_derivative(y: f64, v: f64, cfg: &NcpConfig) -> Result<DerivativePair, QpError> {
    finite(y, v)?;
    Ok(phi_derivative_unchecked(y, v, cfg))
}
