use serde::{Deserialize, Serialize};

use crate::error::QpError;
use crate::ncp::NcpConfig;

/// Placement of the proximal centers `(z̄, λ̄)` in the regularization terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProxCenter {
    /// Centers pinned at zero: plain Tikhonov regularization.
    FixedZero,
    /// Centers reset to the current iterate at the start of each outer iteration.
    Recenter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub ncp: NcpConfig,
    pub sigma0: f64,
    pub sigma_shrink: f64,
    pub sigma_min: f64,
    pub prox_center: ProxCenter,
    /// Termination threshold on the largest KKT certificate field.
    pub tol_kkt: f64,
    pub max_outer: usize,
    /// Newton steps allowed per outer iteration.
    pub max_inner: usize,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    pub min_step: f64,
    /// First diagonal shift tried when a Newton system is singular; escalates by 10x.
    pub jacobian_perturb: f64,
    /// Skip the O(n^3) positive semidefiniteness check in [`super::solve`].
    pub skip_validation: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            ncp: NcpConfig::default(),
            sigma0: 1e-3,
            sigma_shrink: 0.1,
            sigma_min: 1e-12,
            prox_center: ProxCenter::Recenter,
            tol_kkt: 1e-8,
            max_outer: 30,
            max_inner: 50,
            armijo_c: 1e-4,
            backtrack_factor: 0.5,
            min_step: 1e-12,
            jacobian_perturb: 1e-10,
            skip_validation: false,
        }
    }
}

impl SolverConfig {
    pub fn check(&self) -> Result<(), QpError> {
        self.ncp.check()?;
        let open_unit = |name: &str, x: f64| {
            if x > 0.0 && x < 1.0 {
                Ok(())
            } else {
                Err(QpError::InvalidConfig(format!(
                    "{name} = {x} must lie in (0, 1)"
                )))
            }
        };
        open_unit("sigma_shrink", self.sigma_shrink)?;
        open_unit("armijo_c", self.armijo_c)?;
        open_unit("backtrack_factor", self.backtrack_factor)?;
        let positive = [
            ("sigma0", self.sigma0),
            ("sigma_min", self.sigma_min),
            ("tol_kkt", self.tol_kkt),
            ("min_step", self.min_step),
            ("jacobian_perturb", self.jacobian_perturb),
        ];
        for (name, x) in positive {
            if !(x.is_finite() && x > 0.0) {
                return Err(QpError::InvalidConfig(format!(
                    "{name} = {x} must be positive"
                )));
            }
        }
        Ok(())
    }

    /// Regularization weight used in outer iteration `k`.
    pub fn sigma_at(&self, k: usize) -> f64 {
        let exp = i32::try_from(k).unwrap_or(i32::MAX);
        (self.sigma0 * self.sigma_shrink.powi(exp)).max(self.sigma_min)
    }
}
