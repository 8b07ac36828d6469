use crate::error::{Error, Result};
use crate::function_core::GridWindow;
use crate::volterra_ops::SampledGrid;
use serde::Serialize;

/// `theta = lip_outer + lip_inner * kernel_mass`; valid iff `theta < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContractionCertificate {
    #[serde(rename = "L_outer")]
    pub lip_outer: f64,
    #[serde(rename = "L_inner")]
    pub lip_inner: f64,
    pub kernel_mass: f64,
    pub theta: f64,
    #[serde(skip)]
    pub valid: bool,
}

impl ContractionCertificate {
    pub fn new(lip_outer: f64, lip_inner: f64, kernel_mass: f64) -> Self {
        let theta = lip_outer + lip_inner * kernel_mass;
        ContractionCertificate {
            lip_outer,
            lip_inner,
            kernel_mass,
            theta,
            valid: theta < 1.0,
        }
    }

    /// Certificate with an externally computed `theta` (operator-norm bounds).
    pub fn with_theta(lip_outer: f64, lip_inner: f64, kernel_mass: f64, theta: f64) -> Self {
        ContractionCertificate {
            lip_outer,
            lip_inner,
            kernel_mass,
            theta,
            valid: theta < 1.0,
        }
    }

    pub fn require_valid(&self) -> Result<()> {
        if self.valid && self.theta.is_finite() {
            Ok(())
        } else {
            Err(Error::CertificateInvalid { theta: self.theta })
        }
    }

    /// A priori number of sweeps after which `sup_diff <= tol * (1 - theta)`.
    pub fn sweeps_needed(&self, first_diff: f64, tol: f64) -> usize {
        if self.theta <= 0.0 || first_diff <= tol * (1.0 - self.theta) {
            return 1;
        }
        let k = ((tol * (1.0 - self.theta) / first_diff).ln() / self.theta.ln()).ceil();
        1 + k.max(0.0) as usize
    }
}

/// Record of a Picard run.
#[derive(Debug, Clone, Serialize)]
pub struct IterationTrace {
    pub certificate: ContractionCertificate,
    #[serde(rename = "sweeps")]
    pub sup_diffs: Vec<f64>,
    pub residual: f64,
    pub quad_err: f64,
    /// Bound on the effect of the boundary clamp outside the window.
    pub far_field_err: f64,
    pub k_final: usize,
    pub converged: bool,
    pub seed: u64,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub window: GridWindow,
    #[serde(skip)]
    pub out_dim: usize,
    /// Last two iterates, `[previous, final]`, laid out `[(point, component)]`.
    #[serde(skip)]
    pub iterates_kept: [Vec<f64>; 2],
}

impl IterationTrace {
    pub fn solution(&self) -> &[f64] {
        &self.iterates_kept[1]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    pub fn solution_grid(&self) -> SampledGrid {
        let bound = self.residual / (1.0 - self.certificate.theta).max(f64::MIN_POSITIVE) + self.quad_err;
        SampledGrid {
            window: self.window.clone(),
            out_dim: self.out_dim,
            values: self.solution().to_vec(),
            err_bound: vec![bound; self.window.len()],
        }
    }

    pub fn observed_ratio(&self) -> Result<f64> {
        estimate_observed_ratio(&self.sup_diffs, self.quad_err)
    }

    /// `sup_diffs[k+1] <= theta * sup_diffs[k] + 2 quad_err` for every recorded sweep.
    pub fn within_envelope(&self) -> bool {
        self.sup_diffs
            .windows(2)
            .all(|w| w[1] <= self.certificate.theta * w[0] * (1.0 + 1e-9) + 2.0 * self.quad_err + 1e-300)
    }
}

/// Largest ratio of successive sweep differences, ignoring sweeps below `10 quad_err`.
pub fn estimate_observed_ratio(sup_diffs: &[f64], quad_err: f64) -> Result<f64> {
    let floor = 10.0 * quad_err;
    let usable: Vec<f64> = sup_diffs.iter().copied().take_while(|d| *d > floor && *d > 0.0).collect();
    if usable.len() < 3 {
        return Err(Error::InsufficientSweeps {
            got: usable.len(),
            need: 3,
        });
    }
    Ok(usable.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max))
}
