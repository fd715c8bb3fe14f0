//! Farrell oriented efficiency: the ratio between the average contraction
//! of inputs and the average dilation of outputs at the target, plus the
//! per-model closed forms, zeros adjustments and the cost-gradient
//! orientation constructor.

use serde::{Deserialize, Serialize};

use crate::core::{Evaluation, Orientation, ZeroAdjustmentLog};
use crate::DeaError;

/// rho = mean(theta over active inputs) / mean(phi over active outputs).
///
/// Frozen variables carry factor 1 by convention, so the active mean is
/// recovered from the counts alone: the excluded entries contribute exactly
/// 1 each to the full sums.
pub fn farrell_oriented_efficiency(
    theta: &[f64],
    phi: &[f64],
    active_inputs: usize,
    active_outputs: usize,
) -> Result<f64, DeaError> {
    if active_inputs == 0 || active_outputs == 0 || active_inputs > theta.len()
        || active_outputs > phi.len()
    {
        return Err(DeaError::InvalidArgument(format!(
            "active counts ({active_inputs}, {active_outputs}) out of range for ({}, {})",
            theta.len(),
            phi.len()
        )));
    }
    let theta_sum: f64 = theta.iter().sum();
    let phi_sum: f64 = phi.iter().sum();
    let mean_theta = (theta_sum - (theta.len() - active_inputs) as f64) / active_inputs as f64;
    let mean_phi = (phi_sum - (phi.len() - active_outputs) as f64) / active_outputs as f64;
    Ok(mean_theta / mean_phi)
}

/// Closed form of the LO score:
/// (1 - beta * mean(d-)) / (1 + beta * mean(d+)).
pub fn rho_lo_closed_form(beta_l: f64, d: &Orientation) -> f64 {
    let mean_dm = mean(&d.input_coeffs);
    let mean_dp = mean(&d.output_coeffs);
    (1.0 - beta_l * mean_dm) / (1.0 + beta_l * mean_dp)
}

/// Closed form of the QO score:
/// (1 - beta * mean(d-)) / mean_r(1 / (1 - beta d+_r)).
pub fn rho_qo_closed_form(beta_q: f64, d: &Orientation) -> f64 {
    let mean_dm = mean(&d.input_coeffs);
    let mean_inv: f64 = d
        .output_coeffs
        .iter()
        .map(|dr| 1.0 / (1.0 - beta_q * dr))
        .sum::<f64>()
        / d.output_coeffs.len() as f64;
    (1.0 - beta_q * mean_dm) / mean_inv
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// How the cost-gradient orientation is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientNormalization {
    /// d = 1 / ((m_c + s_c) * grad); beta is already a cost approximation.
    Count,
    /// d = max(grad) / grad, keeping coefficients in (0, 1]; beta must be
    /// multiplied by max(grad) * (m_c + s_c) to recover the cost.
    InfNorm,
}

/// Marginal improvement costs over the controllable variables, in
/// input-then-output order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostGradient {
    /// One entry per variable (m + s total); only controllable entries are
    /// read and they must be strictly positive.
    pub grad: Vec<f64>,
    pub controllable: Vec<bool>,
    pub num_inputs: usize,
}

impl CostGradient {
    fn validate(&self) -> Result<(), DeaError> {
        if self.grad.len() != self.controllable.len() || self.num_inputs > self.grad.len() {
            return Err(DeaError::DimensionMismatch(
                "cost gradient mask/length mismatch".into(),
            ));
        }
        let mut any = false;
        for (g, c) in self.grad.iter().zip(&self.controllable) {
            if *c {
                any = true;
                if !(g.is_finite() && *g > 0.0) {
                    return Err(DeaError::InvalidArgument(
                        "controllable marginal costs must be strictly positive".into(),
                    ));
                }
            }
        }
        if !any {
            return Err(DeaError::InvalidArgument(
                "at least one variable must be controllable".into(),
            ));
        }
        Ok(())
    }
}

/// Builds an orientation from marginal improvement costs; uncontrollable
/// variables are frozen with coefficient 0. The returned multiplier turns
/// the resulting beta into a linear approximation of the cost of
/// transforming the subject into its target.
pub fn orientation_from_cost_gradient(
    cg: &CostGradient,
    normalize: GradientNormalization,
) -> Result<(Orientation, f64), DeaError> {
    cg.validate()?;
    let count = cg.controllable.iter().filter(|c| **c).count();
    let max_grad = cg
        .grad
        .iter()
        .zip(&cg.controllable)
        .filter(|(_, c)| **c)
        .map(|(g, _)| *g)
        .fold(0.0, f64::max);

    let coeff = |k: usize| -> f64 {
        if !cg.controllable[k] {
            return 0.0;
        }
        match normalize {
            GradientNormalization::Count => 1.0 / (count as f64 * cg.grad[k]),
            GradientNormalization::InfNorm => max_grad / cg.grad[k],
        }
    };
    let d = Orientation {
        input_coeffs: (0..cg.num_inputs).map(&coeff).collect(),
        output_coeffs: (cg.num_inputs..cg.grad.len()).map(&coeff).collect(),
    };
    let multiplier = match normalize {
        GradientNormalization::Count => 1.0,
        GradientNormalization::InfNorm => max_grad * count as f64,
    };
    Ok((d, multiplier))
}

/// Recomputes the score of an evaluation taking a zero-adjustment log into
/// account: frozen variables are pinned at factor 1 / slack 0 and drop out
/// of the score's averages. `dmu` selects the log entries of the subject.
pub fn attach_score(
    mut eval: Evaluation,
    log: &ZeroAdjustmentLog,
    dmu: usize,
) -> Result<Evaluation, DeaError> {
    let frozen = log.frozen_inputs(dmu);
    let excluded = log.excluded_outputs(dmu);
    for &i in &frozen {
        eval.theta[i] = 1.0;
        eval.tau_minus[i] = 0.0;
        eval.target.inputs[i] = eval.subject.inputs[i];
    }
    for &r in &excluded {
        eval.phi[r] = 1.0;
        eval.tau_plus[r] = 0.0;
        eval.target.outputs[r] = eval.subject.outputs[r];
    }
    let active_inputs = eval.theta.len() - frozen.len();
    let active_outputs = eval.phi.len() - excluded.len();
    eval.rho = farrell_oriented_efficiency(&eval.theta, &eval.phi, active_inputs, active_outputs)?;
    Ok(eval)
}
