//! Shared assembly of an `Evaluation` from a solved model: target, efficient
//! projection, slacks, optional second stage and the efficiency score.

use crate::core::{Activity, Evaluation, ModelKind, Orientation, Technology};
use crate::{projection, scores, DeaError};

/// Per-solve configuration shared by the LO and QO models.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Resolve the projection with the max-slack second stage.
    pub second_stage: bool,
    /// Subject input indices frozen by a zero value (contraction forced to 1).
    pub frozen_inputs: Vec<usize>,
    /// Subject output indices excluded from the score denominator.
    pub excluded_outputs: Vec<usize>,
    /// Force the QO bisection even when the closed-form fast path applies.
    pub qo_force_bisection: bool,
    /// Bisection tolerance on beta.
    pub beta_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            second_stage: true,
            frozen_inputs: Vec::new(),
            excluded_outputs: Vec::new(),
            qo_force_bisection: false,
            beta_tol: 1e-9,
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn finish_evaluation(
    tech: &Technology,
    subject: &Activity,
    model: ModelKind,
    beta: f64,
    mut theta: Vec<f64>,
    mut phi: Vec<f64>,
    mut tau_minus: Vec<f64>,
    mut tau_plus: Vec<f64>,
    mut lambda: Vec<f64>,
    opts: &SolveOptions,
) -> Result<Evaluation, DeaError> {
    let m = tech.num_inputs();
    let s = tech.num_outputs();

    // Frozen variables keep their value; their factors are pinned by
    // convention so they drop out of slacks and score averages.
    for &i in &opts.frozen_inputs {
        theta[i] = 1.0;
        tau_minus[i] = 0.0;
    }
    for &r in &opts.excluded_outputs {
        phi[r] = 1.0;
        tau_plus[r] = 0.0;
    }

    let target = Activity {
        inputs: subject
            .inputs
            .iter()
            .zip(&theta)
            .map(|(x, t)| t * x)
            .collect(),
        outputs: subject
            .outputs
            .iter()
            .zip(&phi)
            .map(|(y, p)| p * y)
            .collect(),
    };

    let mut max_slack_resolved = false;
    if opts.second_stage {
        let (l2, _, _) = projection::second_stage_max_slack(tech, &target)?;
        lambda = l2;
        max_slack_resolved = true;
    }

    let proj_inputs: Vec<f64> = tech
        .inputs
        .iter()
        .map(|row| row.iter().zip(&lambda).map(|(a, l)| a * l).sum())
        .collect();
    let proj_outputs: Vec<f64> = tech
        .outputs
        .iter()
        .map(|row| row.iter().zip(&lambda).map(|(a, l)| a * l).sum())
        .collect();
    let s_minus: Vec<f64> = target
        .inputs
        .iter()
        .zip(&proj_inputs)
        .map(|(t, p)| (t - p).max(0.0))
        .collect();
    let s_plus: Vec<f64> = proj_outputs
        .iter()
        .zip(&target.outputs)
        .map(|(p, t)| (p - t).max(0.0))
        .collect();
    let projection = Activity {
        inputs: proj_inputs,
        outputs: proj_outputs,
    };

    let active_inputs = m - opts.frozen_inputs.len();
    let active_outputs = s - opts.excluded_outputs.len();
    let rho = scores::farrell_oriented_efficiency(&theta, &phi, active_inputs, active_outputs)?;

    Ok(Evaluation {
        model,
        subject: subject.clone(),
        beta,
        theta,
        phi,
        tau_minus,
        tau_plus,
        target,
        lambda,
        projection,
        s_minus,
        s_plus,
        rho,
        outside_technology: false,
        max_slack_resolved,
    })
}

/// External-evaluation convention for an activity outside the technology:
/// it is efficient, so beta = 0 and rho = 1.
pub(crate) fn outside_evaluation(
    tech: &Technology,
    subject: &Activity,
    model: ModelKind,
) -> Evaluation {
    let m = tech.num_inputs();
    let s = tech.num_outputs();
    Evaluation {
        model,
        subject: subject.clone(),
        beta: 0.0,
        theta: vec![1.0; m],
        phi: vec![1.0; s],
        tau_minus: vec![0.0; m],
        tau_plus: vec![0.0; s],
        target: subject.clone(),
        lambda: vec![0.0; tech.num_dmus()],
        projection: subject.clone(),
        s_minus: vec![0.0; m],
        s_plus: vec![0.0; s],
        rho: 1.0,
        outside_technology: true,
        max_slack_resolved: false,
    }
}

/// Checks that a subject activity and orientation match the technology's dimensions.
pub(crate) fn check_subject_dims(
    tech: &Technology,
    subject: &Activity,
    d: &Orientation,
) -> Result<(), DeaError> {
    if subject.inputs.len() != tech.num_inputs() || subject.outputs.len() != tech.num_outputs() {
        return Err(DeaError::DimensionMismatch(
            "subject does not match technology dimensions".into(),
        ));
    }
    d.validate_for(subject)
}
