//! Max-slack second stage and efficiency classification. The second stage
//! resolves projection non-uniqueness by maximizing unit-free slacks scaled
//! by the target coordinates.

use crate::core::{self, Activity, Orientation, Technology};
use crate::lp::{self, LpProblem, LpStatus, Relation, Sense};
use crate::{lo, DeaError};

const EFF_TOL: f64 = 1e-7;

/// Additive max-slack program on a target activity inside the technology:
///
/// ```text
///   max sum_i s-_i / x*_i + sum_r s+_r / y*_r
///   s.t. X lambda + s- = x*,  Y lambda - s+ = y*,  lambda, s-, s+ >= 0
/// ```
///
/// Zero target coordinates get zero weight; their slacks are forced to zero
/// by the equality rows anyway. Returns (lambda, s_minus, s_plus).
///
/// Targets produced by the bisection sit numerically on the frontier, so an
/// exactly-anchored equality system can come out marginally infeasible. In
/// that case the anchor is relaxed by a relative epsilon far below any
/// reported precision and solved again.
pub fn second_stage_max_slack(
    tech: &Technology,
    target: &Activity,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>), DeaError> {
    match second_stage_at(tech, target) {
        Err(DeaError::Infeasible(_)) => {
            const RELAX: f64 = 1e-7;
            let nudged = Activity {
                inputs: target.inputs.iter().map(|x| x * (1.0 + RELAX)).collect(),
                outputs: target.outputs.iter().map(|y| y * (1.0 - RELAX)).collect(),
            };
            second_stage_at(tech, &nudged)
        }
        other => other,
    }
}

fn second_stage_at(
    tech: &Technology,
    target: &Activity,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>), DeaError> {
    let n = tech.num_dmus();
    let m = tech.num_inputs();
    let s = tech.num_outputs();
    if target.inputs.len() != m || target.outputs.len() != s {
        return Err(DeaError::DimensionMismatch(
            "target does not match technology dimensions".into(),
        ));
    }

    // Variables: lambda (n), s- (m), s+ (s).
    let nv = n + m + s;
    let mut c = vec![0.0; nv];
    for i in 0..m {
        if target.inputs[i] > 0.0 {
            c[n + i] = 1.0 / target.inputs[i];
        }
    }
    for r in 0..s {
        if target.outputs[r] > 0.0 {
            c[n + m + r] = 1.0 / target.outputs[r];
        }
    }
    let mut p = LpProblem::new(Sense::Maximize, c);
    for (i, row) in tech.inputs.iter().enumerate() {
        let mut coeffs = vec![0.0; nv];
        coeffs[..n].copy_from_slice(row);
        coeffs[n + i] = 1.0;
        p.add_row(coeffs, Relation::Eq, target.inputs[i]);
    }
    for (r, row) in tech.outputs.iter().enumerate() {
        let mut coeffs = vec![0.0; nv];
        coeffs[..n].copy_from_slice(row);
        coeffs[n + m + r] = -1.0;
        p.add_row(coeffs, Relation::Eq, target.outputs[r]);
    }
    core::push_rts_rows(&mut p, tech.rts, n);

    let sol = lp::solve_lp(&p)?;
    match sol.status {
        LpStatus::Infeasible => Err(DeaError::Infeasible(
            "second stage infeasible: target lies outside the technology".into(),
        )),
        LpStatus::Unbounded => Err(DeaError::Unbounded(
            "second stage unbounded: degenerate data".into(),
        )),
        LpStatus::Optimal => {
            let lambda = sol.primal[..n].to_vec();
            let s_minus = sol.primal[n..n + m].to_vec();
            let s_plus = sol.primal[n + m..].to_vec();
            Ok((lambda, s_minus, s_plus))
        }
    }
}

/// An activity in the technology is weakly efficient iff no feasible
/// activity strictly improves every variable; equivalently the LO model
/// with an all-ones orientation finds beta = 0.
pub fn is_weakly_efficient(tech: &Technology, a: &Activity) -> Result<bool, DeaError> {
    let d = Orientation::ones(tech.num_inputs(), tech.num_outputs());
    let mut opts = crate::common::SolveOptions::default();
    opts.second_stage = false;
    let eval = lo::solve_lo_with(tech, a, &d, &opts)?;
    Ok(eval.beta <= EFF_TOL)
}

/// An activity in the technology is (strongly) efficient iff the max-slack
/// second stage finds no positive slack.
pub fn is_efficient(tech: &Technology, a: &Activity) -> Result<bool, DeaError> {
    let (_, s_minus, s_plus) = second_stage_max_slack(tech, a)?;
    Ok(s_minus.iter().chain(&s_plus).all(|v| *v <= EFF_TOL))
}
