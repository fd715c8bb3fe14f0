//! Quadratic-CRS oriented model. The program
//!
//! ```text
//!   max beta  s.t.  sum_j lambda_j x_ij <= (1 - beta d-_i) x_i
//!                   sum_j lambda_j y_rj >= y_r / (1 - beta d+_r)
//!                   beta >= 0, lambda >= 0, plus the RTS rows
//! ```
//!
//! is quadratically constrained, but beta is the only nonlinearity: at a
//! fixed beta the constraints are linear in lambda and feasibility is
//! monotone non-increasing in beta. We therefore bisect beta over
//! [0, 1/max(d)) with LP feasibility subproblems. For uniform orientations
//! under CRS a closed form maps the LO optimum straight to the QO optimum.

use crate::common::{self, SolveOptions};
use crate::core::{self, Activity, Evaluation, ModelKind, Orientation, ReturnsToScale, Technology};
use crate::lp::{self, LpProblem, LpStatus, Relation, Sense};
use crate::{lo, DeaError};

const BISECT_MAX_ITER: usize = 200;
const BRACKET_MARGIN: f64 = 1e-12;

/// Feasibility block of the QO program at a fixed beta (variables: lambda).
pub(crate) fn qo_problem_at(
    tech: &Technology,
    subject: &Activity,
    d: &Orientation,
    beta: f64,
) -> LpProblem {
    let n = tech.num_dmus();
    let mut p = LpProblem::new(Sense::Maximize, vec![0.0; n]);
    for (i, row) in tech.inputs.iter().enumerate() {
        let rhs = (1.0 - beta * d.input_coeffs[i]) * subject.inputs[i];
        p.add_row(row.clone(), Relation::Le, rhs);
    }
    for (r, row) in tech.outputs.iter().enumerate() {
        let rhs = subject.outputs[r] / (1.0 - beta * d.output_coeffs[r]);
        p.add_row(row.clone(), Relation::Ge, rhs);
    }
    core::push_rts_rows(&mut p, tech.rts, n);
    p
}

fn uniform(v: &[f64]) -> Option<f64> {
    let first = *v.first()?;
    v.iter().all(|x| (x - first).abs() <= f64::EPSILON).then_some(first)
}

/// True when the closed-form fast path applies: uniform strictly positive
/// coefficients on both sides, CRS.
pub fn fast_path_applies(tech: &Technology, d: &Orientation) -> bool {
    tech.rts == ReturnsToScale::Crs
        && uniform(&d.input_coeffs).is_some_and(|v| v > 0.0)
        && uniform(&d.output_coeffs).is_some_and(|v| v > 0.0)
}

pub fn solve_qo(
    tech: &Technology,
    subject: &Activity,
    d: &Orientation,
) -> Result<Evaluation, DeaError> {
    solve_qo_with(tech, subject, d, &SolveOptions::default())
}

pub fn solve_qo_with(
    tech: &Technology,
    subject: &Activity,
    d: &Orientation,
    opts: &SolveOptions,
) -> Result<Evaluation, DeaError> {
    common::check_subject_dims(tech, subject, d)?;
    if d.output_coeffs.iter().all(|c| *c == 0.0) {
        // No output dilation: the quadratic program collapses to the linear
        // one exactly, so solve it that way regardless of options.
        let mut eval = lo::solve_lo_with(tech, subject, d, opts)?;
        eval.model = ModelKind::Qo;
        return Ok(eval);
    }
    if !opts.qo_force_bisection && fast_path_applies(tech, d) {
        return solve_qo_fast_path_with(tech, subject, d, opts);
    }
    solve_qo_bisect(tech, subject, d, opts)
}

fn solve_qo_bisect(
    tech: &Technology,
    subject: &Activity,
    d: &Orientation,
    opts: &SolveOptions,
) -> Result<Evaluation, DeaError> {
    let hi_cap = 1.0 / d.max_coeff() - BRACKET_MARGIN;
    if !lp::feasible(&qo_problem_at(tech, subject, d, 0.0))? {
        return Err(DeaError::Infeasible(
            "QO program infeasible at beta = 0: subject lies outside the technology".into(),
        ));
    }
    let mut lo_b = 0.0;
    let mut hi_b = hi_cap;
    if lp::feasible(&qo_problem_at(tech, subject, d, hi_b))? {
        // Mathematically impossible with positive data; zeros interacting
        // with the orientation can get here and are surfaced as bad data.
        return Err(DeaError::Unbounded(
            "QO bisection bracket invalid: feasible at the theoretical upper bound".into(),
        ));
    }
    // The quadratic optimum never exceeds the linear one, so the linear
    // optimum tightens the bracket; in particular it pins subjects already
    // on the frontier to beta <= beta_tol instead of letting feasibility
    // tolerance inflate them.
    let lo_sol = lp::solve_lp(&crate::lo::lo_problem(tech, subject, d))?;
    if lo_sol.status == LpStatus::Optimal {
        let beta_l = lo_sol.primal[tech.num_dmus()].max(0.0);
        hi_b = hi_b.min(beta_l + opts.beta_tol);
    }
    for _ in 0..BISECT_MAX_ITER {
        if hi_b - lo_b <= opts.beta_tol {
            break;
        }
        let mid = 0.5 * (lo_b + hi_b);
        if lp::feasible(&qo_problem_at(tech, subject, d, mid))? {
            lo_b = mid;
        } else {
            hi_b = mid;
        }
    }
    let beta = lo_b;

    // Monotone-feasibility premise spot check.
    if beta > 0.0 && !lp::feasible(&qo_problem_at(tech, subject, d, beta / 2.0))? {
        return Err(DeaError::Solver(
            "feasibility is not monotone in beta; bisection premise violated".into(),
        ));
    }

    // Certificate at the last feasible beta.
    let sol = lp::solve_lp(&qo_problem_at(tech, subject, d, beta))?;
    if sol.status != LpStatus::Optimal {
        return Err(DeaError::Solver(
            "QO certificate extraction failed at a feasible beta".into(),
        ));
    }
    let lambda = sol.primal;

    let (theta, phi, tau_minus, tau_plus) = qo_factors(d, beta);
    common::finish_evaluation(
        tech, subject, ModelKind::Qo, beta, theta, phi, tau_minus, tau_plus, lambda, opts,
    )
}

fn qo_factors(d: &Orientation, beta: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
    let tau_minus: Vec<f64> = d.input_coeffs.iter().map(|di| beta * di).collect();
    let theta: Vec<f64> = tau_minus.iter().map(|t| 1.0 - t).collect();
    let phi: Vec<f64> = d
        .output_coeffs
        .iter()
        .map(|dr| 1.0 / (1.0 - beta * dr))
        .collect();
    let tau_plus: Vec<f64> = phi.iter().map(|p| p - 1.0).collect();
    (theta, phi, tau_minus, tau_plus)
}

/// Closed-form root mapping the LO optimum to the QO optimum for uniform
/// orientation coefficients under CRS.
pub fn beta_q_from_beta_l(beta_l: f64, d_minus: f64, d_plus: f64) -> Result<f64, DeaError> {
    if !(d_minus > 0.0 && d_plus > 0.0) {
        return Err(DeaError::InvalidArgument(
            "beta_q_from_beta_l requires d_minus > 0 and d_plus > 0".into(),
        ));
    }
    if !(0.0..1.0 / d_minus).contains(&beta_l) {
        return Err(DeaError::InvalidArgument(format!(
            "beta_l = {beta_l} outside [0, 1/d_minus)"
        )));
    }
    let sum = d_minus + d_plus;
    let disc = sum * sum - 4.0 * beta_l * d_minus * d_plus * sum / (1.0 + beta_l * d_plus);
    Ok((sum - disc.max(0.0).sqrt()) / (2.0 * d_minus * d_plus))
}

/// Uniform-orientation CRS fast path: one LO solve plus the closed form.
/// The QO target sits on the same ray as the LO target, so the LO efficient
/// projection rescales onto the QO one.
pub fn solve_qo_fast_path(
    tech: &Technology,
    subject: &Activity,
    d: &Orientation,
) -> Result<Evaluation, DeaError> {
    solve_qo_fast_path_with(tech, subject, d, &SolveOptions::default())
}

pub fn solve_qo_fast_path_with(
    tech: &Technology,
    subject: &Activity,
    d: &Orientation,
    opts: &SolveOptions,
) -> Result<Evaluation, DeaError> {
    if !fast_path_applies(tech, d) {
        return Err(DeaError::InvalidArgument(
            "fast path requires uniform positive orientation coefficients under CRS".into(),
        ));
    }
    let d_minus = d.input_coeffs[0];
    let d_plus = d.output_coeffs[0];

    let mut lo_opts = opts.clone();
    lo_opts.second_stage = false; // the QO assembly runs its own second stage
    let lo_eval = lo::solve_lo_with(tech, subject, d, &lo_opts)?;
    let beta_l = lo_eval.beta;
    let beta_q = beta_q_from_beta_l(beta_l, d_minus, d_plus)?;

    // Same-ray scaling factor between the LO and QO targets.
    let theta_l = 1.0 - beta_l * d_minus;
    let theta_q = 1.0 - beta_q * d_minus;
    let ray = theta_q / theta_l;
    let lambda: Vec<f64> = lo_eval.lambda.iter().map(|l| l * ray).collect();

    let (theta, phi, tau_minus, tau_plus) = qo_factors(d, beta_q);
    let mut eval = common::finish_evaluation(
        tech, subject, ModelKind::Qo, beta_q, theta, phi, tau_minus, tau_plus, lambda, opts,
    )?;
    eval.model = ModelKind::Qo;
    Ok(eval)
}

/// External evaluation mirroring `evaluate_lo_external`.
pub fn evaluate_qo_external(
    tech: &Technology,
    a: &Activity,
    d: &Orientation,
) -> Result<Evaluation, DeaError> {
    evaluate_qo_external_with(tech, a, d, &SolveOptions::default())
}

pub fn evaluate_qo_external_with(
    tech: &Technology,
    a: &Activity,
    d: &Orientation,
    opts: &SolveOptions,
) -> Result<Evaluation, DeaError> {
    common::check_subject_dims(tech, a, d)?;
    if !core::in_technology(tech, a)? {
        return Ok(common::outside_evaluation(tech, a, ModelKind::Qo));
    }
    solve_qo_with(tech, a, d, opts)
}

/// Cross-validates the fast path against the bisection on one instance.
/// Used by the self-check machinery.
pub fn check_fast_path_agreement(
    tech: &Technology,
    subject: &Activity,
    d: &Orientation,
    tol: f64,
) -> Result<(), DeaError> {
    if !fast_path_applies(tech, d) {
        return Ok(());
    }
    let fast = solve_qo_fast_path(tech, subject, d)?;
    let mut opts = SolveOptions::default();
    opts.qo_force_bisection = true;
    let slow = solve_qo_with(tech, subject, d, &opts)?;
    if (fast.beta - slow.beta).abs() > tol {
        return Err(DeaError::FastPathMismatch(format!(
            "beta fast {} vs bisection {}",
            fast.beta, slow.beta
        )));
    }
    for (a, b) in fast
        .target
        .inputs
        .iter()
        .chain(&fast.target.outputs)
        .zip(slow.target.inputs.iter().chain(&slow.target.outputs))
    {
        if (a - b).abs() > tol * 10.0 {
            return Err(DeaError::FastPathMismatch(format!(
                "target coordinate fast {a} vs bisection {b}"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn five_dmus() -> Technology {
        Technology {
            inputs: vec![vec![1.0, 1.0, 1.0, 2.0, 2.0], vec![1.0, 2.0, 2.0, 1.0, 1.0]],
            outputs: vec![vec![4.0, 1.0, 2.0, 1.0, 2.0], vec![4.0, 2.0, 1.0, 2.0, 1.0]],
            names: ["A", "B", "C", "D", "E"].map(String::from).to_vec(),
            rts: ReturnsToScale::Crs,
        }
    }

    fn assert_vec_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} != {b:?}");
        }
    }

    #[test]
    fn closed_form_roots() {
        // Non-oriented case: beta_L = 1/3 maps to 1 - sqrt(0.5).
        let b = beta_q_from_beta_l(1.0 / 3.0, 1.0, 1.0).unwrap();
        assert!((b - (1.0 - 0.5_f64.sqrt())).abs() <= 1e-12);
        // Half-weighted outputs: beta_L = 0.4 maps to (1.5 - sqrt(1.25)) / 1.
        let b = beta_q_from_beta_l(0.4, 1.0, 0.5).unwrap();
        assert!((b - (1.5 - 1.25_f64.sqrt())).abs() <= 1e-12);
        // beta_L = 0 stays 0.
        assert!(beta_q_from_beta_l(0.0, 1.0, 1.0).unwrap().abs() <= 1e-12);
        // Domain errors.
        assert!(beta_q_from_beta_l(1.5, 1.0, 1.0).is_err());
        assert!(beta_q_from_beta_l(0.3, 0.0, 1.0).is_err());
    }

    #[test]
    fn non_oriented_crs_benchmark_dmu_b() {
        let t = five_dmus();
        let d = Orientation::ones(2, 2);
        let e = solve_qo(&t, &t.activity(1), &d).unwrap();
        let expected = 1.0 - 0.5_f64.sqrt();
        assert!((e.beta - expected).abs() <= 1e-9);
        assert!((e.rho - 0.5).abs() <= 1e-9);
        let c = 0.5_f64.sqrt();
        assert_vec_close(&e.theta, &[c, c], 1e-9);
        assert_vec_close(&e.phi, &[1.0 / c, 1.0 / c], 1e-9);
        assert_vec_close(&e.target.inputs, &[c, 2.0 * c], 1e-9);
        assert_vec_close(&e.target.outputs, &[1.0 / c, 2.0 / c], 1e-9);
        assert_vec_close(&e.projection.inputs, &[c, c], 1e-7);
        assert_vec_close(&e.projection.outputs, &[4.0 * c, 4.0 * c], 1e-7);
    }

    #[test]
    fn bisection_matches_fast_path() {
        let t = five_dmus();
        let d = Orientation::new(vec![1.0, 1.0], vec![0.5, 0.5]);
        assert!(fast_path_applies(&t, &d));
        for j in 0..5 {
            check_fast_path_agreement(&t, &t.activity(j), &d, 1e-7).unwrap();
        }
    }

    #[test]
    fn mixed_orientation_uses_bisection() {
        let t = five_dmus();
        let d = Orientation::new(vec![1.0, 0.5], vec![1.0, 0.5]);
        assert!(!fast_path_applies(&t, &d));
        let expect = [
            (1, 1.5 - 1.25_f64.sqrt(), 0.5),
            (2, 1.0 - 0.5_f64.sqrt(), 0.604),
            (3, 2.0 - 2.0_f64.sqrt(), 0.293),
            (4, 1.5 - 1.25_f64.sqrt(), 0.5),
        ];
        for (j, beta, rho) in expect {
            let e = solve_qo(&t, &t.activity(j), &d).unwrap();
            assert!((e.beta - beta).abs() <= 1e-7, "DMU {j}: beta {} vs {beta}", e.beta);
            assert!((e.rho - rho).abs() <= 1e-3, "DMU {j}: rho {} vs {rho}", e.rho);
        }
    }

    #[test]
    fn dmu_b_mixed_orientation_factors() {
        let t = five_dmus();
        let d = Orientation::new(vec![1.0, 0.5], vec![1.0, 0.5]);
        let e = solve_qo(&t, &t.activity(1), &d).unwrap();
        assert_vec_close(&e.theta, &[0.618, 0.809], 1e-3);
        assert_vec_close(&e.phi, &[1.618, 1.236], 1e-3);
        // An output with coefficient d dilates by the inverse of the
        // contraction an input with coefficient d receives.
        assert!((e.phi[0] - 1.0 / e.theta[0]).abs() <= 1e-7);
        assert!((e.phi[1] - 1.0 / e.theta[1]).abs() <= 1e-7);
    }

    #[test]
    fn non_crs_always_bisects() {
        let mut t = five_dmus();
        t.rts = ReturnsToScale::Vrs;
        let d = Orientation::ones(2, 2);
        assert!(!fast_path_applies(&t, &d));
        let e = solve_qo(&t, &t.activity(1), &d).unwrap();
        assert!(e.beta >= 0.0 && e.beta < 1.0);
    }

    #[test]
    fn forced_bisection_option_respected() {
        let t = five_dmus();
        let d = Orientation::ones(2, 2);
        let mut opts = SolveOptions::default();
        opts.qo_force_bisection = true;
        let slow = solve_qo_with(&t, &t.activity(2), &d, &opts).unwrap();
        let fast = solve_qo(&t, &t.activity(2), &d).unwrap();
        assert!((slow.beta - fast.beta).abs() <= 1e-7);
    }

    #[test]
    fn external_point_outside_technology() {
        let t = five_dmus();
        let d = Orientation::ones(2, 2);
        let a = Activity::new(vec![0.5, 0.5], vec![4.0, 4.0]);
        let e = evaluate_qo_external(&t, &a, &d).unwrap();
        assert!(e.outside_technology);
        assert_eq!(e.beta, 0.0);
        assert_eq!(e.rho, 1.0);
    }

    #[test]
    fn beta_dominance_over_lo() {
        let t = five_dmus();
        for d in [
            Orientation::ones(2, 2),
            Orientation::new(vec![1.0, 0.5], vec![1.0, 0.5]),
            Orientation::new(vec![1.0, 1.0], vec![0.5, 0.5]),
        ] {
            for j in 0..5 {
                let l = crate::lo::solve_lo(&t, &t.activity(j), &d).unwrap();
                let q = solve_qo(&t, &t.activity(j), &d).unwrap();
                assert!(q.beta <= l.beta + 1e-9, "DMU {j}");
            }
        }
    }
}
