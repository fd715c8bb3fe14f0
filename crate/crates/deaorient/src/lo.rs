//! Linear oriented (directional) model. For a subject activity (x, y) and
//! orientation (d-, d+) it maximizes beta subject to
//!
//! ```text
//!   sum_j lambda_j x_ij <= (1 - beta d-_i) x_i     i = 1..m
//!   sum_j lambda_j y_rj >= (1 + beta d+_r) y_r     r = 1..s
//!   beta >= 0, lambda >= 0, plus the RTS rows
//! ```
//!
//! and reads the target off theta = 1 - beta d-, phi = 1 + beta d+.

use crate::common::{self, SolveOptions};
use crate::core::{self, Activity, Evaluation, ModelKind, Orientation, Technology};
use crate::lp::{self, LpProblem, LpStatus, Relation, Sense};
use crate::DeaError;

/// Builds the LO program. Variables: lambda_1..lambda_n, then beta.
pub(crate) fn lo_problem(tech: &Technology, subject: &Activity, d: &Orientation) -> LpProblem {
    let n = tech.num_dmus();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut p = LpProblem::new(Sense::Maximize, c);
    for (i, row) in tech.inputs.iter().enumerate() {
        let mut coeffs = row.clone();
        coeffs.push(d.input_coeffs[i] * subject.inputs[i]);
        p.add_row(coeffs, Relation::Le, subject.inputs[i]);
    }
    for (r, row) in tech.outputs.iter().enumerate() {
        let mut coeffs = row.clone();
        coeffs.push(-d.output_coeffs[r] * subject.outputs[r]);
        p.add_row(coeffs, Relation::Ge, subject.outputs[r]);
    }
    core::push_rts_rows(&mut p, tech.rts, n);
    p
}

/// Evaluates a subject known to lie in the technology (always true for
/// reference DMUs). Infeasibility therefore signals a caller bug;
/// unboundedness signals degenerate data and is surfaced as a diagnostic.
pub fn solve_lo(
    tech: &Technology,
    subject: &Activity,
    d: &Orientation,
) -> Result<Evaluation, DeaError> {
    solve_lo_with(tech, subject, d, &SolveOptions::default())
}

pub fn solve_lo_with(
    tech: &Technology,
    subject: &Activity,
    d: &Orientation,
    opts: &SolveOptions,
) -> Result<Evaluation, DeaError> {
    common::check_subject_dims(tech, subject, d)?;
    let problem = lo_problem(tech, subject, d);
    let sol = lp::solve_lp(&problem)?;
    match sol.status {
        LpStatus::Infeasible => {
            return Err(DeaError::Infeasible(
                "LO program infeasible: subject lies outside the technology".into(),
            ))
        }
        LpStatus::Unbounded => {
            return Err(DeaError::Unbounded(
                "LO program unbounded: degenerate data (zero-cost output ray with d- = 0)".into(),
            ))
        }
        LpStatus::Optimal => {}
    }
    let n = tech.num_dmus();
    let beta = sol.primal[n].max(0.0);
    let lambda = sol.primal[..n].to_vec();

    let tau_minus: Vec<f64> = d.input_coeffs.iter().map(|di| beta * di).collect();
    let tau_plus: Vec<f64> = d.output_coeffs.iter().map(|dr| beta * dr).collect();
    let theta: Vec<f64> = tau_minus.iter().map(|t| 1.0 - t).collect();
    let phi: Vec<f64> = tau_plus.iter().map(|t| 1.0 + t).collect();

    common::finish_evaluation(
        tech, subject, ModelKind::Lo, beta, theta, phi, tau_minus, tau_plus, lambda, opts,
    )
}

/// Evaluates an arbitrary activity against the reference set. Activities
/// outside the technology are efficient by convention: beta = 0, rho = 1.
pub fn evaluate_lo_external(
    tech: &Technology,
    a: &Activity,
    d: &Orientation,
) -> Result<Evaluation, DeaError> {
    evaluate_lo_external_with(tech, a, d, &SolveOptions::default())
}

pub fn evaluate_lo_external_with(
    tech: &Technology,
    a: &Activity,
    d: &Orientation,
    opts: &SolveOptions,
) -> Result<Evaluation, DeaError> {
    common::check_subject_dims(tech, a, d)?;
    if !core::in_technology(tech, a)? {
        return Ok(common::outside_evaluation(tech, a, ModelKind::Lo));
    }
    solve_lo_with(tech, a, d, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::ReturnsToScale;

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
    fn non_oriented_crs_benchmark_dmu_b() {
        let t = five_dmus();
        let d = Orientation::ones(2, 2);
        let e = solve_lo(&t, &t.activity(1), &d).unwrap();
        assert!((e.beta - 1.0 / 3.0).abs() <= 1e-9);
        assert!((e.rho - 0.5).abs() <= 1e-9);
        assert_vec_close(&e.theta, &[2.0 / 3.0, 2.0 / 3.0], 1e-9);
        assert_vec_close(&e.phi, &[4.0 / 3.0, 4.0 / 3.0], 1e-9);
        assert_vec_close(&e.target.inputs, &[2.0 / 3.0, 4.0 / 3.0], 1e-9);
        assert_vec_close(&e.target.outputs, &[4.0 / 3.0, 8.0 / 3.0], 1e-9);
        assert_vec_close(&e.projection.inputs, &[2.0 / 3.0, 2.0 / 3.0], 1e-7);
        assert_vec_close(&e.projection.outputs, &[8.0 / 3.0, 8.0 / 3.0], 1e-7);
        assert!(e.max_slack_resolved);
    }

    #[test]
    fn efficient_dmu_gets_beta_zero() {
        let t = five_dmus();
        let d = Orientation::ones(2, 2);
        let e = solve_lo(&t, &t.activity(0), &d).unwrap();
        assert!(e.beta.abs() <= 1e-9);
        assert!((e.rho - 1.0).abs() <= 1e-9);
        assert_vec_close(&e.target.inputs, &t.activity(0).inputs, 1e-9);
    }

    #[test]
    fn half_weighted_outputs() {
        let t = five_dmus();
        let d = Orientation::new(vec![1.0, 1.0], vec![0.5, 0.5]);
        for j in 1..5 {
            let e = solve_lo(&t, &t.activity(j), &d).unwrap();
            assert!((e.beta - 0.4).abs() <= 1e-9, "DMU {j}: beta {}", e.beta);
            assert!((e.rho - 0.5).abs() <= 1e-9);
        }
        let e = solve_lo(&t, &t.activity(1), &d).unwrap();
        assert_vec_close(&e.target.inputs, &[0.6, 1.2], 1e-9);
        assert_vec_close(&e.target.outputs, &[1.2, 2.4], 1e-9);
        assert_vec_close(&e.projection.inputs, &[0.6, 0.6], 1e-7);
        assert_vec_close(&e.projection.outputs, &[2.4, 2.4], 1e-7);
    }

    #[test]
    fn mixed_orientation_breaks_symmetry() {
        let t = five_dmus();
        let d = Orientation::new(vec![1.0, 0.5], vec![1.0, 0.5]);
        let expect = [(1, 0.4, 7.0 / 13.0), (2, 1.0 / 3.0, 0.6), (3, 2.0 / 3.0, 1.0 / 3.0), (4, 0.5, 5.0 / 11.0)];
        for (j, beta, rho) in expect {
            let e = solve_lo(&t, &t.activity(j), &d).unwrap();
            assert!((e.beta - beta).abs() <= 1e-9, "DMU {j}");
            assert!((e.rho - rho).abs() <= 1e-9, "DMU {j}");
        }
    }

    #[test]
    fn input_only_orientation_is_radial() {
        let t = five_dmus();
        let d = Orientation::new(vec![1.0, 1.0], vec![0.0, 0.0]);
        let e = solve_lo(&t, &t.activity(1), &d).unwrap();
        // Classic input-radial score of B is 0.5.
        assert!((e.beta - 0.5).abs() <= 1e-9);
        assert_vec_close(&e.theta, &[0.5, 0.5], 1e-9);
        assert_vec_close(&e.phi, &[1.0, 1.0], 1e-9);
    }

    #[test]
    fn vrs_tightens_the_frontier() {
        let mut t = five_dmus();
        t.rts = ReturnsToScale::Vrs;
        let d = Orientation::ones(2, 2);
        let crs = solve_lo(&five_dmus(), &t.activity(1), &d).unwrap();
        let vrs = solve_lo(&t, &t.activity(1), &d).unwrap();
        assert!(vrs.beta <= crs.beta + 1e-9);
    }

    #[test]
    fn external_point_outside_technology() {
        let t = five_dmus();
        let d = Orientation::ones(2, 2);
        let a = Activity::new(vec![0.5, 0.5], vec![4.0, 4.0]);
        let e = evaluate_lo_external(&t, &a, &d).unwrap();
        assert!(e.outside_technology);
        assert_eq!(e.beta, 0.0);
        assert_eq!(e.rho, 1.0);
        let inside = Activity::new(vec![2.0, 2.0], vec![1.0, 1.0]);
        let e = evaluate_lo_external(&t, &inside, &d).unwrap();
        assert!(!e.outside_technology);
        assert!(e.beta > 0.0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let t = five_dmus();
        let d = Orientation::ones(2, 2);
        let bad = Activity::new(vec![1.0], vec![1.0, 1.0]);
        assert!(solve_lo(&t, &bad, &d).is_err());
        let bad_d = Orientation::ones(1, 2);
        assert!(solve_lo(&t, &t.activity(0), &bad_d).is_err());
    }
}
