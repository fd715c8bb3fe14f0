//! Independent desk-scale verification: exact feasibility by
//! Fourier-Motzkin quantifier elimination over big rationals, brute-force
//! beta via exact bisection, and the monotonicity property scanner.
//!
//! Everything here is deliberately independent of the simplex path so that
//! oracle error can never mask solver error.

use std::collections::HashSet;

use num::{BigRational, One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::core::{Activity, ModelKind, Orientation, ReturnsToScale, Technology};
use crate::lp::Relation;
use crate::{lo, qo, DeaError};

/// Size caps keeping the doubly exponential elimination harmless.
pub const MAX_VARS: usize = 6;
pub const MAX_CONSTRAINTS: usize = 12;

const BISECT_ITERS: usize = 60;

/// Exact conversion of a finite f64 into a rational.
pub fn rat(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite float")
}

/// One inequality `coeffs . x <= rhs`.
type Row = (Vec<BigRational>, BigRational);

/// Exact feasibility of `A x rel b` with optional per-variable
/// nonnegativity, by Fourier-Motzkin elimination. No tolerances.
pub fn fm_feasible(
    a: &[Vec<BigRational>],
    relations: &[Relation],
    b: &[BigRational],
    nonneg: &[bool],
) -> Result<bool, DeaError> {
    let nvars = nonneg.len();
    if nvars > MAX_VARS {
        return Err(DeaError::OracleCap(format!("{nvars} variables > {MAX_VARS}")));
    }
    if a.len() > MAX_CONSTRAINTS {
        return Err(DeaError::OracleCap(format!(
            "{} constraints > {MAX_CONSTRAINTS}",
            a.len()
        )));
    }
    if a.len() != relations.len() || a.len() != b.len() {
        return Err(DeaError::DimensionMismatch(
            "oracle constraint arrays differ in length".into(),
        ));
    }

    let mut rows: Vec<Row> = Vec::new();
    for ((coeffs, rel), rhs) in a.iter().zip(relations).zip(b) {
        if coeffs.len() != nvars {
            return Err(DeaError::DimensionMismatch(
                "oracle row width differs from variable count".into(),
            ));
        }
        match rel {
            Relation::Le => rows.push((coeffs.clone(), rhs.clone())),
            Relation::Ge => rows.push((
                coeffs.iter().map(|c| -c).collect(),
                -rhs.clone(),
            )),
            Relation::Eq => {
                rows.push((coeffs.clone(), rhs.clone()));
                rows.push((coeffs.iter().map(|c| -c).collect(), -rhs.clone()));
            }
        }
    }
    for (k, flag) in nonneg.iter().enumerate() {
        if *flag {
            let mut coeffs = vec![BigRational::zero(); nvars];
            coeffs[k] = -BigRational::one();
            rows.push((coeffs, BigRational::zero()));
        }
    }

    let mut remaining: Vec<usize> = (0..nvars).collect();
    while !remaining.is_empty() {
        if !sweep_constants(&mut rows) {
            return Ok(false);
        }
        // Greedy: eliminate the variable with the smallest pos x neg blowup.
        let (pick, _) = remaining
            .iter()
            .enumerate()
            .map(|(slot, &v)| {
                let pos = rows.iter().filter(|(c, _)| c[v].is_positive()).count();
                let neg = rows.iter().filter(|(c, _)| c[v].is_negative()).count();
                (slot, pos * neg + pos + neg)
            })
            .min_by_key(|&(_, w)| w)
            .unwrap();
        let var = remaining.swap_remove(pick);
        rows = eliminate(rows, var);
        // The input caps bound the starting size, but elimination can still
        // square the row count per step; bail out before that turns into
        // minutes of bignum arithmetic.
        if rows.len() > 5000 {
            return Err(DeaError::OracleCap(format!(
                "{} intermediate rows during elimination",
                rows.len()
            )));
        }
    }
    Ok(sweep_constants(&mut rows))
}

/// Drops trivially true rows; returns false on a contradiction.
fn sweep_constants(rows: &mut Vec<Row>) -> bool {
    let mut feasible = true;
    rows.retain(|(coeffs, rhs)| {
        if coeffs.iter().all(|c| c.is_zero()) {
            if rhs < &BigRational::zero() {
                feasible = false;
            }
            false
        } else {
            true
        }
    });
    feasible
}

fn eliminate(rows: Vec<Row>, var: usize) -> Vec<Row> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let mut keep = Vec::new();
    for row in rows {
        let c = &row.0[var];
        if c.is_positive() {
            pos.push(row);
        } else if c.is_negative() {
            neg.push(row);
        } else {
            keep.push(row);
        }
    }
    let mut seen: HashSet<Row> = HashSet::new();
    let mut out: Vec<Row> = Vec::new();
    let combos: Vec<Row> = pos
        .iter()
        .flat_map(|p| neg.iter().map(|n| combine(p, n, var)))
        .collect();
    for row in keep.into_iter().chain(combos) {
        let norm = normalize(row, var);
        if seen.insert(norm.clone()) {
            out.push(norm);
        }
    }
    out
}

/// Combines a positive-coefficient row and a negative-coefficient row so the
/// variable cancels exactly.
fn combine(p: &Row, n: &Row, var: usize) -> Row {
    let cp = p.0[var].clone();
    let cn = -n.0[var].clone();
    // cn * p + cp * n
    let coeffs: Vec<BigRational> = p
        .0
        .iter()
        .zip(&n.0)
        .map(|(a, b)| &cn * a + &cp * b)
        .collect();
    let rhs = &cn * &p.1 + &cp * &n.1;
    (coeffs, rhs)
}

/// Scales a row so its leading nonzero coefficient has absolute value 1,
/// which makes duplicate detection scale-invariant. The eliminated variable
/// column is zeroed exactly.
fn normalize(mut row: Row, var: usize) -> Row {
    row.0[var] = BigRational::zero();
    if let Some(lead) = row.0.iter().find(|c| !c.is_zero()).map(|c| c.abs()) {
        for c in row.0.iter_mut() {
            *c /= &lead;
        }
        row.1 /= &lead;
    }
    row
}

/// Constraint block of the LO or QO program at a fixed rational beta, in
/// the lambda variables only.
fn model_block_at(
    tech: &Technology,
    subject: &Activity,
    d: &Orientation,
    model: ModelKind,
    beta: &BigRational,
) -> Result<(Vec<Vec<BigRational>>, Vec<Relation>, Vec<BigRational>), DeaError> {
    let one = BigRational::one();
    let mut a = Vec::new();
    let mut rels = Vec::new();
    let mut b = Vec::new();
    for (i, row) in tech.inputs.iter().enumerate() {
        a.push(row.iter().map(|v| rat(*v)).collect());
        rels.push(Relation::Le);
        let factor = &one - beta * rat(d.input_coeffs[i]);
        b.push(factor * rat(subject.inputs[i]));
    }
    for (r, row) in tech.outputs.iter().enumerate() {
        a.push(row.iter().map(|v| rat(*v)).collect());
        rels.push(Relation::Ge);
        let rhs = match model {
            ModelKind::Lo => (&one + beta * rat(d.output_coeffs[r])) * rat(subject.outputs[r]),
            ModelKind::Qo => {
                let denom = &one - beta * rat(d.output_coeffs[r]);
                if !denom.is_positive() {
                    return Err(DeaError::InvalidArgument(
                        "beta outside the QO dilation domain".into(),
                    ));
                }
                rat(subject.outputs[r]) / denom
            }
        };
        b.push(rhs);
    }
    let n = tech.num_dmus();
    let sum_row = vec![BigRational::one(); n];
    match tech.rts {
        ReturnsToScale::Crs => {}
        ReturnsToScale::Vrs => {
            a.push(sum_row);
            rels.push(Relation::Eq);
            b.push(BigRational::one());
        }
        ReturnsToScale::Nirs => {
            a.push(sum_row);
            rels.push(Relation::Le);
            b.push(BigRational::one());
        }
        ReturnsToScale::Ndrs => {
            a.push(sum_row);
            rels.push(Relation::Ge);
            b.push(BigRational::one());
        }
        ReturnsToScale::Grs { lower, upper } => {
            a.push(sum_row.clone());
            rels.push(Relation::Ge);
            b.push(rat(lower));
            a.push(sum_row);
            rels.push(Relation::Le);
            b.push(rat(upper));
        }
    }
    Ok((a, rels, b))
}

fn block_feasible(
    tech: &Technology,
    subject: &Activity,
    d: &Orientation,
    model: ModelKind,
    beta: &BigRational,
) -> Result<bool, DeaError> {
    let (a, rels, b) = model_block_at(tech, subject, d, model, beta)?;
    let nonneg = vec![true; tech.num_dmus()];
    fm_feasible(&a, &rels, &b, &nonneg)
}

/// Brute-force optimal beta via exact bisection over FM feasibility.
pub fn brute_beta(
    tech: &Technology,
    subject: &Activity,
    d: &Orientation,
    model: ModelKind,
) -> Result<f64, DeaError> {
    let zero = BigRational::zero();
    if !block_feasible(tech, subject, d, model, &zero)? {
        return Err(DeaError::Infeasible(
            "subject lies outside the technology".into(),
        ));
    }

    let max_rel = match model {
        ModelKind::Lo => d.input_coeffs.iter().cloned().fold(0.0, f64::max),
        ModelKind::Qo => d.max_coeff(),
    };
    let mut lo_b = zero;
    let mut hi_b;
    if max_rel > 0.0 {
        hi_b = BigRational::one() / rat(max_rel);
        if model == ModelKind::Qo {
            // Strictly inside the dilation domain.
            hi_b *= rat(0.999_999_999_999);
        }
    } else {
        hi_b = BigRational::one();
    }
    let mut guard = 0;
    while block_feasible(tech, subject, d, model, &hi_b)? {
        hi_b *= rat(2.0);
        guard += 1;
        if guard > 60 || (model == ModelKind::Qo && max_rel > 0.0) {
            return Err(DeaError::Unbounded(
                "oracle bisection bracket invalid".into(),
            ));
        }
    }
    let half = BigRational::new(1.into(), 2.into());
    for _ in 0..BISECT_ITERS {
        let mid = (&lo_b + &hi_b) * &half;
        if block_feasible(tech, subject, d, model, &mid)? {
            lo_b = mid;
        } else {
            hi_b = mid;
        }
    }
    Ok(ratio_to_f64(&lo_b))
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    use num::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// One detected monotonicity violation.
#[derive(Debug, Clone)]
pub struct Violation {
    pub sample: usize,
    pub dmu: usize,
    pub beta_better: f64,
    pub beta_worse: f64,
    pub rho_better: f64,
    pub rho_worse: f64,
    pub detail: String,
}

/// Samples dominated pairs inside the technology and checks that worsening
/// an activity never decreases beta nor increases rho. Expected empty.
pub fn monotonicity_scan(
    tech: &Technology,
    d: &Orientation,
    model: ModelKind,
    samples: usize,
    seed: u64,
) -> Result<Vec<Violation>, DeaError> {
    monotonicity_scan_with(tech, d, model, samples, seed, false)
}

/// `invert_comparator` flips the checks so the scan must report violations;
/// the self-check suite uses it to prove the scanner can fail.
pub fn monotonicity_scan_with(
    tech: &Technology,
    d: &Orientation,
    model: ModelKind,
    samples: usize,
    seed: u64,
    invert_comparator: bool,
) -> Result<Vec<Violation>, DeaError> {
    const TOL: f64 = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = Vec::new();
    let n = tech.num_dmus();
    let mut produced = 0usize;
    let mut attempts = 0usize;
    while produced < samples && attempts < samples * 20 {
        attempts += 1;
        let j = rng.gen_range(0..n);
        let base = tech.activity(j);
        let worse = Activity {
            inputs: base
                .inputs
                .iter()
                .map(|x| x * rng.gen_range(1.0..1.5))
                .collect(),
            outputs: base
                .outputs
                .iter()
                .map(|y| y * rng.gen_range(0.6..1.0))
                .collect(),
        };
        if !crate::core::in_technology(tech, &worse)? {
            continue;
        }
        produced += 1;

        let eval_pair = |a: &Activity| match model {
            ModelKind::Lo => lo::evaluate_lo_external(tech, a, d),
            ModelKind::Qo => qo::evaluate_qo_external(tech, a, d),
        };
        let better_eval = eval_pair(&base)?;
        let worse_eval = eval_pair(&worse)?;

        let beta_ok = better_eval.beta <= worse_eval.beta + TOL;
        let rho_ok = better_eval.rho >= worse_eval.rho - TOL;
        let (beta_ok, rho_ok) = if invert_comparator {
            (!beta_ok, !rho_ok)
        } else {
            (beta_ok, rho_ok)
        };
        if !beta_ok || !rho_ok {
            violations.push(Violation {
                sample: produced,
                dmu: j,
                beta_better: better_eval.beta,
                beta_worse: worse_eval.beta,
                rho_better: better_eval.rho,
                rho_worse: worse_eval.rho,
                detail: format!(
                    "beta {} -> {}, rho {} -> {} under domination",
                    better_eval.beta, worse_eval.beta, better_eval.rho, worse_eval.rho
                ),
            });
        }
    }
    Ok(violations)
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

    fn rows(data: &[&[f64]]) -> Vec<Vec<BigRational>> {
        data.iter().map(|r| r.iter().map(|v| rat(*v)).collect()).collect()
    }

    fn rats(data: &[f64]) -> Vec<BigRational> {
        data.iter().map(|v| rat(*v)).collect()
    }

    #[test]
    fn feasible_box() {
        let a = rows(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let b = rats(&[1.0, 1.0]);
        let rels = [Relation::Le, Relation::Le];
        assert!(fm_feasible(&a, &rels, &b, &[true, true]).unwrap());
    }

    #[test]
    fn contradiction_detected() {
        let a = rows(&[&[1.0], &[1.0]]);
        let b = rats(&[1.0, 2.0]);
        let rels = [Relation::Le, Relation::Ge];
        assert!(!fm_feasible(&a, &rels, &b, &[true]).unwrap());
    }

    #[test]
    fn nonnegativity_can_exclude() {
        // x <= -1 with x >= 0.
        let a = rows(&[&[1.0]]);
        let b = rats(&[-1.0]);
        assert!(!fm_feasible(&a, &[Relation::Le], &b, &[true]).unwrap());
        // Without the sign restriction the system is feasible.
        assert!(fm_feasible(&a, &[Relation::Le], &b, &[false]).unwrap());
    }

    #[test]
    fn equality_rows_handled() {
        let a = rows(&[&[1.0, 1.0], &[1.0, -1.0]]);
        let b = rats(&[2.0, 0.0]);
        let rels = [Relation::Eq, Relation::Eq];
        assert!(fm_feasible(&a, &rels, &b, &[true, true]).unwrap());
        let b = rats(&[2.0, 5.0]);
        assert!(!fm_feasible(&a, &rels, &b, &[true, true]).unwrap());
    }

    #[test]
    fn caps_enforced() {
        let a = vec![vec![BigRational::one(); MAX_VARS + 1]];
        let b = rats(&[1.0]);
        let nonneg = vec![true; MAX_VARS + 1];
        assert!(matches!(
            fm_feasible(&a, &[Relation::Le], &b, &nonneg),
            Err(DeaError::OracleCap(_))
        ));
    }

    #[test]
    fn exact_arithmetic_is_tolerance_free() {
        // x >= 1/3 and 3x <= 1 touch in a single rational point.
        let a = rows(&[&[-3.0], &[3.0]]);
        let third = BigRational::new(1.into(), 3.into());
        let b = vec![-(&third * rat(3.0)), BigRational::one()];
        assert!(fm_feasible(&a, &[Relation::Le, Relation::Le], &b, &[true]).unwrap());
    }

    #[test]
    fn brute_beta_matches_simplex() {
        let t = five_dmus();
        let d = Orientation::new(vec![1.0, 0.5], vec![1.0, 0.5]);
        for j in 0..t.num_dmus() {
            let subject = t.activity(j);
            let bl = brute_beta(&t, &subject, &d, ModelKind::Lo).unwrap();
            let l = lo::solve_lo(&t, &subject, &d).unwrap();
            assert!((bl - l.beta).abs() <= 1e-7, "LO DMU {j}: {bl} vs {}", l.beta);
            let bq = brute_beta(&t, &subject, &d, ModelKind::Qo).unwrap();
            let q = qo::solve_qo(&t, &subject, &d).unwrap();
            assert!((bq - q.beta).abs() <= 1e-7, "QO DMU {j}: {bq} vs {}", q.beta);
        }
    }

    #[test]
    fn brute_beta_rejects_outside_subjects() {
        let t = five_dmus();
        let d = Orientation::ones(2, 2);
        let outside = Activity::new(vec![0.5, 0.5], vec![4.0, 4.0]);
        assert!(matches!(
            brute_beta(&t, &outside, &d, ModelKind::Lo),
            Err(DeaError::Infeasible(_))
        ));
    }

    #[test]
    fn monotonicity_scan_finds_no_violation() {
        let t = five_dmus();
        let d = Orientation::ones(2, 2);
        for model in [ModelKind::Lo, ModelKind::Qo] {
            let v = monotonicity_scan(&t, &d, model, 40, 11).unwrap();
            assert!(v.is_empty(), "{v:?}");
        }
    }

    #[test]
    fn inverted_comparator_reports_violations() {
        let t = five_dmus();
        let d = Orientation::ones(2, 2);
        let v = monotonicity_scan_with(&t, &d, ModelKind::Lo, 40, 11, true).unwrap();
        assert!(!v.is_empty());
    }
}
