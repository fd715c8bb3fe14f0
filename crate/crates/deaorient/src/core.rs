//! Domain types shared by every solver: activities, technologies,
//! returns-to-scale regimes, orientations and evaluation results, plus
//! dataset validation and the zeros-in-data preprocessing pass.

use serde::{Deserialize, Serialize};

use crate::lp::{LpProblem, Relation, Sense};
use crate::DeaError;

/// An (inputs, outputs) vector pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Activity {
    pub inputs: Vec<f64>,
    pub outputs: Vec<f64>,
}

impl Activity {
    pub fn new(inputs: Vec<f64>, outputs: Vec<f64>) -> Self {
        Activity { inputs, outputs }
    }
}

/// Constraint regime on the intensity-vector sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ReturnsToScale {
    Crs,
    Vrs,
    Nirs,
    Ndrs,
    Grs { lower: f64, upper: f64 },
}

impl ReturnsToScale {
    pub fn validate(&self) -> Result<(), DeaError> {
        if let ReturnsToScale::Grs { lower, upper } = self {
            if !(0.0 <= *lower && *lower <= 1.0 && *upper >= 1.0) {
                return Err(DeaError::InvalidRts(format!(
                    "GRS requires 0 <= L <= 1 <= U, got L={lower}, U={upper}"
                )));
            }
        }
        Ok(())
    }
}

/// Input/output data matrices (row = variable, column = DMU) plus the
/// returns-to-scale regime defining the production possibility set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Technology {
    /// m x n input matrix, `inputs[i][j]` = input i of DMU j.
    pub inputs: Vec<Vec<f64>>,
    /// s x n output matrix.
    pub outputs: Vec<Vec<f64>>,
    pub names: Vec<String>,
    pub rts: ReturnsToScale,
}

impl Technology {
    pub fn num_dmus(&self) -> usize {
        self.names.len()
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    /// The activity of reference DMU `j`.
    pub fn activity(&self, j: usize) -> Activity {
        Activity {
            inputs: self.inputs.iter().map(|row| row[j]).collect(),
            outputs: self.outputs.iter().map(|row| row[j]).collect(),
        }
    }
}

/// Per-input contraction weights and per-output dilation weights. A zero
/// coefficient freezes the corresponding variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orientation {
    pub input_coeffs: Vec<f64>,
    pub output_coeffs: Vec<f64>,
}

impl Orientation {
    pub fn new(input_coeffs: Vec<f64>, output_coeffs: Vec<f64>) -> Self {
        Orientation {
            input_coeffs,
            output_coeffs,
        }
    }

    pub fn ones(m: usize, s: usize) -> Self {
        Orientation {
            input_coeffs: vec![1.0; m],
            output_coeffs: vec![1.0; s],
        }
    }

    pub fn max_coeff(&self) -> f64 {
        self.input_coeffs
            .iter()
            .chain(&self.output_coeffs)
            .cloned()
            .fold(0.0, f64::max)
    }

    /// The same orientation scaled so its largest coefficient is 1, for
    /// report readability. Proportional orientations are equivalent.
    pub fn normalized(&self) -> Orientation {
        let mx = self.max_coeff();
        if mx <= 0.0 {
            return self.clone();
        }
        Orientation {
            input_coeffs: self.input_coeffs.iter().map(|d| d / mx).collect(),
            output_coeffs: self.output_coeffs.iter().map(|d| d / mx).collect(),
        }
    }

    /// Validates the orientation against a subject activity: coefficients
    /// nonnegative and finite, not all zero, and at least one nonzero
    /// coefficient on a nonzero variable of the subject.
    pub fn validate_for(&self, subject: &Activity) -> Result<(), DeaError> {
        if self.input_coeffs.len() != subject.inputs.len()
            || self.output_coeffs.len() != subject.outputs.len()
        {
            return Err(DeaError::DimensionMismatch(
                "orientation does not match subject dimensions".into(),
            ));
        }
        let all = self.input_coeffs.iter().chain(&self.output_coeffs);
        for (k, d) in all.enumerate() {
            if !d.is_finite() || *d < 0.0 {
                return Err(DeaError::InvalidOrientation(format!(
                    "coefficient {k} must be finite and nonnegative, got {d}"
                )));
            }
        }
        if self.max_coeff() <= 0.0 {
            return Err(DeaError::InvalidOrientation(
                "orientation must be nonzero".into(),
            ));
        }
        let active_on_nonzero = self
            .input_coeffs
            .iter()
            .zip(&subject.inputs)
            .chain(self.output_coeffs.iter().zip(&subject.outputs))
            .any(|(d, v)| *d > 0.0 && *v > 0.0);
        if !active_on_nonzero {
            return Err(DeaError::InvalidOrientation(
                "no nonzero orientation coefficient sits on a nonzero variable of the subject"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// Which generalized oriented model produced an evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lo,
    Qo,
}

/// One DMU's solver output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Evaluation {
    pub model: ModelKind,
    pub subject: Activity,
    pub beta: f64,
    /// Input target contraction factors, one per input, in (0, 1].
    pub theta: Vec<f64>,
    /// Output target dilation factors, one per output, >= 1.
    pub phi: Vec<f64>,
    /// Relative input target slacks, theta = 1 - tau_minus.
    pub tau_minus: Vec<f64>,
    /// Relative output target slacks, phi = 1 + tau_plus.
    pub tau_plus: Vec<f64>,
    /// The weakly efficient target reached along the orientation.
    pub target: Activity,
    pub lambda: Vec<f64>,
    /// Efficient activity dominating the target.
    pub projection: Activity,
    /// Inefficiency slacks: target.inputs - projection.inputs.
    pub s_minus: Vec<f64>,
    /// Inefficiency slacks: projection.outputs - target.outputs.
    pub s_plus: Vec<f64>,
    /// Farrell oriented efficiency in (0, 1].
    pub rho: f64,
    /// True when the subject lies outside the technology (external
    /// evaluation convention: beta = 0, rho = 1).
    pub outside_technology: bool,
    /// True when the reported lambda/projection came from the max-slack
    /// second stage rather than the solver's own vertex.
    pub max_slack_resolved: bool,
}

/// A single validation finding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

fn diag(message: String) -> Diagnostic {
    Diagnostic { message }
}

/// Scans the dataset and returns one diagnostic per violated invariant, in
/// deterministic row-major order. Empty result means the dataset is valid.
pub fn validate_technology(tech: &Technology) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let n = tech.num_dmus();
    let m = tech.num_inputs();
    let s = tech.num_outputs();
    if n == 0 {
        out.push(diag("dataset has no DMUs".into()));
    }
    if m == 0 {
        out.push(diag("dataset has no inputs".into()));
    }
    if s == 0 {
        out.push(diag("dataset has no outputs".into()));
    }
    if let Err(e) = tech.rts.validate() {
        out.push(diag(e.to_string()));
    }

    for (i, row) in tech.inputs.iter().enumerate() {
        if row.len() != n {
            out.push(diag(format!(
                "input row {i} has {} entries, expected {n}",
                row.len()
            )));
            continue;
        }
        for (j, v) in row.iter().enumerate() {
            if !v.is_finite() {
                out.push(diag(format!("input {i} of DMU {j} is not finite")));
            } else if *v < 0.0 {
                out.push(diag(format!(
                    "input {i} of DMU {j} is negative ({v}); negative data is rejected"
                )));
            }
        }
        if n > 0 && row.iter().all(|v| *v == 0.0) {
            out.push(diag(format!("degenerate variable row: input {i} is zero for every DMU")));
        }
    }
    for (r, row) in tech.outputs.iter().enumerate() {
        if row.len() != n {
            out.push(diag(format!(
                "output row {r} has {} entries, expected {n}",
                row.len()
            )));
            continue;
        }
        for (j, v) in row.iter().enumerate() {
            if !v.is_finite() {
                out.push(diag(format!("output {r} of DMU {j} is not finite")));
            } else if *v < 0.0 {
                out.push(diag(format!(
                    "output {r} of DMU {j} is negative ({v}); negative data is rejected"
                )));
            }
        }
        if n > 0 && row.iter().all(|v| *v == 0.0) {
            out.push(diag(format!(
                "degenerate variable row: output {r} is zero for every DMU"
            )));
        }
    }

    for j in 0..n {
        if m > 0 && tech.inputs.iter().all(|row| row[j] == 0.0) {
            out.push(diag(format!("DMU {} has no positive input", tech.names[j])));
        }
        if s > 0 && tech.outputs.iter().all(|row| row[j] == 0.0) {
            out.push(diag(format!("DMU {} has no positive output", tech.names[j])));
        }
    }
    out
}

/// Policy for a zero output entry of an evaluation subject.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroOutputPolicy {
    /// The DMU has the potential to produce this output: the zero is
    /// replaced by a small positive value so the slack acts as a penalty.
    Potential,
    /// The DMU cannot produce this output: the zero stays and the output is
    /// excluded from that DMU's score denominator.
    Impossible,
}

/// One recorded adjustment from `preprocess_zeros`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ZeroAdjustment {
    /// Zero output replaced by a small positive value (Potential policy).
    OutputReplaced { output: usize, dmu: usize, value: f64 },
    /// Zero output kept; excluded from the DMU's score denominator
    /// (Impossible policy).
    OutputExcluded { output: usize, dmu: usize },
    /// Zero input: never modified, its contraction is frozen at 1.
    InputFrozen { input: usize, dmu: usize },
}

/// Every substitution and exclusion performed on a dataset, consumed later
/// by the score adjustments.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ZeroAdjustmentLog {
    pub entries: Vec<ZeroAdjustment>,
}

impl ZeroAdjustmentLog {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Input indices of DMU `dmu` whose contraction is frozen at 1.
    pub fn frozen_inputs(&self, dmu: usize) -> Vec<usize> {
        self.entries
            .iter()
            .filter_map(|e| match e {
                ZeroAdjustment::InputFrozen { input, dmu: d } if *d == dmu => Some(*input),
                _ => None,
            })
            .collect()
    }

    /// Output indices excluded from DMU `dmu`'s score denominator.
    pub fn excluded_outputs(&self, dmu: usize) -> Vec<usize> {
        self.entries
            .iter()
            .filter_map(|e| match e {
                ZeroAdjustment::OutputExcluded { output, dmu: d } if *d == dmu => Some(*output),
                _ => None,
            })
            .collect()
    }
}

/// Fraction of the row minimum used to replace a zero output under the
/// Potential policy.
pub const DEFAULT_ZERO_REPLACEMENT_FACTOR: f64 = 0.1;

/// Zeros-in-data preprocessing. `policies` holds one policy per output row.
/// Zero outputs under `Potential` are replaced by `factor` times the
/// smallest positive value in their row; under `Impossible` they stay at 0
/// and are logged as score-denominator exclusions. Zero inputs are never
/// modified, only logged as frozen.
pub fn preprocess_zeros(
    tech: &Technology,
    policies: &[ZeroOutputPolicy],
    factor: f64,
) -> Result<(Technology, ZeroAdjustmentLog), DeaError> {
    if policies.len() != tech.num_outputs() {
        return Err(DeaError::DimensionMismatch(format!(
            "expected one zero-output policy per output ({}), got {}",
            tech.num_outputs(),
            policies.len()
        )));
    }
    let mut out = tech.clone();
    let mut log = ZeroAdjustmentLog::default();

    for (i, row) in tech.inputs.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if *v == 0.0 {
                log.entries.push(ZeroAdjustment::InputFrozen { input: i, dmu: j });
            }
        }
    }
    for (r, row) in tech.outputs.iter().enumerate() {
        let row_min = row
            .iter()
            .filter(|v| **v > 0.0)
            .cloned()
            .fold(f64::INFINITY, f64::min);
        for (j, v) in row.iter().enumerate() {
            if *v == 0.0 {
                match policies[r] {
                    ZeroOutputPolicy::Potential => {
                        if row_min.is_finite() {
                            let repl = row_min * factor;
                            out.outputs[r][j] = repl;
                            log.entries.push(ZeroAdjustment::OutputReplaced {
                                output: r,
                                dmu: j,
                                value: repl,
                            });
                        } else {
                            // Whole row is zero; validation already flags it.
                            log.entries
                                .push(ZeroAdjustment::OutputExcluded { output: r, dmu: j });
                        }
                    }
                    ZeroOutputPolicy::Impossible => {
                        log.entries
                            .push(ZeroAdjustment::OutputExcluded { output: r, dmu: j });
                    }
                }
            }
        }
    }
    Ok((out, log))
}

/// Componentwise domination: `a.x <= b.x` and `a.y >= b.y`.
pub fn dominates(a: &Activity, b: &Activity) -> Result<bool, DeaError> {
    if a.inputs.len() != b.inputs.len() || a.outputs.len() != b.outputs.len() {
        return Err(DeaError::DimensionMismatch(
            "activities have different dimensions".into(),
        ));
    }
    Ok(a.inputs.iter().zip(&b.inputs).all(|(ax, bx)| ax <= bx)
        && a.outputs.iter().zip(&b.outputs).all(|(ay, by)| ay >= by))
}

/// Appends the intensity-sum rows implied by the RTS regime. The lambda
/// variables are assumed to occupy columns `0..n`; remaining columns get
/// zero coefficients.
pub(crate) fn push_rts_rows(problem: &mut LpProblem, rts: ReturnsToScale, n: usize) {
    let ncols = problem.num_vars();
    let mut sum_row = vec![0.0; ncols];
    for c in sum_row.iter_mut().take(n) {
        *c = 1.0;
    }
    match rts {
        ReturnsToScale::Crs => {}
        ReturnsToScale::Vrs => problem.add_row(sum_row, Relation::Eq, 1.0),
        ReturnsToScale::Nirs => problem.add_row(sum_row, Relation::Le, 1.0),
        ReturnsToScale::Ndrs => problem.add_row(sum_row, Relation::Ge, 1.0),
        ReturnsToScale::Grs { lower, upper } => {
            problem.add_row(sum_row.clone(), Relation::Ge, lower);
            problem.add_row(sum_row, Relation::Le, upper);
        }
    }
}

/// The feasibility program deciding whether `a` belongs to the production
/// possibility set: X lambda <= a.x, Y lambda >= a.y, lambda >= 0 plus the
/// RTS rows.
pub fn membership_lp(tech: &Technology, a: &Activity) -> Result<LpProblem, DeaError> {
    if a.inputs.len() != tech.num_inputs() || a.outputs.len() != tech.num_outputs() {
        return Err(DeaError::DimensionMismatch(
            "activity does not match technology dimensions".into(),
        ));
    }
    let n = tech.num_dmus();
    let mut p = LpProblem::new(Sense::Maximize, vec![0.0; n]);
    for (i, row) in tech.inputs.iter().enumerate() {
        p.add_row(row.clone(), Relation::Le, a.inputs[i]);
    }
    for (r, row) in tech.outputs.iter().enumerate() {
        p.add_row(row.clone(), Relation::Ge, a.outputs[r]);
    }
    push_rts_rows(&mut p, tech.rts, n);
    Ok(p)
}

/// Membership test via the phase-1 feasibility of `membership_lp`.
pub fn in_technology(tech: &Technology, a: &Activity) -> Result<bool, DeaError> {
    crate::lp::feasible(&membership_lp(tech, a)?)
}
