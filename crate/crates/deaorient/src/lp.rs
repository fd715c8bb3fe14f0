//! Dense two-phase primal simplex.
//!
//! Problems here are tiny (a handful of intensity weights plus a couple of
//! auxiliary variables), so a dense tableau is the right tool. Phase 1
//! minimizes the artificial-variable sum; phase 2 optimizes the user
//! objective. Pricing is Dantzig's rule, switching to Bland's rule after a
//! run of degenerate pivots to rule out cycling.

use crate::DeaError;

/// Tolerance for pivot selection and feasibility classification.
pub const PIVOT_TOL: f64 = 1e-9;

/// Degenerate pivots in a row before switching to Bland's rule.
const BLAND_TRIGGER: usize = 50;

const MAX_ITER: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// A dense linear program in row form. Variables default to lower bound 0;
/// finite upper bounds are handled as extra constraint rows internally.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub relations: Vec<Relation>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<Option<f64>>,
}

impl LpProblem {
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        LpProblem {
            sense,
            objective,
            rows: Vec::new(),
            relations: Vec::new(),
            rhs: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![None; n],
        }
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        self.rows.push(coeffs);
        self.relations.push(relation);
        self.rhs.push(rhs);
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn validate(&self) -> Result<(), DeaError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(DeaError::DimensionMismatch(
                "variable bound vectors do not match objective length".into(),
            ));
        }
        if self.rows.len() != self.relations.len() || self.rows.len() != self.rhs.len() {
            return Err(DeaError::DimensionMismatch(
                "row, relation and rhs counts differ".into(),
            ));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != n {
                return Err(DeaError::DimensionMismatch(format!(
                    "row {i} has {} coefficients, expected {n}",
                    row.len()
                )));
            }
            if !row.iter().all(|v| v.is_finite()) || !self.rhs[i].is_finite() {
                return Err(DeaError::NonFinite(format!("constraint row {i}")));
            }
        }
        if !self.objective.iter().all(|v| v.is_finite()) {
            return Err(DeaError::NonFinite("objective".into()));
        }
        if !self.lower.iter().all(|v| v.is_finite()) {
            return Err(DeaError::NonFinite("lower bounds".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    /// Values of the original variables (empty unless `Optimal`).
    pub primal: Vec<f64>,
    /// One dual multiplier per original constraint row (empty unless `Optimal`).
    pub duals: Vec<f64>,
}

/// Solves the program with the two-phase primal simplex.
pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution, DeaError> {
    problem.validate()?;
    let mut tab = Tableau::build(problem)?;
    if !tab.phase1()? {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            objective: f64::NAN,
            primal: Vec::new(),
            duals: Vec::new(),
        });
    }
    tab.phase2()
}

/// Phase-1 feasibility check only.
pub fn feasible(problem: &LpProblem) -> Result<bool, DeaError> {
    problem.validate()?;
    let mut tab = Tableau::build(problem)?;
    tab.phase1()
}

/// Standard-form working tableau. Columns: shifted structural variables,
/// then slacks/surpluses, then artificials. All variables nonnegative.
struct Tableau {
    sense: Sense,
    n_struct: usize,
    n_rows: usize,
    n_orig_rows: usize,
    /// Per-row sign flip applied to reach rhs >= 0.
    row_sign: Vec<f64>,
    /// Objective over standard-form columns (minimization).
    cost: Vec<f64>,
    /// Constant term from the lower-bound shift, in user units.
    shift_const: f64,
    lower: Vec<f64>,
    /// rows x (n_cols + 1), last column is the rhs.
    t: Vec<Vec<f64>>,
    n_cols: usize,
    artificial_start: usize,
    basis: Vec<usize>,
    /// Standardized relation of each row (after sign normalization).
    kinds: Vec<RowKind>,
}

#[derive(Debug, Clone, Copy)]
enum RowKind {
    Le,
    Ge,
    Eq,
}

impl Tableau {
    fn build(p: &LpProblem) -> Result<Tableau, DeaError> {
        let n = p.num_vars();
        // Shift x = lower + x', then append upper-bound rows on x'.
        let mut rows: Vec<Vec<f64>> = p.rows.clone();
        let mut rels = p.relations.clone();
        let mut rhs: Vec<f64> = (0..p.rows.len())
            .map(|i| {
                let dot: f64 = p.rows[i]
                    .iter()
                    .zip(&p.lower)
                    .map(|(a, l)| a * l)
                    .sum();
                p.rhs[i] - dot
            })
            .collect();
        let n_orig_rows = rows.len();
        for (j, ub) in p.upper.iter().enumerate() {
            if let Some(u) = ub {
                let mut row = vec![0.0; n];
                row[j] = 1.0;
                rows.push(row);
                rels.push(Relation::Le);
                rhs.push(u - p.lower[j]);
            }
        }

        let m = rows.len();
        let mut row_sign = vec![1.0; m];
        for i in 0..m {
            if rhs[i] < 0.0 {
                row_sign[i] = -1.0;
                rhs[i] = -rhs[i];
                for v in rows[i].iter_mut() {
                    *v = -*v;
                }
                rels[i] = match rels[i] {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
        }

        // Count auxiliary columns.
        let n_slack = rels
            .iter()
            .filter(|r| matches!(r, Relation::Le | Relation::Ge))
            .count();
        let n_art = rels
            .iter()
            .filter(|r| matches!(r, Relation::Ge | Relation::Eq))
            .count();
        let n_cols = n + n_slack + n_art;
        let artificial_start = n + n_slack;

        let mut t = vec![vec![0.0; n_cols + 1]; m];
        let mut basis = vec![usize::MAX; m];
        let mut kinds = Vec::with_capacity(m);
        let mut slack_idx = n;
        let mut art_idx = artificial_start;
        for i in 0..m {
            t[i][..n].copy_from_slice(&rows[i]);
            t[i][n_cols] = rhs[i];
            match rels[i] {
                Relation::Le => {
                    t[i][slack_idx] = 1.0;
                    basis[i] = slack_idx;
                    slack_idx += 1;
                    kinds.push(RowKind::Le);
                }
                Relation::Ge => {
                    t[i][slack_idx] = -1.0;
                    slack_idx += 1;
                    t[i][art_idx] = 1.0;
                    basis[i] = art_idx;
                    art_idx += 1;
                    kinds.push(RowKind::Ge);
                }
                Relation::Eq => {
                    t[i][art_idx] = 1.0;
                    basis[i] = art_idx;
                    art_idx += 1;
                    kinds.push(RowKind::Eq);
                }
            }
        }

        let mut cost = vec![0.0; n_cols];
        let sgn = match p.sense {
            Sense::Maximize => -1.0,
            Sense::Minimize => 1.0,
        };
        for j in 0..n {
            cost[j] = sgn * p.objective[j];
        }
        let shift_const: f64 = p
            .objective
            .iter()
            .zip(&p.lower)
            .map(|(c, l)| c * l)
            .sum();

        Ok(Tableau {
            sense: p.sense,
            n_struct: n,
            n_rows: m,
            n_orig_rows,
            row_sign,
            cost,
            shift_const,
            lower: p.lower.clone(),
            t,
            n_cols,
            artificial_start,
            basis,
            kinds,
        })
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut red = cost.to_vec();
        for i in 0..self.n_rows {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for j in 0..self.n_cols {
                    red[j] -= cb * self.t[i][j];
                }
            }
        }
        red
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.t[row][col];
        for v in self.t[row].iter_mut() {
            *v /= piv;
        }
        for i in 0..self.n_rows {
            if i == row {
                continue;
            }
            let f = self.t[i][col];
            if f != 0.0 {
                for j in 0..=self.n_cols {
                    self.t[i][j] -= f * self.t[row][j];
                }
            }
        }
        self.basis[row] = col;
    }

    /// Runs the simplex loop minimizing `cost` over the allowed columns.
    /// Returns false on unboundedness.
    fn run(&mut self, cost: &[f64], allow: &dyn Fn(usize) -> bool) -> Result<bool, DeaError> {
        let mut degenerate_run = 0usize;
        let mut bland = false;
        for _ in 0..MAX_ITER {
            let red = self.reduced_costs(cost);
            let entering = if bland {
                (0..self.n_cols).find(|&j| allow(j) && red[j] < -PIVOT_TOL)
            } else {
                let mut best: Option<(usize, f64)> = None;
                for j in 0..self.n_cols {
                    if allow(j) && red[j] < -PIVOT_TOL {
                        match best {
                            Some((_, v)) if red[j] >= v => {}
                            _ => best = Some((j, red[j])),
                        }
                    }
                }
                best.map(|(j, _)| j)
            };
            let Some(col) = entering else {
                return Ok(true); // optimal
            };

            // Ratio test; ties broken by smallest basic variable index.
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.n_rows {
                let a = self.t[i][col];
                if a > PIVOT_TOL {
                    let ratio = self.t[i][self.n_cols] / a;
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - PIVOT_TOL
                                || (ratio < lr + PIVOT_TOL && self.basis[i] < self.basis[li])
                            {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((row, ratio)) = leave else {
                return Ok(false); // unbounded in this direction
            };

            if ratio <= PIVOT_TOL {
                degenerate_run += 1;
                if degenerate_run >= BLAND_TRIGGER {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }
            self.pivot(row, col);
        }
        Err(DeaError::Solver("simplex iteration limit exceeded".into()))
    }

    /// Returns true when a feasible basis was found.
    fn phase1(&mut self) -> Result<bool, DeaError> {
        if self.artificial_start == self.n_cols {
            return Ok(true); // all-slack basis is already feasible
        }
        let mut art_cost = vec![0.0; self.n_cols];
        for c in art_cost.iter_mut().skip(self.artificial_start) {
            *c = 1.0;
        }
        if !self.run(&art_cost, &|_| true)? {
            return Err(DeaError::Solver("phase-1 objective unbounded".into()));
        }
        let art_sum: f64 = (0..self.n_rows)
            .filter(|&i| self.basis[i] >= self.artificial_start)
            .map(|i| self.t[i][self.n_cols])
            .sum();
        if art_sum > PIVOT_TOL {
            return Ok(false);
        }
        // Drive remaining zero-level artificials out of the basis.
        for i in 0..self.n_rows {
            if self.basis[i] >= self.artificial_start {
                if let Some(col) =
                    (0..self.artificial_start).find(|&j| self.t[i][j].abs() > PIVOT_TOL)
                {
                    self.pivot(i, col);
                }
            }
        }
        Ok(true)
    }

    fn phase2(&mut self) -> Result<LpSolution, DeaError> {
        let cost = self.cost.clone();
        let art_start = self.artificial_start;
        let bounded = self.run(&cost, &|j| j < art_start)?;
        if !bounded {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                objective: f64::NAN,
                primal: Vec::new(),
                duals: Vec::new(),
            });
        }

        let mut x = vec![0.0; self.n_struct];
        for i in 0..self.n_rows {
            if self.basis[i] < self.n_struct {
                x[self.basis[i]] = self.t[i][self.n_cols];
            }
        }
        for (xi, l) in x.iter_mut().zip(&self.lower) {
            *xi += l;
        }

        let internal_obj: f64 = (0..self.n_rows)
            .map(|i| self.cost[self.basis[i]] * self.t[i][self.n_cols])
            .sum();
        let objective = match self.sense {
            Sense::Maximize => -internal_obj + self.shift_const,
            Sense::Minimize => internal_obj + self.shift_const,
        };

        let duals = self.extract_duals();
        Ok(LpSolution {
            status: LpStatus::Optimal,
            objective,
            primal: x,
            duals,
        })
    }

    /// Duals from the final reduced costs: the objective-row entry of each
    /// row's initial unit column recovers the simplex multiplier y_i.
    fn extract_duals(&self) -> Vec<f64> {
        let red = self.reduced_costs(&self.cost);
        // Reconstruct which column was the initial unit column of each row.
        let mut duals = vec![0.0; self.n_orig_rows];
        let mut slack_idx = self.n_struct;
        let mut art_idx = self.artificial_start;
        let sense_sgn = match self.sense {
            Sense::Maximize => -1.0,
            Sense::Minimize => 1.0,
        };
        // The column layout replays Tableau::build's scan order.
        for i in 0..self.n_rows {
            let unit_col = match self.kinds[i] {
                RowKind::Le => {
                    let c = slack_idx;
                    slack_idx += 1;
                    c
                }
                RowKind::Ge => {
                    slack_idx += 1;
                    let c = art_idx;
                    art_idx += 1;
                    c
                }
                RowKind::Eq => {
                    let c = art_idx;
                    art_idx += 1;
                    c
                }
            };
            if i < self.n_orig_rows {
                // red[unit] = cost[unit] - y_i, and both slack and artificial
                // columns carry zero phase-2 cost, so y_i = -red[unit].
                duals[i] = sense_sgn * self.row_sign[i] * (-red[unit_col]);
            }
        }
        duals
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} != {b} (tol {tol})");
    }

    #[test]
    fn maximize_two_vars() {
        let mut p = LpProblem::new(Sense::Maximize, vec![3.0, 2.0]);
        p.add_row(vec![1.0, 1.0], Relation::Le, 4.0);
        p.add_row(vec![1.0, 3.0], Relation::Le, 6.0);
        let sol = solve_lp(&p).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_close(sol.objective, 12.0, 1e-9);
        assert_close(sol.primal[0], 4.0, 1e-9);
        assert_close(sol.primal[1], 0.0, 1e-9);
    }

    #[test]
    fn minimize_with_ge_rows() {
        // Diet-style: min 2x + 3y s.t. x + y >= 4, x >= 1.
        let mut p = LpProblem::new(Sense::Minimize, vec![2.0, 3.0]);
        p.add_row(vec![1.0, 1.0], Relation::Ge, 4.0);
        p.add_row(vec![1.0, 0.0], Relation::Ge, 1.0);
        let sol = solve_lp(&p).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_close(sol.objective, 8.0, 1e-9);
        assert_close(sol.primal[0], 4.0, 1e-9);
    }

    #[test]
    fn equality_row() {
        let mut p = LpProblem::new(Sense::Maximize, vec![1.0, 1.0]);
        p.add_row(vec![1.0, 2.0], Relation::Eq, 4.0);
        let sol = solve_lp(&p).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_close(sol.objective, 4.0, 1e-9);
    }

    #[test]
    fn infeasible_detected() {
        let mut p = LpProblem::new(Sense::Maximize, vec![1.0]);
        p.add_row(vec![1.0], Relation::Le, 1.0);
        p.add_row(vec![1.0], Relation::Ge, 2.0);
        let sol = solve_lp(&p).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
        assert!(!feasible(&p).unwrap());
    }

    #[test]
    fn unbounded_detected() {
        let mut p = LpProblem::new(Sense::Maximize, vec![1.0, 0.0]);
        p.add_row(vec![0.0, 1.0], Relation::Le, 1.0);
        let sol = solve_lp(&p).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
        assert!(feasible(&p).unwrap());
    }

    #[test]
    fn upper_bounds_respected() {
        let mut p = LpProblem::new(Sense::Maximize, vec![1.0]);
        p.upper[0] = Some(1.5);
        p.add_row(vec![1.0], Relation::Le, 10.0);
        let sol = solve_lp(&p).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_close(sol.objective, 1.5, 1e-9);
    }

    #[test]
    fn lower_bounds_shifted() {
        let mut p = LpProblem::new(Sense::Minimize, vec![1.0, 1.0]);
        p.lower = vec![2.0, 3.0];
        p.add_row(vec![1.0, 1.0], Relation::Le, 100.0);
        let sol = solve_lp(&p).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_close(sol.objective, 5.0, 1e-9);
        assert_close(sol.primal[0], 2.0, 1e-9);
        assert_close(sol.primal[1], 3.0, 1e-9);
    }

    #[test]
    fn duals_satisfy_complementary_slackness() {
        let mut p = LpProblem::new(Sense::Maximize, vec![3.0, 2.0]);
        p.add_row(vec![1.0, 1.0], Relation::Le, 4.0);
        p.add_row(vec![1.0, 3.0], Relation::Le, 6.0);
        p.add_row(vec![1.0, 0.0], Relation::Le, 100.0);
        let sol = solve_lp(&p).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        // Strong duality: c'x = y'b.
        let dual_obj: f64 = sol.duals.iter().zip(&p.rhs).map(|(y, b)| y * b).sum();
        assert_close(sol.objective, dual_obj, 1e-7);
        // Slack row (100 rhs) must carry a zero price.
        assert_close(sol.duals[2], 0.0, 1e-7);
        for (i, row) in p.rows.iter().enumerate() {
            let slack = p.rhs[i] - row.iter().zip(&sol.primal).map(|(a, x)| a * x).sum::<f64>();
            assert!(sol.duals[i].abs() * slack.abs() <= 1e-7);
        }
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Many redundant rows through the optimum provoke degenerate pivots.
        let mut p = LpProblem::new(Sense::Maximize, vec![1.0, 1.0, 1.0]);
        for _ in 0..6 {
            p.add_row(vec![1.0, 1.0, 1.0], Relation::Le, 1.0);
        }
        p.add_row(vec![1.0, 0.0, 0.0], Relation::Le, 1.0);
        let sol = solve_lp(&p).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_close(sol.objective, 1.0, 1e-9);
    }

    #[test]
    fn validate_rejects_bad_shapes() {
        let mut p = LpProblem::new(Sense::Maximize, vec![1.0]);
        p.add_row(vec![1.0, 2.0], Relation::Le, 1.0);
        assert!(p.validate().is_err());
    }
}
