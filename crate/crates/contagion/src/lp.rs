//! Thin linear-programming layer: a problem description in sparse triples
//! and a pluggable solver backend.

use thiserror::Error;

use crate::network::{ClearingError, ClearingOptions, ClearingResult, FinancialNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

/// A linear program: named by variable index, constraints as sparse rows.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub direction: Direction,
    /// Objective coefficient and `(lower, upper)` bound per variable.
    pub objective: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
    /// Constraints as `(sparse row, comparison, rhs)`.
    pub constraints: Vec<(Vec<(usize, f64)>, Cmp, f64)>,
}

impl LpProblem {
    pub fn new(direction: Direction) -> Self {
        Self {
            direction,
            objective: Vec::new(),
            bounds: Vec::new(),
            constraints: Vec::new(),
        }
    }

    /// Adds a variable, returning its index.
    pub fn add_var(&mut self, objective: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(objective);
        self.bounds.push((lower, upper));
        self.objective.len() - 1
    }

    pub fn add_constraint(&mut self, row: Vec<(usize, f64)>, cmp: Cmp, rhs: f64) {
        self.constraints.push((row, cmp, rhs));
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub values: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("linear program infeasible")]
    Infeasible,
    #[error("linear program unbounded")]
    Unbounded,
    #[error("LP solver failure: {0}")]
    Solver(String),
}

pub trait LpSolver {
    fn solve(&self, problem: &LpProblem) -> Result<LpSolution, LpError>;
}

/// Default backend.
#[derive(Debug, Clone, Copy, Default)]
pub struct DefaultSolver;

impl LpSolver for DefaultSolver {
    fn solve(&self, problem: &LpProblem) -> Result<LpSolution, LpError> {
        let direction = match problem.direction {
            Direction::Maximize => microlp::OptimizationDirection::Maximize,
            Direction::Minimize => microlp::OptimizationDirection::Minimize,
        };
        let mut lp = microlp::Problem::new(direction);
        let vars: Vec<_> = problem
            .objective
            .iter()
            .zip(&problem.bounds)
            .map(|(&obj, &(lo, hi))| lp.add_var(obj, (lo, hi)))
            .collect();
        for (row, cmp, rhs) in &problem.constraints {
            let expr: Vec<_> = row.iter().map(|&(idx, coef)| (vars[idx], coef)).collect();
            let op = match cmp {
                Cmp::Le => microlp::ComparisonOp::Le,
                Cmp::Ge => microlp::ComparisonOp::Ge,
                Cmp::Eq => microlp::ComparisonOp::Eq,
            };
            lp.add_constraint(&expr, op, *rhs);
        }
        let outcome = lp.solve().map_err(|e| match e {
            microlp::Error::Infeasible => LpError::Infeasible,
            microlp::Error::Unbounded => LpError::Unbounded,
            other => LpError::Solver(other.to_string()),
        })?;
        let solution = outcome
            .into_solution()
            .map_err(|_| LpError::Solver("solve interrupted".into()))?;
        let values = vars.iter().map(|&v| solution[v]).collect();
        Ok(LpSolution {
            values,
            objective: solution.objective(),
        })
    }
}

/// Computes the clearing vector by maximizing `vᵀp̄` over the payment
/// polytope; agrees with the fixed-point route for any `v > 0`.
pub fn clear_lp(
    net: &FinancialNetwork,
    shock: &[f64],
    cash: &[f64],
    v: &[f64],
    solver: &dyn LpSolver,
) -> Result<ClearingResult, ClearLpError> {
    let n = net.len();
    if v.len() != n {
        return Err(ClearingError::BadLength {
            what: "objective coefficients",
            got: v.len(),
            want: n,
        }
        .into());
    }
    if let Some(j) = (0..n).find(|&j| v[j] <= 0.0) {
        return Err(ClearLpError::NonPositiveCoefficient(j));
    }
    // Reuse shock/cash validation from the fixed-point path.
    for j in 0..n {
        let slack = 1e-12 * net.external_assets()[j].max(1.0);
        if !(shock[j] >= -slack && shock[j] <= net.external_assets()[j] + slack) {
            return Err(ClearingError::InvalidShock {
                node: j,
                value: shock[j],
                cap: net.external_assets()[j],
            }
            .into());
        }
    }

    let mut lp = LpProblem::new(Direction::Maximize);
    let p = net.total_liabilities();
    for j in 0..n {
        lp.add_var(v[j], 0.0, p[j]);
    }
    // p̄_j − Σ_i a_ij p̄_i ≤ c_j − x_j + cash_j
    let mut rows: Vec<Vec<(usize, f64)>> = (0..n).map(|j| vec![(j, 1.0)]).collect();
    for (j, i, _, share) in net.edges() {
        rows[i].push((j, -share));
    }
    for (j, row) in rows.into_iter().enumerate() {
        let rhs = (net.external_assets()[j] - shock[j]).max(0.0) + cash[j];
        lp.add_constraint(row, Cmp::Le, rhs);
    }
    let sol = solver.solve(&lp)?;
    Ok(ClearingResult::classify(net, sol.values))
}

#[derive(Debug, Error)]
pub enum ClearLpError {
    #[error(transparent)]
    Clearing(#[from] ClearingError),
    #[error("objective coefficient {0} is not strictly positive")]
    NonPositiveCoefficient(usize),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Convenience wrapper running both clearing routes and returning the
/// infinity-norm gap between them (diagnostic).
pub fn fixed_point_lp_gap(
    net: &FinancialNetwork,
    shock: &[f64],
    cash: &[f64],
) -> Result<f64, ClearLpError> {
    let fp = net.clear(shock, cash, &ClearingOptions::default())?;
    let v = vec![1.0; net.len()];
    let lp = clear_lp(net, shock, cash, &v, &DefaultSolver)?;
    Ok(fp
        .pbar
        .iter()
        .zip(&lp.pbar)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::FinancialNetwork;

    fn two_node() -> FinancialNetwork {
        FinancialNetwork::from_edges(2, &[(0, 1, 1.0)], &[0.5, 1.0], &[1.5, 0.0]).unwrap()
    }

    #[test]
    fn lp_matches_known_shocked_clearing() {
        let net = two_node();
        let res = clear_lp(&net, &[1.0, 0.0], &[0.0, 0.0], &[1.0, 1.0], &DefaultSolver).unwrap();
        assert!((res.pbar[0] - 0.5).abs() < 1e-9);
        assert!((res.pbar[1] - 1.0 / 3.0).abs() < 1e-9);
        let objective: f64 = res.pbar.iter().sum();
        assert!((objective - 5.0 / 6.0).abs() < 1e-9);
    }

    #[test]
    fn lp_argmax_invariant_under_objective_scaling() {
        let net = two_node();
        let a = clear_lp(&net, &[1.0, 0.0], &[0.0, 0.0], &[1.0, 1.0], &DefaultSolver).unwrap();
        let b = clear_lp(&net, &[1.0, 0.0], &[0.0, 0.0], &[2.0, 2.0], &DefaultSolver).unwrap();
        for j in 0..2 {
            assert!((a.pbar[j] - b.pbar[j]).abs() < 1e-9);
        }
    }

    #[test]
    fn lp_rejects_zero_coefficient() {
        let net = two_node();
        let err =
            clear_lp(&net, &[0.0, 0.0], &[0.0, 0.0], &[1.0, 0.0], &DefaultSolver).unwrap_err();
        assert!(matches!(err, ClearLpError::NonPositiveCoefficient(1)));
    }

    #[test]
    fn fixed_point_and_lp_agree_on_small_random_network() {
        let edges = [
            (0, 1, 0.8),
            (1, 2, 0.3),
            (2, 3, 0.9),
            (3, 0, 0.2),
            (1, 4, 0.6),
            (4, 5, 0.1),
            (5, 2, 0.4),
        ];
        let b = [0.4, 0.3, 0.8, 0.2, 0.5, 0.6];
        let c = [1.0, 0.2, 0.6, 0.9, 0.1, 0.3];
        let net = FinancialNetwork::from_edges(6, &edges, &b, &c).unwrap();
        let shock = [0.5, 0.1, 0.0, 0.4, 0.05, 0.2];
        let gap = fixed_point_lp_gap(&net, &shock, &[0.0; 6]).unwrap();
        assert!(gap < 1e-8, "gap {gap}");
    }
}
