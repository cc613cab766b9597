//! Inequality metrics over bailout allocations, fairness-constrained
//! relaxations, and the price of fairness.

use thiserror::Error;

use crate::bailout::{
    brute_force, solve_relaxation_with, Allocation, BailoutError, BailoutProblem,
};
use crate::lp::{Cmp, LpSolver};
use crate::network::FinancialNetwork;
use crate::spectral::{conductance, CutNorm, SpectralError};

/// Relative tolerance used when checking a realized coefficient against its
/// target bound (LP solver precision).
pub const COEFFICIENT_TOL: f64 = 1e-6;

/// Node cap for the all-pairs constrained LPs; auxiliary variables grow
/// quadratically.
pub const PAIRWISE_LP_LIMIT: usize = 500;

#[derive(Debug, Error)]
pub enum FairnessError {
    #[error("allocation assigns nothing; coefficient undefined")]
    ZeroAllocation,
    #[error("property weights give a degenerate split (n_q = {n_q} of n = {n})")]
    DegenerateGroups { n_q: f64, n: usize },
    #[error("group allocation is zero; within-group coefficient undefined")]
    DegenerateGroupAllocation,
    #[error("fairness bound must lie in [0, 1], got {0}")]
    BadBound(f64),
    #[error("property weights must lie in [0, 1] (node {0})")]
    BadWeight(usize),
    #[error("{what} has length {got}, expected {want}")]
    BadLength {
        what: &'static str,
        got: usize,
        want: usize,
    },
    #[error("pairwise fairness LP capped at {cap} nodes, instance has {n}")]
    TooLarge { n: usize, cap: usize },
    #[error("relative liabilities are not symmetric (required here)")]
    Asymmetric,
    #[error(transparent)]
    Bailout(#[from] BailoutError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Which inequality coefficient constrains (or scores) an allocation.
#[derive(Debug, Clone, PartialEq)]
pub enum FairnessKind {
    /// All-pairs inequality of the bailout amounts.
    Gini,
    /// Group-weighted inequality against a property vector `q ∈ [0,1]^n`.
    PropertyGini { q: Vec<f64> },
    /// Edge-weighted inequality along relative liabilities.
    SpatialGini,
}

impl FairnessKind {
    pub fn name(&self) -> &'static str {
        match self {
            FairnessKind::Gini => "gc",
            FairnessKind::PropertyGini { .. } => "pgc",
            FairnessKind::SpatialGini => "sgc",
        }
    }
}

/// A fairness constraint: coefficient of `kind` at most `bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct FairnessSpec {
    pub kind: FairnessKind,
    pub bound: f64,
}

impl FairnessSpec {
    pub fn new(kind: FairnessKind, bound: f64) -> Result<Self, FairnessError> {
        if !(0.0..=1.0).contains(&bound) {
            return Err(FairnessError::BadBound(bound));
        }
        if let FairnessKind::PropertyGini { q } = &kind {
            if let Some(j) = q.iter().position(|&w| !(0.0..=1.0).contains(&w)) {
                return Err(FairnessError::BadWeight(j));
            }
            let n_q: f64 = q.iter().sum();
            if n_q <= 0.0 || n_q >= q.len() as f64 {
                return Err(FairnessError::DegenerateGroups { n_q, n: q.len() });
            }
        }
        Ok(Self { kind, bound })
    }
}

fn amounts(z: &[f64], stimulus: &[f64]) -> Result<Vec<f64>, FairnessError> {
    if z.len() != stimulus.len() {
        return Err(FairnessError::BadLength {
            what: "allocation",
            got: z.len(),
            want: stimulus.len(),
        });
    }
    Ok(z.iter().zip(stimulus).map(|(a, b)| a * b).collect())
}

/// All-pairs Gini coefficient of the bailout amounts `L ⊙ z`:
/// `Σ_{i,j} |θ_i − θ_j| / (2n Σ_j θ_j)`. Zero on uniform allocations,
/// `1 − 1/n` when a single node takes everything.
pub fn gini(z: &[f64], stimulus: &[f64]) -> Result<f64, FairnessError> {
    let theta = amounts(z, stimulus)?;
    let total: f64 = theta.iter().sum();
    if total <= 0.0 {
        return Err(FairnessError::ZeroAllocation);
    }
    let n = theta.len();
    let mut sorted = theta;
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Σ_{i,j}|θ_i − θ_j| = 2 Σ_k (2k − n + 1) θ_(k) over the sorted order.
    let pair_sum: f64 = sorted
        .iter()
        .enumerate()
        .map(|(k, &t)| (2.0 * k as f64 - (n as f64 - 1.0)) * t)
        .sum::<f64>()
        * 2.0;
    Ok(pair_sum / (2.0 * n as f64 * total))
}

/// Property-weighted Gini:
/// `Σ_{j,i} q_j (1 − q_i) |θ_i − θ_j| / (2 (n − n_q) Σ_j q_j θ_j)`.
/// Reduces to [`gini`] at `q = ½·1`.
pub fn property_gini(z: &[f64], stimulus: &[f64], q: &[f64]) -> Result<f64, FairnessError> {
    let theta = amounts(z, stimulus)?;
    let n = theta.len();
    if q.len() != n {
        return Err(FairnessError::BadLength {
            what: "property weights",
            got: q.len(),
            want: n,
        });
    }
    let n_q: f64 = q.iter().sum();
    if n_q <= 0.0 || n_q >= n as f64 {
        return Err(FairnessError::DegenerateGroups { n_q, n });
    }
    let denom: f64 = 2.0 * (n as f64 - n_q) * q.iter().zip(&theta).map(|(a, b)| a * b).sum::<f64>();
    if denom <= 0.0 {
        return Err(FairnessError::ZeroAllocation);
    }
    let mut num = 0.0;
    for j in 0..n {
        for i in 0..n {
            num += q[j] * (1.0 - q[i]) * (theta[i] - theta[j]).abs();
        }
    }
    Ok(num / denom)
}

/// Edge-weighted Gini along the relative liability matrix:
/// `Σ_{(j,i)∈E} a_ji |θ_j − θ_i| / (2 Σ_j β_j θ_j)`.
pub fn spatial_gini(
    z: &[f64],
    stimulus: &[f64],
    net: &FinancialNetwork,
) -> Result<f64, FairnessError> {
    let theta = amounts(z, stimulus)?;
    if theta.len() != net.len() {
        return Err(FairnessError::BadLength {
            what: "allocation",
            got: theta.len(),
            want: net.len(),
        });
    }
    let denom: f64 = 2.0
        * net
            .connectivity()
            .iter()
            .zip(&theta)
            .map(|(b, t)| b * t)
            .sum::<f64>();
    if denom <= 0.0 {
        return Err(FairnessError::ZeroAllocation);
    }
    let num: f64 = net
        .edges()
        .map(|(j, i, _, share)| share * (theta[j] - theta[i]).abs())
        .sum();
    Ok(num / denom)
}

/// Evaluates the coefficient a spec constrains.
pub fn coefficient(
    spec: &FairnessSpec,
    z: &[f64],
    stimulus: &[f64],
    net: &FinancialNetwork,
) -> Result<f64, FairnessError> {
    match &spec.kind {
        FairnessKind::Gini => gini(z, stimulus),
        FairnessKind::PropertyGini { q } => property_gini(z, stimulus, q),
        FairnessKind::SpatialGini => spatial_gini(z, stimulus, net),
    }
}

/// Joint between/within check: the property coefficient within
/// `g_between`, and each group's internal Gini within `g_within`.
pub fn within_between_fairness_check(
    z: &[f64],
    stimulus: &[f64],
    q: &[f64],
    g_between: f64,
    g_within: f64,
) -> Result<bool, FairnessError> {
    let pgc = property_gini(z, stimulus, q)?;
    let in_group: Vec<f64> = z.iter().zip(q).map(|(zi, qi)| zi * qi).collect();
    let out_group: Vec<f64> = z.iter().zip(q).map(|(zi, qi)| zi * (1.0 - qi)).collect();
    let gc_in = gini(&in_group, stimulus).map_err(|e| match e {
        FairnessError::ZeroAllocation => FairnessError::DegenerateGroupAllocation,
        other => other,
    })?;
    let gc_out = gini(&out_group, stimulus).map_err(|e| match e {
        FairnessError::ZeroAllocation => FairnessError::DegenerateGroupAllocation,
        other => other,
    })?;
    Ok(pgc <= g_between + COEFFICIENT_TOL
        && gc_in <= g_within + COEFFICIENT_TOL
        && gc_out <= g_within + COEFFICIENT_TOL)
}

/// Linearized fairness constraint rows over the relaxation's variable
/// layout (`p̄` then `z̃`, auxiliary deviation variables from `2n` up).
fn constraint_rows(
    spec: &FairnessSpec,
    prob: &BailoutProblem,
) -> Result<Vec<(Vec<(usize, f64)>, Cmp, f64)>, FairnessError> {
    let net = &prob.net;
    let n = net.len();
    let l = &prob.stimulus;
    let g = spec.bound;
    let mut rows = Vec::new();
    let mut aux = 2 * n;
    match &spec.kind {
        FairnessKind::Gini | FairnessKind::PropertyGini { .. } => {
            if n > PAIRWISE_LP_LIMIT {
                return Err(FairnessError::TooLarge {
                    n,
                    cap: PAIRWISE_LP_LIMIT,
                });
            }
            let q = match &spec.kind {
                FairnessKind::PropertyGini { q } => Some(q),
                _ => None,
            };
            let mut budget_row: Vec<(usize, f64)> = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    // −ϖ ≤ L_i z̃_i − L_j z̃_j ≤ ϖ
                    rows.push((
                        vec![(n + i, l[i]), (n + j, -l[j]), (aux, -1.0)],
                        Cmp::Le,
                        0.0,
                    ));
                    rows.push((
                        vec![(n + i, -l[i]), (n + j, l[j]), (aux, -1.0)],
                        Cmp::Le,
                        0.0,
                    ));
                    let weight = match q {
                        None => 2.0,
                        Some(q) => q[i] * (1.0 - q[j]) + q[j] * (1.0 - q[i]),
                    };
                    budget_row.push((aux, weight));
                    aux += 1;
                }
            }
            // Σ weights·ϖ ≤ rhs-normalizer · g · (allocation total)
            match q {
                None => {
                    for j in 0..n {
                        budget_row.push((n + j, -2.0 * n as f64 * g * l[j]));
                    }
                }
                Some(q) => {
                    let n_q: f64 = q.iter().sum();
                    for j in 0..n {
                        budget_row.push((n + j, -2.0 * (n as f64 - n_q) * g * q[j] * l[j]));
                    }
                }
            }
            rows.push((budget_row, Cmp::Le, 0.0));
        }
        FairnessKind::SpatialGini => {
            let mut budget_row: Vec<(usize, f64)> = Vec::new();
            for (j, i, _, share) in net.edges() {
                rows.push((
                    vec![(n + j, l[j]), (n + i, -l[i]), (aux, -1.0)],
                    Cmp::Le,
                    0.0,
                ));
                rows.push((
                    vec![(n + j, -l[j]), (n + i, l[i]), (aux, -1.0)],
                    Cmp::Le,
                    0.0,
                ));
                budget_row.push((aux, share));
                aux += 1;
            }
            for j in 0..n {
                budget_row.push((n + j, -2.0 * g * net.connectivity()[j] * l[j]));
            }
            rows.push((budget_row, Cmp::Le, 0.0));
        }
    }
    Ok(rows)
}

/// Constrained relaxation optimum for one shock.
#[derive(Debug, Clone)]
pub struct ConstrainedRelaxation {
    pub fractional: Allocation,
    pub opt_r: f64,
    /// Realized coefficient of the fractional allocation (when defined).
    pub realized: Option<f64>,
}

/// Solves the relaxation with the fairness constraint attached.
pub fn solve_fair_relaxation(
    prob: &BailoutProblem,
    spec: &FairnessSpec,
    shock: &[f64],
    solver: &dyn LpSolver,
) -> Result<ConstrainedRelaxation, FairnessError> {
    let rows = constraint_rows(spec, prob)?;
    let sol = solve_relaxation_with(prob, shock, solver, rows)?;
    let realized = coefficient(spec, &sol.fractional.z, &prob.stimulus, &prob.net).ok();
    Ok(ConstrainedRelaxation {
        fractional: sol.fractional,
        opt_r: sol.opt_r,
        realized,
    })
}

/// Fractional price of fairness for one shock: unconstrained relaxation
/// optimum over the `g`-constrained one. Finite whenever the objective is
/// increasing with value 0 at zero payments and the instance is not fully
/// wiped out.
#[derive(Debug, Clone)]
pub struct PofReport {
    pub unconstrained: f64,
    pub constrained: f64,
    pub pof: f64,
}

pub fn price_of_fairness(
    prob: &BailoutProblem,
    spec: &FairnessSpec,
    shock: &[f64],
    solver: &dyn LpSolver,
) -> Result<PofReport, FairnessError> {
    let unconstrained =
        crate::bailout::solve_relaxation(prob, shock, solver).map_err(FairnessError::from)?;
    let constrained = solve_fair_relaxation(prob, spec, shock, solver)?;
    let pof = if constrained.opt_r > 0.0 {
        unconstrained.opt_r / constrained.opt_r
    } else if unconstrained.opt_r > 0.0 {
        f64::INFINITY
    } else {
        1.0
    };
    Ok(PofReport {
        unconstrained: unconstrained.opt_r,
        constrained: constrained.opt_r,
        pof,
    })
}

/// Discrete price of fairness by exhaustive search; may be infinite. The
/// empty allocation counts as vacuously fair.
pub fn discrete_price_of_fairness(
    prob: &BailoutProblem,
    spec: &FairnessSpec,
    samples: &[Vec<f64>],
    cap: usize,
) -> Result<f64, FairnessError> {
    let unconstrained = brute_force(prob, samples, cap)?;
    let constrained = brute_force_fair(prob, spec, samples, cap)?;
    Ok(if constrained > 0.0 {
        unconstrained.value / constrained
    } else if unconstrained.value > 0.0 {
        f64::INFINITY
    } else {
        1.0
    })
}

fn brute_force_fair(
    prob: &BailoutProblem,
    spec: &FairnessSpec,
    samples: &[Vec<f64>],
    cap: usize,
) -> Result<f64, FairnessError> {
    let n = prob.net.len();
    let mut best = prob
        .batch_value(&Allocation::empty(n), samples)
        .map_err(BailoutError::from)?;
    let mut stack: Vec<usize> = Vec::new();
    let mut tried = 1usize;
    fn recurse(
        prob: &BailoutProblem,
        spec: &FairnessSpec,
        samples: &[Vec<f64>],
        cap: usize,
        next: usize,
        spent: f64,
        stack: &mut Vec<usize>,
        tried: &mut usize,
        best: &mut f64,
    ) -> Result<(), FairnessError> {
        for u in next..prob.net.len() {
            if !prob.affordable(spent + prob.stimulus[u], 0.0) {
                continue;
            }
            stack.push(u);
            *tried += 1;
            if *tried > cap {
                return Err(BailoutError::EnumerationCapExceeded(cap).into());
            }
            let alloc = Allocation::from_set(prob.net.len(), stack);
            let fair = match coefficient(spec, &alloc.z, &prob.stimulus, &prob.net) {
                Ok(value) => value <= spec.bound + COEFFICIENT_TOL,
                Err(FairnessError::ZeroAllocation) => true,
                Err(e) => return Err(e),
            };
            if fair {
                let val = prob
                    .batch_value(&alloc, samples)
                    .map_err(BailoutError::from)?;
                if val > *best {
                    *best = val;
                }
            }
            recurse(
                prob,
                spec,
                samples,
                cap,
                u + 1,
                spent + prob.stimulus[u],
                stack,
                tried,
                best,
            )?;
            stack.pop();
        }
        Ok(())
    }
    recurse(
        prob, spec, samples, cap, 0, 0.0, &mut stack, &mut tried, &mut best,
    )?;
    Ok(best)
}

/// Checks the conductance lower bound `φ(A)/2 ≤ SGC(z; A)` on a symmetric
/// connected network (volume-normalized conductance of the relative
/// liability matrix).
pub fn sgc_conductance_check(
    z: &[f64],
    stimulus: &[f64],
    net: &FinancialNetwork,
) -> Result<bool, FairnessError> {
    let n = net.len();
    let mut a = vec![vec![0.0; n]; n];
    for (j, i, _, share) in net.edges() {
        a[j][i] = share;
    }
    for j in 0..n {
        for i in 0..n {
            if (a[j][i] - a[i][j]).abs() > 1e-9 * a[j][i].abs().max(1.0) {
                return Err(FairnessError::Asymmetric);
            }
        }
    }
    let sgc = spatial_gini(z, stimulus, net)?;
    let report = conductance(&a, CutNorm::Volume)?;
    let phi = report
        .phi
        .expect("instances under the exact-cut cap expected here");
    Ok(phi / 2.0 <= sgc + COEFFICIENT_TOL)
}
