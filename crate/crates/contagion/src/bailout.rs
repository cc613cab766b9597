//! The budgeted bailout problem: LP relaxation, randomized rounding,
//! greedy hill-climbing, exact search, and ranking heuristics.
//!
//! Everything is conditioned on a fixed shock realization where noted;
//! expectations over the shock distribution are sample averages over a
//! batch, per the estimator the experiment harness reports.

use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::centrality;
use crate::lp::{Cmp, Direction, LpError, LpProblem, LpSolver};
use crate::network::{ClearingError, ClearingOptions, FinancialNetwork};
use crate::objectives::Objective;
use crate::shocks::ShockDistribution;

#[derive(Debug, Error)]
pub enum BailoutError {
    #[error("stimulus for node {0} must be positive")]
    NonPositiveStimulus(usize),
    #[error("budget must be positive")]
    NonPositiveBudget,
    #[error("{what} has length {got}, expected {want}")]
    BadLength {
        what: &'static str,
        got: usize,
        want: usize,
    },
    #[error("objective cannot drive the LP relaxation (augment the solvency count first)")]
    ObjectiveNotLinear,
    #[error("subset enumeration exceeded cap of {0} sets")]
    EnumerationCapExceeded(usize),
    #[error(transparent)]
    Clearing(#[from] ClearingError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// A bailout design problem: which nodes to hand `L_j` to, spending at most
/// `budget`, to maximize the expected objective after clearing.
#[derive(Debug, Clone)]
pub struct BailoutProblem {
    pub net: FinancialNetwork,
    pub stimulus: Vec<f64>,
    pub budget: f64,
    pub dist: ShockDistribution,
    pub objective: Objective,
}

impl BailoutProblem {
    pub fn new(
        net: FinancialNetwork,
        stimulus: Vec<f64>,
        budget: f64,
        dist: ShockDistribution,
        objective: Objective,
    ) -> Result<Self, BailoutError> {
        if stimulus.len() != net.len() {
            return Err(BailoutError::BadLength {
                what: "stimulus",
                got: stimulus.len(),
                want: net.len(),
            });
        }
        if let Some(j) = stimulus.iter().position(|&l| !(l > 0.0)) {
            return Err(BailoutError::NonPositiveStimulus(j));
        }
        if !(budget > 0.0) {
            return Err(BailoutError::NonPositiveBudget);
        }
        Ok(Self {
            net,
            stimulus,
            budget,
            dist,
            objective,
        })
    }

    fn budget_slack(&self) -> f64 {
        1e-9 * self.budget.max(1.0)
    }

    /// Whether a total spend fits within budget plus `overspend`.
    pub fn affordable(&self, spent: f64, overspend: f64) -> bool {
        spent <= self.budget + overspend + self.budget_slack()
    }

    /// Default extra budget granted to rounded solutions,
    /// `min(√(3Λ ln 400), Λ)`.
    pub fn default_overspend(&self) -> f64 {
        (3.0 * self.budget * 400f64.ln()).sqrt().min(self.budget)
    }

    /// Clears the network under `shock` with this allocation's cash and
    /// evaluates the objective.
    pub fn value_under(&self, z: &Allocation, shock: &[f64]) -> Result<f64, ClearingError> {
        let res = self
            .net
            .clear(shock, &z.cash(&self.stimulus), &ClearingOptions::default())?;
        Ok(self.objective.evaluate(&res))
    }

    /// Mean objective over a shock batch.
    pub fn batch_value(&self, z: &Allocation, samples: &[Vec<f64>]) -> Result<f64, ClearingError> {
        let total: Result<f64, ClearingError> = samples
            .iter()
            .map(|x| self.value_under(z, x))
            .try_fold(0.0, |acc, v| Ok(acc + v?));
        Ok(total? / samples.len().max(1) as f64)
    }
}

/// A bailout decision vector: binary when `discrete`, else in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub z: Vec<f64>,
    pub discrete: bool,
}

impl Allocation {
    pub fn empty(n: usize) -> Self {
        Self {
            z: vec![0.0; n],
            discrete: true,
        }
    }

    pub fn from_set(n: usize, set: &[usize]) -> Self {
        let mut z = vec![0.0; n];
        for &j in set {
            z[j] = 1.0;
        }
        Self { z, discrete: true }
    }

    pub fn fractional(z: Vec<f64>) -> Self {
        Self { z, discrete: false }
    }

    pub fn spent(&self, stimulus: &[f64]) -> f64 {
        self.z.iter().zip(stimulus).map(|(z, l)| z * l).sum()
    }

    pub fn cash(&self, stimulus: &[f64]) -> Vec<f64> {
        self.z.iter().zip(stimulus).map(|(z, l)| z * l).collect()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.z.len()).filter(|&j| self.z[j] > 0.0).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.z.iter().all(|&z| z == 0.0)
    }
}

/// Optimal solution of the continuous relaxation conditioned on one shock.
#[derive(Debug, Clone)]
pub struct RelaxationSolution {
    pub fractional: Allocation,
    /// Relaxation optimum `OPT_R(x)`, an upper bound on the discrete one.
    pub opt_r: f64,
    /// Optimal relaxed payment vector.
    pub payments: Vec<f64>,
}

/// Solves the per-shock LP relaxation: payments and fractional bailouts
/// jointly, `max vᵀp̄` over the relaxed polytope with the budget row.
pub fn solve_relaxation(
    prob: &BailoutProblem,
    shock: &[f64],
    solver: &dyn LpSolver,
) -> Result<RelaxationSolution, BailoutError> {
    let extra: [(Vec<(usize, f64)>, Cmp, f64); 0] = [];
    solve_relaxation_with(prob, shock, solver, extra)
}

/// Relaxation with extra linear constraint rows over the variable layout
/// `[p̄_0 .. p̄_{n−1}, z̃_0 .. z̃_{n−1}, aux...]`; fairness constraints hook
/// in here. Rows may reference auxiliary variables at indices `≥ 2n`, which
/// are created on demand with bounds `[0, ∞)`.
pub fn solve_relaxation_with(
    prob: &BailoutProblem,
    shock: &[f64],
    solver: &dyn LpSolver,
    extra_rows: impl IntoIterator<Item = (Vec<(usize, f64)>, Cmp, f64)>,
) -> Result<RelaxationSolution, BailoutError> {
    let net = &prob.net;
    let n = net.len();
    if shock.len() != n {
        return Err(BailoutError::BadLength {
            what: "shock",
            got: shock.len(),
            want: n,
        });
    }
    let v = prob
        .objective
        .lp_coefficients(n)
        .ok_or(BailoutError::ObjectiveNotLinear)?;

    let mut lp = LpProblem::new(Direction::Maximize);
    let p = net.total_liabilities();
    for j in 0..n {
        lp.add_var(v[j], 0.0, p[j]);
    }
    for _ in 0..n {
        lp.add_var(0.0, 0.0, 1.0);
    }
    // p̄_j − Σ_i a_ij p̄_i − L_j z̃_j ≤ c_j − x_j
    let mut rows: Vec<Vec<(usize, f64)>> = (0..n).map(|j| vec![(j, 1.0)]).collect();
    for (j, i, _, share) in net.edges() {
        rows[i].push((j, -share));
    }
    for (j, mut row) in rows.into_iter().enumerate() {
        row.push((n + j, -prob.stimulus[j]));
        let rhs = (net.external_assets()[j] - shock[j]).max(0.0);
        lp.add_constraint(row, Cmp::Le, rhs);
    }
    let budget_row: Vec<(usize, f64)> = (0..n).map(|j| (n + j, prob.stimulus[j])).collect();
    lp.add_constraint(budget_row, Cmp::Le, prob.budget);

    for (row, cmp, rhs) in extra_rows {
        for &(idx, _) in &row {
            while idx >= lp.objective.len() {
                lp.add_var(0.0, 0.0, f64::INFINITY);
            }
        }
        lp.add_constraint(row, cmp, rhs);
    }

    let sol = solver.solve(&lp)?;
    let payments = sol.values[..n].to_vec();
    let z = sol.values[n..2 * n]
        .iter()
        .map(|&x| x.clamp(0.0, 1.0))
        .collect();
    Ok(RelaxationSolution {
        fractional: Allocation::fractional(z),
        opt_r: sol.objective,
        payments,
    })
}

/// Outcome of repeated independent rounding.
#[derive(Debug, Clone)]
pub struct RoundedAllocation {
    pub allocation: Allocation,
    /// Number of trials that met the relaxed budget.
    pub feasible_trials: usize,
    /// Set when no trial was feasible and the empty allocation is returned.
    pub warning: bool,
}

/// Draws one independent rounding `Z_j ~ Bernoulli(z̃_j)`.
pub fn draw_rounding(fractional: &Allocation, rng: &mut impl Rng) -> Allocation {
    let z = fractional
        .z
        .iter()
        .map(|&f| {
            if f <= 0.0 {
                0.0
            } else if f >= 1.0 {
                1.0
            } else {
                let u: f64 = rng.random();
                if u < f {
                    1.0
                } else {
                    0.0
                }
            }
        })
        .collect();
    Allocation { z, discrete: true }
}

/// Independent randomized rounding: `trials` coin-flip roundings of the
/// fractional solution; returns the best-objective trial whose spend fits
/// within `budget + overspend`, evaluated under the same shock the
/// relaxation was solved for.
pub fn round_independent(
    fractional: &Allocation,
    prob: &BailoutProblem,
    shock: &[f64],
    rng: &mut impl Rng,
    trials: usize,
    overspend: f64,
) -> Result<RoundedAllocation, BailoutError> {
    let mut best: Option<(f64, Allocation)> = None;
    let mut feasible = 0;
    for _ in 0..trials {
        let cand = draw_rounding(fractional, rng);
        if !prob.affordable(cand.spent(&prob.stimulus), overspend) {
            continue;
        }
        feasible += 1;
        let val = prob.value_under(&cand, shock)?;
        if best.as_ref().is_none_or(|(b, _)| val > *b) {
            best = Some((val, cand));
        }
    }
    match best {
        Some((_, allocation)) => Ok(RoundedAllocation {
            allocation,
            feasible_trials: feasible,
            warning: false,
        }),
        None => Ok(RoundedAllocation {
            allocation: Allocation::empty(prob.net.len()),
            feasible_trials: 0,
            warning: true,
        }),
    }
}

/// First feasible independent rounding draw (up to `attempts`); the
/// per-iteration protocol the experiment harness reports. Falls back to the
/// empty allocation.
pub fn round_first_feasible(
    fractional: &Allocation,
    prob: &BailoutProblem,
    rng: &mut impl Rng,
    attempts: usize,
    overspend: f64,
) -> RoundedAllocation {
    for _ in 0..attempts {
        let cand = draw_rounding(fractional, rng);
        if prob.affordable(cand.spent(&prob.stimulus), overspend) {
            return RoundedAllocation {
                allocation: cand,
                feasible_trials: 1,
                warning: false,
            };
        }
    }
    RoundedAllocation {
        allocation: Allocation::empty(prob.net.len()),
        feasible_trials: 0,
        warning: true,
    }
}

/// Dependent rounding for unequal stimulus values. Samples the complement
/// indicator `U` with marginals `(L_j/‖L‖_∞)(1 − z̃_j)` plus one slack
/// variable, via pairwise pipage steps that preserve marginals and keep the
/// total within one unit of its expectation; returns `Z = 1 − U` (slack
/// dropped). Guarantees `E[Z_j] ≥ z̃_j` and concentrates the spend.
pub fn round_dependent(
    fractional: &Allocation,
    prob: &BailoutProblem,
    rng: &mut impl Rng,
) -> Allocation {
    let n = prob.net.len();
    let l_inf = prob
        .stimulus
        .iter()
        .copied()
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let l_one: f64 = prob.stimulus.iter().sum();
    let deficit = ((l_one - prob.budget) / l_inf).max(0.0);
    let slack = deficit.ceil() - deficit;

    let mut vals: Vec<f64> = (0..n)
        .map(|j| (prob.stimulus[j] / l_inf) * (1.0 - fractional.z[j]).clamp(0.0, 1.0))
        .collect();
    vals.push(slack);
    pipage_round(&mut vals, rng);

    let z = (0..n).map(|j| 1.0 - vals[j]).collect();
    Allocation { z, discrete: true }
}

/// Rounds a fractional vector to {0,1} in place, preserving each marginal
/// exactly and the sum to within one unit: repeatedly shifts mass between
/// two fractional entries until at most one remains, then flips it.
fn pipage_round(vals: &mut [f64], rng: &mut impl Rng) {
    let is_frac = |x: f64| x > 1e-12 && x < 1.0 - 1e-12;
    let mut pending: Option<usize> = None;
    for idx in 0..vals.len() {
        if !is_frac(vals[idx]) {
            vals[idx] = vals[idx].round();
            continue;
        }
        let Some(i) = pending else {
            pending = Some(idx);
            continue;
        };
        let (a, b) = (vals[i], vals[idx]);
        let up = (1.0 - a).min(b);
        let down = a.min(1.0 - b);
        let u: f64 = rng.random();
        if u < down / (up + down) {
            vals[i] = a + up;
            vals[idx] = b - up;
        } else {
            vals[i] = a - down;
            vals[idx] = b + down;
        }
        // One of the pair settled; carry the other forward.
        pending = if is_frac(vals[i]) {
            vals[idx] = vals[idx].round();
            Some(i)
        } else if is_frac(vals[idx]) {
            vals[i] = vals[i].round();
            Some(idx)
        } else {
            vals[i] = vals[i].round();
            vals[idx] = vals[idx].round();
            None
        };
    }
    if let Some(i) = pending {
        let u: f64 = rng.random();
        vals[i] = if u < vals[i] { 1.0 } else { 0.0 };
    }
}

/// Greedy hill-climbing outcome: the allocation, the pick order, and the
/// batch-mean objective after each pick.
#[derive(Debug, Clone)]
pub struct GreedyOutcome {
    pub allocation: Allocation,
    pub trace: Vec<usize>,
    pub values: Vec<f64>,
}

/// Greedy hill-climbing: repeatedly bail out the affordable node with the
/// largest sample-average marginal gain (ties to the lowest index) until no
/// node fits the remaining budget.
pub fn greedy(prob: &BailoutProblem, samples: &[Vec<f64>]) -> Result<GreedyOutcome, BailoutError> {
    if matches!(prob.objective, Objective::AbsoluteSolvency) {
        return Err(BailoutError::ObjectiveNotLinear);
    }
    let n = prob.net.len();
    let opts = ClearingOptions::default();
    // Warm starts: clearing vectors only grow as cash is added, so each
    // candidate evaluation resumes from the incumbent per-sample solution.
    let mut base: Vec<Vec<f64>> = samples
        .iter()
        .map(|x| prob.net.clear(x, &vec![0.0; n], &opts).map(|r| r.pbar))
        .collect::<Result<_, _>>()?;
    let mut cash = vec![0.0; n];
    let mut spent = 0.0;

    let mut selected = vec![false; n];
    let mut trace = Vec::new();
    let mut values = Vec::new();
    loop {
        let candidates: Vec<usize> = (0..n)
            .filter(|&u| !selected[u] && prob.affordable(spent + prob.stimulus[u], 0.0))
            .collect();
        if candidates.is_empty() {
            break;
        }
        let gains: Vec<(usize, f64, Vec<Vec<f64>>)> = candidates
            .par_iter()
            .map(|&u| {
                let mut cash_u = cash.clone();
                cash_u[u] += prob.stimulus[u];
                let mut pbars = Vec::with_capacity(samples.len());
                let mut total = 0.0;
                for (x, warm) in samples.iter().zip(&base) {
                    let res = prob.net.clear_from(x, &cash_u, Some(warm), &opts)?;
                    total += prob.objective.evaluate(&res);
                    pbars.push(res.pbar);
                }
                Ok((u, total / samples.len().max(1) as f64, pbars))
            })
            .collect::<Result<_, BailoutError>>()?;
        // Ascending candidate order with strict improvement keeps ties on
        // the lowest index.
        let mut best: Option<(usize, f64, Vec<Vec<f64>>)> = None;
        for (u, val, pbars) in gains {
            if best.as_ref().is_none_or(|&(_, bv, _)| val > bv) {
                best = Some((u, val, pbars));
            }
        }
        let (u, val, pbars) = best.expect("nonempty candidates");
        selected[u] = true;
        cash[u] += prob.stimulus[u];
        spent += prob.stimulus[u];
        base = pbars;
        trace.push(u);
        values.push(val);
    }
    let allocation = Allocation::from_set(n, &trace);
    Ok(GreedyOutcome {
        allocation,
        trace,
        values,
    })
}

/// Replays a greedy trace and checks that every picked node is still in
/// default right after its own bailout, in every sample.
pub fn check_small_bailout_regime(
    prob: &BailoutProblem,
    samples: &[Vec<f64>],
    trace: &[usize],
) -> Result<bool, BailoutError> {
    let n = prob.net.len();
    let opts = ClearingOptions::default();
    let mut cash = vec![0.0; n];
    for &u in trace {
        cash[u] += prob.stimulus[u];
        for x in samples {
            let res = prob.net.clear(x, &cash, &opts)?;
            if !res.is_default(u) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone)]
pub struct BruteForceResult {
    pub allocation: Allocation,
    pub value: f64,
    pub subsets_tried: usize,
}

pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;

/// Exact maximizer of the sample-average objective over all budget-feasible
/// subsets (depth-first, lowest indices preferred on ties).
pub fn brute_force(
    prob: &BailoutProblem,
    samples: &[Vec<f64>],
    cap: usize,
) -> Result<BruteForceResult, BailoutError> {
    let n = prob.net.len();
    let mut best_set: Vec<usize> = Vec::new();
    let mut best_val = prob.batch_value(&Allocation::empty(n), samples)?;
    let mut tried = 1usize;
    let mut stack: Vec<usize> = Vec::new();

    fn recurse(
        prob: &BailoutProblem,
        samples: &[Vec<f64>],
        cap: usize,
        next: usize,
        spent: f64,
        stack: &mut Vec<usize>,
        tried: &mut usize,
        best_val: &mut f64,
        best_set: &mut Vec<usize>,
    ) -> Result<(), BailoutError> {
        for u in next..prob.net.len() {
            if !prob.affordable(spent + prob.stimulus[u], 0.0) {
                continue;
            }
            stack.push(u);
            *tried += 1;
            if *tried > cap {
                return Err(BailoutError::EnumerationCapExceeded(cap));
            }
            let alloc = Allocation::from_set(prob.net.len(), stack);
            let val = prob.batch_value(&alloc, samples)?;
            if val > *best_val {
                *best_val = val;
                *best_set = stack.clone();
            }
            recurse(
                prob,
                samples,
                cap,
                u + 1,
                spent + prob.stimulus[u],
                stack,
                tried,
                best_val,
                best_set,
            )?;
            stack.pop();
        }
        Ok(())
    }

    recurse(
        prob, samples, cap, 0, 0.0, &mut stack, &mut tried, &mut best_val, &mut best_set,
    )?;
    Ok(BruteForceResult {
        allocation: Allocation::from_set(n, &best_set),
        value: best_val,
        subsets_tried: tried,
    })
}

/// Shock-independent node-ranking policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeuristicKind {
    /// Lowest initial equity first.
    WealthAscending,
    /// Highest out-degree first.
    OutDegree,
    /// Highest PageRank first (directed, liability-weighted).
    PageRank,
    /// Highest eigenvector centrality first (direction ignored).
    EigenvectorCentrality,
    /// Uniformly random order.
    RandomPermutation,
}

impl HeuristicKind {
    pub fn name(&self) -> &'static str {
        match self {
            HeuristicKind::WealthAscending => "wealth",
            HeuristicKind::OutDegree => "outdegree",
            HeuristicKind::PageRank => "pagerank",
            HeuristicKind::EigenvectorCentrality => "eigencentrality",
            HeuristicKind::RandomPermutation => "random-perm",
        }
    }
}

/// Ranks nodes by the heuristic criterion (computed once, pre-shock) and
/// bails them out in order while the budget allows.
pub fn heuristic(kind: HeuristicKind, prob: &BailoutProblem, rng: &mut impl Rng) -> Allocation {
    let n = prob.net.len();
    let order: Vec<usize> = match kind {
        HeuristicKind::WealthAscending => {
            let w = prob.net.equity();
            sorted_by_score(n, |j| w[j], false)
        }
        HeuristicKind::OutDegree => {
            let d = centrality::out_degree(&prob.net);
            sorted_by_score(n, |j| d[j] as f64, true)
        }
        HeuristicKind::PageRank => {
            let pr = centrality::pagerank(&prob.net, 0.85, 200);
            sorted_by_score(n, |j| pr[j], true)
        }
        HeuristicKind::EigenvectorCentrality => {
            let ec = centrality::eigenvector_centrality(&prob.net, 500);
            sorted_by_score(n, |j| ec[j], true)
        }
        HeuristicKind::RandomPermutation => {
            let mut order: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                let j = rng.random_range(0..=i);
                order.swap(i, j);
            }
            order
        }
    };
    let mut z = Allocation::empty(n);
    let mut spent = 0.0;
    for j in order {
        if prob.affordable(spent + prob.stimulus[j], 0.0) {
            z.z[j] = 1.0;
            spent += prob.stimulus[j];
        }
    }
    z
}

fn sorted_by_score(n: usize, score: impl Fn(usize) -> f64, descending: bool) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (sa, sb) = (score(a), score(b));
        let ord = sa.partial_cmp(&sb).expect("finite scores");
        let ord = if descending { ord.reverse() } else { ord };
        ord.then(a.cmp(&b))
    });
    order
}

/// Evaluation of one allocation over a shock batch.
#[derive(Debug, Clone)]
pub struct SolverReport {
    pub allocation: Allocation,
    pub per_sample: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation of the per-sample values.
    pub std: f64,
    pub opt_r: Option<f64>,
    pub wall: Duration,
    pub seed: Option<u64>,
}

/// Clears the network per sample with the allocation's cash and aggregates
/// the objective values.
pub fn evaluate_allocation(
    prob: &BailoutProblem,
    z: &Allocation,
    samples: &[Vec<f64>],
) -> Result<SolverReport, BailoutError> {
    let start = Instant::now();
    let per_sample: Vec<f64> = samples
        .par_iter()
        .map(|x| prob.value_under(z, x))
        .collect::<Result<_, _>>()?;
    let mean = per_sample.iter().sum::<f64>() / per_sample.len().max(1) as f64;
    let var = per_sample
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / per_sample.len().max(1) as f64;
    Ok(SolverReport {
        allocation: z.clone(),
        per_sample,
        mean,
        std: var.sqrt(),
        opt_r: None,
        wall: start.elapsed(),
        seed: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::DefaultSolver;
    use crate::objectives::LinearKind;
    use crate::shocks::{SeededRng, ShockKind};

    fn two_node_problem(budget: f64) -> BailoutProblem {
        let net =
            FinancialNetwork::from_edges(2, &[(0, 1, 1.0)], &[0.5, 1.0], &[1.5, 0.0]).unwrap();
        let dist = ShockDistribution::new(ShockKind::PointMass(vec![1.0, 0.0]), &[1.5, 0.0])
            .unwrap();
        let obj = Objective::for_kind(LinearKind::SumOfPayments, &net).unwrap();
        BailoutProblem::new(net, vec![1.0, 1.0], budget, dist, obj).unwrap()
    }

    #[test]
    fn relaxation_on_two_node_instance() {
        let prob = two_node_problem(1.0);
        let sol = solve_relaxation(&prob, &[1.0, 0.0], &DefaultSolver).unwrap();
        assert!((sol.opt_r - 2.5).abs() < 1e-8, "opt_r = {}", sol.opt_r);
        assert!((sol.fractional.z[0] - 1.0).abs() < 1e-8);
        assert!(sol.fractional.z[1].abs() < 1e-8);
    }

    #[test]
    fn vanishing_budget_reduces_to_shocked_clearing() {
        let prob = two_node_problem(1e-12);
        let sol = solve_relaxation(&prob, &[1.0, 0.0], &DefaultSolver).unwrap();
        assert!((sol.opt_r - 5.0 / 6.0).abs() < 1e-6, "opt_r = {}", sol.opt_r);
    }

    #[test]
    fn rounding_degenerate_fractions_are_deterministic() {
        let prob = two_node_problem(1.0);
        let mut rng = SeededRng::new(3).rng();
        let zero = Allocation::fractional(vec![0.0, 0.0]);
        let r = round_independent(&zero, &prob, &[1.0, 0.0], &mut rng, 5, 0.0).unwrap();
        assert!(r.allocation.is_zero() && !r.warning);
        let one = Allocation::fractional(vec![1.0, 0.0]);
        let r = round_independent(&one, &prob, &[1.0, 0.0], &mut rng, 5, 0.0).unwrap();
        assert_eq!(r.allocation.support(), vec![0]);
    }

    #[test]
    fn greedy_bails_out_source_node() {
        let prob = two_node_problem(1.0);
        let samples = vec![vec![1.0, 0.0]];
        let out = greedy(&prob, &samples).unwrap();
        assert_eq!(out.trace, vec![0]);
        assert!((out.values[0] - 2.5).abs() < 1e-9);
    }

    #[test]
    fn greedy_with_unaffordable_stimulus_is_empty() {
        let prob = two_node_problem(0.5);
        let out = greedy(&prob, &[vec![1.0, 0.0]]).unwrap();
        assert!(out.allocation.is_zero());
        assert!(out.trace.is_empty());
    }

    #[test]
    fn full_bailout_violates_small_bailout_regime() {
        let prob = two_node_problem(1.0);
        let samples = vec![vec![1.0, 0.0]];
        let out = greedy(&prob, &samples).unwrap();
        // Node 0 saturates to full payment after its own bailout.
        assert!(!check_small_bailout_regime(&prob, &samples, &out.trace).unwrap());
    }

    #[test]
    fn tiny_stimulus_stays_in_small_bailout_regime() {
        let net =
            FinancialNetwork::from_edges(2, &[(0, 1, 1.0)], &[0.5, 1.0], &[1.5, 0.0]).unwrap();
        let dist = ShockDistribution::new(ShockKind::PointMass(vec![1.0, 0.0]), &[1.5, 0.0])
            .unwrap();
        let obj = Objective::for_kind(LinearKind::SumOfPayments, &net).unwrap();
        let prob = BailoutProblem::new(net, vec![0.01, 0.01], 0.02, dist, obj).unwrap();
        let samples = vec![vec![1.0, 0.0]];
        let out = greedy(&prob, &samples).unwrap();
        assert!(!out.trace.is_empty());
        assert!(check_small_bailout_regime(&prob, &samples, &out.trace).unwrap());
    }

    #[test]
    fn brute_force_finds_the_bailout() {
        let prob = two_node_problem(1.0);
        let res = brute_force(&prob, &[vec![1.0, 0.0]], 1000).unwrap();
        assert_eq!(res.allocation.support(), vec![0]);
        assert!((res.value - 2.5).abs() < 1e-9);
    }

    #[test]
    fn brute_force_with_loose_budget_covers_everyone() {
        let prob = two_node_problem(5.0);
        let res = brute_force(&prob, &[vec![1.0, 0.0]], 1000).unwrap();
        let all = Allocation::from_set(2, &[0, 1]);
        let all_val = prob.batch_value(&all, &[vec![1.0, 0.0]]).unwrap();
        assert!(res.value >= all_val - 1e-12);
    }

    #[test]
    fn dominance_brute_force_ge_greedy_ge_heuristics() {
        let edges = [
            (0, 1, 0.6),
            (1, 2, 0.4),
            (2, 3, 0.7),
            (3, 0, 0.3),
            (0, 2, 0.5),
            (2, 1, 0.2),
        ];
        let b = [0.4, 0.5, 0.3, 0.6];
        let c = [1.0, 0.8, 0.9, 0.4];
        let net = FinancialNetwork::from_edges(4, &edges, &b, &c).unwrap();
        let dist = ShockDistribution::new(ShockKind::Uniform, &c).unwrap();
        let obj = Objective::for_kind(LinearKind::SumOfPayments, &net).unwrap();
        let prob = BailoutProblem::new(net, vec![0.3; 4], 0.6, dist, obj).unwrap();
        let samples = prob.dist.sample_batch(&SeededRng::new(17), 8);

        let bf = brute_force(&prob, &samples, 10_000).unwrap();
        let g = greedy(&prob, &samples).unwrap();
        let gv = prob.batch_value(&g.allocation, &samples).unwrap();
        assert!(bf.value >= gv - 1e-9);
        let mut rng = SeededRng::new(23).rng();
        for kind in [
            HeuristicKind::WealthAscending,
            HeuristicKind::OutDegree,
            HeuristicKind::PageRank,
            HeuristicKind::EigenvectorCentrality,
            HeuristicKind::RandomPermutation,
        ] {
            let h = heuristic(kind, &prob, &mut rng);
            let hv = prob.batch_value(&h, &samples).unwrap();
            assert!(
                bf.value >= hv - 1e-9,
                "{} beat brute force: {hv} > {}",
                kind.name(),
                bf.value
            );
        }
    }

    #[test]
    fn dependent_rounding_with_covering_budget_selects_all() {
        let prob = two_node_problem(5.0);
        let mut rng = SeededRng::new(5).rng();
        let frac = Allocation::fractional(vec![1.0, 1.0]);
        let z = round_dependent(&frac, &prob, &mut rng);
        assert_eq!(z.support(), vec![0, 1]);
    }

    #[test]
    fn dependent_rounding_marginals_dominate_fractions() {
        let net = FinancialNetwork::from_edges(
            4,
            &[(0, 1, 0.5), (1, 2, 0.5), (2, 3, 0.5), (3, 0, 0.5)],
            &[1.0; 4],
            &[1.0; 4],
        )
        .unwrap();
        let dist = ShockDistribution::new(ShockKind::Zero, &[1.0; 4]).unwrap();
        let obj = Objective::for_kind(LinearKind::SumOfPayments, &net).unwrap();
        let prob = BailoutProblem::new(net, vec![1.0; 4], 2.0, dist, obj).unwrap();
        let frac = Allocation::fractional(vec![0.7, 0.5, 0.2, 0.6]);
        let mut rng = SeededRng::new(11).rng();
        let draws = 40_000;
        let mut hits = [0usize; 4];
        for _ in 0..draws {
            let z = round_dependent(&frac, &prob, &mut rng);
            for j in 0..4 {
                if z.z[j] > 0.5 {
                    hits[j] += 1;
                }
            }
        }
        for j in 0..4 {
            let emp = hits[j] as f64 / draws as f64;
            let sigma = (emp * (1.0 - emp) / draws as f64).sqrt().max(1e-4);
            assert!(
                emp >= frac.z[j] - 3.0 * sigma,
                "node {j}: {emp} < {}",
                frac.z[j]
            );
        }
    }

    #[test]
    fn dependent_rounding_concentrates_spend_for_geometric_stimuli() {
        let net = FinancialNetwork::from_edges(
            4,
            &[(0, 1, 0.5), (1, 2, 0.5), (2, 3, 0.5), (3, 0, 0.5)],
            &[1.0; 4],
            &[1.0; 4],
        )
        .unwrap();
        let dist = ShockDistribution::new(ShockKind::Zero, &[1.0; 4]).unwrap();
        let obj = Objective::for_kind(LinearKind::SumOfPayments, &net).unwrap();
        let stim = vec![1.0, 2.0, 4.0, 8.0];
        let prob = BailoutProblem::new(net, stim.clone(), 7.0, dist, obj).unwrap();
        let frac = Allocation::fractional(vec![0.5, 0.5, 0.5, 0.25]);
        let mut rng = SeededRng::new(13).rng();
        let draws = 20_000;
        let spend =
            |z: &Allocation| -> f64 { z.spent(&stim) };
        let (mut dep_sum, mut dep_sq) = (0.0, 0.0);
        let (mut ind_sum, mut ind_sq) = (0.0, 0.0);
        for _ in 0..draws {
            let d = spend(&round_dependent(&frac, &prob, &mut rng));
            dep_sum += d;
            dep_sq += d * d;
            let i = spend(&draw_rounding(&frac, &mut rng));
            ind_sum += i;
            ind_sq += i * i;
        }
        let dep_var = dep_sq / draws as f64 - (dep_sum / draws as f64).powi(2);
        let ind_var = ind_sq / draws as f64 - (ind_sum / draws as f64).powi(2);
        assert!(
            dep_var < ind_var,
            "dependent variance {dep_var} vs independent {ind_var}"
        );
    }

    #[test]
    fn heuristic_prefers_highest_out_degree() {
        let net = FinancialNetwork::from_edges(
            3,
            &[(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)],
            &[1.0; 3],
            &[1.0; 3],
        )
        .unwrap();
        let dist = ShockDistribution::new(ShockKind::Zero, &[1.0; 3]).unwrap();
        let obj = Objective::for_kind(LinearKind::SumOfPayments, &net).unwrap();
        let prob = BailoutProblem::new(net, vec![1.0; 3], 1.0, dist, obj).unwrap();
        let mut rng = SeededRng::new(1).rng();
        let z = heuristic(HeuristicKind::OutDegree, &prob, &mut rng);
        assert_eq!(z.support(), vec![0]);
    }

    #[test]
    fn symmetric_scores_fall_back_to_index_order() {
        // Complete symmetric network: every centrality ties, so the lowest
        // indices are picked.
        let mut edges = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    edges.push((i, j, 1.0));
                }
            }
        }
        let net = FinancialNetwork::from_edges(4, &edges, &[1.0; 4], &[1.0; 4]).unwrap();
        let dist = ShockDistribution::new(ShockKind::Zero, &[1.0; 4]).unwrap();
        let obj = Objective::for_kind(LinearKind::SumOfPayments, &net).unwrap();
        let prob = BailoutProblem::new(net, vec![1.0; 4], 2.0, dist, obj).unwrap();
        let mut rng = SeededRng::new(1).rng();
        for kind in [HeuristicKind::PageRank, HeuristicKind::EigenvectorCentrality] {
            let z = heuristic(kind, &prob, &mut rng);
            assert_eq!(z.support(), vec![0, 1], "{}", kind.name());
        }
    }

    #[test]
    fn point_mass_evaluation_has_zero_std() {
        let prob = two_node_problem(1.0);
        let samples = prob.dist.sample_batch(&SeededRng::new(2), 6);
        let report =
            evaluate_allocation(&prob, &Allocation::from_set(2, &[0]), &samples).unwrap();
        assert!((report.mean - 2.5).abs() < 1e-9);
        assert_eq!(report.std, 0.0);
    }
}
