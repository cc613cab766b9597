//! Payment network representation and clearing-vector computation.

use thiserror::Error;

/// How relative liabilities are stored for the propagation step.
///
/// Dense keeps the full `n × n` share matrix and is the default up to
/// `DENSE_LIMIT` nodes; sparse keeps per-creditor incoming lists and wins on
/// large thin graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Dense,
    Sparse,
}

/// Networks up to this size default to the dense representation.
pub const DENSE_LIMIT: usize = 2000;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("negative or non-finite entry at {place}: {value}")]
    BadEntry { place: String, value: f64 },
    #[error("self-loop liability on node {0}")]
    SelfLoop(usize),
    #[error("edge endpoint {node} out of range (n = {n})")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("isolated node {0}: total liabilities are zero")]
    IsolatedNode(usize),
    #[error("maximum financial connectivity {beta_max} is not below 1 (node {node})")]
    ConnectivityTooHigh { beta_max: f64, node: usize },
}

#[derive(Debug, Error)]
pub enum ClearingError {
    #[error("shock component {node} = {value} outside [0, c_{node} = {cap}]")]
    InvalidShock { node: usize, value: f64, cap: f64 },
    #[error("negative cash injection at node {0}")]
    NegativeCash(usize),
    #[error("tolerance must be positive")]
    BadTolerance,
    #[error("fixed point not reached after {iterations} iterations (residual {residual:e})")]
    MaxIterExceeded { iterations: usize, residual: f64 },
    #[error("{what} has length {got}, expected {want}")]
    BadLength {
        what: &'static str,
        got: usize,
        want: usize,
    },
}

/// A static financial network: internal liabilities plus external assets and
/// liabilities per node. Immutable after construction; clearing operations
/// are pure functions of it.
#[derive(Debug, Clone)]
pub struct FinancialNetwork {
    n: usize,
    /// Outgoing liabilities per debtor: `(creditor, amount)`.
    out_edges: Vec<Vec<(usize, f64)>>,
    /// Incoming relative shares per creditor: `(debtor, a_debtor_creditor)`.
    in_shares: Vec<Vec<(usize, f64)>>,
    /// Row-major relative-liability matrix, kept under [`Representation::Dense`].
    dense_shares: Option<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
    /// Total liabilities `p_j = b_j + Σ_i P[j][i]`.
    p: Vec<f64>,
    beta: Vec<f64>,
    beta_max: f64,
    beta_min: f64,
}

impl FinancialNetwork {
    /// Builds a network from a dense liability matrix (`liabilities[j][i]`
    /// is what `j` owes `i`).
    pub fn from_dense(
        liabilities: &[Vec<f64>],
        b: &[f64],
        c: &[f64],
    ) -> Result<Self, NetworkError> {
        let n = b.len();
        if liabilities.len() != n {
            return Err(NetworkError::DimensionMismatch(format!(
                "liability matrix has {} rows, b has {} entries",
                liabilities.len(),
                n
            )));
        }
        let mut edges = Vec::new();
        for (j, row) in liabilities.iter().enumerate() {
            if row.len() != n {
                return Err(NetworkError::DimensionMismatch(format!(
                    "liability row {} has {} entries, expected {}",
                    j,
                    row.len(),
                    n
                )));
            }
            for (i, &w) in row.iter().enumerate() {
                if w != 0.0 {
                    edges.push((j, i, w));
                }
            }
        }
        Self::from_edges(n, &edges, b, c)
    }

    /// Builds a network from an edge list of `(debtor, creditor, liability)`
    /// triples. Representation is chosen automatically by size.
    pub fn from_edges(
        n: usize,
        edges: &[(usize, usize, f64)],
        b: &[f64],
        c: &[f64],
    ) -> Result<Self, NetworkError> {
        let repr = if n <= DENSE_LIMIT {
            Representation::Dense
        } else {
            Representation::Sparse
        };
        Self::from_edges_with(n, edges, b, c, repr)
    }

    pub fn from_edges_with(
        n: usize,
        edges: &[(usize, usize, f64)],
        b: &[f64],
        c: &[f64],
        repr: Representation,
    ) -> Result<Self, NetworkError> {
        if b.len() != n || c.len() != n {
            return Err(NetworkError::DimensionMismatch(format!(
                "n = {}, b has {}, c has {}",
                n,
                b.len(),
                c.len()
            )));
        }
        for (name, vec) in [("b", b), ("c", c)] {
            for (j, &v) in vec.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(NetworkError::BadEntry {
                        place: format!("{name}[{j}]"),
                        value: v,
                    });
                }
            }
        }
        let mut out_edges: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(from, to, w) in edges {
            if from >= n {
                return Err(NetworkError::NodeOutOfRange { node: from, n });
            }
            if to >= n {
                return Err(NetworkError::NodeOutOfRange { node: to, n });
            }
            if from == to {
                return Err(NetworkError::SelfLoop(from));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(NetworkError::BadEntry {
                    place: format!("liability {from}->{to}"),
                    value: w,
                });
            }
            if w != 0.0 {
                out_edges[from].push((to, w));
            }
        }
        for row in out_edges.iter_mut() {
            row.sort_by_key(|&(to, _)| to);
        }

        let mut p = vec![0.0; n];
        for j in 0..n {
            p[j] = b[j] + out_edges[j].iter().map(|&(_, w)| w).sum::<f64>();
            if p[j] <= 0.0 {
                return Err(NetworkError::IsolatedNode(j));
            }
        }
        let mut beta = vec![0.0; n];
        let mut beta_max = 0.0;
        let mut worst = 0;
        for j in 0..n {
            beta[j] = (p[j] - b[j]) / p[j];
            if beta[j] > beta_max {
                beta_max = beta[j];
                worst = j;
            }
        }
        if beta_max >= 1.0 {
            return Err(NetworkError::ConnectivityTooHigh {
                beta_max,
                node: worst,
            });
        }
        let beta_min = beta.iter().copied().fold(f64::INFINITY, f64::min);

        let mut in_shares: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for j in 0..n {
            for &(i, w) in &out_edges[j] {
                in_shares[i].push((j, w / p[j]));
            }
        }
        let dense_shares = match repr {
            Representation::Dense => {
                let mut a = vec![0.0; n * n];
                for j in 0..n {
                    for &(i, w) in &out_edges[j] {
                        a[j * n + i] = w / p[j];
                    }
                }
                Some(a)
            }
            Representation::Sparse => None,
        };

        Ok(Self {
            n,
            out_edges,
            in_shares,
            dense_shares,
            b: b.to_vec(),
            c: c.to_vec(),
            p,
            beta,
            beta_max,
            beta_min,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn external_liabilities(&self) -> &[f64] {
        &self.b
    }

    pub fn external_assets(&self) -> &[f64] {
        &self.c
    }

    /// Total liabilities `p`.
    pub fn total_liabilities(&self) -> &[f64] {
        &self.p
    }

    /// Financial connectivity `β_j = (p_j − b_j)/p_j`.
    pub fn connectivity(&self) -> &[f64] {
        &self.beta
    }

    pub fn beta_max(&self) -> f64 {
        self.beta_max
    }

    pub fn beta_min(&self) -> f64 {
        self.beta_min
    }

    /// Outgoing liability edges of `j` as `(creditor, amount)`.
    pub fn liabilities_of(&self, j: usize) -> &[(usize, f64)] {
        &self.out_edges[j]
    }

    /// Relative liability `a_ji = P[j][i] / p_j`.
    pub fn share(&self, j: usize, i: usize) -> f64 {
        match self.out_edges[j].binary_search_by_key(&i, |&(to, _)| to) {
            Ok(idx) => self.out_edges[j][idx].1 / self.p[j],
            Err(_) => 0.0,
        }
    }

    /// Iterates all edges as `(debtor, creditor, liability, share)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64, f64)> + '_ {
        self.out_edges.iter().enumerate().flat_map(move |(j, row)| {
            row.iter().map(move |&(i, w)| (j, i, w, w / self.p[j]))
        })
    }

    pub fn edge_count(&self) -> usize {
        self.out_edges.iter().map(|r| r.len()).sum()
    }

    /// Initial equity `w_j = c_j + Σ_i P[i][j] − p_j` (pre-shock).
    pub fn equity(&self) -> Vec<f64> {
        let mut w: Vec<f64> = (0..self.n).map(|j| self.c[j] - self.p[j]).collect();
        for j in 0..self.n {
            for &(i, amount) in &self.out_edges[j] {
                w[i] += amount;
            }
        }
        w
    }

    /// Absolute tolerance below `p_j` at which node `j` counts as default.
    pub fn default_tolerance(&self, j: usize) -> f64 {
        1e-8 * self.p[j].max(1.0)
    }

    /// Applies `Aᵀ` to a payment vector: `out[i] = Σ_j a_ji · pay[j]`.
    fn propagate(&self, pay: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        if let Some(a) = &self.dense_shares {
            let n = self.n;
            for (j, &pj) in pay.iter().enumerate() {
                if pj == 0.0 {
                    continue;
                }
                let row = &a[j * n..(j + 1) * n];
                for (o, &aji) in out.iter_mut().zip(row) {
                    *o += aji * pj;
                }
            }
        } else {
            for (i, incoming) in self.in_shares.iter().enumerate() {
                out[i] = incoming.iter().map(|&(j, share)| share * pay[j]).sum();
            }
        }
    }

    /// Computes the clearing vector under `shock` and cash injections by
    /// iterating the truncated flow map from `p̄⁰ = p`.
    pub fn clear(
        &self,
        shock: &[f64],
        cash: &[f64],
        opts: &ClearingOptions,
    ) -> Result<ClearingResult, ClearingError> {
        self.clear_from(shock, cash, None, opts)
    }

    /// Like [`clear`](Self::clear) but starting the iteration from `start`
    /// (clamped into `[0, p]`). The contraction property makes the fixed
    /// point independent of the start; a warm start near the solution just
    /// converges faster.
    pub fn clear_from(
        &self,
        shock: &[f64],
        cash: &[f64],
        start: Option<&[f64]>,
        opts: &ClearingOptions,
    ) -> Result<ClearingResult, ClearingError> {
        if shock.len() != self.n {
            return Err(ClearingError::BadLength {
                what: "shock",
                got: shock.len(),
                want: self.n,
            });
        }
        if cash.len() != self.n {
            return Err(ClearingError::BadLength {
                what: "cash",
                got: cash.len(),
                want: self.n,
            });
        }
        if opts.tol <= 0.0 {
            return Err(ClearingError::BadTolerance);
        }
        for j in 0..self.n {
            let slack = 1e-12 * self.c[j].max(1.0);
            if !(shock[j] >= -slack && shock[j] <= self.c[j] + slack) {
                return Err(ClearingError::InvalidShock {
                    node: j,
                    value: shock[j],
                    cap: self.c[j],
                });
            }
            if cash[j] < 0.0 {
                return Err(ClearingError::NegativeCash(j));
            }
        }
        let resources: Vec<f64> = (0..self.n)
            .map(|j| (self.c[j] - shock[j]).max(0.0) + cash[j])
            .collect();

        let max_iter = opts.max_iter.unwrap_or_else(|| self.default_max_iter(opts.tol));
        let mut pay = match start {
            Some(s) if s.len() == self.n => s
                .iter()
                .zip(&self.p)
                .map(|(&x, &pj)| x.clamp(0.0, pj))
                .collect(),
            _ => self.p.clone(),
        };
        let mut incoming = vec![0.0; self.n];
        let mut residual = f64::INFINITY;
        for it in 1..=max_iter {
            self.propagate(&pay, &mut incoming);
            residual = 0.0;
            for j in 0..self.n {
                let next = self.p[j].min(incoming[j] + resources[j]).max(0.0);
                residual = residual.max((next - pay[j]).abs());
                pay[j] = next;
            }
            if residual <= opts.tol {
                return Ok(self.classify(pay, it, residual));
            }
        }
        Err(ClearingError::MaxIterExceeded {
            iterations: max_iter,
            residual,
        })
    }

    /// Contraction-rate iteration budget with a 10x safety factor.
    fn default_max_iter(&self, tol: f64) -> usize {
        let p1: f64 = self.p.iter().sum::<f64>().max(1.0);
        let rate = (1.0 / self.beta_max.max(1e-12)).ln();
        let bound = if rate <= 0.0 {
            usize::MAX / 2
        } else {
            (10.0 * ((p1 / tol).ln() / rate).ceil()).max(0.0) as usize
        };
        bound.max(1000)
    }

    fn classify(&self, pbar: Vec<f64>, iterations: usize, residual: f64) -> ClearingResult {
        let mut res = ClearingResult::classify(self, pbar);
        res.iterations = iterations;
        res.residual = residual;
        res
    }
}

/// Options for the fixed-point clearing iteration.
#[derive(Debug, Clone)]
pub struct ClearingOptions {
    /// Absolute residual target for `‖Φ(p̄) − p̄‖_∞`.
    pub tol: f64,
    /// Iteration cap; `None` derives it from the contraction rate.
    pub max_iter: Option<usize>,
}

impl Default for ClearingOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: None,
        }
    }
}

/// A clearing vector plus the induced solvency partition.
#[derive(Debug, Clone)]
pub struct ClearingResult {
    pub pbar: Vec<f64>,
    is_default: Vec<bool>,
    pub iterations: usize,
    pub residual: f64,
}

impl ClearingResult {
    /// Wraps a payment vector produced elsewhere (e.g. by the LP route),
    /// applying the network's default/solvent rule.
    pub fn classify(net: &FinancialNetwork, pbar: Vec<f64>) -> Self {
        let is_default = (0..net.len())
            .map(|j| pbar[j] < net.total_liabilities()[j] - net.default_tolerance(j))
            .collect();
        Self {
            pbar,
            is_default,
            iterations: 0,
            residual: 0.0,
        }
    }

    pub fn is_default(&self, j: usize) -> bool {
        self.is_default[j]
    }

    pub fn defaults(&self) -> Vec<usize> {
        (0..self.pbar.len()).filter(|&j| self.is_default[j]).collect()
    }

    pub fn solvents(&self) -> Vec<usize> {
        (0..self.pbar.len()).filter(|&j| !self.is_default[j]).collect()
    }

    pub fn solvent_count(&self) -> usize {
        self.is_default.iter().filter(|d| !**d).count()
    }
}

/// Outcome of a monotonicity check between two cash-injection levels.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub holds: bool,
    /// First violating coordinate and the violation magnitude, if any.
    pub witness: Option<(usize, f64)>,
}

/// Verifies that raising cash injections from `cash_lo` to `cash_hi` raises
/// the clearing vector componentwise, and by at least the injected amount on
/// the nodes still in default at the higher level.
pub fn comparison_check(
    net: &FinancialNetwork,
    shock: &[f64],
    cash_lo: &[f64],
    cash_hi: &[f64],
    tol: f64,
) -> Result<ComparisonReport, ClearingError> {
    let opts = ClearingOptions::default();
    let lo = net.clear(shock, cash_lo, &opts)?;
    let hi = net.clear(shock, cash_hi, &opts)?;
    for j in 0..net.len() {
        let gap = lo.pbar[j] - hi.pbar[j];
        if gap > tol {
            return Ok(ComparisonReport {
                holds: false,
                witness: Some((j, gap)),
            });
        }
        if hi.is_default(j) {
            let promised = cash_hi[j] - cash_lo[j];
            let gap = lo.pbar[j] + promised - hi.pbar[j];
            if gap > tol {
                return Ok(ComparisonReport {
                    holds: false,
                    witness: Some((j, gap)),
                });
            }
        }
    }
    Ok(ComparisonReport {
        holds: true,
        witness: None,
    })
}
