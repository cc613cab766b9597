//! Deterministic and seeded instance generators: adversarial constructions
//! exercising known failure modes of naive policies, plus a generic random
//! family.

use rand::Rng;
use thiserror::Error;

use crate::network::{FinancialNetwork, NetworkError};
use crate::objectives::Objective;
use crate::shocks::{SeededRng, ShockDistribution, ShockError, ShockKind};

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("parameter out of range: {0}")]
    BadParameter(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Shock(#[from] ShockError),
}

/// Parameterized instance families.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSpec {
    /// Star with a funded center owing every leaf; full shock wipes the
    /// center's assets. Concentrating the whole budget on the center is
    /// optimal but maximally unfair.
    StarPof { n: usize },
    /// Two complete cliques with random cross edges of probability `r`;
    /// first clique fully shocked. `budget` defaults to `n/2` (one
    /// stimulus).
    TwoClique {
        n: usize,
        r: f64,
        seed: u64,
        budget: Option<f64>,
    },
    /// Complete network where fractional stimulus spread over everyone
    /// averts the shock exactly, while any `k`-subset leaves most nodes
    /// short: large gap between relaxed and discrete optima.
    CompleteGap { n: usize, k: usize, eps: f64 },
    /// A funded decoy node plus a payment chain where only the chain head
    /// is worth rescuing; equity-threshold policies pick the decoy.
    PathThreshold { n: usize, eps: f64 },
    /// Bipartite cover gadget: set nodes owe item nodes; rescuing a cover
    /// makes all items solvent.
    SetCoverGadget {
        sets: Vec<Vec<usize>>,
        n_items: usize,
        k: usize,
        alpha: f64,
    },
    /// Cover gadget extended with `layers` fully connected item layers;
    /// solvency count separates covers from non-covers by a factor of the
    /// layer count. `leak` is the external-liability share of intermediate
    /// layers that keeps every node externally obligated.
    LayeredGadget {
        sets: Vec<Vec<usize>>,
        n_items: usize,
        k: usize,
        alpha: f64,
        layers: usize,
        leak: f64,
    },
    /// Random directed graph with Exp(1) liabilities, assets proportional
    /// to degree, and external liabilities at 90% of assets.
    RandomEr { n: usize, edge_prob: f64, seed: u64 },
}

/// A generated instance: the network plus the bailout-problem data the
/// construction pins down.
#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub net: FinancialNetwork,
    pub stimulus: Vec<f64>,
    pub budget: f64,
    pub shock: ShockDistribution,
    pub q: Option<Vec<f64>>,
    pub provenance: String,
}

impl GeneratedInstance {
    pub fn problem(
        &self,
        objective: Objective,
    ) -> Result<crate::bailout::BailoutProblem, crate::bailout::BailoutError> {
        crate::bailout::BailoutProblem::new(
            self.net.clone(),
            self.stimulus.clone(),
            self.budget,
            self.shock.clone(),
            objective,
        )
    }
}

/// One-line construction summary, embedded in saved instance files.
pub fn describe(spec: &GeneratorSpec) -> String {
    match spec {
        GeneratorSpec::StarPof { n } => format!(
            "star-pof n={n}: funded center owes 1 to each leaf, b=1, c=n at center, \
             full shock, L=n, budget=n"
        ),
        GeneratorSpec::TwoClique { n, r, seed, budget } => format!(
            "two-clique n={n} r={r} seed={seed} budget={}: two complete cliques, \
             symmetric cross edges w.p. r, b=1, c=n, first clique fully shocked, L=n/2",
            budget.unwrap_or(*n as f64 / 2.0)
        ),
        GeneratorSpec::CompleteGap { n, k, eps } => format!(
            "complete-gap n={n} k={k} eps={eps}: complete network, b=c=1, uniform \
             point shock eps, L=n*eps/k, budget=n*eps"
        ),
        GeneratorSpec::PathThreshold { n, eps } => format!(
            "path-threshold n={n} eps={eps}: funded decoy plus payment chain, full \
             shock, L=1, budget=1"
        ),
        GeneratorSpec::SetCoverGadget {
            sets,
            n_items,
            k,
            alpha,
        } => format!(
            "set-cover-gadget m={} n_items={n_items} k={k} alpha={alpha}: set nodes \
             owe covered items 1-alpha/3 each, shock 3 on set nodes, L=3, budget=3k",
            sets.len()
        ),
        GeneratorSpec::LayeredGadget {
            sets,
            n_items,
            k,
            alpha,
            layers,
            leak,
        } => format!(
            "layered-gadget m={} n_items={n_items} k={k} alpha={alpha} layers={layers} \
             leak={leak}: cover gadget with chained item layers",
            sets.len()
        ),
        GeneratorSpec::RandomEr { n, edge_prob, seed } => format!(
            "random-er n={n} p={edge_prob} seed={seed}: Exp(1) liabilities on random \
             directed edges, c=(din+dout)*Exp(1), b=0.9c"
        ),
    }
}

/// Builds the instance. Pure given the spec (seeds included in it).
pub fn generate(spec: &GeneratorSpec) -> Result<GeneratedInstance, GeneratorError> {
    match spec {
        GeneratorSpec::StarPof { n } => star_pof(*n),
        GeneratorSpec::TwoClique { n, r, seed, budget } => two_clique(*n, *r, *seed, *budget),
        GeneratorSpec::CompleteGap { n, k, eps } => complete_gap(*n, *k, *eps),
        GeneratorSpec::PathThreshold { n, eps } => path_threshold(*n, *eps),
        GeneratorSpec::SetCoverGadget {
            sets,
            n_items,
            k,
            alpha,
        } => set_cover_gadget(sets, *n_items, *k, *alpha, None),
        GeneratorSpec::LayeredGadget {
            sets,
            n_items,
            k,
            alpha,
            layers,
            leak,
        } => set_cover_gadget(sets, *n_items, *k, *alpha, Some((*layers, *leak))),
        GeneratorSpec::RandomEr { n, edge_prob, seed } => random_er(*n, *edge_prob, *seed),
    }
    .map(|mut inst| {
        inst.provenance = describe(spec);
        inst
    })
}

fn star_pof(n: usize) -> Result<GeneratedInstance, GeneratorError> {
    if n < 3 {
        return Err(GeneratorError::BadParameter("star needs n >= 3".into()));
    }
    let edges: Vec<(usize, usize, f64)> = (1..n).map(|i| (0, i, 1.0)).collect();
    let b = vec![1.0; n];
    let mut c = vec![0.0; n];
    c[0] = n as f64;
    let net = FinancialNetwork::from_edges(n, &edges, &b, &c)?;
    let shock = ShockDistribution::full(&c);
    Ok(GeneratedInstance {
        net,
        stimulus: vec![n as f64; n],
        budget: n as f64,
        shock,
        q: None,
        provenance: String::new(),
    })
}

fn two_clique(
    n: usize,
    r: f64,
    seed: u64,
    budget: Option<f64>,
) -> Result<GeneratedInstance, GeneratorError> {
    if n < 4 || n % 2 != 0 {
        return Err(GeneratorError::BadParameter(
            "two-clique needs even n >= 4".into(),
        ));
    }
    if !(0.0..=1.0).contains(&r) {
        return Err(GeneratorError::BadParameter(format!(
            "cross-edge probability {r} outside [0, 1]"
        )));
    }
    let half = n / 2;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && (i < half) == (j < half) {
                edges.push((i, j, 1.0));
            }
        }
    }
    let mut rng = SeededRng::new(seed).rng();
    for i in 0..half {
        for j in half..n {
            let u: f64 = rng.random();
            if u < r {
                edges.push((i, j, 1.0));
                edges.push((j, i, 1.0));
            }
        }
    }
    let b = vec![1.0; n];
    let c = vec![n as f64; n];
    let net = FinancialNetwork::from_edges(n, &edges, &b, &c)?;
    let x: Vec<f64> = (0..n).map(|j| if j < half { c[j] } else { 0.0 }).collect();
    let shock = ShockDistribution::new(ShockKind::PointMass(x), &c)?;
    let q: Vec<f64> = (0..n).map(|j| if j < half { 1.0 } else { 0.0 }).collect();
    Ok(GeneratedInstance {
        net,
        stimulus: vec![n as f64 / 2.0; n],
        budget: budget.unwrap_or(n as f64 / 2.0),
        shock,
        q: Some(q),
        provenance: String::new(),
    })
}

fn complete_gap(n: usize, k: usize, eps: f64) -> Result<GeneratedInstance, GeneratorError> {
    if n < 2 || k == 0 || k > n {
        return Err(GeneratorError::BadParameter(format!(
            "complete-gap needs n >= 2 and 1 <= k <= n, got n={n} k={k}"
        )));
    }
    if !(0.0 < eps && eps < 1.0) {
        return Err(GeneratorError::BadParameter(format!(
            "eps {eps} outside (0, 1)"
        )));
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                edges.push((i, j, 1.0));
            }
        }
    }
    let b = vec![1.0; n];
    let c = vec![1.0; n];
    let net = FinancialNetwork::from_edges(n, &edges, &b, &c)?;
    let shock = ShockDistribution::new(ShockKind::PointMass(vec![eps; n]), &c)?;
    Ok(GeneratedInstance {
        net,
        stimulus: vec![n as f64 * eps / k as f64; n],
        budget: n as f64 * eps,
        shock,
        q: None,
        provenance: String::new(),
    })
}

fn path_threshold(n: usize, eps: f64) -> Result<GeneratedInstance, GeneratorError> {
    if n < 4 {
        return Err(GeneratorError::BadParameter(
            "path-threshold needs n >= 4".into(),
        ));
    }
    // The chain tail's external liability 1 − (n−1)ε + ε/2 must stay
    // positive.
    if !(0.0 < eps && eps < 1.0 / (n as f64 - 1.0)) {
        return Err(GeneratorError::BadParameter(format!(
            "eps {eps} outside (0, 1/(n-1))"
        )));
    }
    let mut b = vec![0.0; n];
    let mut c = vec![0.0; n];
    b[0] = 1.0;
    c[0] = 1.0;
    c[1] = 1.0;
    let mut edges = Vec::new();
    // Chain node j (1-based index jj = j+1 in 2..n−1) pays the next node
    // 1 − (jj − 3/2)ε and ε/2 outside, so a rescued head pushes almost a
    // full unit down the whole chain.
    for j in 1..(n - 1) {
        let jj = (j + 1) as f64;
        edges.push((j, j + 1, 1.0 - (jj - 1.5) * eps));
        b[j] = eps / 2.0;
    }
    b[n - 1] = 1.0 - (n as f64 - 1.0) * eps + eps / 2.0;
    let net = FinancialNetwork::from_edges(n, &edges, &b, &c)?;
    let shock = ShockDistribution::full(&c);
    Ok(GeneratedInstance {
        net,
        stimulus: vec![1.0; n],
        budget: 1.0,
        shock,
        q: None,
        provenance: String::new(),
    })
}

fn set_cover_gadget(
    sets: &[Vec<usize>],
    n_items: usize,
    k: usize,
    alpha: f64,
    layered: Option<(usize, f64)>,
) -> Result<GeneratedInstance, GeneratorError> {
    if !(0.0 < alpha && alpha < 3.0) {
        return Err(GeneratorError::BadParameter(format!(
            "alpha {alpha} outside (0, 3)"
        )));
    }
    let m = sets.len();
    if m == 0 || n_items == 0 || k == 0 || k > m {
        return Err(GeneratorError::BadParameter(
            "need nonempty sets, items, and 1 <= k <= m".into(),
        ));
    }
    for (idx, s) in sets.iter().enumerate() {
        if s.len() != 3 {
            return Err(GeneratorError::BadParameter(format!(
                "set {idx} has {} items, expected 3",
                s.len()
            )));
        }
        if s.iter().any(|&u| u >= n_items) {
            return Err(GeneratorError::BadParameter(format!(
                "set {idx} references an item out of range"
            )));
        }
    }
    let (layers, leak) = match layered {
        None => (1, 0.0),
        Some((layers, leak)) => {
            if layers < 2 {
                return Err(GeneratorError::BadParameter(
                    "layered gadget needs at least 2 layers".into(),
                ));
            }
            if !(0.0 < leak && leak < 1.0) {
                return Err(GeneratorError::BadParameter(format!(
                    "leak {leak} outside (0, 1)"
                )));
            }
            (layers, leak)
        }
    };

    let unit = 1.0 - alpha / 3.0;
    let n_total = m + layers * n_items;
    let item = |layer: usize, u: usize| m + layer * n_items + u;
    let mut edges = Vec::new();
    let mut b = vec![0.0; n_total];
    let mut c = vec![0.0; n_total];
    for (j, s) in sets.iter().enumerate() {
        c[j] = 3.0;
        b[j] = alpha;
        for &u in s {
            edges.push((j, item(0, u), unit));
        }
    }
    // Each layer owes the next one its full (post-leak) throughput spread
    // uniformly; the last layer owes everything externally.
    for layer in 0..layers {
        let tier_total = unit * (1.0 - leak).powi(layer as i32);
        for u in 0..n_items {
            let node = item(layer, u);
            if layer + 1 == layers {
                b[node] = tier_total;
            } else {
                b[node] = leak * tier_total;
                let per_edge = (1.0 - leak) * tier_total / n_items as f64;
                for w in 0..n_items {
                    edges.push((node, item(layer + 1, w), per_edge));
                }
            }
        }
    }
    let net = FinancialNetwork::from_edges(n_total, &edges, &b, &c)?;
    let x: Vec<f64> = (0..n_total).map(|j| if j < m { 3.0 } else { 0.0 }).collect();
    let shock = ShockDistribution::new(ShockKind::PointMass(x), &c)?;
    Ok(GeneratedInstance {
        net,
        stimulus: vec![3.0; n_total],
        budget: 3.0 * k as f64,
        shock,
        q: None,
        provenance: String::new(),
    })
}

fn random_er(n: usize, edge_prob: f64, seed: u64) -> Result<GeneratedInstance, GeneratorError> {
    if n < 2 {
        return Err(GeneratorError::BadParameter("random-er needs n >= 2".into()));
    }
    if !(0.0..=1.0).contains(&edge_prob) {
        return Err(GeneratorError::BadParameter(format!(
            "edge probability {edge_prob} outside [0, 1]"
        )));
    }
    let mut rng = SeededRng::new(seed).rng();
    let mut exp = |rng: &mut rand_chacha::ChaCha12Rng| -> f64 {
        let u: f64 = rng.random();
        -(1.0 - u).ln()
    };
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut deg = vec![0usize; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let u: f64 = rng.random();
            if u < edge_prob {
                let w = exp(&mut rng);
                edges.push((i, j, w));
                deg[i] += 1;
                deg[j] += 1;
            }
        }
    }
    // Nodes untouched by the random draw would have no liabilities at all;
    // give them one outgoing edge so the instance stays valid.
    for j in 0..n {
        if deg[j] == 0 {
            let w = exp(&mut rng);
            edges.push((j, (j + 1) % n, w));
            deg[j] += 1;
            deg[(j + 1) % n] += 1;
        }
    }
    let c: Vec<f64> = (0..n).map(|j| deg[j] as f64 * exp(&mut rng)).collect();
    let b: Vec<f64> = c.iter().map(|&x| 0.9 * x).collect();
    let net = FinancialNetwork::from_edges(n, &edges, &b, &c)?;
    let shock = ShockDistribution::new(ShockKind::Uniform, &c)?;
    Ok(GeneratedInstance {
        net,
        stimulus: vec![1.0; n],
        budget: 1.0,
        shock,
        q: None,
        provenance: String::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bailout::{brute_force, heuristic, Allocation, HeuristicKind};
    use crate::network::ClearingOptions;
    use crate::objectives::{LinearKind, Objective};

    fn point_shock(inst: &GeneratedInstance) -> Vec<f64> {
        match inst.shock.kind() {
            ShockKind::PointMass(x) => x.clone(),
            _ => panic!("expected deterministic shock"),
        }
    }

    #[test]
    fn star_matches_construction() {
        let inst = generate(&GeneratorSpec::StarPof { n: 5 }).unwrap();
        assert_eq!(inst.net.len(), 5);
        assert_eq!(inst.net.external_assets(), &[5.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(inst.net.external_liabilities(), &[1.0; 5]);
        assert_eq!(inst.stimulus, vec![5.0; 5]);
        assert_eq!(inst.budget, 5.0);
        // Books balance exactly: every node has zero initial equity.
        assert!(inst.net.equity().iter().all(|w| w.abs() < 1e-12));
        // Rescuing the center restores everything: total payments 2n − 1.
        let x = point_shock(&inst);
        let res = inst
            .net
            .clear(&x, &[5.0, 0.0, 0.0, 0.0, 0.0], &ClearingOptions::default())
            .unwrap();
        let total: f64 = res.pbar.iter().sum();
        assert!((total - 9.0).abs() < 1e-9);
    }

    #[test]
    fn cover_gadget_solvency_split() {
        let sets = vec![vec![0, 1, 2], vec![1, 2, 3]];
        let spec = GeneratorSpec::SetCoverGadget {
            sets,
            n_items: 4,
            k: 2,
            alpha: 1.0,
        };
        let inst = generate(&spec).unwrap();
        assert!((inst.net.beta_max() - 2.0 / 3.0).abs() < 1e-12);
        let x = point_shock(&inst);
        // Bailing out both set nodes makes sets and all items solvent.
        let mut cash = vec![0.0; inst.net.len()];
        cash[0] = 3.0;
        cash[1] = 3.0;
        let res = inst.net.clear(&x, &cash, &ClearingOptions::default()).unwrap();
        assert_eq!(res.solvent_count(), 6);
        // Without any bailout everyone defaults to zero payments.
        let res0 = inst
            .net
            .clear(&x, &vec![0.0; 6], &ClearingOptions::default())
            .unwrap();
        assert_eq!(res0.solvent_count(), 0);
        assert!(res0.pbar.iter().all(|&p| p.abs() < 1e-12));
    }

    #[test]
    fn layered_gadget_scales_the_split() {
        let sets = vec![vec![0, 1, 2], vec![1, 2, 3]];
        let spec = GeneratorSpec::LayeredGadget {
            sets,
            n_items: 4,
            k: 2,
            alpha: 1.0,
            layers: 3,
            leak: 0.1,
        };
        let inst = generate(&spec).unwrap();
        assert!(inst.net.beta_max() < 1.0);
        let x = point_shock(&inst);
        let mut cash = vec![0.0; inst.net.len()];
        cash[0] = 3.0;
        cash[1] = 3.0;
        let res = inst.net.clear(&x, &cash, &ClearingOptions::default()).unwrap();
        // Cover rescued: both sets plus every item in all 3 layers.
        assert_eq!(res.solvent_count(), 2 + 3 * 4);
        let res0 = inst
            .net
            .clear(&x, &vec![0.0; inst.net.len()], &ClearingOptions::default())
            .unwrap();
        assert_eq!(res0.solvent_count(), 0);
    }

    #[test]
    fn complete_gap_parameters() {
        let inst = generate(&GeneratorSpec::CompleteGap {
            n: 10,
            k: 2,
            eps: 0.5,
        })
        .unwrap();
        assert_eq!(inst.net.external_assets(), &[1.0; 10]);
        assert_eq!(inst.net.external_liabilities(), &[1.0; 10]);
        assert_eq!(inst.stimulus, vec![2.5; 10]);
        assert_eq!(inst.budget, 5.0);
        assert_eq!(point_shock(&inst), vec![0.5; 10]);
        assert_eq!(inst.net.total_liabilities(), &[10.0; 10]);
    }

    #[test]
    fn chain_instance_fools_equity_ranking() {
        let n = 20;
        let eps = 1.0 / (2.0 * (n as f64 - 1.0));
        let inst = generate(&GeneratorSpec::PathThreshold { n, eps }).unwrap();
        let obj = Objective::for_kind(LinearKind::SumOfPayments, &inst.net).unwrap();
        let prob = inst.problem(obj).unwrap();
        let samples = vec![point_shock(&inst)];
        let mut rng = SeededRng::new(0).rng();
        let naive = heuristic(HeuristicKind::WealthAscending, &prob, &mut rng);
        assert_eq!(naive.support(), vec![0], "decoy node picked first");
        let naive_val = prob.batch_value(&naive, &samples).unwrap();
        assert!((naive_val - 1.0).abs() < 1e-9);
        let best = brute_force(&prob, &samples, 10_000).unwrap();
        assert_eq!(best.allocation.support(), vec![1]);
        assert!(best.value / naive_val > 5.0);
    }

    #[test]
    fn two_clique_marks_the_shocked_half() {
        let inst = generate(&GeneratorSpec::TwoClique {
            n: 8,
            r: 0.5,
            seed: 3,
            budget: None,
        })
        .unwrap();
        assert_eq!(inst.budget, 4.0);
        assert_eq!(inst.q.as_deref(), Some(&[1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0][..]));
        let x = point_shock(&inst);
        assert_eq!(&x[..4], &[8.0; 4]);
        assert_eq!(&x[4..], &[0.0; 4]);
    }

    #[test]
    fn generators_are_reproducible() {
        let spec = GeneratorSpec::RandomEr {
            n: 30,
            edge_prob: 0.1,
            seed: 99,
        };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.net.total_liabilities(), b.net.total_liabilities());
        assert_eq!(a.net.external_assets(), b.net.external_assets());
        let other = generate(&GeneratorSpec::RandomEr {
            n: 30,
            edge_prob: 0.1,
            seed: 100,
        })
        .unwrap();
        assert_ne!(a.net.external_assets(), other.net.external_assets());
    }

    #[test]
    fn random_er_instances_are_always_valid() {
        for seed in 0..20 {
            let inst = generate(&GeneratorSpec::RandomEr {
                n: 15,
                edge_prob: 0.03,
                seed,
            })
            .unwrap();
            assert!(inst.net.beta_max() < 1.0);
            assert!(inst
                .net
                .total_liabilities()
                .iter()
                .all(|&p| p > 0.0));
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(generate(&GeneratorSpec::PathThreshold { n: 20, eps: 0.1 }).is_err());
        assert!(generate(&GeneratorSpec::CompleteGap {
            n: 10,
            k: 0,
            eps: 0.5
        })
        .is_err());
        assert!(generate(&GeneratorSpec::SetCoverGadget {
            sets: vec![vec![0, 1]],
            n_items: 2,
            k: 1,
            alpha: 1.0
        })
        .is_err());
    }
}
