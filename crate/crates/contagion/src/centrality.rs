//! Node-ranking scores used by the allocation heuristics.

use crate::network::FinancialNetwork;

/// PageRank on the directed liability graph, edges weighted by liability
/// size. Dangling mass is redistributed uniformly.
pub fn pagerank(net: &FinancialNetwork, damping: f64, iterations: usize) -> Vec<f64> {
    let n = net.len();
    if n == 0 {
        return Vec::new();
    }
    // Row-stochastic transition over internal liabilities only.
    let out_totals: Vec<f64> = (0..n)
        .map(|j| net.liabilities_of(j).iter().map(|&(_, w)| w).sum())
        .collect();
    let mut score = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..iterations {
        next.fill((1.0 - damping) / n as f64);
        let mut dangling = 0.0;
        for j in 0..n {
            if out_totals[j] == 0.0 {
                dangling += score[j];
                continue;
            }
            for &(i, w) in net.liabilities_of(j) {
                next[i] += damping * score[j] * (w / out_totals[j]);
            }
        }
        if dangling > 0.0 {
            let spread = damping * dangling / n as f64;
            for x in next.iter_mut() {
                *x += spread;
            }
        }
        std::mem::swap(&mut score, &mut next);
    }
    score
}

/// Eigenvector centrality of the liability graph with direction ignored
/// (power iteration on the symmetrized weight matrix).
pub fn eigenvector_centrality(net: &FinancialNetwork, iterations: usize) -> Vec<f64> {
    let n = net.len();
    if n == 0 {
        return Vec::new();
    }
    let mut weights: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (j, i, w, _) in net.edges() {
        weights[j].push((i, w));
        weights[i].push((j, w));
    }
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut next = vec![0.0; n];
    for _ in 0..iterations {
        next.fill(0.0);
        for j in 0..n {
            for &(i, w) in &weights[j] {
                next[i] += w * x[j];
            }
        }
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            // No internal edges at all: centrality degenerates to uniform.
            return vec![1.0 / n as f64; n];
        }
        for (a, b) in x.iter_mut().zip(&next) {
            *a = b / norm;
        }
    }
    x
}

/// Out-degree by edge count.
pub fn out_degree(net: &FinancialNetwork) -> Vec<usize> {
    (0..net.len()).map(|j| net.liabilities_of(j).len()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pagerank_finds_the_sink() {
        // 0 -> 1 -> 2, plus everyone owes outside.
        let net = FinancialNetwork::from_edges(
            3,
            &[(0, 1, 1.0), (1, 2, 1.0)],
            &[1.0, 1.0, 1.0],
            &[1.0, 1.0, 1.0],
        )
        .unwrap();
        let pr = pagerank(&net, 0.85, 100);
        assert!(pr[2] > pr[1] && pr[1] > pr[0]);
        let total: f64 = pr.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn symmetric_ring_gives_uniform_scores() {
        let net = FinancialNetwork::from_edges(
            4,
            &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)],
            &[1.0; 4],
            &[0.0; 4],
        )
        .unwrap();
        let pr = pagerank(&net, 0.85, 200);
        let ec = eigenvector_centrality(&net, 200);
        for j in 1..4 {
            assert!((pr[j] - pr[0]).abs() < 1e-9);
            assert!((ec[j] - ec[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn eigenvector_centrality_peaks_at_hub() {
        // Star: center 0 owes each leaf.
        let net = FinancialNetwork::from_edges(
            4,
            &[(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)],
            &[1.0; 4],
            &[1.0; 4],
        )
        .unwrap();
        let ec = eigenvector_centrality(&net, 300);
        assert!(ec[0] > ec[1] && ec[0] > ec[2] && ec[0] > ec[3]);
    }
}
