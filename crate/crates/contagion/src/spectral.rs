//! Cut and eigenvalue diagnostics on symmetric weight matrices: exact
//! conductance by cut enumeration, the cut-ratio functional ψ, Hadamard
//! powers, and the Laplacian's second eigenvalue.

use nalgebra::DMatrix;
use thiserror::Error;

/// How a cut is normalized in the conductance minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutNorm {
    /// Divide the cut weight by `min(|S|, |S̄|)`.
    Cardinality,
    /// Divide the cut weight by the smaller side's weighted degree volume.
    Volume,
}

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("weight matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("weight matrix must be symmetric (entry {i},{j})")]
    NotSymmetric { i: usize, j: usize },
    #[error("negative weight at ({i},{j})")]
    NegativeWeight { i: usize, j: usize },
    #[error("graph is disconnected")]
    Disconnected,
    #[error("graph is empty or a single node")]
    TooSmall,
    #[error("zero vector")]
    ZeroVector,
    #[error("vector has length {got}, expected {want}")]
    BadLength { got: usize, want: usize },
}

/// Conductance, the Laplacian's second-smallest eigenvalue, and the
/// minimizing cut. Above [`EXACT_CUT_LIMIT`] nodes the exact cut search is
/// skipped and only the eigenvalue-derived interval is reported.
#[derive(Debug, Clone)]
pub struct SpectralReport {
    pub phi: Option<f64>,
    /// Sound enclosure for φ from the second eigenvalue.
    pub phi_bounds: (f64, f64),
    pub lambda2: f64,
    pub witness: Option<Vec<usize>>,
}

pub const EXACT_CUT_LIMIT: usize = 24;

fn validate(w: &[Vec<f64>]) -> Result<usize, SpectralError> {
    let n = w.len();
    for (i, row) in w.iter().enumerate() {
        if row.len() != n {
            return Err(SpectralError::NotSquare {
                rows: n,
                cols: row.len(),
            });
        }
        for (j, &x) in row.iter().enumerate() {
            if x < 0.0 || !x.is_finite() {
                return Err(SpectralError::NegativeWeight { i, j });
            }
            if (x - w[j][i]).abs() > 1e-9 * x.abs().max(1.0) {
                return Err(SpectralError::NotSymmetric { i, j });
            }
        }
    }
    Ok(n)
}

fn connected(w: &[Vec<f64>]) -> bool {
    let n = w.len();
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..n {
            if !seen[j] && w[i][j] > 0.0 {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn degrees(w: &[Vec<f64>]) -> Vec<f64> {
    w.iter().map(|row| row.iter().sum()).collect()
}

/// Second-smallest eigenvalue of the (unnormalized) Laplacian `D − W`.
pub fn lambda2(w: &[Vec<f64>]) -> Result<f64, SpectralError> {
    let n = validate(w)?;
    if n < 2 {
        return Err(SpectralError::TooSmall);
    }
    let d = degrees(w);
    let lap = DMatrix::from_fn(n, n, |i, j| if i == j { d[i] - w[i][j] } else { -w[i][j] });
    let mut eigen: Vec<f64> = lap
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eigen.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(eigen[1])
}

/// Exact conductance by enumerating all proper cuts (node 0 pinned to one
/// side). Falls back to eigenvalue bounds above the size cap.
pub fn conductance(w: &[Vec<f64>], norm: CutNorm) -> Result<SpectralReport, SpectralError> {
    let n = validate(w)?;
    if n < 2 {
        return Err(SpectralError::TooSmall);
    }
    if !connected(w) {
        return Err(SpectralError::Disconnected);
    }
    let d = degrees(w);
    let l2 = lambda2(w)?;
    let d_max = d.iter().copied().fold(0.0f64, f64::max);
    let phi_bounds = match norm {
        // Cheeger-type enclosure for the unnormalized / normalized case.
        CutNorm::Cardinality => (l2 / (2.0 * n as f64), (2.0 * d_max * l2).sqrt()),
        CutNorm::Volume => {
            let l2n = l2 / d_max.max(f64::MIN_POSITIVE);
            (l2n / 2.0, (2.0 * l2n).sqrt().min(1.0))
        }
    };
    if n > EXACT_CUT_LIMIT {
        return Ok(SpectralReport {
            phi: None,
            phi_bounds,
            lambda2: l2,
            witness: None,
        });
    }

    let mut best = f64::INFINITY;
    let mut best_mask: u32 = 1;
    // Node n−1 stays outside S, so each unordered cut appears once.
    for mask in 1u32..(1 << (n - 1)) {
        let mut cut = 0.0;
        let mut size = 0u32;
        let mut vol = 0.0;
        for i in 0..n {
            if mask >> i & 1 == 1 {
                size += 1;
                vol += d[i];
                for j in 0..n {
                    if mask >> j & 1 == 0 {
                        cut += w[i][j];
                    }
                }
            }
        }
        let denom = match norm {
            CutNorm::Cardinality => (size.min(n as u32 - size)) as f64,
            CutNorm::Volume => {
                let total: f64 = d.iter().sum();
                vol.min(total - vol)
            }
        };
        if denom <= 0.0 {
            continue;
        }
        let ratio = cut / denom;
        if ratio < best {
            best = ratio;
            best_mask = mask;
        }
    }
    let witness = (0..n).filter(|&i| best_mask >> i & 1 == 1).collect();
    Ok(SpectralReport {
        phi: Some(best),
        phi_bounds,
        lambda2: l2,
        witness: Some(witness),
    })
}

/// The cut-ratio functional. With [`CutNorm::Volume`] the denominator is
/// degree-weighted (`Σ d_i |x_i|`); with [`CutNorm::Cardinality`] it is the
/// plain absolute sum. Over median-zero vectors its minimum equals the
/// matching conductance.
pub fn psi(x: &[f64], w: &[Vec<f64>], norm: CutNorm) -> Result<f64, SpectralError> {
    let n = validate(w)?;
    if x.len() != n {
        return Err(SpectralError::BadLength {
            got: x.len(),
            want: n,
        });
    }
    if x.iter().all(|&v| v == 0.0) {
        return Err(SpectralError::ZeroVector);
    }
    let mut num = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            if w[i][j] > 0.0 {
                num += w[i][j] * (x[i] - x[j]).abs();
            }
        }
    }
    let d = degrees(w);
    let den: f64 = match norm {
        CutNorm::Cardinality => x.iter().map(|v| v.abs()).sum(),
        CutNorm::Volume => x.iter().zip(&d).map(|(v, di)| di * v.abs()).sum(),
    };
    Ok(num / den)
}

/// Elementwise power with the convention `W^(0) = I`, `W^(1) = W`.
pub fn hadamard_power(w: &[Vec<f64>], k: u32) -> Vec<Vec<f64>> {
    let n = w.len();
    if k == 0 {
        return (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
    }
    w.iter()
        .map(|row| row.iter().map(|&x| x.powi(k as i32)).collect())
        .collect()
}
