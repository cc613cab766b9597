//! Shock distributions over `[0, c]` with reproducible, stream-split
//! randomness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use statrs::distribution::{Beta, ContinuousCDF};
use thiserror::Error;

/// A (seed, stream) pair. Identical pairs yield identical sample sequences;
/// distinct streams are independent, so concurrent tasks each own one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeededRng {
    pub seed: u64,
    pub stream: u64,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    /// Materializes the generator for this stream.
    pub fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Stream for the `i`-th element of a batch rooted at this stream.
    /// Batches stay reproducible regardless of consumption order.
    pub fn substream(&self, i: u64) -> Self {
        Self {
            seed: self.seed,
            stream: self.stream.wrapping_shl(32).wrapping_add(i.wrapping_add(1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ShockKind {
    /// No disruption.
    Zero,
    /// Each component uniform on `[0, c_j]`, independently.
    Uniform,
    /// Each component `c_j · B` with `B ~ Beta(alpha, beta)`, independently.
    ScaledBeta { alpha: f64, beta: f64 },
    /// Deterministic shock vector.
    PointMass(Vec<f64>),
}

#[derive(Debug, Error)]
pub enum ShockError {
    #[error("point-mass shock has length {got}, expected {want}")]
    BadLength { got: usize, want: usize },
    #[error("point-mass component {node} = {value} outside [0, {cap}]")]
    OutOfSupport { node: usize, value: f64, cap: f64 },
    #[error("beta parameters must be positive, got ({alpha}, {beta})")]
    BadBetaParams { alpha: f64, beta: f64 },
}

/// A shock distribution bound to a network's asset vector (its support).
#[derive(Debug, Clone)]
pub struct ShockDistribution {
    kind: ShockKind,
    c: Vec<f64>,
}

impl ShockDistribution {
    pub fn new(kind: ShockKind, c: &[f64]) -> Result<Self, ShockError> {
        match &kind {
            ShockKind::PointMass(x) => {
                if x.len() != c.len() {
                    return Err(ShockError::BadLength {
                        got: x.len(),
                        want: c.len(),
                    });
                }
                for (j, (&xj, &cj)) in x.iter().zip(c).enumerate() {
                    if !(0.0..=cj + 1e-12 * cj.max(1.0)).contains(&xj) {
                        return Err(ShockError::OutOfSupport {
                            node: j,
                            value: xj,
                            cap: cj,
                        });
                    }
                }
            }
            ShockKind::ScaledBeta { alpha, beta } => {
                if !(*alpha > 0.0 && *beta > 0.0) {
                    return Err(ShockError::BadBetaParams {
                        alpha: *alpha,
                        beta: *beta,
                    });
                }
            }
            ShockKind::Uniform | ShockKind::Zero => {}
        }
        Ok(Self {
            kind,
            c: c.to_vec(),
        })
    }

    /// Full disruption of every node's external assets.
    pub fn full(c: &[f64]) -> Self {
        Self {
            kind: ShockKind::PointMass(c.to_vec()),
            c: c.to_vec(),
        }
    }

    pub fn kind(&self) -> &ShockKind {
        &self.kind
    }

    pub fn support(&self) -> &[f64] {
        &self.c
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self.kind, ShockKind::Zero | ShockKind::PointMass(_))
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        match &self.kind {
            ShockKind::Zero => vec![0.0; self.c.len()],
            ShockKind::PointMass(x) => x.clone(),
            ShockKind::Uniform => self
                .c
                .iter()
                .map(|&cj| {
                    let u: f64 = rng.random();
                    cj * u
                })
                .collect(),
            ShockKind::ScaledBeta { alpha, beta } => {
                // Inverse-CDF keeps a single uniform draw per component, so
                // sample streams stay aligned across shock kinds.
                let dist = Beta::new(*alpha, *beta).expect("validated at construction");
                self.c
                    .iter()
                    .map(|&cj| {
                        let u: f64 = rng.random();
                        cj * dist.inverse_cdf(u)
                    })
                    .collect()
            }
        }
    }

    /// Draws `m` samples, one RNG substream per sample.
    pub fn sample_batch(&self, seeded: &SeededRng, m: usize) -> Vec<Vec<f64>> {
        (0..m)
            .map(|i| {
                let mut rng = seeded.substream(i as u64).rng();
                self.sample(&mut rng)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass_at_full_assets_always_returns_c() {
        let c = [1.5, 0.0, 2.0];
        let dist = ShockDistribution::full(&c);
        let mut rng = SeededRng::new(1).rng();
        for _ in 0..5 {
            assert_eq!(dist.sample(&mut rng), c.to_vec());
        }
    }

    #[test]
    fn uniform_respects_degenerate_support() {
        let c = [2.0, 0.0];
        let dist = ShockDistribution::new(ShockKind::Uniform, &c).unwrap();
        let mut rng = SeededRng::new(7).rng();
        for _ in 0..100 {
            let x = dist.sample(&mut rng);
            assert!(x[0] >= 0.0 && x[0] <= 2.0);
            assert_eq!(x[1], 0.0);
        }
    }

    #[test]
    fn uniform_mean_is_half_support() {
        let c = [2.0, 4.0];
        let dist = ShockDistribution::new(ShockKind::Uniform, &c).unwrap();
        let m = 100_000;
        let samples = dist.sample_batch(&SeededRng::new(11), m);
        for j in 0..2 {
            let mean: f64 = samples.iter().map(|x| x[j]).sum::<f64>() / m as f64;
            // 3σ window around c/2 with σ = c/√(12 m).
            let sigma = c[j] / (12.0 * m as f64).sqrt();
            assert!(
                (mean - c[j] / 2.0).abs() < 3.0 * sigma,
                "mean {mean} for c = {}",
                c[j]
            );
        }
    }

    #[test]
    fn batches_are_deterministic_and_order_free() {
        let c = [1.0, 3.0, 0.5];
        let dist = ShockDistribution::new(ShockKind::Uniform, &c).unwrap();
        let seeded = SeededRng::new(42).with_stream(3);
        let a = dist.sample_batch(&seeded, 4);
        let b = dist.sample_batch(&seeded, 4);
        assert_eq!(a, b);
        assert_eq!(dist.sample_batch(&seeded, 0).len(), 0);
        // A longer batch extends the shorter one.
        let longer = dist.sample_batch(&seeded, 6);
        assert_eq!(&longer[..4], &a[..]);
    }

    #[test]
    fn distinct_streams_diverge() {
        let c = [1.0; 4];
        let dist = ShockDistribution::new(ShockKind::Uniform, &c).unwrap();
        let a = dist.sample_batch(&SeededRng::new(5).with_stream(0), 3);
        let b = dist.sample_batch(&SeededRng::new(5).with_stream(1), 3);
        assert_ne!(a, b);
    }

    #[test]
    fn scaled_beta_stays_in_support_and_differs_from_uniform() {
        let c = [1.0, 2.0];
        let beta = ShockDistribution::new(
            ShockKind::ScaledBeta {
                alpha: 0.5,
                beta: 0.5,
            },
            &c,
        )
        .unwrap();
        let samples = beta.sample_batch(&SeededRng::new(9), 4000);
        for x in &samples {
            for j in 0..2 {
                assert!(x[j] >= 0.0 && x[j] <= c[j]);
            }
        }
        // Arcsine-shaped mass piles near the endpoints: the central third
        // carries well under the uniform's 1/3.
        let central = samples
            .iter()
            .filter(|x| x[0] > 1.0 / 3.0 && x[0] < 2.0 / 3.0)
            .count() as f64
            / samples.len() as f64;
        assert!(central < 0.30, "central mass {central}");
    }

    #[test]
    fn rejects_point_mass_outside_support() {
        let err = ShockDistribution::new(ShockKind::PointMass(vec![2.0]), &[1.0]).unwrap_err();
        assert!(matches!(err, ShockError::OutOfSupport { node: 0, .. }));
    }
}
