//! Welfare objectives evaluated on clearing vectors.

use thiserror::Error;

use crate::network::{ClearingResult, FinancialNetwork};

/// Named coefficient families for the linear objective `vᵀp̄`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearKind {
    /// `v = 1`: total payments.
    SumOfPayments,
    /// `v = β`: payments weighted by within-network liability share.
    SumOfInternalPayments,
    /// `v = 1 − β`: payments weighted by external liability share.
    SumOfTaxes,
    /// `v = 1/p`: fraction of obligations met, summed.
    FractionalSolvency,
}

impl LinearKind {
    pub fn name(&self) -> &'static str {
        match self {
            LinearKind::SumOfPayments => "sop",
            LinearKind::SumOfInternalPayments => "soip",
            LinearKind::SumOfTaxes => "sot",
            LinearKind::FractionalSolvency => "fs",
        }
    }
}

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error("{kind} coefficient for node {node} is zero; objective not strictly increasing")]
    ZeroCoefficient { kind: &'static str, node: usize },
    #[error("coefficient {node} is negative or non-finite: {value}")]
    BadCoefficient { node: usize, value: f64 },
    #[error("coefficient vector has length {got}, expected {want}")]
    BadLength { got: usize, want: usize },
    #[error("epsilon must be positive")]
    BadEpsilon,
    #[error("budget must be positive")]
    BadBudget,
    #[error("augmentation applies to the solvency-count objective only")]
    NotAugmentable,
}

/// Coefficients of the named linear family. Errors when a coefficient would
/// be zero, which breaks strict monotonicity (required on LP-driving paths;
/// evaluation-only uses can construct [`Objective::linear_eval`] instead).
pub fn linear_coefficients(
    kind: LinearKind,
    net: &FinancialNetwork,
) -> Result<Vec<f64>, ObjectiveError> {
    let v = linear_coefficients_lenient(kind, net);
    if let Some(node) = v.iter().position(|&x| x == 0.0) {
        return Err(ObjectiveError::ZeroCoefficient {
            kind: kind.name(),
            node,
        });
    }
    Ok(v)
}

/// Same families without the positivity check.
pub fn linear_coefficients_lenient(kind: LinearKind, net: &FinancialNetwork) -> Vec<f64> {
    match kind {
        LinearKind::SumOfPayments => vec![1.0; net.len()],
        LinearKind::SumOfInternalPayments => net.connectivity().to_vec(),
        LinearKind::SumOfTaxes => net.connectivity().iter().map(|&b| 1.0 - b).collect(),
        LinearKind::FractionalSolvency => {
            net.total_liabilities().iter().map(|&p| 1.0 / p).collect()
        }
    }
}

/// A welfare objective over clearing vectors.
#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    /// `vᵀp̄` with `v ≥ 0`. Strictly increasing only when `v > 0`.
    Linear { v: Vec<f64> },
    /// Number of solvent nodes.
    AbsoluteSolvency,
    /// Solvency count plus a small payment term that restores strict
    /// monotonicity: `|R| + coeff · 1ᵀp̄`.
    AugmentedSolvency { coeff: f64 },
}

impl Objective {
    /// A strictly increasing linear objective; rejects zero or negative
    /// coefficients.
    pub fn strict_linear(v: Vec<f64>) -> Result<Self, ObjectiveError> {
        for (node, &value) in v.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(ObjectiveError::BadCoefficient { node, value });
            }
            if value == 0.0 {
                return Err(ObjectiveError::ZeroCoefficient {
                    kind: "linear",
                    node,
                });
            }
        }
        Ok(Objective::Linear { v })
    }

    /// A linear objective for evaluation only; zero coefficients allowed.
    pub fn linear_eval(v: Vec<f64>) -> Result<Self, ObjectiveError> {
        for (node, &value) in v.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(ObjectiveError::BadCoefficient { node, value });
            }
        }
        Ok(Objective::Linear { v })
    }

    pub fn for_kind(kind: LinearKind, net: &FinancialNetwork) -> Result<Self, ObjectiveError> {
        Ok(Objective::Linear {
            v: linear_coefficients(kind, net)?,
        })
    }

    pub fn for_kind_eval(kind: LinearKind, net: &FinancialNetwork) -> Self {
        Objective::Linear {
            v: linear_coefficients_lenient(kind, net),
        }
    }

    /// Conditioning `ζ = v_max / v_min`; `None` unless strictly positive
    /// linear.
    pub fn zeta(&self) -> Option<f64> {
        match self {
            Objective::Linear { v } => {
                let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
                for &x in v {
                    lo = lo.min(x);
                    hi = hi.max(x);
                }
                (lo > 0.0).then_some(hi / lo)
            }
            _ => None,
        }
    }

    /// The linear coefficient vector that drives LP-based clearing for this
    /// objective; `None` for the raw solvency count (augment it first).
    pub fn lp_coefficients(&self, n: usize) -> Option<Vec<f64>> {
        match self {
            Objective::Linear { v } => {
                (v.len() == n && v.iter().all(|&x| x > 0.0)).then(|| v.clone())
            }
            Objective::AbsoluteSolvency => None,
            Objective::AugmentedSolvency { coeff } => Some(vec![*coeff; n]),
        }
    }

    pub fn evaluate(&self, result: &ClearingResult) -> f64 {
        match self {
            Objective::Linear { v } => v.iter().zip(&result.pbar).map(|(a, b)| a * b).sum(),
            Objective::AbsoluteSolvency => result.solvent_count() as f64,
            Objective::AugmentedSolvency { coeff } => {
                result.solvent_count() as f64 + coeff * result.pbar.iter().sum::<f64>()
            }
        }
    }

    /// Turns the solvency count into a strictly increasing surrogate whose
    /// optimum is within `epsilon` of the true one:
    /// `coeff = ε (1 − β_max) / (2Λ)`.
    pub fn epsilon_augment(
        &self,
        epsilon: f64,
        budget: f64,
        beta_max: f64,
    ) -> Result<Objective, ObjectiveError> {
        if !matches!(self, Objective::AbsoluteSolvency) {
            return Err(ObjectiveError::NotAugmentable);
        }
        if epsilon <= 0.0 {
            return Err(ObjectiveError::BadEpsilon);
        }
        if budget <= 0.0 {
            return Err(ObjectiveError::BadBudget);
        }
        Ok(Objective::AugmentedSolvency {
            coeff: epsilon * (1.0 - beta_max) / (2.0 * budget),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::ClearingOptions;

    fn two_node() -> FinancialNetwork {
        FinancialNetwork::from_edges(2, &[(0, 1, 1.0)], &[0.5, 1.0], &[1.5, 0.0]).unwrap()
    }

    #[test]
    fn named_coefficients_on_two_node_network() {
        let net = two_node();
        assert_eq!(
            linear_coefficients(LinearKind::SumOfPayments, &net).unwrap(),
            vec![1.0, 1.0]
        );
        let sot = linear_coefficients(LinearKind::SumOfTaxes, &net).unwrap();
        assert!((sot[0] - 1.0 / 3.0).abs() < 1e-15 && (sot[1] - 1.0).abs() < 1e-15);
        let fs = linear_coefficients(LinearKind::FractionalSolvency, &net).unwrap();
        assert!((fs[0] - 2.0 / 3.0).abs() < 1e-15 && (fs[1] - 1.0).abs() < 1e-15);
        // β_1 = 0 breaks strictness for the internal-payments family here.
        let err = linear_coefficients(LinearKind::SumOfInternalPayments, &net).unwrap_err();
        assert!(matches!(
            err,
            ObjectiveError::ZeroCoefficient { node: 1, .. }
        ));
        assert_eq!(
            linear_coefficients_lenient(LinearKind::SumOfInternalPayments, &net),
            vec![2.0 / 3.0, 0.0]
        );
    }

    #[test]
    fn objective_values_after_full_bailout() {
        let net = two_node();
        let res = net
            .clear(&[1.0, 0.0], &[1.0, 0.0], &ClearingOptions::default())
            .unwrap();
        let eval = |kind| Objective::for_kind_eval(kind, &net).evaluate(&res);
        assert!((eval(LinearKind::SumOfPayments) - 2.5).abs() < 1e-9);
        assert!((eval(LinearKind::SumOfTaxes) - 1.5).abs() < 1e-9);
        assert!((eval(LinearKind::SumOfInternalPayments) - 1.0).abs() < 1e-9);
        assert!((eval(LinearKind::FractionalSolvency) - 2.0).abs() < 1e-9);
        assert_eq!(Objective::AbsoluteSolvency.evaluate(&res), 2.0);
    }

    #[test]
    fn zero_payments_give_zero_objectives() {
        let net = FinancialNetwork::from_edges(2, &[(0, 1, 1.0)], &[0.5, 1.0], &[1.0, 0.0])
            .unwrap();
        let res = net
            .clear(&[1.0, 0.0], &[0.0, 0.0], &ClearingOptions::default())
            .unwrap();
        assert_eq!(res.pbar, vec![0.0, 0.0]);
        let sop = Objective::for_kind_eval(LinearKind::SumOfPayments, &net);
        assert_eq!(sop.evaluate(&res), 0.0);
        assert_eq!(Objective::AbsoluteSolvency.evaluate(&res), 0.0);
    }

    #[test]
    fn payment_decomposition_identity() {
        // SoP = SoIP + SoT on any clearing vector.
        let edges = [(0, 1, 0.7), (1, 2, 0.4), (2, 0, 0.9), (0, 2, 0.3)];
        let net =
            FinancialNetwork::from_edges(3, &edges, &[0.5, 0.2, 0.4], &[1.0, 0.3, 0.2]).unwrap();
        let res = net
            .clear(&[0.6, 0.1, 0.2], &[0.0; 3], &ClearingOptions::default())
            .unwrap();
        let sop = Objective::for_kind_eval(LinearKind::SumOfPayments, &net).evaluate(&res);
        let soip =
            Objective::for_kind_eval(LinearKind::SumOfInternalPayments, &net).evaluate(&res);
        let sot = Objective::for_kind_eval(LinearKind::SumOfTaxes, &net).evaluate(&res);
        assert!((sop - (soip + sot)).abs() < 1e-10);
    }

    #[test]
    fn zeta_is_scale_invariant() {
        let obj = Objective::strict_linear(vec![1.0, 3.0]).unwrap();
        let scaled = Objective::strict_linear(vec![2.5, 7.5]).unwrap();
        assert_eq!(obj.zeta(), Some(3.0));
        assert_eq!(scaled.zeta(), Some(3.0));
    }

    #[test]
    fn augmentation_coefficient_value() {
        let coeff = match Objective::AbsoluteSolvency
            .epsilon_augment(0.1, 1.0, 2.0 / 3.0)
            .unwrap()
        {
            Objective::AugmentedSolvency { coeff } => coeff,
            _ => unreachable!(),
        };
        assert!((coeff - 1.0 / 60.0).abs() < 1e-15);
    }

    #[test]
    fn augmentation_approaches_solvency_count() {
        let net = two_node();
        let res = net
            .clear(&[1.0, 0.0], &[1.0, 0.0], &ClearingOptions::default())
            .unwrap();
        let tiny = Objective::AbsoluteSolvency
            .epsilon_augment(1e-12, 1.0, 2.0 / 3.0)
            .unwrap();
        assert!((tiny.evaluate(&res) - 2.0).abs() < 1e-10);
        let err = Objective::AbsoluteSolvency
            .epsilon_augment(0.0, 1.0, 0.5)
            .unwrap_err();
        assert!(matches!(err, ObjectiveError::BadEpsilon));
    }
}
