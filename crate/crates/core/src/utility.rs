//! Subjective valuation of material payoffs.
//!
//! Two behavioral forms sit next to the risk-neutral baseline: the linex
//! utility -exp(-eta*c) + eta*c + 1 (risk aversion without reference
//! dependence) and a prospect-theoretic utility with reference point,
//! eta-dependent curvature, and loss-aversion multiplier omega.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::PayoffMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum UtilityError {
    #[error("linex requires eta > 0, got {0}")]
    NonPositiveEta(f64),
    #[error("prospect requires omega > 0, got {0}")]
    NonPositiveOmega(f64),
}

/// Gain-domain curvature alpha(eta) = max(0.2, 1/(1+eta)).
pub fn gain_curvature(eta: f64) -> f64 {
    (1.0 / (1.0 + eta)).max(0.2)
}

/// Loss-domain curvature beta(eta) = max(0.2, 1/(1+0.5*eta)).
pub fn loss_curvature(eta: f64) -> f64 {
    (1.0 / (1.0 + 0.5 * eta)).max(0.2)
}

/// A concrete subjective utility over scalar payoffs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum UtilityModel {
    RiskNeutral,
    Linex {
        eta: f64,
    },
    Prospect {
        eta: f64,
        omega: f64,
        reference: f64,
    },
}

impl UtilityModel {
    pub fn linex(eta: f64) -> Result<Self, UtilityError> {
        if eta <= 0.0 {
            return Err(UtilityError::NonPositiveEta(eta));
        }
        Ok(UtilityModel::Linex { eta })
    }

    pub fn prospect(eta: f64, omega: f64, reference: f64) -> Result<Self, UtilityError> {
        if omega <= 0.0 {
            return Err(UtilityError::NonPositiveOmega(omega));
        }
        Ok(UtilityModel::Prospect {
            eta,
            omega,
            reference,
        })
    }

    /// Re-checks parameter constraints after deserialization from config.
    pub fn validate(&self) -> Result<(), UtilityError> {
        match *self {
            UtilityModel::RiskNeutral => Ok(()),
            UtilityModel::Linex { eta } => {
                if eta <= 0.0 {
                    Err(UtilityError::NonPositiveEta(eta))
                } else {
                    Ok(())
                }
            }
            UtilityModel::Prospect { omega, .. } => {
                if omega <= 0.0 {
                    Err(UtilityError::NonPositiveOmega(omega))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Subjective value of a material payoff.
    pub fn evaluate(&self, c: f64) -> f64 {
        match *self {
            UtilityModel::RiskNeutral => c,
            UtilityModel::Linex { eta } => -(-eta * c).exp() + eta * c + 1.0,
            UtilityModel::Prospect {
                eta,
                omega,
                reference,
            } => {
                if c >= reference {
                    (c - reference).powf(gain_curvature(eta))
                } else {
                    -omega * (reference - c).powf(loss_curvature(eta))
                }
            }
        }
    }

    /// Entrywise valuation of a payoff matrix; used to build the subjective
    /// matrix fed to the QRE solver.
    pub fn apply_to_matrix(&self, m: &PayoffMatrix) -> PayoffMatrix {
        m.map(|c| self.evaluate(c))
    }
}

/// A family of utility models indexed by the risk-sensitivity trait, for
/// population aggregation where eta varies across quadrature nodes or
/// agents while the structural parameters stay fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum UtilityFamily {
    RiskNeutral,
    Linex,
    Prospect {
        #[serde(default = "default_omega")]
        omega: f64,
        #[serde(default)]
        reference: f64,
    },
}

fn default_omega() -> f64 {
    2.0
}

impl UtilityFamily {
    /// Instantiates the family at a given risk sensitivity.
    pub fn instantiate(&self, eta: f64) -> UtilityModel {
        match *self {
            UtilityFamily::RiskNeutral => UtilityModel::RiskNeutral,
            UtilityFamily::Linex => UtilityModel::Linex { eta },
            UtilityFamily::Prospect { omega, reference } => UtilityModel::Prospect {
                eta,
                omega,
                reference,
            },
        }
    }
}

impl Default for UtilityFamily {
    fn default() -> Self {
        UtilityFamily::RiskNeutral
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Game;
    use approx::assert_relative_eq;

    #[test]
    fn linex_scalar_values() {
        let u = UtilityModel::linex(1.0).unwrap();
        assert_relative_eq!(u.evaluate(0.0), 0.0, epsilon = 1e-15);
        assert_relative_eq!(u.evaluate(1.0), 2.0 - (-1.0f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(u.evaluate(1.0), 1.632_120_558_828_557_7, epsilon = 1e-12);
    }

    #[test]
    fn linex_rejects_zero_eta() {
        assert_eq!(
            UtilityModel::linex(0.0).unwrap_err(),
            UtilityError::NonPositiveEta(0.0)
        );
    }

    #[test]
    fn prospect_reference_and_loss_values() {
        let u = UtilityModel::prospect(1.0, 2.0, 0.0).unwrap();
        // beta(1) = 2/3, loss of 1 scaled by omega
        assert_relative_eq!(u.evaluate(-1.0), -2.0, epsilon = 1e-15);
        assert_eq!(u.evaluate(0.0), 0.0);
        let shifted = UtilityModel::prospect(0.7, 1.5, 0.4).unwrap();
        assert_eq!(shifted.evaluate(0.4), 0.0);
    }

    #[test]
    fn curvatures_bounded() {
        for eta in [0.0, 0.5, 1.0, 4.0, 10.0, 1e6] {
            let a = gain_curvature(eta);
            let b = loss_curvature(eta);
            assert!((0.2..=1.0).contains(&a));
            assert!((0.2..=1.0).contains(&b));
            assert!(a <= b);
        }
    }

    #[test]
    fn apply_to_matrix_entrywise() {
        let eta = 0.8;
        let u = UtilityModel::linex(eta).unwrap();
        let m = Game::new(0.0, 0.0).row_matrix(true);
        let mapped = u.apply_to_matrix(&m);
        for a in 0..2 {
            for b in 0..2 {
                let c = m.get(a, b);
                assert_relative_eq!(
                    mapped.get(a, b),
                    -(-eta * c).exp() + eta * c + 1.0,
                    epsilon = 1e-15
                );
            }
        }
    }

    #[test]
    fn risk_neutral_apply_is_identity() {
        let m = Game::new(-0.4, 1.9).row_matrix(false);
        assert_eq!(UtilityModel::RiskNeutral.apply_to_matrix(&m), m);
    }

    #[test]
    fn prospect_matrix_at_reference_is_zero() {
        let u = UtilityModel::prospect(1.3, 2.0, 0.7).unwrap();
        let m = PayoffMatrix::new([[0.7; 2]; 2]);
        assert_eq!(u.apply_to_matrix(&m), PayoffMatrix::new([[0.0; 2]; 2]));
    }

    #[test]
    fn linex_strictly_increasing_and_concave() {
        let u = UtilityModel::linex(1.7).unwrap();
        let h = 1e-3;
        let mut c = -5.0;
        while c < 5.0 {
            let (a, b, d) = (u.evaluate(c - h), u.evaluate(c), u.evaluate(c + h));
            assert!(d > a, "not increasing at {c}");
            assert!(a + d - 2.0 * b <= 1e-8, "not concave at {c}");
            c += 0.05;
        }
    }

    #[test]
    fn prospect_loss_aversion_at_unit_distance() {
        for (eta, omega, r) in [(1.0, 2.0, 0.0), (0.3, 1.0, 1.5), (4.0, 3.3, -0.2)] {
            let u = UtilityModel::prospect(eta, omega, r).unwrap();
            assert_relative_eq!(u.evaluate(r - 1.0).abs(), omega, epsilon = 1e-12);
            assert_relative_eq!(u.evaluate(r + 1.0), 1.0, epsilon = 1e-12);
            assert!(u.evaluate(r - 1.0).abs() >= u.evaluate(r + 1.0));
        }
    }

    #[test]
    fn linex_preserves_argmax() {
        let u = UtilityModel::linex(2.2).unwrap();
        let vectors = [
            vec![0.3, -1.2, 0.9, 0.89],
            vec![-5.0, -4.9, -4.99],
            vec![2.0, 1.0, 0.0, 3.0, 2.99],
        ];
        for v in vectors {
            let argmax = |xs: &[f64]| {
                xs.iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .unwrap()
                    .0
            };
            let mapped: Vec<f64> = v.iter().map(|&c| u.evaluate(c)).collect();
            assert_eq!(argmax(&v), argmax(&mapped));
        }
    }

    #[test]
    fn serde_round_trip_with_type_tag() {
        let u = UtilityModel::prospect(1.4, 2.0, 0.0).unwrap();
        let json = serde_json::to_string(&u).unwrap();
        assert!(json.contains("\"type\":\"prospect\""));
        let back: UtilityModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, u);
        let family: UtilityFamily = serde_json::from_str(r#"{"type":"linex"}"#).unwrap();
        assert_eq!(family, UtilityFamily::Linex);
    }
}
