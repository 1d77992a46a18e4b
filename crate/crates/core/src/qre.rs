//! Logit quantal response equilibrium for 2x2 games.
//!
//! Each player's mixed strategy is a softmax over expected subjective
//! utilities given the opponent's mixed strategy, with inverse temperature
//! (precision) lambda. The equilibrium is the coupled fixed point of both
//! response maps; we find it by damped iteration from uniform play.

use thiserror::Error;

use crate::game::PayoffMatrix;

/// Tolerance, iteration cap, and damping for the fixed-point iteration.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Convergence threshold on the fixed-point residual.
    pub tol: f64,
    pub max_iters: u32,
    /// Step fraction toward the best-response map, p <- (1-k)p + k*BR(p).
    pub damping: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_iters: 10_000,
            damping: 0.5,
        }
    }
}

/// A converged equilibrium point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QreSolution {
    /// Probability that player 1 plays C.
    pub p1c: f64,
    /// Probability that player 2 plays C.
    pub p2c: f64,
    /// Damped updates applied before convergence.
    pub iterations: u32,
    /// Max deviation of (p1c, p2c) from the two response maps.
    pub residual: f64,
}

#[derive(Debug, Error)]
pub enum QreError {
    /// Residual still above tolerance at the iteration cap. Carries the
    /// last iterate so callers can substitute it under a diagnostic count.
    #[error("no convergence after {} iterations (residual {:.3e})", .last.iterations, .last.residual)]
    NoConvergence { last: QreSolution },
}

impl QreError {
    pub fn last_iterate(&self) -> QreSolution {
        match self {
            QreError::NoConvergence { last } => *last,
        }
    }
}

/// Softmax with inverse temperature `lambda` over a utility vector.
///
/// The max utility is subtracted before exponentiation so the computation
/// cannot overflow. Equal utilities receive equal mass; adding a constant
/// to all utilities leaves the output unchanged. `lambda = 0` yields the
/// uniform distribution.
pub fn logit_response(utilities: &[f64], lambda: f64) -> Vec<f64> {
    assert!(!utilities.is_empty());
    assert!(lambda >= 0.0, "precision must be non-negative");
    let scaled: Vec<f64> = utilities.iter().map(|&u| lambda * u).collect();
    let max = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scaled.iter().map(|&s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / z).collect()
}

/// Numerically stable logistic sigmoid.
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Player's logit probability of C against an opponent who plays C with
/// probability `q`, under the player's own subjective matrix `m`
/// (rows = own action).
fn response_c(m: &PayoffMatrix, lambda: f64, q: f64) -> f64 {
    let ec = q * m.get(0, 0) + (1.0 - q) * m.get(0, 1);
    let ed = q * m.get(1, 0) + (1.0 - q) * m.get(1, 1);
    sigmoid(lambda * (ec - ed))
}

/// Solves the coupled logit QRE of a 2x2 game.
///
/// `m1` and `m2` are the players' subjective matrices, both indexed
/// (own action, opponent action). Iteration starts from uniform play
/// (0.5, 0.5); for games with multiple equilibria at large lambda this
/// selects the branch reached from the centroid.
pub fn solve_2x2(
    m1: &PayoffMatrix,
    m2: &PayoffMatrix,
    lambda1: f64,
    lambda2: f64,
    opts: SolverOptions,
) -> Result<QreSolution, QreError> {
    assert!(lambda1 >= 0.0 && lambda2 >= 0.0);
    let mut p1 = 0.5;
    let mut p2 = 0.5;
    let mut last_residual = f64::INFINITY;
    for it in 0..=opts.max_iters {
        let b1 = response_c(m1, lambda1, p2);
        let b2 = response_c(m2, lambda2, p1);
        let residual = (p1 - b1).abs().max((p2 - b2).abs());
        if residual <= opts.tol {
            return Ok(QreSolution {
                p1c: p1,
                p2c: p2,
                iterations: it,
                residual,
            });
        }
        last_residual = residual;
        p1 += opts.damping * (b1 - p1);
        p2 += opts.damping * (b2 - p2);
    }
    Err(QreError::NoConvergence {
        last: QreSolution {
            p1c: p1,
            p2c: p2,
            iterations: opts.max_iters,
            residual: last_residual,
        },
    })
}

/// Convenience for the symmetric case where both players share one matrix
/// and precision.
pub fn solve_symmetric(
    m: &PayoffMatrix,
    lambda: f64,
    opts: SolverOptions,
) -> Result<QreSolution, QreError> {
    solve_2x2(m, m, lambda, lambda, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Game;
    use approx::assert_relative_eq;

    fn residual_of(m1: &PayoffMatrix, m2: &PayoffMatrix, l1: f64, l2: f64, s: &QreSolution) -> f64 {
        let b1 = response_c(m1, l1, s.p2c);
        let b2 = response_c(m2, l2, s.p1c);
        (s.p1c - b1).abs().max((s.p2c - b2).abs())
    }

    #[test]
    fn zero_precision_is_uniform() {
        assert_eq!(logit_response(&[3.0, -1.0, 7.5], 0.0), vec![1.0 / 3.0; 3]);
        let m = Game::new(-0.5, 1.5).row_matrix(true);
        let s = solve_2x2(&m, &m, 0.0, 0.0, SolverOptions::default()).unwrap();
        assert_eq!((s.p1c, s.p2c), (0.5, 0.5));
        assert!((s.p1c - 0.5).abs() < 1e-12);
    }

    #[test]
    fn logit_response_scalar_logistic() {
        let p = logit_response(&[1.0, 0.0], 2.0);
        let expect = 1.0 / (1.0 + (-2.0f64).exp());
        assert_relative_eq!(p[0], expect, epsilon = 1e-15);
        assert_relative_eq!(p[1], 1.0 - expect, epsilon = 1e-15);
        assert_relative_eq!(p[0], 0.880_797, epsilon = 1e-6);
    }

    #[test]
    fn logit_response_shift_invariant() {
        let base = logit_response(&[0.2, -0.4, 1.1], 3.0);
        let shifted = logit_response(&[0.2 + 55.0, -0.4 + 55.0, 1.1 + 55.0], 3.0);
        for (a, b) in base.iter().zip(&shifted) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn logit_response_no_overflow() {
        let p = logit_response(&[1e4, 0.0], 1e4);
        assert!(p[0].is_finite() && p[1].is_finite());
        assert_relative_eq!(p[0] + p[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dominant_defection_at_high_precision() {
        // PD: D strictly dominant, lambda = 50 pushes play to defection
        let m = Game::new(-0.5, 1.5).row_matrix(true);
        let s = solve_2x2(&m, &m, 50.0, 50.0, SolverOptions::default()).unwrap();
        assert!(s.p1c < 0.01 && s.p2c < 0.01, "p = ({}, {})", s.p1c, s.p2c);
        assert!(s.residual <= 1e-10);
    }

    #[test]
    fn symmetric_coordination_matches_bisection_oracle() {
        // Symmetric game + equal precisions: the equilibrium solves the
        // scalar equation p = sigmoid(lambda * (E_C(p) - E_D(p))).
        let m = Game::new(-0.5, -0.5).row_matrix(true);
        let lambda = 3.0;
        let f = |p: f64| {
            let ec = p * m.get(0, 0) + (1.0 - p) * m.get(0, 1);
            let ed = p * m.get(1, 0) + (1.0 - p) * m.get(1, 1);
            sigmoid(lambda * (ec - ed)) - p
        };
        // bisection from the centroid's basin: bracket around 0.5 outward
        let (mut lo, mut hi) = (0.5, 1.0 - 1e-12);
        if f(lo) < 0.0 {
            // fixed point below 0.5
            lo = 1e-12;
            hi = 0.5;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        let s = solve_2x2(&m, &m, lambda, lambda, SolverOptions::default()).unwrap();
        assert_relative_eq!(s.p1c, oracle, epsilon = 1e-8);
        assert_relative_eq!(s.p1c, s.p2c, epsilon = 1e-9);
    }

    #[test]
    fn returned_point_satisfies_fixed_point_equations() {
        let games = [
            Game::new(-0.5, 1.5),
            Game::new(0.5, 0.8),
            Game::new(-0.9, -0.9),
            Game::new(1.7, -0.3),
        ];
        for g in games {
            let (m1, m2) = g.payoff_matrices(true);
            for lambda in [0.0, 0.7, 2.0, 9.0] {
                let s = solve_2x2(&m1, &m2, lambda, 1.3 * lambda, SolverOptions::default())
                    .unwrap();
                assert!(residual_of(&m1, &m2, lambda, 1.3 * lambda, &s) <= 1e-10);
                assert!(s.p1c > 0.0 && s.p1c < 1.0);
                assert!(s.p2c > 0.0 && s.p2c < 1.0);
            }
        }
    }

    #[test]
    fn symmetric_inputs_give_symmetric_solution() {
        for g in [Game::new(-0.5, -0.5), Game::new(0.3, 1.9), Game::new(1.1, 0.2)] {
            let m = g.row_matrix(true);
            let s = solve_symmetric(&m, 4.2, SolverOptions::default()).unwrap();
            assert!((s.p1c - s.p2c).abs() < 1e-9);
        }
    }

    #[test]
    fn cooperation_monotone_in_precision_under_dominance() {
        // Harmony-like game where C strictly dominates
        let g = Game::new(0.8, 0.3);
        let m = g.row_matrix(true);
        let mut prev = 0.0;
        for lambda in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let s = solve_symmetric(&m, lambda, SolverOptions::default()).unwrap();
            assert!(s.p1c > prev, "not increasing at lambda = {lambda}");
            prev = s.p1c;
        }
    }

    #[test]
    fn continuity_under_small_payoff_perturbations() {
        for g in [Game::new(0.4, 1.2), Game::new(-0.6, 0.7), Game::new(1.3, 1.6)] {
            let m = g.row_matrix(true);
            let base = solve_symmetric(&m, 10.0, SolverOptions::default()).unwrap();
            // bump a single entry so the perturbation is not a pure shift
            let e = *m.entries();
            let m2 = PayoffMatrix::new([[e[0][0] + 1e-3, e[0][1]], [e[1][0], e[1][1]]]);
            let pert = solve_symmetric(&m2, 10.0, SolverOptions::default()).unwrap();
            assert!((base.p1c - pert.p1c).abs() < 0.05);
        }
    }
}
