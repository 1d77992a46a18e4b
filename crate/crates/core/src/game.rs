//! Games in the UV plane: payoff matrices, zero-sumness, subjective
//! distortion, and ordering-based classification.
//!
//! A symmetric 2x2 game with canonical payoffs (R, S, T, P) is mapped to a
//! point (U, V) with row matrix [[1, U], [V, 0]], so that positive affine
//! transformations of the payoffs leave strategic content invariant. The
//! canonical correspondence is U -> S (sucker), V -> T (temptation),
//! 0 -> P (punishment), 1 -> R (reward).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::utility::UtilityModel;

/// Default study region of the UV plane.
pub const U_MIN: f64 = -1.0;
pub const U_MAX: f64 = 2.0;
pub const V_MIN: f64 = -1.0;
pub const V_MAX: f64 = 2.0;

#[derive(Debug, Error, PartialEq)]
pub enum GameError {
    /// R = P leaves the UV remap undefined.
    #[error("degenerate payoffs: R = P = {0}")]
    DegeneratePayoffs(f64),
    /// The utility collapses the canonical payoffs 0 and 1 onto one value.
    #[error("degenerate utility: u(1) = u(0)")]
    DegenerateUtility,
}

/// A point in the plane of normalized symmetric 2x2 games.
///
/// `u` is the normalized sucker payoff, `v` the normalized temptation
/// payoff. The type does not enforce the study box; grids and the ABM clip
/// to it, while perceived (utility-distorted) games may fall outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Game {
    pub u: f64,
    pub v: f64,
}

impl Game {
    pub fn new(u: f64, v: f64) -> Self {
        Game { u, v }
    }

    /// Remaps canonical payoffs (R, S, T, P) to the UV plane:
    /// U = (S-P)/(R-P), V = (T-P)/(R-P).
    pub fn from_canonical(r: f64, s: f64, t: f64, p: f64) -> Result<Self, GameError> {
        if r == p {
            return Err(GameError::DegeneratePayoffs(r));
        }
        let scale = r - p;
        Ok(Game {
            u: (s - p) / scale,
            v: (t - p) / scale,
        })
    }

    /// Mean of the four payoff entries {1, U, V, 0}.
    pub fn payoff_mean(&self) -> f64 {
        (1.0 + self.u + self.v) / 4.0
    }

    /// Row and column player payoff matrices, both indexed
    /// (own action, opponent action). The column player's matrix is the
    /// transpose of the row matrix; for a symmetric game both players face
    /// the same own-row form.
    ///
    /// With `normalize` the entry mean is subtracted so the matrix has mean
    /// exactly zero.
    pub fn payoff_matrices(&self, normalize: bool) -> (PayoffMatrix, PayoffMatrix) {
        let row = self.row_matrix(normalize);
        (row, row.transpose())
    }

    /// Row player's matrix [[1, U], [V, 0]], optionally mean-normalized.
    pub fn row_matrix(&self, normalize: bool) -> PayoffMatrix {
        let shift = if normalize { self.payoff_mean() } else { 0.0 };
        PayoffMatrix::new([
            [1.0 - shift, self.u - shift],
            [self.v - shift, 0.0 - shift],
        ])
    }

    /// Zero-sumness index: negative Pearson correlation between the row
    /// payoff vector (1, U, V, 0) and the column payoff vector (1, V, U, 0)
    /// over the four outcome cells, uniformly weighted.
    ///
    /// Z = -1 means full mutual interest; Z -> 1 approaches pure conflict.
    /// No game in the plane reaches Z = 1 exactly.
    pub fn zero_sumness(&self) -> f64 {
        let m = self.payoff_mean();
        let (du, dv) = (self.u - m, self.v - m);
        let (d1, d0) = (1.0 - m, -m);
        // cov(row, col) and the shared variance of (1, U, V, 0); the
        // variance cannot vanish because the vector contains both 1 and 0.
        let cov = d1 * d1 + du * dv + dv * du + d0 * d0;
        let var = d1 * d1 + du * du + dv * dv + d0 * d0;
        -(cov / var)
    }

    /// Ordering-based classification with (R, S, T, P) = (1, U, V, 0).
    /// Ties violate every strict ordering and map to `Unclassified`.
    pub fn classify(&self, opts: ClassifyOptions) -> GameClass {
        let (u, v) = (self.u, self.v);
        if v > 1.0 && u < 0.0 {
            GameClass::Pd // T > R > P > S
        } else if v > 1.0 && u > 0.0 && u < 1.0 {
            GameClass::Sd // T > R > S > P
        } else if v > 1.0 && u > 1.0 {
            GameClass::Ac // T, S > R, P
        } else if v < 1.0 && v > 0.0 && u < 0.0 {
            GameClass::Sh // R > T > P > S
        } else if u < 0.0 && v < 0.0 {
            GameClass::C // R > P > T, S
        } else if u < 1.0 && u > v && v > 0.0 {
            GameClass::H // R > S > T > P
        } else if opts.deadlock_corner && u > 1.0 && v < 0.0 {
            // The literal deadlock ordering T > P > R > S cannot hold under
            // the normalization R = 1 > P = 0; the opposite diagonal corner
            // carries the deadlock label instead (config switch).
            GameClass::Dl
        } else {
            GameClass::Unclassified
        }
    }

    /// The game as perceived through a subjective utility: payoffs are
    /// mapped through `u` and re-expressed in canonical UV form,
    /// `U_hat = (u(U) - u(0)) / (u(1) - u(0))` and likewise for V.
    pub fn perceived(&self, model: &UtilityModel) -> Result<Game, GameError> {
        let u0 = model.evaluate(0.0);
        let u1 = model.evaluate(1.0);
        let scale = u1 - u0;
        if scale.abs() < 1e-12 {
            return Err(GameError::DegenerateUtility);
        }
        Ok(Game {
            u: (model.evaluate(self.u) - u0) / scale,
            v: (model.evaluate(self.v) - u0) / scale,
        })
    }
}

/// Controls the region-label switch for the deadlock corner (see
/// [`Game::classify`]). Default on.
#[derive(Debug, Clone, Copy)]
pub struct ClassifyOptions {
    pub deadlock_corner: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            deadlock_corner: true,
        }
    }
}

/// Payoff matrix indexed by (own action, opponent action), actions ordered
/// (C, D).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffMatrix([[f64; 2]; 2]);

impl PayoffMatrix {
    pub fn new(entries: [[f64; 2]; 2]) -> Self {
        PayoffMatrix(entries)
    }

    pub fn get(&self, own: usize, opp: usize) -> f64 {
        self.0[own][opp]
    }

    pub fn entries(&self) -> &[[f64; 2]; 2] {
        &self.0
    }

    pub fn transpose(&self) -> PayoffMatrix {
        PayoffMatrix([
            [self.0[0][0], self.0[1][0]],
            [self.0[0][1], self.0[1][1]],
        ])
    }

    /// Entrywise map.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> PayoffMatrix {
        PayoffMatrix([
            [f(self.0[0][0]), f(self.0[0][1])],
            [f(self.0[1][0]), f(self.0[1][1])],
        ])
    }

    pub fn sum(&self) -> f64 {
        self.0[0][0] + self.0[0][1] + self.0[1][0] + self.0[1][1]
    }
}

/// Classic symmetric 2x2 game families by payoff ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GameClass {
    Pd,
    Dl,
    Sd,
    Sh,
    C,
    Ac,
    H,
    Unclassified,
}

impl GameClass {
    /// Serialized label used in CSV/JSON exports.
    pub fn label(&self) -> &'static str {
        match self {
            GameClass::Pd => "PD",
            GameClass::Dl => "DL",
            GameClass::Sd => "SD",
            GameClass::Sh => "SH",
            GameClass::C => "C",
            GameClass::Ac => "AC",
            GameClass::H => "H",
            GameClass::Unclassified => "UNCLASSIFIED",
        }
    }
}

impl std::fmt::Display for GameClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}
