//! Core engine for computing population-level norm attractors in the space
//! of symmetric 2x2 games.
//!
//! The library is organized around a pipeline:
//!
//! 1. [`game`] parametrizes symmetric 2x2 games as points in the UV plane,
//!    with payoff matrices, a zero-sumness index, and ordering-based
//!    classification into the classic game families.
//! 2. [`utility`] maps material payoffs through subjective valuations
//!    (risk-neutral, linex, prospect-theoretic).
//! 3. [`qre`] solves the coupled logit quantal response equilibrium of a
//!    2x2 game for two players with possibly distinct subjective matrices
//!    and precisions.
//! 4. [`meanfield`] aggregates heterogeneous QRE behavior into a population
//!    cooperation rate S(g) via Gauss-Hermite quadrature, builds the fitness
//!    landscape over the UV plane, and identifies attractors.
//! 5. [`abm`] validates the mean-field picture with an agent-based model on
//!    an adaptive network with income-homophilic rewiring.
//! 6. [`metrics`] measures inequality, welfare, cooperation, and
//!    trait-outcome correlations.
//! 7. [`sensitivity`] runs variance-based global sensitivity analysis over
//!    ABM parameters (Saltelli sampling, Sobol indices, bootstrap CIs).
//!
//! [`seeding`] and [`export`] provide deterministic RNG stream derivation
//! and plot-ready CSV/JSON emission shared by the CLI.

pub mod abm;
pub mod export;
pub mod game;
pub mod meanfield;
pub mod metrics;
pub mod qre;
pub mod seeding;
pub mod sensitivity;
pub mod utility;

pub use game::{Game, GameClass, PayoffMatrix};
pub use meanfield::{GridSpec, Landscape, TraitDistributions};
pub use qre::{QreSolution, SolverOptions};
pub use utility::{UtilityFamily, UtilityModel};
