//! Mean-field pipeline: population aggregation S(g), fitness landscape
//! Phi(g), gradient field, attractor identification, and parameter-loop
//! trajectories.
//!
//! S(g) integrates the QRE cooperation probability over lognormal trait
//! heterogeneity in (lambda, eta) with Gauss-Hermite quadrature. Fitness is
//! the expected material payoff of a game type under uniform random
//! matching over the grid, and attractors are strict local maxima of the
//! fitness field with vanishing (box-projected) gradient.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::game::{ClassifyOptions, Game, GameClass};
use crate::qre::{solve_symmetric, SolverOptions};
use crate::utility::UtilityFamily;

/// Lognormal trait heterogeneity: log-means and log-stddevs of the
/// precision (lambda) and risk-sensitivity (eta) distributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraitDistributions {
    pub mu_lambda: f64,
    pub sigma_lambda: f64,
    pub mu_eta: f64,
    pub sigma_eta: f64,
}

impl Default for TraitDistributions {
    fn default() -> Self {
        TraitDistributions {
            mu_lambda: 1.0,
            sigma_lambda: 0.5,
            mu_eta: 1.4,
            sigma_eta: 0.5,
        }
    }
}

/// Physicists' Gauss-Hermite rule: nodes and weights for
/// integral e^(-x^2) f(x) dx ~ sum w_i f(x_i). Weights sum to sqrt(pi).
///
/// Nodes are found by Newton iteration on the orthonormal Hermite
/// recurrence, largest root first, using the standard asymptotic initial
/// guesses.
pub fn hermite_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    const PIM4: f64 = 0.751_125_544_464_942_5; // pi^(-1/4)
    const EPS: f64 = 3e-14;
    let nf = n as f64;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[0],
            3 => 1.91 * z - 0.91 * nodes[1],
            _ => 2.0 * z - nodes[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= EPS {
                break;
            }
        }
        nodes[i] = z;
        nodes[n - 1 - i] = -z;
        weights[i] = 2.0 / (pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    (nodes, weights)
}

/// Lognormal evaluation points exp(mu + sqrt(2)*sigma*x_i) with
/// probability weights w_i/sqrt(pi) (they sum to one), ready for
/// expectations over LogNormal(mu, sigma^2).
pub fn gh_nodes(n: usize, mu: f64, sigma: f64) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = hermite_rule(n);
    let values = xs
        .iter()
        .map(|&x| (mu + std::f64::consts::SQRT_2 * sigma * x).exp())
        .collect();
    let norm = std::f64::consts::PI.sqrt();
    let weights = ws.iter().map(|&w| w / norm).collect();
    (values, weights)
}

/// Population-average cooperation probability in game `g`.
///
/// For each quadrature node pair (lambda_i, eta_j), the game's
/// mean-normalized matrix is mapped through the utility instantiated at
/// eta_j and the symmetric QRE of two identical agents of that type is
/// solved; the cooperation probabilities are weight-averaged. Returns the
/// aggregate together with the count of solves that hit the iteration cap
/// (their last iterate is substituted).
pub fn aggregate_s(
    g: Game,
    dists: &TraitDistributions,
    family: UtilityFamily,
    n: usize,
    solver: SolverOptions,
) -> (f64, u32) {
    let (lambdas, wl) = gh_nodes(n, dists.mu_lambda, dists.sigma_lambda);
    let (etas, we) = gh_nodes(n, dists.mu_eta, dists.sigma_eta);
    let m = g.row_matrix(true);
    let mut acc = 0.0;
    let mut failures = 0;
    for (lambda, wli) in lambdas.iter().zip(&wl) {
        for (eta, wej) in etas.iter().zip(&we) {
            let subjective = family.instantiate(*eta).apply_to_matrix(&m);
            let p1c = match solve_symmetric(&subjective, *lambda, solver) {
                Ok(sol) => sol.p1c,
                Err(err) => {
                    failures += 1;
                    err.last_iterate().p1c
                }
            };
            acc += wli * wej * p1c;
        }
    }
    (acc, failures)
}

/// Expected material payoff of a type-g player against a type-g2 player:
/// K = S(g)S(g2)*1 + S(g)(1-S(g2))*U + (1-S(g))S(g2)*V, with the raw
/// (un-normalized) payoffs of the focal game.
pub fn fitness_k(g: Game, sg: f64, sg2: f64) -> f64 {
    sg * sg2 + sg * (1.0 - sg2) * g.u + (1.0 - sg) * sg2 * g.v
}

/// Rectangular evaluation grid over the UV plane. Cells are indexed
/// row-major with the U index outermost: `idx = iu * nv + iv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub nu: usize,
    pub nv: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            u_min: -1.0,
            u_max: 2.0,
            v_min: -1.0,
            v_max: 2.0,
            nu: 51,
            nv: 51,
        }
    }
}

impl GridSpec {
    pub fn with_resolution(n: usize) -> Self {
        GridSpec {
            nu: n,
            nv: n,
            ..GridSpec::default()
        }
    }

    pub fn len(&self) -> usize {
        self.nu * self.nv
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn u_value(&self, iu: usize) -> f64 {
        self.u_min + (self.u_max - self.u_min) * iu as f64 / (self.nu - 1) as f64
    }

    pub fn v_value(&self, iv: usize) -> f64 {
        self.v_min + (self.v_max - self.v_min) * iv as f64 / (self.nv - 1) as f64
    }

    pub fn index(&self, iu: usize, iv: usize) -> usize {
        iu * self.nv + iv
    }

    pub fn game(&self, iu: usize, iv: usize) -> Game {
        Game::new(self.u_value(iu), self.v_value(iv))
    }

    pub fn step_u(&self) -> f64 {
        (self.u_max - self.u_min) / (self.nu - 1) as f64
    }

    pub fn step_v(&self) -> f64 {
        (self.v_max - self.v_min) / (self.nv - 1) as f64
    }

    /// Centroid of the grid box.
    pub fn centroid(&self) -> (f64, f64) {
        (
            0.5 * (self.u_min + self.u_max),
            0.5 * (self.v_min + self.v_max),
        )
    }
}

/// A fitness peak: grid point with box-stationary gradient that strictly
/// dominates its neighborhood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Attractor {
    pub game: Game,
    pub phi: f64,
    pub class: GameClass,
    pub z: f64,
}

/// Attractor detection thresholds.
#[derive(Debug, Clone, Copy)]
pub struct AttractorOptions {
    /// Absolute gradient-norm threshold; when `None`, the threshold is
    /// `eps_fraction` times the max gradient norm over the grid.
    pub epsilon: Option<f64>,
    pub eps_fraction: f64,
    /// Additionally require a negative-definite finite-difference Hessian
    /// (interior points only).
    pub require_negative_hessian: bool,
}

impl Default for AttractorOptions {
    fn default() -> Self {
        AttractorOptions {
            epsilon: None,
            eps_fraction: 0.05,
            require_negative_hessian: false,
        }
    }
}

/// Full landscape bundle over a grid.
#[derive(Debug, Clone)]
pub struct Landscape {
    pub grid: GridSpec,
    pub s: Vec<f64>,
    pub phi: Vec<f64>,
    pub gradient: Vec<[f64; 2]>,
    pub attractors: Vec<Attractor>,
    /// QRE solves that hit the iteration cap while building S.
    pub qre_failures: u32,
}

/// Options bundle for landscape construction.
#[derive(Debug, Clone, Copy)]
pub struct LandscapeOptions {
    /// Gauss-Hermite nodes per trait axis.
    pub nodes: usize,
    pub solver: SolverOptions,
    pub classify: ClassifyOptions,
    pub attractor: AttractorOptions,
}

impl Default for LandscapeOptions {
    fn default() -> Self {
        LandscapeOptions {
            nodes: 5,
            solver: SolverOptions::default(),
            classify: ClassifyOptions::default(),
            attractor: AttractorOptions::default(),
        }
    }
}

/// Computes S over the grid (cells in parallel, merged in index order),
/// then fitness, gradient, and attractors.
pub fn compute_landscape(
    grid: GridSpec,
    dists: &TraitDistributions,
    family: UtilityFamily,
    opts: &LandscapeOptions,
) -> Landscape {
    assert!(grid.nu >= 3 && grid.nv >= 3, "grid resolution must be >= 3");
    let cells: Vec<(f64, u32)> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let g = grid.game(idx / grid.nv, idx % grid.nv);
            aggregate_s(g, dists, family, opts.nodes, opts.solver)
        })
        .collect();
    let qre_failures = cells.iter().map(|c| c.1).sum();
    let s: Vec<f64> = cells.into_iter().map(|c| c.0).collect();
    landscape_from_s(grid, s, qre_failures, opts.classify, opts.attractor)
}

/// Builds fitness, gradient, and attractors from a precomputed S grid.
/// Split out so synthetic S fields can drive the same code path in tests.
pub fn landscape_from_s(
    grid: GridSpec,
    s: Vec<f64>,
    qre_failures: u32,
    classify: ClassifyOptions,
    attractor: AttractorOptions,
) -> Landscape {
    assert_eq!(s.len(), grid.len());
    let phi = phi_from_s(&grid, &s);
    let gradient = gradient_field(&grid, &phi);
    let mut landscape = Landscape {
        grid,
        s,
        phi,
        gradient,
        attractors: Vec::new(),
        qre_failures,
    };
    landscape.attractors = find_attractors(&landscape, classify, attractor);
    landscape
}

/// Phi(g) = mean over grid points g' of K(g, g'). Since K is affine in
/// S(g'), the mean collapses to the grid-mean of S; this is exactly the
/// discrete uniform-matching average.
pub fn phi_from_s(grid: &GridSpec, s: &[f64]) -> Vec<f64> {
    let s_mean = s.iter().sum::<f64>() / s.len() as f64;
    (0..grid.len())
        .map(|idx| {
            let g = grid.game(idx / grid.nv, idx % grid.nv);
            fitness_k(g, s[idx], s_mean)
        })
        .collect()
}

/// Central differences on the interior, one-sided on the boundary.
pub fn gradient_field(grid: &GridSpec, phi: &[f64]) -> Vec<[f64; 2]> {
    let (nu, nv) = (grid.nu, grid.nv);
    let (hu, hv) = (grid.step_u(), grid.step_v());
    let at = |iu: usize, iv: usize| phi[grid.index(iu, iv)];
    let mut grad = vec![[0.0; 2]; grid.len()];
    for iu in 0..nu {
        for iv in 0..nv {
            let du = if iu == 0 {
                (at(1, iv) - at(0, iv)) / hu
            } else if iu == nu - 1 {
                (at(nu - 1, iv) - at(nu - 2, iv)) / hu
            } else {
                (at(iu + 1, iv) - at(iu - 1, iv)) / (2.0 * hu)
            };
            let dv = if iv == 0 {
                (at(iu, 1) - at(iu, 0)) / hv
            } else if iv == nv - 1 {
                (at(iu, nv - 1) - at(iu, nv - 2)) / hv
            } else {
                (at(iu, iv + 1) - at(iu, iv - 1)) / (2.0 * hv)
            };
            grad[grid.index(iu, iv)] = [du, dv];
        }
    }
    grad
}

/// Gradient norm after projecting onto the feasible directions of the
/// grid box: an outward-pointing component at a boundary cannot be
/// followed, so it does not count against stationarity.
fn projected_gradient_norm(grid: &GridSpec, gradient: &[[f64; 2]], iu: usize, iv: usize) -> f64 {
    let [gu, gv] = gradient[grid.index(iu, iv)];
    let proj = |g: f64, at_low: bool, at_high: bool| {
        if at_low && g < 0.0 {
            0.0
        } else if at_high && g > 0.0 {
            0.0
        } else {
            g
        }
    };
    let pu = proj(gu, iu == 0, iu == grid.nu - 1);
    let pv = proj(gv, iv == 0, iv == grid.nv - 1);
    (pu * pu + pv * pv).sqrt()
}

/// Grid points that strictly exceed all existing 8-neighbors and whose
/// box-projected gradient norm is below the threshold, sorted by fitness
/// descending. An empty result is a valid outcome.
pub fn find_attractors(
    landscape: &Landscape,
    classify: ClassifyOptions,
    opts: AttractorOptions,
) -> Vec<Attractor> {
    let grid = &landscape.grid;
    let phi = &landscape.phi;
    let eps = opts.epsilon.unwrap_or_else(|| {
        let max_norm = landscape
            .gradient
            .iter()
            .map(|g| (g[0] * g[0] + g[1] * g[1]).sqrt())
            .fold(0.0, f64::max);
        opts.eps_fraction * max_norm
    });
    let mut found = Vec::new();
    for iu in 0..grid.nu {
        for iv in 0..grid.nv {
            let value = phi[grid.index(iu, iv)];
            let mut strict_max = true;
            for du in -1i64..=1 {
                for dv in -1i64..=1 {
                    if du == 0 && dv == 0 {
                        continue;
                    }
                    let (nu_i, nv_i) = (iu as i64 + du, iv as i64 + dv);
                    if nu_i < 0 || nv_i < 0 || nu_i >= grid.nu as i64 || nv_i >= grid.nv as i64 {
                        continue;
                    }
                    if phi[grid.index(nu_i as usize, nv_i as usize)] >= value {
                        strict_max = false;
                    }
                }
            }
            if !strict_max {
                continue;
            }
            if projected_gradient_norm(grid, &landscape.gradient, iu, iv) >= eps {
                continue;
            }
            if opts.require_negative_hessian && !negative_definite_hessian(grid, phi, iu, iv) {
                continue;
            }
            let game = grid.game(iu, iv);
            found.push(Attractor {
                game,
                phi: value,
                class: game.classify(classify),
                z: game.zero_sumness(),
            });
        }
    }
    found.sort_by(|a, b| b.phi.partial_cmp(&a.phi).unwrap());
    found
}

/// Finite-difference Hessian test; boundary points pass by default since
/// the centered stencil does not exist there.
fn negative_definite_hessian(grid: &GridSpec, phi: &[f64], iu: usize, iv: usize) -> bool {
    if iu == 0 || iv == 0 || iu == grid.nu - 1 || iv == grid.nv - 1 {
        return true;
    }
    let (hu, hv) = (grid.step_u(), grid.step_v());
    let at = |du: i64, dv: i64| {
        phi[grid.index((iu as i64 + du) as usize, (iv as i64 + dv) as usize)]
    };
    let huu = (at(1, 0) - 2.0 * at(0, 0) + at(-1, 0)) / (hu * hu);
    let hvv = (at(0, 1) - 2.0 * at(0, 0) + at(0, -1)) / (hv * hv);
    let huv = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * hu * hv);
    // both eigenvalues negative <=> trace < 0 and det > 0
    huu + hvv < 0.0 && huu * hvv - huv * huv > 0.0
}

/// The top attractor, falling back to the grid argmax of fitness when no
/// point clears the attractor thresholds.
pub fn top_attractor(landscape: &Landscape, classify: ClassifyOptions) -> Attractor {
    if let Some(a) = landscape.attractors.first() {
        return *a;
    }
    let (idx, &phi) = landscape
        .phi
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .expect("non-empty grid");
    let game = landscape.grid.game(idx / landscape.grid.nv, idx % landscape.grid.nv);
    Attractor {
        game,
        phi,
        class: game.classify(classify),
        z: game.zero_sumness(),
    }
}

/// One stop of a parameter-loop trajectory.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TrajectoryPoint {
    pub mu_eta: f64,
    pub mu_lambda: f64,
    pub attractor: Attractor,
    /// The attractor as perceived through the utility instantiated at
    /// eta = exp(mu_eta).
    pub perceived: Game,
}

/// Recomputes the landscape at each (mu_eta, mu_lambda) waypoint and emits
/// the dominant attractor with its subjective image.
pub fn trajectory(
    waypoints: &[(f64, f64)],
    base: &TraitDistributions,
    family: UtilityFamily,
    grid: GridSpec,
    opts: &LandscapeOptions,
) -> Result<(Vec<TrajectoryPoint>, u32), crate::game::GameError> {
    assert!(!waypoints.is_empty(), "trajectory needs at least one waypoint");
    let mut points = Vec::with_capacity(waypoints.len());
    let mut failures = 0;
    for &(mu_eta, mu_lambda) in waypoints {
        let dists = TraitDistributions {
            mu_lambda,
            mu_eta,
            ..*base
        };
        let landscape = compute_landscape(grid, &dists, family, opts);
        failures += landscape.qre_failures;
        let attractor = top_attractor(&landscape, opts.classify);
        let model = family.instantiate(mu_eta.exp());
        let perceived = attractor.game.perceived(&model)?;
        points.push(TrajectoryPoint {
            mu_eta,
            mu_lambda,
            attractor,
            perceived,
        });
    }
    Ok((points, failures))
}
