//! Agent-based validation model: heterogeneous agents on an adaptive
//! network playing 2x2 games, learning game parameters from successful
//! opponents, re-choosing games by softmax, and rewiring links by income
//! homophily.
//!
//! One replicate is strictly sequential (agents mutate shared network
//! state in a shuffled order each period); replicates are independent and
//! run in parallel under per-replicate seeds derived from the master seed.

pub mod network;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{Game, PayoffMatrix, U_MAX, U_MIN, V_MAX, V_MIN};
use crate::metrics::{population_summary, MetricsRecord, PlayTally, PopulationView};
use crate::qre::{solve_2x2, SolverOptions};
use crate::seeding::{stream_rng, Stream};
use crate::utility::UtilityModel;

pub use network::{SocialNetwork, Topology};

#[derive(Debug, Error)]
pub enum AbmError {
    #[error("invalid topology parameters: {0}")]
    InvalidTopologyParams(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Lognormal trait draws for the ABM population, with additive shift
/// knobs on the log-means used by the sensitivity analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AbmTraitConfig {
    pub mu_eta: f64,
    pub sigma_eta: f64,
    pub mu_lambda: f64,
    pub sigma_lambda: f64,
    pub mu_omega: f64,
    pub sigma_omega: f64,
    /// Displaces the log-mean of the lambda draw.
    pub lambda_shift: f64,
    /// Displaces the log-mean of the eta draw.
    pub eta_shift: f64,
    /// Displaces the log-mean of the omega draw.
    pub omega_shift: f64,
}

impl Default for AbmTraitConfig {
    fn default() -> Self {
        AbmTraitConfig {
            mu_eta: 1.4,
            sigma_eta: 0.5,
            mu_lambda: 1.0,
            sigma_lambda: 0.5,
            mu_omega: 2.0,
            sigma_omega: 0.5,
            lambda_shift: 0.0,
            eta_shift: 0.0,
            omega_shift: 0.0,
        }
    }
}

/// Full simulation configuration. Serialized as JSON for the CLI; unknown
/// fields are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub n_agents: usize,
    pub periods: usize,
    pub replicates: usize,
    pub warmup: usize,
    /// Belief dependence delta_b: temporary pre-play shift of own payoffs
    /// toward the pairwise average.
    pub belief_adjustment: f64,
    /// Learning rate delta_g for the persistent convex update toward the
    /// opponent's game. Zero disables game adaptation entirely.
    pub learning_rate: f64,
    /// Income-homophily strength alpha in the logistic attachment.
    pub homophily: f64,
    /// Income-gap threshold rho at which attachment probability is 1/2.
    pub homophily_threshold: f64,
    /// Mutation coefficient c; each agent mutates with P_m = c / N^2 per
    /// period.
    pub mutation_coefficient: f64,
    pub mutation_sigma: f64,
    pub topology: Topology,
    pub mean_degree: f64,
    /// Payoff normalization strength in [0,1]: interpolates raw matrix
    /// entries toward entries divided by the absolute entry sum.
    pub normalization: f64,
    pub traits: AbmTraitConfig,
    /// Inequality aversion for the Sen welfare column.
    pub inequality_aversion: f64,
    /// Perturbation radius of the game-choice candidate ring.
    pub game_choice_radius: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_agents: 200,
            periods: 200,
            replicates: 10,
            warmup: 5,
            belief_adjustment: 0.0,
            learning_rate: 0.25,
            homophily: 1.0,
            homophily_threshold: 2.0,
            mutation_coefficient: 1.0,
            mutation_sigma: 0.1,
            topology: Topology::ErdosRenyi,
            mean_degree: 8.0,
            normalization: 0.0,
            traits: AbmTraitConfig::default(),
            inequality_aversion: 1.0,
            game_choice_radius: 0.1,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), AbmError> {
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(AbmError::InvalidConfig(msg.to_string()))
            }
        };
        check(self.n_agents >= 2, "need at least 2 agents")?;
        check(self.periods >= 1, "need at least 1 period")?;
        check(self.replicates >= 1, "need at least 1 replicate")?;
        check(self.warmup <= self.periods, "warmup cannot exceed periods")?;
        check(
            (0.0..=1.0).contains(&self.belief_adjustment),
            "belief_adjustment outside [0,1]",
        )?;
        check(
            (0.0..=1.0).contains(&self.learning_rate),
            "learning_rate outside [0,1]",
        )?;
        check(self.homophily >= 0.0, "homophily must be >= 0")?;
        check(self.homophily_threshold >= 0.0, "homophily_threshold must be >= 0")?;
        check(self.mutation_coefficient >= 0.0, "mutation_coefficient must be >= 0")?;
        check(self.mutation_sigma >= 0.0, "mutation_sigma must be >= 0")?;
        check(
            (0.0..=1.0).contains(&self.normalization),
            "normalization outside [0,1]",
        )?;
        check(
            self.mean_degree > 0.0 && self.mean_degree <= (self.n_agents - 1) as f64,
            "mean_degree out of range",
        )?;
        check(
            (0.0..=1.0).contains(&self.inequality_aversion),
            "inequality_aversion outside [0,1]",
        )?;
        check(self.game_choice_radius >= 0.0, "game_choice_radius must be >= 0")?;
        Ok(())
    }

    /// Per-agent mutation probability c / N^2.
    pub fn mutation_probability(&self) -> f64 {
        (self.mutation_coefficient / (self.n_agents as f64).powi(2)).clamp(0.0, 1.0)
    }
}

/// Rolling window of the last five realized payoffs.
#[derive(Debug, Clone, Copy, Default)]
struct PayoffWindow {
    values: [f64; 5],
    len: usize,
    cursor: usize,
}

impl PayoffWindow {
    fn push(&mut self, payoff: f64) {
        self.values[self.cursor] = payoff;
        self.cursor = (self.cursor + 1) % 5;
        self.len = (self.len + 1).min(5);
    }

    fn mean(&self) -> f64 {
        if self.len == 0 {
            return 0.0;
        }
        self.values[..self.len].iter().sum::<f64>() / self.len as f64
    }
}

/// One agent: fixed cognitive traits, evolving balance-sheet variables,
/// and the currently owned game.
#[derive(Debug, Clone)]
pub struct Agent {
    pub id: usize,
    pub eta: f64,
    pub lambda: f64,
    pub omega: f64,
    pub game: Game,
    /// Cumulative wealth, floored at zero.
    pub wealth: f64,
    /// Recent wealth: mean of the stored payoff window.
    pub recent_wealth: f64,
    history: PayoffWindow,
}

impl Agent {
    /// Realizes a material payoff: wealth accumulates with a floor at
    /// zero, and recent wealth becomes the mean of the last <= 5 payoffs.
    fn record_payoff(&mut self, payoff: f64) {
        self.wealth = (self.wealth + payoff).max(0.0);
        self.history.push(payoff);
        self.recent_wealth = self.history.mean();
    }

    /// Prospect valuation with the dynamic reference point W_R.
    fn prospect(&self) -> UtilityModel {
        UtilityModel::Prospect {
            eta: self.eta,
            omega: self.omega,
            reference: self.recent_wealth,
        }
    }
}

/// Temporary pre-play belief adjustment: convex shift of own payoffs
/// toward the pairwise average; the persistent game is untouched.
pub fn adjust_payoffs(own: Game, other: Game, delta_b: f64) -> Game {
    debug_assert!((0.0..=1.0).contains(&delta_b));
    Game::new(
        (1.0 - delta_b) * own.u + delta_b * 0.5 * (own.u + other.u),
        (1.0 - delta_b) * own.v + delta_b * 0.5 * (own.v + other.v),
    )
}

/// Psychometric learning gate on the realized utility difference.
pub fn learn_probability(u_self: f64, u_other: f64, lambda: f64) -> f64 {
    1.0 / (1.0 + (-lambda * (u_other - u_self)).exp())
}

/// Persistent convex update toward the opponent's game.
pub fn learn_update(own: Game, other: Game, delta_g: f64) -> Game {
    debug_assert!((0.0..=1.0).contains(&delta_g));
    Game::new(
        (1.0 - delta_g) * own.u + delta_g * other.u,
        (1.0 - delta_g) * own.v + delta_g * other.v,
    )
}

/// Logistic attachment probability under income homophily; the cut
/// probability is its complement.
pub fn rewire_connect_probability(wr_i: f64, wr_k: f64, alpha: f64, rho: f64) -> f64 {
    1.0 / (1.0 + (alpha * ((wr_i - wr_k).abs() - rho)).exp())
}

fn clip_to_box(g: Game) -> Game {
    Game::new(g.u.clamp(U_MIN, U_MAX), g.v.clamp(V_MIN, V_MAX))
}

/// Material matrix actually played: the raw own-row form, interpolated
/// toward its sum-normalized version by the normalization strength. Near-
/// zero entry sums leave the matrix raw.
fn effective_matrix(g: Game, normalization: f64) -> PayoffMatrix {
    let raw = g.row_matrix(false);
    if normalization == 0.0 {
        return raw;
    }
    let scale = raw.sum().abs();
    if scale < 1e-6 {
        return raw;
    }
    raw.map(|x| (1.0 - normalization) * x + normalization * x / scale)
}

/// Per-run diagnostic counters.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct RunDiagnostics {
    /// QRE solves that hit the iteration cap (last iterate substituted).
    pub qre_failures: u64,
    pub qre_solves: u64,
    /// Agent turns skipped because the agent was isolated.
    pub isolated_skips: u64,
}

/// Final per-agent summary for the agent dump.
#[derive(Debug, Clone, Serialize)]
pub struct AgentSummary {
    pub id: usize,
    pub eta: f64,
    pub lambda: f64,
    pub omega: f64,
    pub u: f64,
    pub v: f64,
    pub wealth: f64,
    pub recent_wealth: f64,
    pub degree: usize,
}

/// Output of one replicate.
#[derive(Debug, Clone)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub metrics: Vec<MetricsRecord>,
    pub agents: Vec<AgentSummary>,
    pub diagnostics: RunDiagnostics,
}

/// Mutable state of one running replicate.
pub struct SimState {
    pub agents: Vec<Agent>,
    pub network: SocialNetwork,
    pub period: usize,
    /// Edge count at initialization; rewiring compensation holds the
    /// graph at this count.
    pub target_edges: usize,
    pub diagnostics: RunDiagnostics,
}

/// Draws the initial population and network.
pub fn init_population<R: Rng>(cfg: &SimConfig, rng: &mut R) -> Result<SimState, AbmError> {
    cfg.validate()?;
    let t = &cfg.traits;
    let eta_dist = LogNormal::new(t.mu_eta + t.eta_shift, t.sigma_eta)
        .map_err(|e| AbmError::InvalidConfig(format!("eta distribution: {e}")))?;
    let lambda_dist = LogNormal::new(t.mu_lambda + t.lambda_shift, t.sigma_lambda)
        .map_err(|e| AbmError::InvalidConfig(format!("lambda distribution: {e}")))?;
    let omega_dist = LogNormal::new(t.mu_omega + t.omega_shift, t.sigma_omega)
        .map_err(|e| AbmError::InvalidConfig(format!("omega distribution: {e}")))?;
    let agents = (0..cfg.n_agents)
        .map(|id| Agent {
            id,
            eta: eta_dist.sample(rng),
            lambda: lambda_dist.sample(rng),
            omega: omega_dist.sample(rng),
            game: Game::new(rng.gen_range(U_MIN..=U_MAX), rng.gen_range(V_MIN..=V_MAX)),
            wealth: 0.0,
            recent_wealth: 0.0,
            history: PayoffWindow::default(),
        })
        .collect();
    let network = network::build_topology(cfg.topology, cfg.n_agents, cfg.mean_degree, rng)
        .map_err(AbmError::InvalidTopologyParams)?;
    let target_edges = network.edge_count();
    Ok(SimState {
        agents,
        network,
        period: 0,
        target_edges,
        diagnostics: RunDiagnostics::default(),
    })
}

/// Solves the match QRE, substituting the last iterate when the solver
/// hits its cap (counted, never silently dropped).
fn match_strategies(
    state: &mut SimState,
    mi: &PayoffMatrix,
    mk: &PayoffMatrix,
    i: usize,
    k: usize,
) -> (f64, f64) {
    let (si, sk) = (
        state.agents[i].prospect().apply_to_matrix(mi),
        state.agents[k].prospect().apply_to_matrix(mk),
    );
    state.diagnostics.qre_solves += 1;
    match solve_2x2(
        &si,
        &sk,
        state.agents[i].lambda,
        state.agents[k].lambda,
        SolverOptions::default(),
    ) {
        Ok(sol) => (sol.p1c, sol.p2c),
        Err(err) => {
            state.diagnostics.qre_failures += 1;
            let last = err.last_iterate();
            (last.p1c, last.p2c)
        }
    }
}

/// Candidate games for the softmax game-choice step: the current game, a
/// ring of eight perturbations, and the opponent's game.
fn game_candidates(current: Game, opponent: Game, radius: f64) -> Vec<Game> {
    let mut out = Vec::with_capacity(10);
    out.push(current);
    for step in 0..8 {
        let angle = std::f64::consts::FRAC_PI_4 * step as f64;
        out.push(clip_to_box(Game::new(
            current.u + radius * angle.cos(),
            current.v + radius * angle.sin(),
        )));
    }
    out.push(opponent);
    out
}

/// Scores a candidate game: prospect utility of its expected material
/// payoff against the last opponent's mixed strategy, with own play a
/// single logit response within the candidate game.
fn candidate_score(agent: &Agent, candidate: Game, opp_pc: f64, normalization: f64) -> f64 {
    let m = effective_matrix(candidate, normalization);
    let subjective = agent.prospect().apply_to_matrix(&m);
    let e_sub_c = opp_pc * subjective.get(0, 0) + (1.0 - opp_pc) * subjective.get(0, 1);
    let e_sub_d = opp_pc * subjective.get(1, 0) + (1.0 - opp_pc) * subjective.get(1, 1);
    let own = crate::qre::logit_response(&[e_sub_c, e_sub_d], agent.lambda)[0];
    let e_c = opp_pc * m.get(0, 0) + (1.0 - opp_pc) * m.get(0, 1);
    let e_d = opp_pc * m.get(1, 0) + (1.0 - opp_pc) * m.get(1, 1);
    let expected = own * e_c + (1.0 - own) * e_d;
    agent.prospect().evaluate(expected)
}

fn choose_game<R: Rng>(
    agent: &Agent,
    opponent_game: Game,
    opp_pc: f64,
    cfg: &SimConfig,
    rng: &mut R,
) -> Game {
    let candidates = game_candidates(agent.game, opponent_game, cfg.game_choice_radius);
    let scores: Vec<f64> = candidates
        .iter()
        .map(|&c| candidate_score(agent, c, opp_pc, cfg.normalization))
        .collect();
    let probs = crate::qre::logit_response(&scores, agent.lambda);
    let draw: f64 = rng.gen();
    let mut acc = 0.0;
    for (candidate, p) in candidates.iter().zip(&probs) {
        acc += p;
        if draw < acc {
            return *candidate;
        }
    }
    *candidates.last().unwrap()
}

/// One rewiring evaluation for agent `i`: one existing link considered
/// for cutting, one (preferably second-order) candidate considered for
/// adding, then per-event compensation keeps the edge count at its
/// initial value.
fn rewire_agent<R: Rng>(state: &mut SimState, i: usize, cfg: &SimConfig, rng: &mut R) {
    let alpha = cfg.homophily;
    let rho = cfg.homophily_threshold;
    let wr = |state: &SimState, a: usize| state.agents[a].recent_wealth;

    let mut cut = false;
    if let Some(j) = state.network.random_neighbor(i, rng) {
        let p_con = rewire_connect_probability(wr(state, i), wr(state, j), alpha, rho);
        if rng.gen_bool(1.0 - p_con) {
            state.network.remove_edge(i, j);
            cut = true;
        }
    }

    let mut added = None;
    let second_order = state.network.second_order_neighbors(i);
    let candidate = if second_order.is_empty() {
        // fallback: uniform non-neighbor of i
        let others: Vec<usize> = (0..state.network.node_count())
            .filter(|&m| m != i && !state.network.has_edge(i, m))
            .collect();
        if others.is_empty() {
            None
        } else {
            Some(others[rng.gen_range(0..others.len())])
        }
    } else {
        Some(second_order[rng.gen_range(0..second_order.len())])
    };
    if let Some(m) = candidate {
        let p_con = rewire_connect_probability(wr(state, i), wr(state, m), alpha, rho);
        if rng.gen_bool(p_con) && state.network.add_edge(i, m) {
            added = Some((i, m));
        }
    }

    // compensation: a lone deletion triggers a random addition elsewhere,
    // a lone addition a random removal elsewhere
    if cut && added.is_none() {
        if let Some((a, b)) = state.network.random_non_edge(rng) {
            state.network.add_edge(a, b);
        }
    } else if !cut {
        if let Some(edge) = added {
            let mut removed = false;
            for _ in 0..32 {
                if let Some((a, b)) = state.network.random_edge(rng) {
                    if (a, b) != edge && (b, a) != edge {
                        state.network.remove_edge(a, b);
                        removed = true;
                        break;
                    }
                } else {
                    break;
                }
            }
            if !removed {
                // degenerate graph: undo the addition to keep the count
                state.network.remove_edge(edge.0, edge.1);
            }
        }
    }
}

/// Advances one period: every agent, in a fresh random order, selects an
/// opponent, plays, learns, re-chooses its game, and rewires; a mutation
/// pass follows. Belief adjustment, game adaptation, and rewiring are
/// inactive during warm-up. Returns the realized-action tally.
pub fn step<R: Rng>(state: &mut SimState, cfg: &SimConfig, rng: &mut R) -> PlayTally {
    let adaptive = state.period >= cfg.warmup;
    let mut tally = PlayTally::default();
    let mut order: Vec<usize> = (0..cfg.n_agents).collect();
    order.shuffle(rng);

    for &i in &order {
        let Some(k) = state.network.random_neighbor(i, rng) else {
            state.diagnostics.isolated_skips += 1;
            continue;
        };
        // (2) temporary belief adjustment toward the pairwise average
        let (gi, gk) = if adaptive && cfg.belief_adjustment > 0.0 {
            (
                adjust_payoffs(state.agents[i].game, state.agents[k].game, cfg.belief_adjustment),
                adjust_payoffs(state.agents[k].game, state.agents[i].game, cfg.belief_adjustment),
            )
        } else {
            (state.agents[i].game, state.agents[k].game)
        };
        let mi = effective_matrix(gi, cfg.normalization);
        let mk = effective_matrix(gk, cfg.normalization);

        // (3) coupled LQRE over prospect-valued matrices
        let prospect_i = state.agents[i].prospect();
        let prospect_k = state.agents[k].prospect();
        let (pic, pkc) = match_strategies(state, &mi, &mk, i, k);

        // (4) sample actions, realize payoffs from each player's own
        // adjusted matrix, update wealth for both
        let i_cooperates = rng.gen_bool(pic);
        let k_cooperates = rng.gen_bool(pkc);
        tally.record(i_cooperates);
        tally.record(k_cooperates);
        let (ai, ak) = (usize::from(!i_cooperates), usize::from(!k_cooperates));
        let pay_i = mi.get(ai, ak);
        let pay_k = mk.get(ak, ai);
        state.agents[i].record_payoff(pay_i);
        state.agents[k].record_payoff(pay_k);

        // (5)+(6) unilateral learning gate, then softmax game re-choice;
        // both constitute game adaptation and are disabled at delta_g = 0
        if adaptive && cfg.learning_rate > 0.0 {
            let u_i = prospect_i.evaluate(pay_i);
            let u_k = prospect_k.evaluate(pay_k);
            let p_learn = learn_probability(u_i, u_k, state.agents[i].lambda);
            if rng.gen_bool(p_learn) {
                state.agents[i].game =
                    learn_update(state.agents[i].game, state.agents[k].game, cfg.learning_rate);
            }
            let opponent_game = state.agents[k].game;
            state.agents[i].game = choose_game(&state.agents[i], opponent_game, pkc, cfg, rng);
        }

        // (7) income-homophily rewiring with degree compensation
        if adaptive {
            rewire_agent(state, i, cfg, rng);
        }
    }

    // mutation pass: rare Gaussian perturbation of owned games
    let p_m = cfg.mutation_probability();
    if p_m > 0.0 {
        let noise = Normal::new(0.0, cfg.mutation_sigma).expect("valid sigma");
        for agent in &mut state.agents {
            if rng.gen_bool(p_m) {
                agent.game = clip_to_box(Game::new(
                    agent.game.u + noise.sample(rng),
                    agent.game.v + noise.sample(rng),
                ));
            }
        }
    }

    state.period += 1;
    tally
}

fn summarize(state: &SimState, replicate: usize, tally: PlayTally, cfg: &SimConfig) -> MetricsRecord {
    let lambdas: Vec<f64> = state.agents.iter().map(|a| a.lambda).collect();
    let etas: Vec<f64> = state.agents.iter().map(|a| a.eta).collect();
    let wealth: Vec<f64> = state.agents.iter().map(|a| a.wealth).collect();
    let recent: Vec<f64> = state.agents.iter().map(|a| a.recent_wealth).collect();
    let games: Vec<Game> = state.agents.iter().map(|a| a.game).collect();
    population_summary(
        state.period - 1,
        replicate,
        PopulationView {
            lambdas: &lambdas,
            etas: &etas,
            wealth: &wealth,
            recent_wealth: &recent,
            games: &games,
        },
        tally,
        state.network.mean_degree(),
        state.network.clustering_coefficient(),
        cfg.inequality_aversion,
    )
}

/// Runs one replicate from its own seed stream.
pub fn run_replicate(cfg: &SimConfig, replicate: usize) -> Result<ReplicateResult, AbmError> {
    let mut rng = stream_rng(cfg.seed, Stream::Replicate, replicate as u64);
    let mut state = init_population(cfg, &mut rng)?;
    let mut metrics = Vec::with_capacity(cfg.periods);
    for _ in 0..cfg.periods {
        let tally = step(&mut state, cfg, &mut rng);
        metrics.push(summarize(&state, replicate, tally, cfg));
    }
    let agents = state
        .agents
        .iter()
        .map(|a| AgentSummary {
            id: a.id,
            eta: a.eta,
            lambda: a.lambda,
            omega: a.omega,
            u: a.game.u,
            v: a.game.v,
            wealth: a.wealth,
            recent_wealth: a.recent_wealth,
            degree: state.network.degree(a.id),
        })
        .collect();
    Ok(ReplicateResult {
        replicate,
        metrics,
        agents,
        diagnostics: state.diagnostics,
    })
}

/// Runs all replicates concurrently; per-replicate seed streams make the
/// result independent of scheduling.
pub fn run_simulation(cfg: &SimConfig) -> Result<Vec<ReplicateResult>, AbmError> {
    cfg.validate()?;
    (0..cfg.replicates)
        .into_par_iter()
        .map(|r| run_replicate(cfg, r))
        .collect()
}
