//! Inequality, welfare, cooperation, and trait-outcome measurements.

use serde::Serialize;

use crate::game::Game;

/// Gini coefficient of a non-negative vector via the sorted O(n log n)
/// form of the pairwise-difference definition. An all-zero population is
/// defined to have G = 0.
pub fn gini(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "gini of empty vector");
    debug_assert!(values.iter().all(|&x| x >= 0.0), "gini requires non-negative values");
    let n = values.len() as f64;
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // sum_i (2i - n - 1) x_(i) / (n * total), i one-based over ascending order
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| (2.0 * (i as f64 + 1.0) - n - 1.0) * x)
        .sum();
    weighted / (n * total)
}

/// Sen welfare: mean income discounted by inequality,
/// mean(values) * (1 - alpha * G).
pub fn sen_welfare(values: &[f64], alpha_ineq: f64) -> f64 {
    assert!((0.0..=1.0).contains(&alpha_ineq));
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    mean * (1.0 - alpha_ineq * gini(values))
}

/// Pearson correlation; `None` when either argument has zero variance.
pub fn trait_correlation(traits: &[f64], outcomes: &[f64]) -> Option<f64> {
    assert_eq!(traits.len(), outcomes.len());
    assert!(traits.len() >= 2);
    let n = traits.len() as f64;
    let mx = traits.iter().sum::<f64>() / n;
    let my = outcomes.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (&x, &y) in traits.iter().zip(outcomes) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / (vx * vy).sqrt())
}

/// Per-period population record. Missing values (no plays this period,
/// zero-variance correlations) stay `None` and serialize to empty CSV
/// cells.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub period: usize,
    pub replicate: usize,
    pub mean_income: f64,
    pub gini: f64,
    pub sen_welfare: f64,
    pub coop_rate: Option<f64>,
    pub mean_z: f64,
    pub mean_u: f64,
    pub mean_v: f64,
    pub mean_degree: f64,
    pub clustering: f64,
    pub corr_lambda_wealth: Option<f64>,
    pub corr_eta_wealth: Option<f64>,
    pub corr_lambda_income: Option<f64>,
    pub corr_eta_income: Option<f64>,
}

/// Borrowed view of the population state used to assemble a record.
#[derive(Debug, Clone, Copy)]
pub struct PopulationView<'a> {
    pub lambdas: &'a [f64],
    pub etas: &'a [f64],
    /// Cumulative wealth W (floored at zero by the ABM).
    pub wealth: &'a [f64],
    /// Recent wealth W_R, the rolling mean of the last five payoffs.
    pub recent_wealth: &'a [f64],
    pub games: &'a [Game],
}

/// Realized-action tally for one period.
#[derive(Debug, Clone, Copy, Default)]
pub struct PlayTally {
    pub cooperations: usize,
    pub actions: usize,
}

impl PlayTally {
    pub fn record(&mut self, cooperated: bool) {
        self.actions += 1;
        if cooperated {
            self.cooperations += 1;
        }
    }
}

/// Assembles the per-period record.
///
/// Income is recent wealth floored at zero: the welfare metrics (mean,
/// Gini, Sen) require non-negative incomes, while the trait correlations
/// use the raw signals.
pub fn population_summary(
    period: usize,
    replicate: usize,
    view: PopulationView<'_>,
    tally: PlayTally,
    mean_degree: f64,
    clustering: f64,
    inequality_aversion: f64,
) -> MetricsRecord {
    let n = view.games.len();
    assert!(n >= 1, "population summary needs at least one agent");
    let income: Vec<f64> = view.recent_wealth.iter().map(|&w| w.max(0.0)).collect();
    let mean_income = income.iter().sum::<f64>() / n as f64;
    let g = gini(&income);
    let sen = mean_income * (1.0 - inequality_aversion * g);
    let coop_rate = if tally.actions > 0 {
        Some(tally.cooperations as f64 / tally.actions as f64)
    } else {
        None
    };
    let mean_z = view.games.iter().map(|g| g.zero_sumness()).sum::<f64>() / n as f64;
    let mean_u = view.games.iter().map(|g| g.u).sum::<f64>() / n as f64;
    let mean_v = view.games.iter().map(|g| g.v).sum::<f64>() / n as f64;
    MetricsRecord {
        period,
        replicate,
        mean_income,
        gini: g,
        sen_welfare: sen,
        coop_rate,
        mean_z,
        mean_u,
        mean_v,
        mean_degree,
        clustering,
        corr_lambda_wealth: trait_correlation(view.lambdas, view.wealth),
        corr_eta_wealth: trait_correlation(view.etas, view.wealth),
        corr_lambda_income: trait_correlation(view.lambdas, view.recent_wealth),
        corr_eta_income: trait_correlation(view.etas, view.recent_wealth),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// O(n^2) pairwise oracle for the Gini coefficient.
    pub fn gini_pairwise(values: &[f64]) -> f64 {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        if mean <= 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for &a in values {
            for &b in values {
                acc += (a - b).abs();
            }
        }
        acc / (2.0 * n * n * mean)
    }

    #[test]
    fn gini_known_values() {
        assert_eq!(gini(&[1.0, 1.0, 1.0, 1.0]), 0.0);
        assert_relative_eq!(gini(&[0.0, 0.0, 0.0, 1.0]), 0.75, epsilon = 1e-15);
        assert_eq!(gini(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn gini_scale_and_replication_invariant() {
        let xs = [0.3, 1.9, 0.0, 2.4, 0.7];
        let scaled: Vec<f64> = xs.iter().map(|x| x * 17.0).collect();
        assert_relative_eq!(gini(&xs), gini(&scaled), epsilon = 1e-12);
        let mut doubled = xs.to_vec();
        doubled.extend_from_slice(&xs);
        assert_relative_eq!(gini(&xs), gini(&doubled), epsilon = 1e-12);
    }

    #[test]
    fn gini_matches_pairwise_oracle() {
        use rand::Rng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        use rand::SeedableRng;
        for _ in 0..100 {
            let n = rng.gen_range(2..60);
            let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
            assert_relative_eq!(gini(&xs), gini_pairwise(&xs), epsilon = 1e-9);
        }
    }

    #[test]
    fn gini_bounded_by_one_minus_reciprocal() {
        let xs = [0.0, 0.0, 0.0, 1.0];
        assert!(gini(&xs) <= 1.0 - 1.0 / xs.len() as f64 + 1e-12);
    }

    #[test]
    fn sen_welfare_values() {
        assert_relative_eq!(sen_welfare(&[2.0, 2.0, 2.0], 1.0), 2.0);
        assert_relative_eq!(sen_welfare(&[0.0, 5.0, 1.0], 0.0), 2.0);
        assert_relative_eq!(sen_welfare(&[0.0, 0.0, 0.0, 1.0], 1.0), 0.0625, epsilon = 1e-15);
        // never exceeds the mean
        let xs = [0.1, 3.0, 0.4, 2.2];
        assert!(sen_welfare(&xs, 1.0) <= xs.iter().sum::<f64>() / 4.0);
    }

    #[test]
    fn pearson_known_values() {
        let x = [1.0, 2.0, 3.0];
        assert_relative_eq!(trait_correlation(&x, &x).unwrap(), 1.0, epsilon = 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_relative_eq!(trait_correlation(&x, &neg).unwrap(), -1.0, epsilon = 1e-12);
        let y = [2.0, 4.0, 7.0];
        assert_relative_eq!(trait_correlation(&x, &y).unwrap(), 0.993_399, epsilon = 1e-6);
        assert_relative_eq!(
            trait_correlation(&x, &y).unwrap(),
            trait_correlation(&y, &x).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn pearson_zero_variance_is_missing() {
        assert_eq!(trait_correlation(&[1.0, 1.0, 1.0], &[0.0, 2.0, 4.0]), None);
    }

    #[test]
    fn population_summary_three_agent_fixture() {
        let games = [Game::new(0.5, 0.5), Game::new(0.5, 0.5), Game::new(0.5, 0.5)];
        let view = PopulationView {
            lambdas: &[1.0, 2.0, 3.0],
            etas: &[3.0, 2.0, 1.0],
            wealth: &[1.0, 2.0, 3.0],
            recent_wealth: &[0.0, 1.0, 2.0],
            games: &games,
        };
        let mut tally = PlayTally::default();
        tally.record(true);
        tally.record(true);
        tally.record(false);
        let rec = population_summary(7, 2, view, tally, 4.0, 0.25, 1.0);
        assert_eq!(rec.period, 7);
        assert_eq!(rec.replicate, 2);
        assert_relative_eq!(rec.mean_income, 1.0, epsilon = 1e-15);
        // gini([0,1,2]) = 4/9
        assert_relative_eq!(rec.gini, 4.0 / 9.0, epsilon = 1e-12);
        assert_relative_eq!(rec.sen_welfare, 1.0 - 4.0 / 9.0, epsilon = 1e-12);
        assert_relative_eq!(rec.coop_rate.unwrap(), 2.0 / 3.0, epsilon = 1e-15);
        // all games on the diagonal: full mutual interest
        assert_relative_eq!(rec.mean_z, -1.0, epsilon = 1e-15);
        assert_relative_eq!(rec.mean_u, 0.5, epsilon = 1e-15);
        assert_relative_eq!(rec.corr_lambda_wealth.unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(rec.corr_eta_wealth.unwrap(), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn population_summary_no_plays_reports_missing_coop() {
        let games = [Game::new(0.0, 1.0), Game::new(0.0, 1.0)];
        let view = PopulationView {
            lambdas: &[1.0, 1.0],
            etas: &[1.0, 1.0],
            wealth: &[0.0, 0.0],
            recent_wealth: &[0.0, 0.0],
            games: &games,
        };
        let rec = population_summary(0, 0, view, PlayTally::default(), 0.0, 0.0, 1.0);
        assert_eq!(rec.coop_rate, None);
        assert_eq!(rec.corr_lambda_wealth, None);
    }
}
