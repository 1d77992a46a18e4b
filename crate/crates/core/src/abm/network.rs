//! Undirected simple graph over agent ids with the generators and
//! measurements the adaptive-network ABM needs.
//!
//! Adjacency sets are ordered so every sampling operation is a
//! deterministic function of the RNG stream.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Initial topology families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Topology {
    ErdosRenyi,
    WattsStrogatz {
        #[serde(default = "default_ws_beta")]
        beta: f64,
    },
    HolmeKim {
        #[serde(default = "default_hk_triad")]
        triad_probability: f64,
    },
}

fn default_ws_beta() -> f64 {
    0.1
}

fn default_hk_triad() -> f64 {
    0.3
}

impl Default for Topology {
    fn default() -> Self {
        Topology::ErdosRenyi
    }
}

/// Undirected simple graph: no self-loops, no multi-edges.
#[derive(Debug, Clone)]
pub struct SocialNetwork {
    adjacency: Vec<BTreeSet<usize>>,
    edge_count: usize,
}

impl SocialNetwork {
    pub fn empty(n: usize) -> Self {
        SocialNetwork {
            adjacency: vec![BTreeSet::new(); n],
            edge_count: 0,
        }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn mean_degree(&self) -> f64 {
        2.0 * self.edge_count as f64 / self.adjacency.len() as f64
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].contains(&j)
    }

    /// Adds an edge; returns false for self-loops and existing edges.
    pub fn add_edge(&mut self, i: usize, j: usize) -> bool {
        if i == j || self.adjacency[i].contains(&j) {
            return false;
        }
        self.adjacency[i].insert(j);
        self.adjacency[j].insert(i);
        self.edge_count += 1;
        true
    }

    pub fn remove_edge(&mut self, i: usize, j: usize) -> bool {
        if !self.adjacency[i].remove(&j) {
            return false;
        }
        self.adjacency[j].remove(&i);
        self.edge_count -= 1;
        true
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[i].iter().copied()
    }

    pub fn random_neighbor<R: Rng>(&self, i: usize, rng: &mut R) -> Option<usize> {
        let deg = self.adjacency[i].len();
        if deg == 0 {
            return None;
        }
        self.adjacency[i].iter().nth(rng.gen_range(0..deg)).copied()
    }

    /// Uniform random existing edge.
    pub fn random_edge<R: Rng>(&self, rng: &mut R) -> Option<(usize, usize)> {
        if self.edge_count == 0 {
            return None;
        }
        let mut k = rng.gen_range(0..self.edge_count);
        for (i, nbrs) in self.adjacency.iter().enumerate() {
            let outgoing = nbrs.iter().filter(|&&j| j > i).count();
            if k < outgoing {
                let j = nbrs.iter().filter(|&&j| j > i).nth(k).copied().unwrap();
                return Some((i, j));
            }
            k -= outgoing;
        }
        unreachable!("edge count out of sync");
    }

    /// Uniform random absent edge, by rejection; `None` when the graph is
    /// complete.
    pub fn random_non_edge<R: Rng>(&self, rng: &mut R) -> Option<(usize, usize)> {
        let n = self.adjacency.len();
        if self.edge_count >= n * (n - 1) / 2 {
            return None;
        }
        loop {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            if i != j && !self.has_edge(i, j) {
                return Some((i, j));
            }
        }
    }

    /// Second-order neighbors: nodes two hops away that are not already
    /// adjacent, in ascending order.
    pub fn second_order_neighbors(&self, i: usize) -> Vec<usize> {
        let mut out = BTreeSet::new();
        for &j in &self.adjacency[i] {
            for &k in &self.adjacency[j] {
                if k != i && !self.adjacency[i].contains(&k) {
                    out.insert(k);
                }
            }
        }
        out.into_iter().collect()
    }

    /// Average local clustering coefficient; nodes of degree < 2 count as
    /// zero.
    pub fn clustering_coefficient(&self) -> f64 {
        let n = self.adjacency.len();
        let mut total = 0.0;
        for i in 0..n {
            let nbrs: Vec<usize> = self.adjacency[i].iter().copied().collect();
            let deg = nbrs.len();
            if deg < 2 {
                continue;
            }
            let mut links = 0;
            for a in 0..deg {
                for b in a + 1..deg {
                    if self.has_edge(nbrs[a], nbrs[b]) {
                        links += 1;
                    }
                }
            }
            total += 2.0 * links as f64 / (deg * (deg - 1)) as f64;
        }
        total / n as f64
    }

    /// Structural sanity check used by tests: adjacency symmetric, no
    /// self-loops, edge count consistent.
    pub fn is_simple(&self) -> bool {
        let mut count = 0;
        for (i, nbrs) in self.adjacency.iter().enumerate() {
            if nbrs.contains(&i) {
                return false;
            }
            for &j in nbrs {
                if !self.adjacency[j].contains(&i) {
                    return false;
                }
                if j > i {
                    count += 1;
                }
            }
        }
        count == self.edge_count
    }
}

/// Builds the configured topology at the target mean degree.
pub fn build_topology<R: Rng>(
    topology: Topology,
    n: usize,
    mean_degree: f64,
    rng: &mut R,
) -> Result<SocialNetwork, String> {
    if n < 2 {
        return Err("need at least 2 nodes".into());
    }
    if mean_degree <= 0.0 || mean_degree > (n - 1) as f64 {
        return Err(format!("mean degree {mean_degree} out of range for {n} nodes"));
    }
    match topology {
        Topology::ErdosRenyi => Ok(erdos_renyi(n, mean_degree, rng)),
        Topology::WattsStrogatz { beta } => {
            if !(0.0..=1.0).contains(&beta) {
                return Err(format!("rewiring probability {beta} outside [0,1]"));
            }
            watts_strogatz(n, mean_degree, beta, rng)
        }
        Topology::HolmeKim { triad_probability } => {
            if !(0.0..=1.0).contains(&triad_probability) {
                return Err(format!("triad probability {triad_probability} outside [0,1]"));
            }
            holme_kim(n, mean_degree, triad_probability, rng)
        }
    }
}

/// G(n, p) with p chosen for the target mean degree.
fn erdos_renyi<R: Rng>(n: usize, mean_degree: f64, rng: &mut R) -> SocialNetwork {
    let p = mean_degree / (n - 1) as f64;
    let mut net = SocialNetwork::empty(n);
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p.min(1.0)) {
                net.add_edge(i, j);
            }
        }
    }
    net
}

/// Ring lattice with k nearest neighbors, each edge rewired with
/// probability beta. k is the even rounding of the target mean degree.
fn watts_strogatz<R: Rng>(
    n: usize,
    mean_degree: f64,
    beta: f64,
    rng: &mut R,
) -> Result<SocialNetwork, String> {
    let half = ((mean_degree / 2.0).round() as usize).max(1);
    if 2 * half >= n {
        return Err(format!("lattice degree {} too large for {n} nodes", 2 * half));
    }
    let mut net = SocialNetwork::empty(n);
    for i in 0..n {
        for d in 1..=half {
            net.add_edge(i, (i + d) % n);
        }
    }
    for i in 0..n {
        for d in 1..=half {
            let j = (i + d) % n;
            if !rng.gen_bool(beta) {
                continue;
            }
            // rewire the lattice edge (i, j) to a random target
            let target = rng.gen_range(0..n);
            if target != i && !net.has_edge(i, target) && net.has_edge(i, j) {
                net.remove_edge(i, j);
                net.add_edge(i, target);
            }
        }
    }
    Ok(net)
}

/// Growing scale-free graph with triad formation: each arriving node
/// attaches m = mean_degree/2 edges, preferentially by degree, and with
/// the given probability closes a triangle on the previous attachment
/// instead.
fn holme_kim<R: Rng>(
    n: usize,
    mean_degree: f64,
    triad_probability: f64,
    rng: &mut R,
) -> Result<SocialNetwork, String> {
    let m = ((mean_degree / 2.0).round() as usize).max(1);
    if m >= n {
        return Err(format!("attachment count {m} too large for {n} nodes"));
    }
    let mut net = SocialNetwork::empty(n);
    // endpoints repeated by degree; sampling from it is preferential
    let mut repeated: Vec<usize> = Vec::new();
    for source in m..n {
        let mut attached: Vec<usize> = Vec::new();
        while attached.len() < m {
            let triad_target = attached.last().and_then(|&last| {
                let candidates: Vec<usize> = net
                    .neighbors(last)
                    .filter(|&c| c != source && !net.has_edge(source, c))
                    .collect();
                if candidates.is_empty() {
                    None
                } else {
                    Some(candidates[rng.gen_range(0..candidates.len())])
                }
            });
            let target = if !attached.is_empty() && rng.gen_bool(triad_probability) {
                triad_target
            } else {
                None
            };
            let target = target.unwrap_or_else(|| {
                if repeated.is_empty() {
                    rng.gen_range(0..source.max(1))
                } else {
                    repeated[rng.gen_range(0..repeated.len())]
                }
            });
            if net.add_edge(source, target) {
                attached.push(target);
                repeated.push(target);
            } else if net.degree(source) + 1 >= source {
                break; // no further distinct targets exist
            }
        }
        repeated.extend(std::iter::repeat(source).take(attached.len()));
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_node_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = build_topology(Topology::ErdosRenyi, 2, 1.0, &mut rng).unwrap();
        assert!(net.edge_count() <= 1);
        assert!(net.is_simple());
    }

    #[test]
    fn generators_hit_target_mean_degree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for topology in [
            Topology::ErdosRenyi,
            Topology::WattsStrogatz { beta: 0.1 },
            Topology::HolmeKim {
                triad_probability: 0.3,
            },
        ] {
            let net = build_topology(topology, 500, 8.0, &mut rng).unwrap();
            assert!(net.is_simple());
            let d = net.mean_degree();
            assert!(
                (d - 8.0).abs() < 1.0,
                "{topology:?}: mean degree {d} far from target"
            );
        }
    }

    #[test]
    fn watts_strogatz_without_rewiring_is_lattice() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = build_topology(Topology::WattsStrogatz { beta: 0.0 }, 20, 4.0, &mut rng).unwrap();
        assert_eq!(net.edge_count(), 40);
        for i in 0..20 {
            assert_eq!(net.degree(i), 4);
        }
        // ring lattice local clustering with k=4 is 0.5
        assert!((net.clustering_coefficient() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn holme_kim_clusters_more_than_er() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let hk = build_topology(
            Topology::HolmeKim {
                triad_probability: 0.6,
            },
            300,
            8.0,
            &mut rng,
        )
        .unwrap();
        let er = build_topology(Topology::ErdosRenyi, 300, 8.0, &mut rng).unwrap();
        assert!(hk.clustering_coefficient() > 2.0 * er.clustering_coefficient());
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(build_topology(Topology::ErdosRenyi, 10, 0.0, &mut rng).is_err());
        assert!(build_topology(Topology::ErdosRenyi, 10, 20.0, &mut rng).is_err());
        assert!(build_topology(Topology::WattsStrogatz { beta: 1.5 }, 10, 4.0, &mut rng).is_err());
        assert!(
            build_topology(Topology::HolmeKim { triad_probability: -0.1 }, 10, 4.0, &mut rng)
                .is_err()
        );
    }

    #[test]
    fn edge_sampling_and_second_order() {
        let mut net = SocialNetwork::empty(5);
        net.add_edge(0, 1);
        net.add_edge(1, 2);
        net.add_edge(2, 3);
        assert_eq!(net.second_order_neighbors(0), vec![2]);
        assert_eq!(net.second_order_neighbors(3), vec![1]);
        assert!(net.second_order_neighbors(4).is_empty());

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let (i, j) = net.random_edge(&mut rng).unwrap();
            assert!(net.has_edge(i, j));
            let (a, b) = net.random_non_edge(&mut rng).unwrap();
            assert!(!net.has_edge(a, b) && a != b);
        }
    }

    #[test]
    fn add_remove_bookkeeping() {
        let mut net = SocialNetwork::empty(4);
        assert!(net.add_edge(0, 1));
        assert!(!net.add_edge(1, 0), "duplicate edge");
        assert!(!net.add_edge(2, 2), "self-loop");
        assert_eq!(net.edge_count(), 1);
        assert!(net.remove_edge(0, 1));
        assert!(!net.remove_edge(0, 1));
        assert_eq!(net.edge_count(), 0);
        assert!(net.is_simple());
    }
}
