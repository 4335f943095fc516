//! Random networks and chains.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::StateLayout;
use crate::{UnitChain, UnitNetwork, Units};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid generator config: {0}")]
pub struct ConfigError(pub String);

/// Distributions for synthetic networks and chains. Ranges are inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub nodes: usize,
    /// Number of chains `N` drawn per demonstration.
    pub chains: usize,
    pub length: [usize; 2],
    pub node_demand: [Units; 2],
    pub flow_demand: [Units; 2],
    pub duration: [u32; 2],
    pub capacity: [Units; 2],
    pub bandwidth: [Units; 2],
    /// Probability of each non-tree link; a random spanning tree keeps the graph connected.
    pub link_probability: f64,
    /// Slots a chain may wait for placement before it is dropped.
    pub patience: u32,
    /// Trajectory length `H`.
    pub horizon: u32,
    /// Tracked chains per state, `m`.
    pub max_tracked: usize,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            nodes: 5,
            chains: 8,
            length: [2, 5],
            node_demand: [1, 2],
            flow_demand: [1, 2],
            duration: [1, 10],
            capacity: [2, 4],
            bandwidth: [1, 3],
            link_probability: 0.4,
            patience: 20,
            horizon: 48,
            max_tracked: 8,
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let range = |name: &str, lo: u64, hi: u64| {
            if lo == 0 || lo > hi {
                Err(ConfigError(format!("{name} range [{lo}, {hi}] must be non-empty and positive")))
            } else {
                Ok(())
            }
        };
        if self.nodes == 0 {
            return Err(ConfigError("nodes must be positive".into()));
        }
        range("length", self.length[0] as u64, self.length[1] as u64)?;
        range("node_demand", self.node_demand[0] as u64, self.node_demand[1] as u64)?;
        range("flow_demand", self.flow_demand[0] as u64, self.flow_demand[1] as u64)?;
        range("duration", self.duration[0] as u64, self.duration[1] as u64)?;
        range("capacity", self.capacity[0] as u64, self.capacity[1] as u64)?;
        range("bandwidth", self.bandwidth[0] as u64, self.bandwidth[1] as u64)?;
        if !(0.0..=1.0).contains(&self.link_probability) {
            return Err(ConfigError("link_probability must lie in [0, 1]".into()));
        }
        if self.horizon == 0 || self.max_tracked == 0 {
            return Err(ConfigError("horizon and max_tracked must be positive".into()));
        }
        Ok(())
    }

    /// State layout implied by these distributions over `time_scale` slots.
    pub fn layout(&self, time_scale: u32) -> StateLayout {
        StateLayout {
            nodes: self.nodes,
            max_tracked: self.max_tracked,
            max_chain_len: self.length[1],
            demand_scale: self.node_demand[1].max(self.flow_demand[1]) as f64,
            duration_scale: self.duration[1] as f64,
            time_scale: time_scale.max(1) as f64,
        }
    }

    /// Connected random network: a random spanning tree plus independent extra links.
    pub fn network<G: Rng + ?Sized>(&self, rng: &mut G) -> UnitNetwork {
        let n = self.nodes;
        let capacities = (0..n).map(|_| rng.gen_range(self.capacity[0]..=self.capacity[1])).collect();
        let mut linked = vec![false; n * n];
        let mut links = Vec::new();
        for q in 1..n {
            let p = rng.gen_range(0..q);
            linked[p * n + q] = true;
            links.push((p, q, rng.gen_range(self.bandwidth[0]..=self.bandwidth[1])));
        }
        for p in 0..n {
            for q in p + 1..n {
                if !linked[p * n + q] && rng.gen_bool(self.link_probability) {
                    links.push((p, q, rng.gen_range(self.bandwidth[0]..=self.bandwidth[1])));
                }
            }
        }
        UnitNetwork::from_links(capacities, &links).expect("generated network is valid")
    }

    pub fn chain<G: Rng + ?Sized>(&self, id: usize, release: u32, rng: &mut G) -> UnitChain {
        let len = rng.gen_range(self.length[0]..=self.length[1]);
        let node_demands = (0..len).map(|_| rng.gen_range(self.node_demand[0]..=self.node_demand[1])).collect();
        let flow_demands = (1..len).map(|_| rng.gen_range(self.flow_demand[0]..=self.flow_demand[1])).collect();
        let duration = rng.gen_range(self.duration[0]..=self.duration[1]);
        UnitChain::new(id, node_demands, flow_demands, duration, release)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn connected(net: &UnitNetwork) -> bool {
        let mut seen = vec![false; net.node_count()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(p) = stack.pop() {
            for q in net.neighbors(p) {
                if !std::mem::replace(&mut seen[q], true) {
                    stack.push(q);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    #[test]
    fn networks_are_connected_and_in_range() {
        let cfg = GenConfig { nodes: 7, link_probability: 0.0, ..GenConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let net = cfg.network(&mut rng);
            assert!(connected(&net));
            assert_eq!(net.links().len(), 6);
            assert!(net.capacities().iter().all(|c| (2..=4).contains(c)));
        }
    }

    #[test]
    fn chains_respect_ranges() {
        let cfg = GenConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for i in 0..200 {
            let c = cfg.chain(i, 3, &mut rng);
            assert!(c.validate().is_ok());
            assert!((2..=5).contains(&c.len()));
            assert!((1..=10).contains(&c.duration));
        }
    }

    #[test]
    fn validation() {
        assert!(GenConfig::default().validate().is_ok());
        assert!(GenConfig { length: [3, 2], ..GenConfig::default() }.validate().is_err());
        assert!(GenConfig { capacity: [0, 2], ..GenConfig::default() }.validate().is_err());
        assert!(GenConfig { link_probability: 1.5, ..GenConfig::default() }.validate().is_err());
    }
}
