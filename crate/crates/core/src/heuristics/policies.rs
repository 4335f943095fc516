use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};

use super::dfs::{dfs_place, NodeOrder};
use crate::model::{ChainPlacement, Network, Residuals, ServiceChain};
use crate::scalar::Resource;

/// Placement strategies selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    Greedy,
    Central,
    Random,
    Exact,
    /// External policy reached over the bridge protocol.
    Bridge,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Greedy => "greedy",
            PolicyKind::Central => "central",
            PolicyKind::Random => "random",
            PolicyKind::Exact => "exact",
            PolicyKind::Bridge => "bridge",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "greedy" => PolicyKind::Greedy,
            "central" => PolicyKind::Central,
            "random" => PolicyKind::Random,
            "exact" => PolicyKind::Exact,
            "bridge" => PolicyKind::Bridge,
            other => return Err(format!("unknown policy `{other}`")),
        })
    }
}

/// Servers by decreasing residual capacity, ties by index.
pub fn residual_order<R: Resource>(residuals: &Residuals<R>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..residuals.node_count()).collect();
    order.sort_by(|&a, &b| {
        residuals.node[b].partial_cmp(&residuals.node[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    order
}

/// Servers by decreasing degree, ties by index.
pub fn degree_order<R: Resource>(network: &Network<R>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..network.node_count()).collect();
    order.sort_by_key(|&p| (std::cmp::Reverse(network.degree(p)), p));
    order
}

/// Greedy completion from a fixed anchor: DFS expanding the roomiest server first.
pub fn complete_from_anchor<R: Resource>(
    network: &Network<R>,
    residuals: &Residuals<R>,
    chain: &ServiceChain<R>,
    anchor: usize,
) -> Option<ChainPlacement> {
    dfs_place(network, residuals, chain, anchor, &mut NodeOrder::Residual)
}

/// Anchors tried from most to least remaining capacity; DFS expands the same way.
pub fn greedy_place<R: Resource>(
    network: &Network<R>,
    residuals: &Residuals<R>,
    chain: &ServiceChain<R>,
) -> Option<ChainPlacement> {
    residual_order(residuals)
        .into_iter()
        .find_map(|anchor| dfs_place(network, residuals, chain, anchor, &mut NodeOrder::Residual))
}

/// Anchors tried from the highest-degree server down; DFS prefers central neighbors.
pub fn central_place<R: Resource>(
    network: &Network<R>,
    residuals: &Residuals<R>,
    chain: &ServiceChain<R>,
) -> Option<ChainPlacement> {
    degree_order(network)
        .into_iter()
        .find_map(|anchor| dfs_place(network, residuals, chain, anchor, &mut NodeOrder::Degree))
}

/// One attempt from a uniformly drawn anchor with shuffled expansion order.
pub fn random_place<R: Resource>(
    network: &Network<R>,
    residuals: &Residuals<R>,
    chain: &ServiceChain<R>,
    rng: &mut dyn RngCore,
) -> Option<ChainPlacement> {
    let anchor = rng.gen_range(0..network.node_count());
    dfs_place(network, residuals, chain, anchor, &mut NodeOrder::Shuffled(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn greedy_anchors_at_roomiest_server() {
        let net = Network::from_links(vec![2u32, 5, 3], &[(0, 1, 1), (1, 2, 1)]).unwrap();
        let res = Residuals::full(&net);
        let chain = ServiceChain::uniform(0, 1, 1, 0);
        assert_eq!(greedy_place(&net, &res, &chain), Some(vec![1]));
    }

    #[test]
    fn greedy_ties_go_to_lowest_index() {
        let net = Network::from_links(vec![3u32; 4], &[(0, 1, 1), (1, 2, 1), (2, 3, 1)]).unwrap();
        let res = Residuals::full(&net);
        assert_eq!(greedy_place(&net, &res, &ServiceChain::uniform(0, 1, 1, 0)), Some(vec![0]));
    }

    #[test]
    fn central_anchors_at_hub() {
        let net = Network::from_links(vec![3u32; 5], &[(2, 0, 1), (2, 1, 1), (2, 3, 1), (2, 4, 1)]).unwrap();
        let res = Residuals::full(&net);
        assert_eq!(central_place(&net, &res, &ServiceChain::uniform(0, 1, 1, 0)), Some(vec![2]));
    }

    #[test]
    fn central_on_cycle_anchors_at_zero() {
        let net = Network::from_links(vec![3u32; 4], &[(0, 1, 1), (1, 2, 1), (2, 3, 1), (3, 0, 1)]).unwrap();
        let res = Residuals::full(&net);
        assert_eq!(central_place(&net, &res, &ServiceChain::uniform(0, 1, 1, 0)), Some(vec![0]));
    }

    #[test]
    fn random_is_reproducible() {
        let net = Network::from_links(vec![4u32; 5], &[(0, 1, 2), (1, 2, 2), (2, 3, 2), (3, 4, 2), (4, 0, 2)]).unwrap();
        let res = Residuals::full(&net);
        let chain = ServiceChain::uniform(0, 4, 1, 0);
        for seed in 0..20 {
            let a = random_place(&net, &res, &chain, &mut ChaCha8Rng::seed_from_u64(seed));
            let b = random_place(&net, &res, &chain, &mut ChaCha8Rng::seed_from_u64(seed));
            assert_eq!(a, b);
            assert!(res.fits(&chain, &a.unwrap()));
        }
    }

    #[test]
    fn random_on_single_server() {
        let net = Network::from_links(vec![4u32], &[]).unwrap();
        let res = Residuals::full(&net);
        let chain = ServiceChain::uniform(0, 3, 1, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(random_place(&net, &res, &chain, &mut rng), Some(vec![0, 0, 0]));
    }

    #[test]
    fn saturated_network_never_places() {
        let net = Network::from_links(vec![2u32; 3], &[(0, 1, 1), (1, 2, 1)]).unwrap();
        let mut res = Residuals::full(&net);
        res.node = vec![0; 3];
        let chain = ServiceChain::uniform(0, 2, 1, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            assert_eq!(random_place(&net, &res, &chain, &mut rng), None);
        }
        assert_eq!(greedy_place(&net, &res, &chain), None);
        assert_eq!(central_place(&net, &res, &chain), None);
    }

    #[test]
    fn policy_names_roundtrip() {
        for kind in [PolicyKind::Greedy, PolicyKind::Central, PolicyKind::Random, PolicyKind::Exact, PolicyKind::Bridge]
        {
            assert_eq!(kind.name().parse::<PolicyKind>(), Ok(kind));
        }
        assert!("deepsfc".parse::<PolicyKind>().is_err());
    }
}
