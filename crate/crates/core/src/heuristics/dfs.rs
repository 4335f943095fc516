use rand::seq::SliceRandom;
use rand::RngCore;

use crate::model::{ChainPlacement, Matrix, Network, Residuals, ServiceChain};
use crate::scalar::Resource;

/// Order in which DFS expands candidate servers for the next VNF.
pub enum NodeOrder<'r> {
    /// Ascending server index.
    Index,
    /// Most remaining capacity first, as it stood before this chain.
    Residual,
    /// Highest degree first.
    Degree,
    /// Uniformly shuffled at every expansion.
    Shuffled(&'r mut dyn RngCore),
}

struct Search<'a, R> {
    network: &'a Network<R>,
    residuals: &'a Residuals<R>,
    chain: &'a ServiceChain<R>,
    used_node: Vec<R>,
    used_link: Matrix<R>,
    path: Vec<usize>,
}

impl<'a, R: Resource> Search<'a, R> {
    fn new(network: &'a Network<R>, residuals: &'a Residuals<R>, chain: &'a ServiceChain<R>) -> Self {
        let n = network.node_count();
        Search {
            network,
            residuals,
            chain,
            used_node: vec![R::zero(); n],
            used_link: Matrix::filled(n, R::zero()),
            path: Vec::with_capacity(chain.len()),
        }
    }

    fn node_fits(&self, server: usize, vnf: usize) -> bool {
        self.used_node[server] + self.chain.node_demands[vnf] <= self.residuals.node[server]
    }

    fn link_fits(&self, from: usize, to: usize, flow: usize) -> bool {
        from == to
            || (self.network.is_link(from, to)
                && self.used_link.get(from, to) + self.chain.flow_demands[flow] <= self.residuals.link.get(from, to))
    }

    fn push(&mut self, server: usize) {
        let j = self.path.len();
        self.used_node[server] = self.used_node[server] + self.chain.node_demands[j];
        if let Some(&prev) = self.path.last() {
            if prev != server {
                let v = self.used_link.get(prev, server) + self.chain.flow_demands[j - 1];
                self.used_link.set(prev, server, v);
                self.used_link.set(server, prev, v);
            }
        }
        self.path.push(server);
    }

    fn pop(&mut self) {
        let server = self.path.pop().expect("pop on empty path");
        let j = self.path.len();
        self.used_node[server] = self.used_node[server] - self.chain.node_demands[j];
        if let Some(&prev) = self.path.last() {
            if prev != server {
                let v = self.used_link.get(prev, server) - self.chain.flow_demands[j - 1];
                self.used_link.set(prev, server, v);
                self.used_link.set(server, prev, v);
            }
        }
    }

    /// Servers that may host the next VNF: the current one (idle flow) or a neighbor.
    fn candidates(&self, order: &mut NodeOrder<'_>) -> Vec<usize> {
        let cur = *self.path.last().expect("candidates need an anchor");
        let j = self.path.len();
        let mut out: Vec<usize> = (0..self.network.node_count())
            .filter(|&q| {
                (q == cur || self.network.is_link(cur, q)) && self.node_fits(q, j) && self.link_fits(cur, q, j - 1)
            })
            .collect();
        match order {
            NodeOrder::Index => {}
            NodeOrder::Residual => out.sort_by(|&a, &b| {
                let (ra, rb) = (self.residuals.node[a], self.residuals.node[b]);
                rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
            }),
            NodeOrder::Degree => out.sort_by_key(|&q| (q == cur, std::cmp::Reverse(self.network.degree(q)), q)),
            NodeOrder::Shuffled(rng) => out.shuffle(rng),
        }
        out
    }

    fn first(&mut self, order: &mut NodeOrder<'_>) -> bool {
        if self.path.len() == self.chain.len() {
            return true;
        }
        for q in self.candidates(order) {
            self.push(q);
            if self.first(order) {
                return true;
            }
            self.pop();
        }
        false
    }

    fn all(&mut self, out: &mut Vec<ChainPlacement>) {
        if self.path.len() == self.chain.len() {
            out.push(self.path.clone());
            return;
        }
        for q in self.candidates(&mut NodeOrder::Index) {
            self.push(q);
            self.all(out);
            self.pop();
        }
    }
}

/// Depth-first placement of `chain` starting at `anchor`.
///
/// VNF `j + 1` goes on the server of VNF `j` or on a linked neighbor with
/// enough bandwidth; every server must hold the summed demand of all VNFs it
/// receives. Backtracks on dead ends and returns `None` when no assignment
/// exists from this anchor.
pub fn dfs_place<R: Resource>(
    network: &Network<R>,
    residuals: &Residuals<R>,
    chain: &ServiceChain<R>,
    anchor: usize,
    order: &mut NodeOrder<'_>,
) -> Option<ChainPlacement> {
    if anchor >= network.node_count() || chain.is_empty() {
        return None;
    }
    let mut search = Search::new(network, residuals, chain);
    if !search.node_fits(anchor, 0) {
        return None;
    }
    search.push(anchor);
    search.first(order).then_some(search.path)
}

/// Every valid placement of `chain` against `residuals`, over all anchors.
pub fn all_placements<R: Resource>(
    network: &Network<R>,
    residuals: &Residuals<R>,
    chain: &ServiceChain<R>,
) -> Vec<ChainPlacement> {
    let mut out = Vec::new();
    for anchor in 0..network.node_count() {
        let mut search = Search::new(network, residuals, chain);
        if search.node_fits(anchor, 0) {
            search.push(anchor);
            search.all(&mut out);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_vnf_on_anchor() {
        let net = Network::from_links(vec![1u32, 3], &[(0, 1, 1)]).unwrap();
        let res = Residuals::full(&net);
        let chain = ServiceChain::uniform(0, 1, 1, 0);
        assert_eq!(dfs_place(&net, &res, &chain, 0, &mut NodeOrder::Index), Some(vec![0]));
        let big = ServiceChain::new(0, vec![2u32], vec![], 1, 0);
        assert_eq!(dfs_place(&net, &res, &big, 0, &mut NodeOrder::Index), None);
    }

    #[test]
    fn exact_fit_on_a_path() {
        let net = Network::from_links(vec![1u32, 1, 1], &[(0, 1, 1), (1, 2, 1)]).unwrap();
        let res = Residuals::full(&net);
        let chain = ServiceChain::uniform(0, 3, 1, 0);
        for order in [NodeOrder::Index, NodeOrder::Residual, NodeOrder::Degree] {
            let mut order = order;
            assert_eq!(dfs_place(&net, &res, &chain, 0, &mut order), Some(vec![0, 1, 2]));
        }
    }

    #[test]
    fn backtracks_out_of_dead_end() {
        // 0 - 1 - 2 and 0 - 3 (leaf). Residual order prefers the leaf first.
        let net = Network::from_links(vec![1u32, 1, 1, 5], &[(0, 1, 1), (1, 2, 1), (0, 3, 1)]).unwrap();
        let res = Residuals::full(&net);
        let chain = ServiceChain::new(0, vec![1, 1, 1], vec![1, 1], 1, 0);
        let got = dfs_place(&net, &res, &chain, 0, &mut NodeOrder::Residual).unwrap();
        assert_eq!(got, vec![0, 3, 3]);
        // The leaf still ranks first but cannot take the heavy last VNF.
        let heavy = ServiceChain::new(0, vec![1, 1, 2], vec![1, 1], 1, 0);
        let mut tight = res.clone();
        tight.node[2] = 2;
        tight.node[3] = 2;
        assert_eq!(dfs_place(&net, &tight, &heavy, 0, &mut NodeOrder::Residual), Some(vec![0, 1, 2]));
    }

    fn valid(net: &Network<u32>, res: &Residuals<u32>, chain: &ServiceChain<u32>, pl: &[usize]) -> bool {
        pl.windows(2).all(|w| w[0] == w[1] || net.is_link(w[0], w[1])) && res.fits(chain, pl)
    }

    // Enumerates all n^L assignments anchored at `anchor`.
    fn brute_exists(net: &Network<u32>, res: &Residuals<u32>, chain: &ServiceChain<u32>, anchor: usize) -> bool {
        let n = net.node_count();
        let l = chain.len();
        (0..n.pow(l as u32)).any(|mut code| {
            let mut pl = Vec::with_capacity(l);
            for _ in 0..l {
                pl.push(code % n);
                code /= n;
            }
            pl[0] == anchor && valid(net, res, chain, &pl)
        })
    }

    #[test]
    fn fails_exactly_when_enumeration_finds_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let n = rng.gen_range(1..=5);
            let mut links = Vec::new();
            for p in 0..n {
                for q in p + 1..n {
                    if rng.gen_bool(0.5) {
                        links.push((p, q, rng.gen_range(1..=3)));
                    }
                }
            }
            let net = Network::from_links((0..n).map(|_| rng.gen_range(0..=4)).collect(), &links).unwrap();
            let len = rng.gen_range(1..=3);
            let chain = ServiceChain::new(
                0,
                (0..len).map(|_| rng.gen_range(1..=2)).collect(),
                (1..len).map(|_| rng.gen_range(1..=2)).collect(),
                1,
                0,
            );
            let res = Residuals::full(&net);
            let anchor = rng.gen_range(0..n);
            let expected = brute_exists(&net, &res, &chain, anchor);
            let mut shuffle_rng = ChaCha8Rng::seed_from_u64(rng.gen());
            for mut order in
                [NodeOrder::Index, NodeOrder::Residual, NodeOrder::Degree, NodeOrder::Shuffled(&mut shuffle_rng)]
            {
                let got = dfs_place(&net, &res, &chain, anchor, &mut order);
                assert_eq!(got.is_some(), expected);
                if let Some(pl) = got {
                    assert_eq!(pl[0], anchor);
                    assert!(valid(&net, &res, &chain, &pl));
                }
            }
            let all = all_placements(&net, &res, &chain);
            assert!(all.iter().all(|pl| valid(&net, &res, &chain, pl)));
            assert_eq!(all.iter().any(|pl| pl[0] == anchor), expected);
        }
    }
}
