use super::{Deployment, Instance, Matrix, ModelError, Network, ServiceChain};
use crate::scalar::Resource;

pub(crate) fn check_shape<R: Resource>(instance: &Instance<R>, dep: &Deployment) -> Result<(), ModelError> {
    if dep.chain_count() != instance.chain_count() || dep.schedule.len() != instance.chain_count() {
        return Err(ModelError::Shape(format!(
            "deployment covers {} chains, instance has {}",
            dep.chain_count(),
            instance.chain_count()
        )));
    }
    for (i, chain) in instance.chains.iter().enumerate() {
        if dep.placement[i].len() != chain.len() {
            return Err(ModelError::Shape(format!("chain {i} placement has wrong length")));
        }
        if dep.schedule[i].len() != instance.deadline as usize {
            return Err(ModelError::Shape(format!("chain {i} schedule does not span the horizon")));
        }
    }
    Ok(())
}

/// Per-server load `sum_{i,j} c_ij x_it z_ij^p` in slot `t`.
pub fn node_load<R: Resource>(instance: &Instance<R>, dep: &Deployment, t: u32) -> Result<Vec<R>, ModelError> {
    instance.check_slot(t)?;
    check_shape(instance, dep)?;
    let mut load = vec![R::zero(); instance.node_count()];
    for (i, chain) in instance.chains.iter().enumerate() {
        if !dep.is_active(i, t) {
            continue;
        }
        for (z, &c) in dep.placement[i].iter().zip(&chain.node_demands) {
            if let Some(&p) = z.as_ref().filter(|&&p| p < load.len()) {
                load[p] = load[p] + c;
            }
        }
    }
    Ok(load)
}

/// Symmetric link load in slot `t`. Flows between co-located VNFs are idle and
/// add nothing; flows over non-links are still counted so they show up as
/// overloads of a zero-bandwidth entry.
pub fn link_load<R: Resource>(instance: &Instance<R>, dep: &Deployment, t: u32) -> Result<Matrix<R>, ModelError> {
    instance.check_slot(t)?;
    check_shape(instance, dep)?;
    let n = instance.node_count();
    let mut load = Matrix::filled(n, R::zero());
    for (i, chain) in instance.chains.iter().enumerate() {
        if !dep.is_active(i, t) {
            continue;
        }
        for (j, &b) in chain.flow_demands.iter().enumerate() {
            if let (Some(p), Some(q)) = (dep.placement[i][j], dep.placement[i][j + 1]) {
                if p != q && p < n && q < n {
                    let v = load.get(p, q) + b;
                    load.set(p, q, v);
                    load.set(q, p, v);
                }
            }
        }
    }
    Ok(load)
}

/// Aggregated resource footprint of one placed chain.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Footprint<R> {
    pub nodes: Vec<(usize, R)>,
    /// Undirected links with `p < q`.
    pub links: Vec<(usize, usize, R)>,
}

impl<R: Resource> Footprint<R> {
    pub fn of(chain: &ServiceChain<R>, placement: &[usize]) -> Self {
        let mut nodes: Vec<(usize, R)> = Vec::new();
        for (&p, &c) in placement.iter().zip(&chain.node_demands) {
            match nodes.iter_mut().find(|(q, _)| *q == p) {
                Some(entry) => entry.1 = entry.1 + c,
                None => nodes.push((p, c)),
            }
        }
        let mut links: Vec<(usize, usize, R)> = Vec::new();
        for (w, &b) in placement.windows(2).zip(&chain.flow_demands) {
            let (p, q) = (w[0].min(w[1]), w[0].max(w[1]));
            if p == q {
                continue;
            }
            match links.iter_mut().find(|(a, c, _)| *a == p && *c == q) {
                Some(entry) => entry.2 = entry.2 + b,
                None => links.push((p, q, b)),
            }
        }
        Footprint { nodes, links }
    }
}

/// Remaining server capacity and link bandwidth at one point in time.
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals<R> {
    pub node: Vec<R>,
    pub link: Matrix<R>,
}

impl<R: Resource> Residuals<R> {
    /// Nothing in use.
    pub fn full(network: &Network<R>) -> Self {
        Residuals { node: network.capacities().to_vec(), link: network.bandwidth_matrix().clone() }
    }

    pub fn node_count(&self) -> usize {
        self.node.len()
    }

    /// Whether the whole chain fits, with demands summed over co-located VNFs
    /// and over flows sharing a link.
    pub fn fits(&self, chain: &ServiceChain<R>, placement: &[usize]) -> bool {
        placement.len() == chain.len()
            && placement.iter().all(|&p| p < self.node_count())
            && self.fits_footprint(&Footprint::of(chain, placement))
    }

    pub(crate) fn fits_footprint(&self, fp: &Footprint<R>) -> bool {
        fp.nodes.iter().all(|&(p, c)| c <= self.node[p]) && fp.links.iter().all(|&(p, q, b)| b <= self.link.get(p, q))
    }

    /// Takes the chain's resources. Panics if it does not fit.
    pub fn commit(&mut self, chain: &ServiceChain<R>, placement: &[usize]) {
        self.commit_footprint(&Footprint::of(chain, placement));
    }

    pub(crate) fn commit_footprint(&mut self, fp: &Footprint<R>) {
        assert!(self.fits_footprint(fp), "commit of a chain that does not fit");
        for &(p, c) in &fp.nodes {
            self.node[p] = self.node[p] - c;
        }
        for &(p, q, b) in &fp.links {
            let v = self.link.get(p, q) - b;
            self.link.set(p, q, v);
            self.link.set(q, p, v);
        }
    }

    /// Returns previously committed resources.
    pub fn release(&mut self, chain: &ServiceChain<R>, placement: &[usize]) {
        self.release_footprint(&Footprint::of(chain, placement));
    }

    pub(crate) fn release_footprint(&mut self, fp: &Footprint<R>) {
        for &(p, c) in &fp.nodes {
            self.node[p] = self.node[p] + c;
        }
        for &(p, q, b) in &fp.links {
            let v = self.link.get(p, q) + b;
            self.link.set(p, q, v);
            self.link.set(q, p, v);
        }
    }
}

/// Per-slot residuals over a horizon, for schedule construction.
#[derive(Debug, Clone)]
pub struct Calendar<R> {
    slots: Vec<Residuals<R>>,
}

impl<R: Resource> Calendar<R> {
    pub fn new(network: &Network<R>, horizon: u32) -> Self {
        Calendar { slots: vec![Residuals::full(network); horizon as usize] }
    }

    pub fn horizon(&self) -> u32 {
        self.slots.len() as u32
    }

    pub fn at(&self, slot: u32) -> &Residuals<R> {
        &self.slots[slot as usize]
    }

    pub(crate) fn slot_mut(&mut self, slot: u32) -> &mut Residuals<R> {
        &mut self.slots[slot as usize]
    }

    pub fn fits_at(&self, chain: &ServiceChain<R>, placement: &[usize], slot: u32) -> bool {
        self.slots.get(slot as usize).is_some_and(|r| r.fits(chain, placement))
    }

    pub fn commit_at(&mut self, chain: &ServiceChain<R>, placement: &[usize], slot: u32) {
        self.slots[slot as usize].commit(chain, placement);
    }

    pub fn release_at(&mut self, chain: &ServiceChain<R>, placement: &[usize], slot: u32) {
        self.slots[slot as usize].release(chain, placement);
    }

    /// The first `duration` slots at or after `from` in which the placement fits.
    pub fn earliest_slots(&self, chain: &ServiceChain<R>, placement: &[usize], from: u32) -> Option<Vec<u32>> {
        let fp = Footprint::of(chain, placement);
        let slots: Vec<u32> = (from..self.horizon())
            .filter(|&t| self.slots[t as usize].fits_footprint(&fp))
            .take(chain.duration as usize)
            .collect();
        (slots.len() == chain.duration as usize).then_some(slots)
    }

    /// Calendar with every scheduled chain of `dep` committed.
    pub fn from_deployment(instance: &Instance<R>, dep: &Deployment) -> Self {
        let mut cal = Calendar::new(&instance.network, instance.deadline);
        for (i, chain) in instance.chains.iter().enumerate() {
            if let Some(pl) = dep.chain_placement(i) {
                for t in dep.slots(i) {
                    cal.commit_at(chain, &pl, t);
                }
            }
        }
        cal
    }
}
