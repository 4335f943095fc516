//! The joint placement/scheduling problem: instance data, deployments, resource
//! accounting, feasibility checking and the state encoding.

mod feasibility;
pub(crate) mod load;
mod state;

pub use feasibility::{check_feasible, reward, Constraint, FeasibilityReport, Violation};
pub use load::{link_load, node_load, Calendar, Residuals};
pub use state::{encode_state, quiescent_state, StateLayout, SystemState};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Resource;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("time slot {slot} outside horizon 0..{deadline}")]
    SlotOutOfRange { slot: u32, deadline: u32 },
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("invalid chain {chain}: {reason}")]
    InvalidChain { chain: usize, reason: String },
    #[error("deployment is infeasible ({violations} violations)")]
    Infeasible { violations: usize },
    #[error("{given} tracked chains exceed the layout maximum of {max}")]
    TooManyTracked { given: usize, max: usize },
    #[error("chain {chain} has length {len}, layout allows at most {max}")]
    ChainTooLong { chain: usize, len: usize, max: usize },
    #[error("chain index {0} out of range")]
    UnknownChain(usize),
    #[error("not a permutation of 0..{0}")]
    NotPermutation(usize),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// Dense row-major square matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Matrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Copy> Matrix<T> {
    pub fn filled(dim: usize, value: T) -> Self {
        Matrix { dim, data: vec![value; dim * dim] }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Option<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return None;
        }
        Some(Matrix { dim, data: rows.into_iter().flatten().collect() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.data[row * self.dim + col] = value;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Matrix<U> {
        Matrix { dim: self.dim, data: self.data.iter().map(|&v| f(v)).collect() }
    }
}

/// Physical network: per-server capacity and a symmetric bandwidth matrix.
/// A link exists exactly where the bandwidth is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<R> {
    capacities: Vec<R>,
    bandwidth: Matrix<R>,
}

impl<R: Resource> Network<R> {
    pub fn new(capacities: Vec<R>, bandwidth: Matrix<R>) -> Result<Self, ModelError> {
        let n = capacities.len();
        if n == 0 {
            return Err(ModelError::InvalidNetwork("no servers".into()));
        }
        if bandwidth.dim() != n {
            return Err(ModelError::InvalidNetwork(format!(
                "bandwidth matrix is {0}x{0} for {n} servers",
                bandwidth.dim()
            )));
        }
        if let Some(p) = capacities.iter().position(|&c| c < R::zero()) {
            return Err(ModelError::InvalidNetwork(format!("negative capacity on server {p}")));
        }
        for p in 0..n {
            if bandwidth.get(p, p) != R::zero() {
                return Err(ModelError::InvalidNetwork(format!("self-loop bandwidth on {p}")));
            }
            for q in 0..n {
                let b = bandwidth.get(p, q);
                if b < R::zero() {
                    return Err(ModelError::InvalidNetwork(format!("negative bandwidth on ({p},{q})")));
                }
                if b != bandwidth.get(q, p) {
                    return Err(ModelError::InvalidNetwork(format!("asymmetric bandwidth on ({p},{q})")));
                }
            }
        }
        Ok(Network { capacities, bandwidth })
    }

    /// Builds a network from an undirected link list. Repeated links keep the last value.
    pub fn from_links(capacities: Vec<R>, links: &[(usize, usize, R)]) -> Result<Self, ModelError> {
        let n = capacities.len();
        let mut bandwidth = Matrix::filled(n, R::zero());
        for &(p, q, b) in links {
            if p >= n || q >= n {
                return Err(ModelError::InvalidNetwork(format!("link ({p},{q}) outside 0..{n}")));
            }
            bandwidth.set(p, q, b);
            bandwidth.set(q, p, b);
        }
        Network::new(capacities, bandwidth)
    }

    pub fn node_count(&self) -> usize {
        self.capacities.len()
    }

    pub fn capacity(&self, server: usize) -> R {
        self.capacities[server]
    }

    pub fn capacities(&self) -> &[R] {
        &self.capacities
    }

    pub fn bandwidth(&self, p: usize, q: usize) -> R {
        self.bandwidth.get(p, q)
    }

    pub fn bandwidth_matrix(&self) -> &Matrix<R> {
        &self.bandwidth
    }

    pub fn is_link(&self, p: usize, q: usize) -> bool {
        self.bandwidth.get(p, q).is_positive()
    }

    pub fn neighbors(&self, server: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.node_count()).filter(move |&q| self.is_link(server, q))
    }

    pub fn degree(&self, server: usize) -> usize {
        self.neighbors(server).count()
    }

    /// Undirected links as `(p, q, bandwidth)` with `p < q`.
    pub fn links(&self) -> Vec<(usize, usize, R)> {
        let n = self.node_count();
        let mut out = Vec::new();
        for p in 0..n {
            for q in p + 1..n {
                if self.is_link(p, q) {
                    out.push((p, q, self.bandwidth(p, q)));
                }
            }
        }
        out
    }

    /// Renames server `p` to `perm[p]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self, ModelError> {
        check_permutation(perm, self.node_count())?;
        let n = self.node_count();
        let mut capacities = vec![R::zero(); n];
        let mut bandwidth = Matrix::filled(n, R::zero());
        for p in 0..n {
            capacities[perm[p]] = self.capacities[p];
            for q in 0..n {
                bandwidth.set(perm[p], perm[q], self.bandwidth.get(p, q));
            }
        }
        Ok(Network { capacities, bandwidth })
    }
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<(), ModelError> {
    if perm.len() != n {
        return Err(ModelError::NotPermutation(n));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(ModelError::NotPermutation(n));
        }
    }
    Ok(())
}

/// One service function chain: `L` VNFs joined by `L - 1` flows.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceChain<R> {
    pub id: usize,
    pub node_demands: Vec<R>,
    pub flow_demands: Vec<R>,
    /// Number of slots the chain must be active.
    pub duration: u32,
    /// First slot at which the chain may run.
    pub release: u32,
    /// Carried through but not part of the objective.
    pub weight: f64,
}

impl<R: Resource> ServiceChain<R> {
    pub fn new(id: usize, node_demands: Vec<R>, flow_demands: Vec<R>, duration: u32, release: u32) -> Self {
        ServiceChain { id, node_demands, flow_demands, duration, release, weight: 1.0 }
    }

    /// A chain whose VNFs and flows all demand one unit.
    pub fn uniform(id: usize, len: usize, duration: u32, release: u32) -> Self {
        ServiceChain::new(id, vec![R::one(); len], vec![R::one(); len.saturating_sub(1)], duration, release)
    }

    pub fn len(&self) -> usize {
        self.node_demands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_demands.is_empty()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |reason: &str| Err(ModelError::InvalidChain { chain: self.id, reason: reason.into() });
        if self.node_demands.is_empty() {
            return bad("no VNFs");
        }
        if self.flow_demands.len() + 1 != self.node_demands.len() {
            return bad("flow count must be VNF count minus one");
        }
        if self.node_demands.iter().chain(&self.flow_demands).any(|d| !d.is_positive()) {
            return bad("demands must be positive");
        }
        if self.duration == 0 {
            return bad("duration must be positive");
        }
        if !(self.weight > 0.0) {
            return bad("weight must be positive");
        }
        Ok(())
    }
}

/// A problem instance `(G, F, T)`. Chains need not be servable before the deadline.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance<R> {
    pub network: Network<R>,
    pub chains: Vec<ServiceChain<R>>,
    /// Number of slots; valid slots are `0..deadline`.
    pub deadline: u32,
}

impl<R: Resource> Instance<R> {
    pub fn new(network: Network<R>, chains: Vec<ServiceChain<R>>, deadline: u32) -> Result<Self, ModelError> {
        let instance = Instance { network, chains, deadline };
        instance.validate()?;
        Ok(instance)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.deadline == 0 {
            return Err(ModelError::Shape("deadline must be positive".into()));
        }
        self.chains.iter().try_for_each(ServiceChain::validate)
    }

    pub fn node_count(&self) -> usize {
        self.network.node_count()
    }

    pub fn chain_count(&self) -> usize {
        self.chains.len()
    }

    pub(crate) fn check_slot(&self, slot: u32) -> Result<(), ModelError> {
        if slot >= self.deadline {
            return Err(ModelError::SlotOutOfRange { slot, deadline: self.deadline });
        }
        Ok(())
    }

    /// Same instance with server `p` renamed to `perm[p]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self, ModelError> {
        Ok(Instance { network: self.network.relabel(perm)?, chains: self.chains.clone(), deadline: self.deadline })
    }
}

/// Server assignment of one chain, one entry per VNF.
pub type ChainPlacement = Vec<usize>;

/// Placement `z` and schedule `x` for every chain of an instance.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Deployment {
    /// `placement[i][j]` is the server hosting VNF `j` of chain `i`.
    pub placement: Vec<Vec<Option<usize>>>,
    /// `schedule[i][t]` is true when chain `i` is active in slot `t`.
    pub schedule: Vec<Vec<bool>>,
}

impl Deployment {
    /// Nothing placed, nothing scheduled.
    pub fn empty<R: Resource>(instance: &Instance<R>) -> Self {
        Deployment {
            placement: instance.chains.iter().map(|c| vec![None; c.len()]).collect(),
            schedule: vec![vec![false; instance.deadline as usize]; instance.chain_count()],
        }
    }

    pub fn chain_count(&self) -> usize {
        self.placement.len()
    }

    pub fn horizon(&self) -> usize {
        self.schedule.first().map_or(0, Vec::len)
    }

    pub fn is_fully_placed(&self, chain: usize) -> bool {
        self.placement[chain].iter().all(Option::is_some)
    }

    /// The chain's placement when every VNF is assigned.
    pub fn chain_placement(&self, chain: usize) -> Option<ChainPlacement> {
        self.placement[chain].iter().copied().collect()
    }

    pub fn anchor(&self, chain: usize) -> Option<usize> {
        self.placement[chain].first().copied().flatten()
    }

    /// Records a placement and marks the given slots active.
    pub fn assign(&mut self, chain: usize, placement: &[usize], slots: impl IntoIterator<Item = u32>) {
        self.placement[chain] = placement.iter().map(|&p| Some(p)).collect();
        let row = &mut self.schedule[chain];
        row.iter_mut().for_each(|x| *x = false);
        for t in slots {
            row[t as usize] = true;
        }
    }

    pub fn unassign(&mut self, chain: usize) {
        self.placement[chain].iter_mut().for_each(|z| *z = None);
        self.schedule[chain].iter_mut().for_each(|x| *x = false);
    }

    pub fn is_active(&self, chain: usize, slot: u32) -> bool {
        self.schedule[chain].get(slot as usize).copied().unwrap_or(false)
    }

    pub fn slots(&self, chain: usize) -> impl Iterator<Item = u32> + '_ {
        self.schedule[chain].iter().enumerate().filter(|(_, &x)| x).map(|(t, _)| t as u32)
    }

    pub fn first_slot(&self, chain: usize) -> Option<u32> {
        self.schedule[chain].iter().position(|&x| x).map(|t| t as u32)
    }

    /// `T_i = max{t | x_{i,t} = 1}` per chain, `None` for chains never scheduled.
    pub fn completion_times(&self) -> Vec<Option<u32>> {
        self.schedule.iter().map(|row| row.iter().rposition(|&x| x).map(|t| t as u32)).collect()
    }

    /// Deployment as known at the start of `slot`: chains that have not started
    /// before `slot` are reset to unplaced.
    pub fn started_before(&self, slot: u32) -> Deployment {
        let mut out = self.clone();
        for i in 0..self.chain_count() {
            if self.first_slot(i).is_none_or(|s| s >= slot) {
                out.unassign(i);
            }
        }
        out
    }

    /// Changes the slot count, dropping or zero-padding schedule columns.
    pub fn with_horizon(&self, horizon: u32) -> Deployment {
        let mut out = self.clone();
        for row in &mut out.schedule {
            row.resize(horizon as usize, false);
        }
        out
    }

    /// Keeps only the listed chains, in the given order.
    pub fn select(&self, chains: &[usize]) -> Deployment {
        Deployment {
            placement: chains.iter().map(|&i| self.placement[i].clone()).collect(),
            schedule: chains.iter().map(|&i| self.schedule[i].clone()).collect(),
        }
    }

    /// Applies a server renaming to every placed VNF.
    pub fn relabel(&self, perm: &[usize]) -> Deployment {
        let mut out = self.clone();
        for row in &mut out.placement {
            for z in row.iter_mut().flatten() {
                *z = perm[*z];
            }
        }
        out
    }
}

/// `T_i` for every chain of `dep`.
pub fn completion_times(dep: &Deployment) -> Vec<Option<u32>> {
    dep.completion_times()
}

/// Instance with server `p` renamed to `perm[p]`.
pub fn relabel<R: Resource>(instance: &Instance<R>, perm: &[usize]) -> Result<Instance<R>, ModelError> {
    instance.relabel(perm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Network<u32> {
        Network::from_links(vec![2, 3, 4], &[(0, 1, 1), (1, 2, 2)]).unwrap()
    }

    #[test]
    fn rejects_asymmetric_and_self_loops() {
        let m = Matrix::from_rows(vec![vec![0u32, 1], vec![0, 0]]).unwrap();
        assert!(Network::new(vec![1, 1], m).is_err());
        let m = Matrix::from_rows(vec![vec![1u32, 0], vec![0, 0]]).unwrap();
        assert!(Network::new(vec![1, 1], m).is_err());
    }

    #[test]
    fn links_and_degree() {
        let net = path3();
        assert_eq!(net.links(), vec![(0, 1, 1), (1, 2, 2)]);
        assert_eq!(net.degree(1), 2);
        assert!(!net.is_link(0, 2));
    }

    #[test]
    fn chain_validation() {
        assert!(ServiceChain::<u32>::uniform(0, 3, 2, 0).validate().is_ok());
        let mut bad = ServiceChain::<u32>::uniform(0, 3, 2, 0);
        bad.flow_demands.pop();
        assert!(bad.validate().is_err());
        let mut bad = ServiceChain::<u32>::uniform(0, 2, 2, 0);
        bad.node_demands[0] = 0;
        assert!(bad.validate().is_err());
        assert!(ServiceChain::<u32>::uniform(0, 2, 0, 0).validate().is_err());
    }

    #[test]
    fn completion_time_is_last_active_slot() {
        let inst =
            Instance::new(path3(), vec![ServiceChain::uniform(0, 1, 2, 0), ServiceChain::uniform(1, 1, 1, 0)], 5)
                .unwrap();
        let mut dep = Deployment::empty(&inst);
        dep.assign(0, &[0], [2, 3]);
        assert_eq!(completion_times(&dep), vec![Some(3), None]);
    }

    #[test]
    fn relabel_identity_and_involution() {
        let inst = Instance::new(path3(), vec![], 3).unwrap();
        assert_eq!(relabel(&inst, &[0, 1, 2]).unwrap(), inst);
        let swapped = relabel(&inst, &[1, 0, 2]).unwrap();
        assert_ne!(swapped, inst);
        assert_eq!(relabel(&swapped, &[1, 0, 2]).unwrap(), inst);
        assert_eq!(relabel(&inst, &[0, 0, 1]), Err(ModelError::NotPermutation(3)));
        assert_eq!(relabel(&inst, &[0, 1]), Err(ModelError::NotPermutation(3)));
    }

    #[test]
    fn started_before_drops_future_chains() {
        let inst =
            Instance::new(path3(), vec![ServiceChain::uniform(0, 1, 1, 0), ServiceChain::uniform(1, 1, 1, 0)], 4)
                .unwrap();
        let mut dep = Deployment::empty(&inst);
        dep.assign(0, &[0], [0]);
        dep.assign(1, &[1], [2]);
        let view = dep.started_before(2);
        assert!(view.is_fully_placed(0));
        assert!(!view.is_fully_placed(1));
        assert_eq!(view.first_slot(1), None);
    }
}
