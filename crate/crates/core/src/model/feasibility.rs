use std::fmt;

use super::load::check_shape;
use super::{link_load, node_load, Deployment, Instance, ModelError};
use crate::scalar::Resource;

/// Constraint families of the placement/scheduling program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constraint {
    /// Server capacity in every slot.
    ServerCapacity,
    /// Link bandwidth in every slot.
    LinkBandwidth,
    /// Execution time after release.
    Duration,
    /// At most one server per VNF.
    Placement,
}

impl Constraint {
    pub fn name(self) -> &'static str {
        match self {
            Constraint::ServerCapacity => "capacity",
            Constraint::LinkBandwidth => "bandwidth",
            Constraint::Duration => "duration",
            Constraint::Placement => "placement",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation<R> {
    ServerOverload {
        server: usize,
        slot: u32,
        load: R,
        capacity: R,
    },
    LinkOverload {
        from: usize,
        to: usize,
        slot: u32,
        load: R,
        bandwidth: R,
    },
    /// A flow between different servers that share no link.
    NonLinkFlow {
        chain: usize,
        flow: usize,
        from: usize,
        to: usize,
    },
    DurationMismatch {
        chain: usize,
        scheduled: u32,
        required: u32,
    },
    ActiveBeforeRelease {
        chain: usize,
        slot: u32,
    },
    /// A chain with an unplaced VNF is nevertheless scheduled.
    ScheduledWhileUnplaced {
        chain: usize,
        slot: u32,
    },
    UnknownServer {
        chain: usize,
        vnf: usize,
        server: usize,
    },
    Shape(String),
}

impl<R> Violation<R> {
    pub fn constraint(&self) -> Constraint {
        match self {
            Violation::ServerOverload { .. } => Constraint::ServerCapacity,
            Violation::LinkOverload { .. } | Violation::NonLinkFlow { .. } => Constraint::LinkBandwidth,
            Violation::DurationMismatch { .. } | Violation::ActiveBeforeRelease { .. } => Constraint::Duration,
            Violation::ScheduledWhileUnplaced { .. } | Violation::UnknownServer { .. } | Violation::Shape(_) => {
                Constraint::Placement
            }
        }
    }

    pub fn slot(&self) -> Option<u32> {
        match self {
            Violation::ServerOverload { slot, .. }
            | Violation::LinkOverload { slot, .. }
            | Violation::ActiveBeforeRelease { slot, .. }
            | Violation::ScheduledWhileUnplaced { slot, .. } => Some(*slot),
            _ => None,
        }
    }
}

impl<R: fmt::Debug> fmt::Display for Violation<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.constraint().name())?;
        match self {
            Violation::ServerOverload { server, slot, load, capacity } => {
                write!(f, "server {server} carries {load:?} > {capacity:?} in slot {slot}")
            }
            Violation::LinkOverload { from, to, slot, load, bandwidth } => {
                write!(f, "link ({from},{to}) carries {load:?} > {bandwidth:?} in slot {slot}")
            }
            Violation::NonLinkFlow { chain, flow, from, to } => {
                write!(f, "flow {flow} of chain {chain} crosses non-link ({from},{to})")
            }
            Violation::DurationMismatch { chain, scheduled, required } => {
                write!(f, "chain {chain} scheduled {scheduled} slots, needs {required}")
            }
            Violation::ActiveBeforeRelease { chain, slot } => {
                write!(f, "chain {chain} active in slot {slot} before release")
            }
            Violation::ScheduledWhileUnplaced { chain, slot } => {
                write!(f, "chain {chain} scheduled in slot {slot} but not fully placed")
            }
            Violation::UnknownServer { chain, vnf, server } => {
                write!(f, "VNF {vnf} of chain {chain} on unknown server {server}")
            }
            Violation::Shape(msg) => write!(f, "{msg}"),
        }
    }
}

/// Every violation found in a deployment; empty means feasible.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport<R> {
    pub violations: Vec<Violation<R>>,
}

impl<R> FeasibilityReport<R> {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, constraint: Constraint) -> usize {
        self.violations.iter().filter(|v| v.constraint() == constraint).count()
    }
}

/// Checks capacity, bandwidth, duration and placement; reports every violation.
pub fn check_feasible<R: Resource>(instance: &Instance<R>, dep: &Deployment) -> FeasibilityReport<R> {
    let mut violations = Vec::new();
    if let Err(ModelError::Shape(msg)) = check_shape(instance, dep) {
        violations.push(Violation::Shape(msg));
        return FeasibilityReport { violations };
    }
    let n = instance.node_count();
    let net = &instance.network;

    for (i, chain) in instance.chains.iter().enumerate() {
        for (j, z) in dep.placement[i].iter().enumerate() {
            if let Some(p) = *z {
                if p >= n {
                    violations.push(Violation::UnknownServer { chain: i, vnf: j, server: p });
                }
            }
        }
        for j in 0..chain.flow_demands.len() {
            if let (Some(p), Some(q)) = (dep.placement[i][j], dep.placement[i][j + 1]) {
                if p != q && p < n && q < n && !net.is_link(p, q) {
                    violations.push(Violation::NonLinkFlow { chain: i, flow: j, from: p, to: q });
                }
            }
        }
        if dep.is_fully_placed(i) {
            if let Some(slot) = dep.slots(i).find(|&t| t < chain.release) {
                violations.push(Violation::ActiveBeforeRelease { chain: i, slot });
            }
            let scheduled = dep.slots(i).filter(|&t| t >= chain.release).count() as u32;
            if scheduled != chain.duration {
                violations.push(Violation::DurationMismatch { chain: i, scheduled, required: chain.duration });
            }
        } else if let Some(slot) = dep.first_slot(i) {
            violations.push(Violation::ScheduledWhileUnplaced { chain: i, slot });
        }
    }
    if violations.iter().any(|v| matches!(v, Violation::UnknownServer { .. })) {
        return FeasibilityReport { violations };
    }

    for t in 0..instance.deadline {
        let nodes = node_load(instance, dep, t).expect("shape checked");
        for (p, &load) in nodes.iter().enumerate() {
            if load > net.capacity(p) {
                violations.push(Violation::ServerOverload { server: p, slot: t, load, capacity: net.capacity(p) });
            }
        }
        let links = link_load(instance, dep, t).expect("shape checked");
        for p in 0..n {
            for q in p + 1..n {
                let load = links.get(p, q);
                if load > net.bandwidth(p, q) {
                    violations.push(Violation::LinkOverload {
                        from: p,
                        to: q,
                        slot: t,
                        load,
                        bandwidth: net.bandwidth(p, q),
                    });
                }
            }
        }
    }
    FeasibilityReport { violations }
}

/// Number of fully placed chains, `sum_i I_i`. Only defined for feasible deployments.
pub fn reward<R: Resource>(instance: &Instance<R>, dep: &Deployment) -> Result<usize, ModelError> {
    let report = check_feasible(instance, dep);
    if !report.is_ok() {
        return Err(ModelError::Infeasible { violations: report.violations.len() });
    }
    Ok((0..dep.chain_count()).filter(|&i| dep.is_fully_placed(i)).count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Network, ServiceChain};

    fn two_node() -> Instance<u32> {
        let net = Network::from_links(vec![2, 2, 2], &[(0, 1, 1)]).unwrap();
        let chains = vec![ServiceChain::uniform(0, 2, 2, 1), ServiceChain::uniform(1, 2, 1, 0)];
        Instance::new(net, chains, 4).unwrap()
    }

    #[test]
    fn empty_deployment_is_feasible() {
        let inst = two_node();
        let dep = Deployment::empty(&inst);
        assert!(check_feasible(&inst, &dep).is_ok());
        assert_eq!(reward(&inst, &dep), Ok(0));
    }

    #[test]
    fn duration_shortfall_cites_eq4() {
        let inst = two_node();
        let mut dep = Deployment::empty(&inst);
        dep.assign(0, &[0, 1], [1]);
        let report = check_feasible(&inst, &dep);
        assert_eq!(report.violations, vec![Violation::DurationMismatch { chain: 0, scheduled: 1, required: 2 }]);
        assert_eq!(report.violations[0].constraint(), Constraint::Duration);
        assert!(matches!(reward(&inst, &dep), Err(ModelError::Infeasible { violations: 1 })));
    }

    #[test]
    fn early_start_is_reported() {
        let inst = two_node();
        let mut dep = Deployment::empty(&inst);
        dep.assign(0, &[0, 1], [0, 1, 2]);
        let report = check_feasible(&inst, &dep);
        assert_eq!(report.violations, vec![Violation::ActiveBeforeRelease { chain: 0, slot: 0 }]);
    }

    #[test]
    fn non_link_flow_is_flagged() {
        let inst = two_node();
        let mut dep = Deployment::empty(&inst);
        dep.assign(1, &[0, 2], [0]);
        let report = check_feasible(&inst, &dep);
        assert!(report.violations.contains(&Violation::NonLinkFlow { chain: 1, flow: 0, from: 0, to: 2 }));
        assert!(report.violations.iter().any(|v| matches!(v, Violation::LinkOverload { from: 0, to: 2, .. })));
    }

    #[test]
    fn reports_every_overload() {
        let inst = two_node();
        let mut dep = Deployment::empty(&inst);
        dep.assign(0, &[0, 1], [1, 2]);
        dep.assign(1, &[1, 0], [1]);
        let report = check_feasible(&inst, &dep);
        assert_eq!(report.count(Constraint::LinkBandwidth), 1);
        assert_eq!(report.violations[0].slot(), Some(1));
    }

    #[test]
    fn scheduled_partial_placement_cites_eq5() {
        let inst = two_node();
        let mut dep = Deployment::empty(&inst);
        dep.placement[1][0] = Some(0);
        dep.schedule[1][0] = true;
        let report = check_feasible(&inst, &dep);
        assert_eq!(report.violations, vec![Violation::ScheduledWhileUnplaced { chain: 1, slot: 0 }]);
        assert_eq!(report.violations[0].constraint(), Constraint::Placement);
    }

    #[test]
    fn partial_placement_earns_nothing() {
        let inst = two_node();
        let mut dep = Deployment::empty(&inst);
        dep.assign(0, &[0, 1], [1, 2]);
        dep.placement[1][0] = Some(2);
        assert_eq!(reward(&inst, &dep), Ok(1));
    }

    #[test]
    fn all_chains_placed() {
        let inst = two_node();
        let mut dep = Deployment::empty(&inst);
        dep.assign(0, &[0, 1], [1, 2]);
        dep.assign(1, &[2, 2], [0]);
        assert_eq!(reward(&inst, &dep), Ok(2));
    }

    #[test]
    fn shape_mismatch_is_a_violation() {
        let inst = two_node();
        let mut dep = Deployment::empty(&inst);
        dep.schedule[0].pop();
        assert!(matches!(check_feasible(&inst, &dep).violations[..], [Violation::Shape(_)]));
    }
}
