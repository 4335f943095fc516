use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::heuristics::{
    central_place, complete_from_anchor, exact_solve, greedy_place, random_place, PolicyKind, SearchBudget,
};
use crate::model::{Network, Residuals, StateLayout};
use crate::{UnitChain, UnitInstance, Units};

use super::{Action, Decision, Observation, SimError};

/// Everything a policy may look at when deciding slot `observation.slot`.
pub struct PolicyView<'a> {
    pub observation: &'a Observation,
    pub instance: &'a UnitInstance,
    pub residuals: &'a Residuals<Units>,
    pub layout: &'a StateLayout,
}

impl PolicyView<'_> {
    pub fn pending_chains(&self) -> impl Iterator<Item = &UnitChain> + '_ {
        self.observation.pending.iter().map(|&i| &self.instance.chains[i])
    }
}

/// A decision maker queried once per slot.
pub trait Policy {
    /// Called once before the first slot.
    fn handshake(&mut self, _layout: &StateLayout) -> Result<(), SimError> {
        Ok(())
    }

    /// One decision per pending chain, in `observation.pending` order.
    fn decide(&mut self, view: &PolicyView<'_>) -> Result<Vec<Decision>, SimError>;
}

/// Places each pending chain in turn with a baseline heuristic, so later
/// chains see the resources taken by earlier ones.
#[derive(Debug, Clone)]
pub struct HeuristicPolicy {
    kind: PolicyKind,
    rng: ChaCha8Rng,
}

impl HeuristicPolicy {
    pub fn new(kind: PolicyKind, seed: u64) -> Result<Self, SimError> {
        match kind {
            PolicyKind::Greedy | PolicyKind::Central | PolicyKind::Random => {
                Ok(HeuristicPolicy { kind, rng: ChaCha8Rng::seed_from_u64(seed) })
            }
            other => Err(SimError::Protocol(format!("`{other}` is not a heuristic policy"))),
        }
    }
}

impl Policy for HeuristicPolicy {
    fn decide(&mut self, view: &PolicyView<'_>) -> Result<Vec<Decision>, SimError> {
        let net = &view.instance.network;
        let mut working = view.residuals.clone();
        let mut out = Vec::with_capacity(view.observation.pending.len());
        for chain in view.pending_chains() {
            let placement = match self.kind {
                PolicyKind::Greedy => greedy_place(net, &working, chain),
                PolicyKind::Central => central_place(net, &working, chain),
                _ => random_place(net, &working, chain, &mut self.rng),
            };
            out.push(match placement {
                Some(pl) => {
                    working.commit(chain, &pl);
                    Decision::Place(pl)
                }
                None => Decision::Defer,
            });
        }
        Ok(out)
    }
}

/// Draws the anchor uniformly among servers whose residual capacity covers the
/// first VNF, then lets the environment complete the chain greedily.
#[derive(Debug, Clone)]
pub struct RandomAnchorPolicy {
    rng: ChaCha8Rng,
}

impl RandomAnchorPolicy {
    pub fn new(seed: u64) -> Self {
        RandomAnchorPolicy { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Policy for RandomAnchorPolicy {
    fn decide(&mut self, view: &PolicyView<'_>) -> Result<Vec<Decision>, SimError> {
        let net = &view.instance.network;
        let mut working = view.residuals.clone();
        let mut out = Vec::with_capacity(view.observation.pending.len());
        for chain in view.pending_chains() {
            let roomy: Vec<usize> =
                (0..net.node_count()).filter(|&p| working.node[p] >= chain.node_demands[0]).collect();
            let decision = if roomy.is_empty() {
                Decision::Defer
            } else {
                let anchor = roomy[self.rng.gen_range(0..roomy.len())];
                match complete_from_anchor(net, &working, chain, anchor) {
                    Some(pl) => {
                        working.commit(chain, &pl);
                        Decision::Anchor(anchor)
                    }
                    None => Decision::Defer,
                }
            };
            out.push(decision);
        }
        Ok(out)
    }
}

/// Maximizes the number of pending chains started this slot by exhaustive search.
#[derive(Debug, Clone, Default)]
pub struct ExactPolicy {
    pub budget: SearchBudget,
}

impl Policy for ExactPolicy {
    fn decide(&mut self, view: &PolicyView<'_>) -> Result<Vec<Decision>, SimError> {
        let res = view.residuals;
        let network = Network::new(res.node.clone(), res.link.clone())?;
        let chains = view
            .pending_chains()
            .enumerate()
            .map(|(k, c)| UnitChain::new(k, c.node_demands.clone(), c.flow_demands.clone(), 1, 0))
            .collect();
        let sub = UnitInstance::new(network, chains, 1)?;
        let solution = exact_solve(&sub, &self.budget)?;
        Ok((0..sub.chain_count())
            .map(|k| solution.deployment.chain_placement(k).map_or(Decision::Defer, Decision::Place))
            .collect())
    }
}

/// Replays a fixed action sequence; slots past its end defer everything.
#[derive(Debug, Clone)]
pub struct ReplayPolicy {
    actions: Vec<Action>,
}

impl ReplayPolicy {
    pub fn new(actions: Vec<Action>) -> Self {
        ReplayPolicy { actions }
    }
}

impl Policy for ReplayPolicy {
    fn decide(&mut self, view: &PolicyView<'_>) -> Result<Vec<Decision>, SimError> {
        let Some(action) = self.actions.get(view.observation.slot as usize) else {
            return Ok(Vec::new());
        };
        if action.nodes() != view.layout.nodes || action.rows().len() != view.layout.max_tracked {
            return Err(SimError::Protocol("replayed action does not match the layout".into()));
        }
        Ok(action.rows().iter().map(|r| r.map_or(Decision::Defer, Decision::Anchor)).collect())
    }
}
