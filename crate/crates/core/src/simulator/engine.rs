use crate::heuristics::complete_from_anchor;
use crate::model::{encode_state, Deployment, Residuals, StateLayout};
use crate::{State, UnitInstance, Units};

use super::{Action, Decision, Metrics, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainStatus {
    /// Not yet released.
    Upcoming,
    Pending,
    Running {
        start: u32,
    },
    Done {
        start: u32,
    },
    Blocked,
}

/// What the policy sees at the start of a slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub slot: u32,
    pub state: State,
    /// Pending chain indices, oldest first, at most `m`; row `i` of the next action refers to `pending[i]`.
    pub pending: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StepEvents {
    pub slot: u32,
    pub placed: Vec<usize>,
    pub failed: Vec<usize>,
    /// Chains that finished or were blocked while advancing to the next slot.
    pub completed: Vec<usize>,
    pub blocked: Vec<usize>,
}

/// Online slot-by-slot engine over a fixed arrival list.
///
/// A chain placed in slot `t` runs contiguously in `t..t + D` and returns its
/// resources at `t + D`. A pending chain is blocked once it has waited more
/// than `patience` slots or can no longer finish before the deadline.
#[derive(Debug, Clone)]
pub struct Simulator {
    instance: UnitInstance,
    layout: StateLayout,
    patience: u32,
    slot: u32,
    status: Vec<ChainStatus>,
    residuals: Residuals<Units>,
    deployment: Deployment,
    arrival_order: Vec<usize>,
}

impl Simulator {
    pub fn new(instance: UnitInstance, layout: StateLayout, patience: u32) -> Result<Self, SimError> {
        instance.validate()?;
        if layout.nodes != instance.node_count() {
            return Err(SimError::Protocol("layout does not match the network".into()));
        }
        let mut arrival_order: Vec<usize> = (0..instance.chain_count()).collect();
        arrival_order.sort_by_key(|&i| (instance.chains[i].release, i));
        let mut sim = Simulator {
            residuals: Residuals::full(&instance.network),
            deployment: Deployment::empty(&instance),
            status: vec![ChainStatus::Upcoming; instance.chain_count()],
            instance,
            layout,
            patience,
            slot: 0,
            arrival_order,
        };
        sim.advance_bookkeeping(&mut StepEvents::default());
        Ok(sim)
    }

    pub fn instance(&self) -> &UnitInstance {
        &self.instance
    }

    pub fn layout(&self) -> &StateLayout {
        &self.layout
    }

    pub fn slot(&self) -> u32 {
        self.slot
    }

    pub fn is_finished(&self) -> bool {
        self.slot >= self.instance.deadline
    }

    pub fn residuals(&self) -> &Residuals<Units> {
        &self.residuals
    }

    pub fn deployment(&self) -> &Deployment {
        &self.deployment
    }

    pub fn status(&self) -> &[ChainStatus] {
        &self.status
    }

    pub fn pending(&self) -> Vec<usize> {
        self.arrival_order
            .iter()
            .copied()
            .filter(|&i| self.status[i] == ChainStatus::Pending)
            .take(self.layout.max_tracked)
            .collect()
    }

    pub fn observe(&self) -> Result<Observation, SimError> {
        let pending = self.pending();
        let state = encode_state(&self.instance, &self.deployment, self.slot, &pending, &self.layout)?;
        Ok(Observation { slot: self.slot, state, pending })
    }

    /// Applies an anchor-only action matrix and advances one slot.
    pub fn step(&mut self, action: &Action) -> Result<StepEvents, SimError> {
        if action.rows().len() != self.layout.max_tracked || action.nodes() != self.instance.node_count() {
            return Err(SimError::Protocol(format!(
                "action shape {}x{} does not match {}x{}",
                action.rows().len(),
                action.nodes(),
                self.layout.max_tracked,
                self.instance.node_count()
            )));
        }
        let decisions: Vec<Decision> =
            action.rows().iter().map(|r| r.map_or(Decision::Defer, Decision::Anchor)).collect();
        self.step_decisions(&decisions)
    }

    /// Applies one decision per pending row, oldest first, and advances one slot.
    /// Rows beyond the pending list are ignored.
    pub fn step_decisions(&mut self, decisions: &[Decision]) -> Result<StepEvents, SimError> {
        if self.is_finished() {
            return Err(SimError::Protocol("episode already finished".into()));
        }
        let mut events = StepEvents { slot: self.slot, ..StepEvents::default() };
        let pending = self.pending();
        let n = self.instance.node_count();
        for (&i, decision) in pending.iter().zip(decisions) {
            let chain = &self.instance.chains[i];
            let placement = match decision {
                Decision::Defer => continue,
                Decision::Anchor(p) if *p >= n => {
                    return Err(SimError::Protocol(format!("anchor {p} outside 0..{n}")));
                }
                Decision::Anchor(p) => complete_from_anchor(&self.instance.network, &self.residuals, chain, *p),
                Decision::Place(pl) => {
                    let connected = pl.windows(2).all(|w| w[0] == w[1] || self.instance.network.is_link(w[0], w[1]));
                    (connected && self.residuals.fits(chain, pl)).then(|| pl.clone())
                }
            };
            match placement {
                Some(pl) => {
                    self.residuals.commit(chain, &pl);
                    self.deployment.assign(i, &pl, self.slot..self.slot + chain.duration);
                    self.status[i] = ChainStatus::Running { start: self.slot };
                    events.placed.push(i);
                }
                None => events.failed.push(i),
            }
        }
        self.slot += 1;
        self.advance_bookkeeping(&mut events);
        Ok(events)
    }

    // Completions, arrivals and blocking at the start of `self.slot`.
    fn advance_bookkeeping(&mut self, events: &mut StepEvents) {
        let deadline = self.instance.deadline;
        let finished = self.is_finished();
        for i in 0..self.status.len() {
            let chain = &self.instance.chains[i];
            match self.status[i] {
                ChainStatus::Running { start } if start + chain.duration <= self.slot => {
                    let pl = self.deployment.chain_placement(i).expect("running chain is placed");
                    self.residuals.release(chain, &pl);
                    self.status[i] = ChainStatus::Done { start };
                    events.completed.push(i);
                }
                ChainStatus::Upcoming if finished || chain.release <= self.slot => {
                    self.status[i] = ChainStatus::Pending;
                }
                _ => {}
            }
            if self.status[i] == ChainStatus::Pending {
                let late = self.slot.saturating_sub(chain.release) > self.patience;
                let cannot_finish = self.slot as u64 + chain.duration as u64 > deadline as u64;
                if finished || late || cannot_finish {
                    self.status[i] = ChainStatus::Blocked;
                    events.blocked.push(i);
                }
            }
        }
    }

    /// Metrics over the chains resolved so far; at the end of an episode every chain is resolved.
    pub fn metrics(&self) -> Metrics {
        let starts: Vec<(usize, u32)> = self
            .status
            .iter()
            .enumerate()
            .filter_map(|(i, s)| match s {
                ChainStatus::Running { start } | ChainStatus::Done { start } => Some((i, *start)),
                _ => None,
            })
            .collect();
        let waits: Vec<u32> = starts.iter().map(|&(i, s)| s - self.instance.chains[i].release).collect();
        let blocked = self.status.iter().filter(|s| **s == ChainStatus::Blocked).count();
        Metrics::from_counts(starts.len(), &waits, blocked, self.instance.chain_count())
    }
}
