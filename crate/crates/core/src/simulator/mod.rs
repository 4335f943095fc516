//! Online episodes: Poisson arrivals, per-slot policy decisions and metrics.

mod action;
mod arrivals;
pub mod bridge;
mod engine;
mod policy;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Trajectory;
use crate::gen::{ConfigError, GenConfig};
use crate::heuristics::{PolicyKind, SolveError};
use crate::model::{Deployment, ModelError, StateLayout};
use crate::UnitInstance;

pub use action::{Action, Decision};
pub use arrivals::arrivals;
pub use bridge::BridgePolicy;
pub use engine::{ChainStatus, Observation, Simulator, StepEvents};
pub use policy::{ExactPolicy, HeuristicPolicy, Policy, PolicyView, RandomAnchorPolicy, ReplayPolicy};

/// Mixed into the episode seed to seed a policy's own randomness.
pub const POLICY_SEED_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("bridge transport error: {0}")]
    Transport(String),
    #[error("policy refused: {0}")]
    Refused(String),
    #[error(transparent)]
    Budget(#[from] SolveError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// One online episode: `sfcs` chains arriving over `horizon` slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub gen: GenConfig,
    pub sfcs: usize,
    pub horizon: u32,
    /// Mean arrivals per slot; `sfcs / horizon` when unset.
    pub arrival_rate: Option<f64>,
    /// Draws the network from this seed instead of `seed`, fixing the topology across episodes.
    #[serde(default)]
    pub network_seed: Option<u64>,
    pub seed: u64,
}

impl EpisodeConfig {
    pub fn new(gen: GenConfig, sfcs: usize, horizon: u32, seed: u64) -> Self {
        EpisodeConfig { gen, sfcs, horizon, arrival_rate: None, network_seed: None, seed }
    }

    pub fn rate(&self) -> f64 {
        self.arrival_rate.unwrap_or(self.sfcs as f64 / self.horizon.max(1) as f64)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.gen.validate()?;
        if self.horizon == 0 {
            return Err(ConfigError("horizon must be positive".into()));
        }
        if self.sfcs > 0 && !(self.rate() > 0.0) {
            return Err(ConfigError("arrival rate must be positive".into()));
        }
        Ok(())
    }

    pub fn layout(&self) -> StateLayout {
        self.gen.layout(self.horizon)
    }

    /// The network and arrival list of this episode.
    pub fn instance(&self) -> Result<UnitInstance, SimError> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let network = match self.network_seed {
            Some(s) => self.gen.network(&mut ChaCha8Rng::seed_from_u64(s)),
            None => self.gen.network(&mut rng),
        };
        let chains = if self.sfcs == 0 { Vec::new() } else { arrivals(&self.gen, self.sfcs, self.rate(), &mut rng)? };
        Ok(UnitInstance::new(network, chains, self.horizon)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Chains fully placed and run to completion.
    pub reward: usize,
    /// Mean slots between release and start over placed chains; 0 when none.
    pub avg_waiting: f64,
    pub blocked: usize,
    /// `reward / M`, or 1 for an episode without chains.
    pub efficiency: f64,
}

impl Metrics {
    pub fn from_counts(reward: usize, waits: &[u32], blocked: usize, total: usize) -> Self {
        let avg_waiting =
            if waits.is_empty() { 0.0 } else { waits.iter().map(|&w| w as f64).sum::<f64>() / waits.len() as f64 };
        let efficiency = if total == 0 { 1.0 } else { reward as f64 / total as f64 };
        Metrics { reward, avg_waiting, blocked, efficiency }
    }

    pub fn values(&self) -> [f64; 4] {
        [self.reward as f64, self.avg_waiting, self.blocked as f64, self.efficiency]
    }
}

#[derive(Debug, Clone)]
pub struct Episode {
    pub metrics: Metrics,
    pub trajectory: Trajectory,
    pub instance: UnitInstance,
    pub deployment: Deployment,
}

/// Builds the policy named by `kind` for an episode seed.
pub fn heuristic_policy(kind: PolicyKind, episode_seed: u64) -> Result<Box<dyn Policy + Send>, SimError> {
    match kind {
        PolicyKind::Exact => Ok(Box::new(ExactPolicy::default())),
        PolicyKind::Bridge => Err(SimError::Protocol("the bridge policy needs an endpoint".into())),
        k => Ok(Box::new(HeuristicPolicy::new(k, episode_seed ^ POLICY_SEED_SALT)?)),
    }
}

pub fn run_episode(cfg: &EpisodeConfig, policy: &mut dyn Policy) -> Result<Episode, SimError> {
    let instance = cfg.instance()?;
    let sim = Simulator::new(instance, cfg.layout(), cfg.gen.patience)?;
    drive(sim, policy)
}

/// Runs a prepared simulator to the end of its horizon, recording the trajectory.
pub fn drive(mut sim: Simulator, policy: &mut dyn Policy) -> Result<Episode, SimError> {
    policy.handshake(sim.layout())?;
    let (m, n) = (sim.layout().max_tracked, sim.instance().node_count());
    let mut states = Vec::new();
    let mut actions = Vec::new();
    let mut returns = Vec::new();
    while !sim.is_finished() {
        let obs = sim.observe()?;
        let view = PolicyView {
            observation: &obs,
            instance: sim.instance(),
            residuals: sim.residuals(),
            layout: sim.layout(),
        };
        let decisions = policy.decide(&view)?;
        if decisions.len() > m {
            return Err(SimError::Protocol(format!("{} decisions for {m} rows", decisions.len())));
        }
        let events = sim.step_decisions(&decisions)?;
        let rows = (0..m)
            .map(|r| {
                let placed = obs.pending.get(r).is_some_and(|i| events.placed.contains(i));
                decisions.get(r).filter(|_| placed).and_then(Decision::anchor)
            })
            .collect();
        actions.push(Action::from_rows(n, rows)?);
        returns.push(events.placed.len() as u32);
        states.push(obs.state);
    }
    actions.pop();
    Ok(Episode {
        metrics: sim.metrics(),
        trajectory: Trajectory::new(states, actions, returns),
        deployment: sim.deployment().clone(),
        instance: sim.instance().clone(),
    })
}

/// Per-seed metrics with column means and sample standard deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<(u64, Metrics)>,
    pub mean: [f64; 4],
    pub std: [f64; 4],
}

pub const CSV_HEADER: &str = "seed,reward,avg_waiting,blocked,efficiency";

impl EvalReport {
    pub fn from_rows(rows: Vec<(u64, Metrics)>) -> Self {
        let k = rows.len() as f64;
        let mut mean = [0.0; 4];
        let mut std = [0.0; 4];
        if !rows.is_empty() {
            for c in 0..4 {
                mean[c] = rows.iter().map(|(_, m)| m.values()[c]).sum::<f64>() / k;
                if rows.len() > 1 {
                    let ss: f64 = rows.iter().map(|(_, m)| (m.values()[c] - mean[c]).powi(2)).sum();
                    std[c] = (ss / (k - 1.0)).sqrt();
                }
            }
        }
        EvalReport { rows, mean, std }
    }

    /// Half-width of the normal-approximation 95% confidence interval of each mean.
    pub fn ci95(&self) -> [f64; 4] {
        let k = self.rows.len().max(1) as f64;
        self.std.map(|s| 1.96 * s / k.sqrt())
    }

    /// One row per seed, then `mean` and `std` rows.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for (seed, m) in &self.rows {
            out.push_str(&format!("{seed},{},{},{},{}\n", m.reward, m.avg_waiting, m.blocked, m.efficiency));
        }
        for (name, v) in [("mean", self.mean), ("std", self.std)] {
            out.push_str(&format!("{name},{},{},{},{}\n", v[0], v[1], v[2], v[3]));
        }
        out
    }
}

/// Runs one episode per seed across worker threads. `make_policy` receives the
/// episode seed. Results are reported in `seeds` order.
pub fn evaluate<F>(base: &EpisodeConfig, seeds: &[u64], make_policy: F) -> Result<EvalReport, SimError>
where
    F: Fn(u64) -> Result<Box<dyn Policy + Send>, SimError> + Sync,
{
    if seeds.is_empty() {
        return Err(SimError::Config(ConfigError("at least one seed is required".into())));
    }
    let rows = crate::par::map(seeds, |&seed| {
        let cfg = EpisodeConfig { seed, ..base.clone() };
        make_policy(seed).and_then(|mut p| run_episode(&cfg, p.as_mut())).map(|e| (seed, e.metrics))
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    Ok(EvalReport::from_rows(rows))
}
