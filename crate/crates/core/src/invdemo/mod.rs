//! Inverse demonstration: draw chains, place them online with random anchors,
//! then back-fill an instance (deadline included) that the result solves, and
//! tighten the schedule with the lexicographic refinement.

mod lex;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataset::Trajectory;
use crate::gen::{ConfigError, GenConfig};
use crate::model::{encode_state, quiescent_state, ChainPlacement, Deployment, ModelError, StateLayout};
use crate::simulator::{drive, Action, Episode, RandomAnchorPolicy, SimError, Simulator, POLICY_SEED_SALT};
use crate::{UnitInstance, Units};

pub use lex::{
    lex_minmax_schedule, lex_minmax_schedule_with_budget, lex_objective, lex_oracle, lex_search,
    sorted_completion_times, sorted_occupied_slots, LexBudget, LexError, LexSchedule,
};

/// Re-draws allowed when a round places nothing although chains were drawn.
const MAX_ATTEMPTS: u32 = 16;

#[derive(Debug, Error)]
pub enum InvdemoError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("no chain could be placed after {0} attempts")]
    NothingPlaced(u32),
    #[error("a deadline needs at least one completion time")]
    NoCompletions,
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A problem instance with the deployment that solves it.
#[derive(Debug, Clone, PartialEq)]
pub struct Demonstration {
    pub instance: UnitInstance,
    pub deployment: Deployment,
    pub trajectory: Trajectory,
    pub completion_times: Vec<u32>,
    /// Whether the schedule is proven lexicographically optimal.
    pub exact: bool,
}

impl Demonstration {
    pub fn reward(&self) -> usize {
        self.instance.chain_count()
    }
}

/// The online placement phase before any chain is dropped or rescheduled.
#[derive(Debug, Clone)]
pub struct Rollout {
    pub episode: Episode,
    pub layout: StateLayout,
    pub patience: u32,
}

/// `max_i T_i + 1`: the smallest slot count that admits every completion.
pub fn derive_deadline(completion_times: &[u32]) -> Result<u32, InvdemoError> {
    completion_times.iter().max().map(|&t| t + 1).ok_or(InvdemoError::NoCompletions)
}

/// Slots needed so that every chain can wait out its patience and still finish.
fn working_horizon(cfg: &GenConfig) -> u32 {
    cfg.chains as u32 + cfg.patience + cfg.duration[1] + 1
}

/// Draws the network and chains for `seed` and places them online: chain `i`
/// is released in slot `i`, anchored uniformly among servers that can hold
/// its first VNF and completed greedily, retrying each slot until its
/// patience runs out.
pub fn generate_rollout(cfg: &GenConfig, seed: u64) -> Result<Rollout, InvdemoError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let network = cfg.network(&mut rng);
    let chains = (0..cfg.chains).map(|i| cfg.chain(i, i as u32, &mut rng)).collect();
    let instance = UnitInstance::new(network, chains, working_horizon(cfg))?;
    let layout = cfg.layout(cfg.horizon);
    let sim = Simulator::new(instance, layout, cfg.patience)?;
    let episode = drive(sim, &mut RandomAnchorPolicy::new(seed ^ POLICY_SEED_SALT))?;
    Ok(Rollout { episode, layout, patience: cfg.patience })
}

/// One demonstration from `cfg.seed`.
pub fn inverse_generate(cfg: &GenConfig) -> Result<Demonstration, InvdemoError> {
    inverse_generate_with_budget(cfg, LexBudget::refinement())
}

pub fn inverse_generate_with_budget(cfg: &GenConfig, budget: LexBudget) -> Result<Demonstration, InvdemoError> {
    cfg.validate()?;
    let mut seed = cfg.seed;
    for _ in 0..MAX_ATTEMPTS {
        let rollout = generate_rollout(cfg, seed)?;
        if cfg.chains > 0 && rollout.episode.metrics.reward == 0 {
            seed = ChaCha8Rng::seed_from_u64(seed).next_u64();
            continue;
        }
        return refine(&rollout, cfg.horizon, budget);
    }
    Err(InvdemoError::NothingPlaced(MAX_ATTEMPTS))
}

/// Drops unplaced chains, refines the schedule and sets the deadline.
pub fn refine(rollout: &Rollout, horizon: u32, budget: LexBudget) -> Result<Demonstration, InvdemoError> {
    let ep = &rollout.episode;
    let placed: Vec<usize> = (0..ep.instance.chain_count()).filter(|&i| ep.deployment.is_fully_placed(i)).collect();
    let chains = placed.iter().map(|&i| ep.instance.chains[i].clone()).collect();
    let working = UnitInstance::new(ep.instance.network.clone(), chains, ep.instance.deadline)?;
    let placements: Vec<_> =
        placed.iter().map(|&i| ep.deployment.chain_placement(i).expect("selected chains are placed")).collect();

    let online = ep.deployment.select(&placed);
    reschedule(working, &placements, online, &rollout.layout, horizon, budget, true)
}

/// Runs the refinement again on a finished demonstration, e.g. with another budget.
pub fn refine_demonstration(
    demo: &Demonstration,
    layout: &StateLayout,
    horizon: u32,
    budget: LexBudget,
) -> Result<Demonstration, InvdemoError> {
    let inst = &demo.instance;
    // Room for every chain to run alone after the last release.
    let last_release = inst.chains.iter().map(|c| c.release).max().unwrap_or(0);
    let room = last_release + inst.chains.iter().map(|c| c.duration).sum::<u32>() + 1;
    let working = UnitInstance::new(inst.network.clone(), inst.chains.clone(), room.max(inst.deadline))?;
    let placements: Vec<_> = (0..inst.chain_count())
        .map(|i| demo.deployment.chain_placement(i).ok_or(LexError::BadPlacement(i)))
        .collect::<Result<_, _>>()?;
    let current = demo.deployment.with_horizon(working.deadline);
    reschedule(working, &placements, current, layout, horizon, budget, false)
}

// Searches a schedule for fixed placements and derives the deadline. A capped
// search may lose to the schedule it started from; the better one is kept.
// With `fallback`, running out of states keeps the current schedule too.
fn reschedule(
    working: UnitInstance,
    placements: &[ChainPlacement],
    current: Deployment,
    layout: &StateLayout,
    horizon: u32,
    budget: LexBudget,
    fallback: bool,
) -> Result<Demonstration, InvdemoError> {
    let searched = match lex_search(&working, placements, budget) {
        Err(LexError::BudgetExceeded(_)) if fallback => LexSchedule { deployment: current.clone(), exact: false },
        other => other?,
    };
    let rank = |d: &Deployment| (sorted_occupied_slots(d), sorted_completion_times(d));
    let scheduled =
        if searched.exact || rank(&searched.deployment) <= rank(&current) { searched.deployment } else { current };
    let completion_times: Vec<u32> =
        scheduled.completion_times().into_iter().map(|t| t.expect("every chain is scheduled")).collect();
    let deadline = if completion_times.is_empty() { 1 } else { derive_deadline(&completion_times)? };
    let instance = UnitInstance::new(working.network, working.chains, deadline)?;
    let deployment = scheduled.with_horizon(deadline);
    let trajectory = demonstration_trajectory(&instance, &deployment, layout, horizon)?;
    Ok(Demonstration { instance, deployment, trajectory, completion_times, exact: searched.exact })
}

/// Encodes a complete deployment as the trajectory an online agent would have
/// produced: in slot `t` the agent sees chains started before `t`, tracks the
/// released chains that have not started, and anchors those starting at `t`.
/// The result has exactly `horizon` states: slots past the deadline are idle,
/// and returns beyond the window are credited to its last step.
pub fn demonstration_trajectory(
    instance: &UnitInstance,
    deployment: &Deployment,
    layout: &StateLayout,
    horizon: u32,
) -> Result<Trajectory, ModelError> {
    let n = instance.node_count();
    let m = layout.max_tracked;
    let mut order: Vec<usize> = (0..instance.chain_count()).collect();
    order.sort_by_key(|&i| (instance.chains[i].release, i));
    let mut states = Vec::with_capacity(horizon as usize);
    let mut actions = Vec::with_capacity(horizon as usize);
    let mut returns = Vec::with_capacity(horizon as usize);
    for t in 0..horizon {
        if t >= instance.deadline {
            states.push(quiescent_state::<Units, f64>(instance, layout)?);
            actions.push(Action::defer(m, n));
            returns.push(0);
            continue;
        }
        let known = deployment.started_before(t);
        let tracked: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&i| instance.chains[i].release <= t && deployment.first_slot(i).is_none_or(|s| s >= t))
            .take(m)
            .collect();
        states.push(encode_state(instance, &known, t, &tracked, layout)?);
        let rows = (0..m)
            .map(|r| {
                tracked.get(r).filter(|&&i| deployment.first_slot(i) == Some(t)).and_then(|&i| deployment.anchor(i))
            })
            .collect();
        actions.push(Action::from_rows(n, rows).map_err(|e| ModelError::Shape(e.to_string()))?);
        returns.push((0..instance.chain_count()).filter(|&i| deployment.first_slot(i) == Some(t)).count() as u32);
    }
    let late = (0..instance.chain_count()).filter(|&i| deployment.first_slot(i).is_some_and(|s| s >= horizon)).count();
    if let Some(last) = returns.last_mut() {
        *last += late as u32;
    }
    actions.pop();
    Ok(Trajectory::new(states, actions, returns))
}

/// Per-round seeds derived from a master seed.
pub fn round_seeds(master: u64, rounds: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    (0..rounds).map(|_| rng.next_u64()).collect()
}

/// `rounds` demonstrations, round `r` drawn from `round_seeds(cfg.seed, rounds)[r]`.
/// Rounds run on worker threads; the output order follows the rounds.
pub fn iterate_demonstrations(cfg: &GenConfig, rounds: usize) -> Result<Vec<Demonstration>, InvdemoError> {
    if rounds == 0 {
        return Err(InvdemoError::Config(ConfigError("rounds must be at least 1".into())));
    }
    cfg.validate()?;
    let seeds = round_seeds(cfg.seed, rounds);
    crate::par::map(&seeds, |&seed| inverse_generate(&GenConfig { seed, ..cfg.clone() })).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{check_feasible, Calendar};

    #[test]
    fn deadline_is_max_plus_one() {
        assert_eq!(derive_deadline(&[3, 5]).unwrap(), 6);
        assert_eq!(derive_deadline(&[0]).unwrap(), 1);
        assert!(derive_deadline(&[]).is_err());
    }

    #[test]
    fn empty_demonstration() {
        let d = inverse_generate(&GenConfig { chains: 0, ..GenConfig::default() }).unwrap();
        assert_eq!(d.reward(), 0);
        assert_eq!(d.trajectory.label, 0.0);
    }

    #[test]
    fn single_small_chain_is_placed() {
        let cfg = GenConfig { chains: 1, node_demand: [1, 1], capacity: [2, 2], ..GenConfig::default() };
        let d = inverse_generate(&cfg).unwrap();
        assert_eq!(d.reward(), 1);
        assert!(check_feasible(&d.instance, &d.deployment).is_ok());
    }

    #[test]
    fn demonstrations_are_feasible_and_consistent() {
        for seed in 0..30 {
            let cfg = GenConfig { seed, ..GenConfig::default() };
            let d = inverse_generate(&cfg).unwrap();
            assert!(check_feasible(&d.instance, &d.deployment).is_ok(), "seed {seed}");
            assert_eq!(d.trajectory.episode_return() as usize, d.reward());
            assert_eq!(d.trajectory.label, d.reward() as f64);
            assert!(d.trajectory.validate(&cfg.layout(cfg.horizon)).is_ok());
            assert_eq!(derive_deadline(&d.completion_times).unwrap(), d.instance.deadline);
            let cal = Calendar::from_deployment(&d.instance, &d.deployment);
            for t in 0..d.instance.deadline {
                assert!(cal.at(t).node.iter().all(|&r| r <= 4));
            }
        }
    }

    #[test]
    fn refinement_keeps_placements_and_never_finishes_later() {
        let cfg = GenConfig { seed: 11, ..GenConfig::default() };
        let rollout = generate_rollout(&cfg, cfg.seed).unwrap();
        let d = refine(&rollout, cfg.horizon, LexBudget::refinement()).unwrap();
        let ep = &rollout.episode;
        let placed: Vec<usize> = (0..ep.instance.chain_count()).filter(|&i| ep.deployment.is_fully_placed(i)).collect();
        assert_eq!(placed.len(), d.reward());
        for (k, &i) in placed.iter().enumerate() {
            assert_eq!(d.deployment.chain_placement(k), ep.deployment.chain_placement(i));
        }
        let before = sorted_occupied_slots(&ep.deployment.select(&placed));
        assert!(sorted_occupied_slots(&d.deployment) <= before);
    }

    #[test]
    fn refining_again_is_stable() {
        let cfg = GenConfig { seed: 21, ..GenConfig::default() };
        let d = inverse_generate(&cfg).unwrap();
        let again = refine_demonstration(&d, &cfg.layout(cfg.horizon), cfg.horizon, LexBudget::refinement()).unwrap();
        if d.exact {
            assert_eq!(again, d);
        }
        assert!(sorted_occupied_slots(&again.deployment) <= sorted_occupied_slots(&d.deployment));
    }

    #[test]
    fn rounds_are_deterministic() {
        let cfg = GenConfig { seed: 5, ..GenConfig::default() };
        let a = iterate_demonstrations(&cfg, 3).unwrap();
        let b = iterate_demonstrations(&cfg, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
    }
}
