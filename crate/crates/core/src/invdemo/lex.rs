//! Lexicographic min-max refinement of a schedule with placements held fixed.
//!
//! Schedules are ranked by the non-increasing vector of occupied slots, i.e.
//! by the per-slot occupancy histogram read from the last slot down; this is
//! the order induced by `sum_{i,t} K^(t * x_{i,t})` with `K = N * T`, because no
//! slot holds `K` or more active chains. Ties are broken by the non-increasing
//! vector of completion times.

use std::cmp::Reverse;
use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::model::load::Footprint;
use crate::model::{ChainPlacement, Deployment, Instance, ModelError, Network, Residuals};
use crate::scalar::Resource;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LexError {
    #[error("{0} placements given for {1} chains")]
    PlacementCount(usize, usize),
    #[error("placement of chain {0} does not fit an empty network")]
    BadPlacement(usize),
    #[error("no schedule completes every chain before the deadline")]
    Infeasible,
    #[error("more than 64 chains ({0})")]
    TooManyChains(usize),
    #[error("search stopped after {0} states")]
    BudgetExceeded(u64),
    #[error("oracle limited to 3 chains and 6 slots, got {chains} and {slots}")]
    OracleTooLarge { chains: usize, slots: u32 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Limits on the search. Without `beam` the result is exact or an error;
/// with it, each level keeps at most `beam` of its best-ranked states and the
/// result may be suboptimal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LexBudget {
    pub max_states: u64,
    pub beam: Option<usize>,
}

impl LexBudget {
    /// Bounded level width and state count, as used for demonstrations.
    pub fn refinement() -> Self {
        LexBudget { max_states: 250_000, beam: Some(2048) }
    }
}

impl Default for LexBudget {
    fn default() -> Self {
        LexBudget { max_states: 2_000_000, beam: None }
    }
}

/// A refined schedule; `exact` is false when the level width cap was hit.
#[derive(Debug, Clone, PartialEq)]
pub struct LexSchedule {
    pub deployment: Deployment,
    pub exact: bool,
}

/// `sum_{i,t} K^(t * x_{i,t})` with `K = N * T`.
pub fn lex_objective(dep: &Deployment) -> BigUint {
    let n = dep.chain_count() as u64;
    let horizon = dep.horizon() as u64;
    let k = BigUint::from((n * horizon).max(2));
    let mut total = BigUint::zero();
    for row in &dep.schedule {
        for (t, &x) in row.iter().enumerate() {
            total += if x { k.pow(t as u32) } else { BigUint::one() };
        }
    }
    total
}

/// Occupied slot values `t` over all `(i, t)` with `x_{i,t} = 1`, non-increasing.
pub fn sorted_occupied_slots(dep: &Deployment) -> Vec<u32> {
    let mut v: Vec<u32> = (0..dep.chain_count()).flat_map(|i| dep.slots(i).collect::<Vec<_>>()).collect();
    v.sort_unstable_by(|a, b| b.cmp(a));
    v
}

/// Completion times of scheduled chains, non-increasing.
pub fn sorted_completion_times(dep: &Deployment) -> Vec<u32> {
    let mut v: Vec<u32> = dep.completion_times().into_iter().flatten().collect();
    v.sort_unstable_by(|a, b| b.cmp(a));
    v
}

fn footprints<R: Resource>(
    instance: &Instance<R>,
    placements: &[ChainPlacement],
) -> Result<Vec<Footprint<R>>, LexError> {
    if placements.len() != instance.chain_count() {
        return Err(LexError::PlacementCount(placements.len(), instance.chain_count()));
    }
    let full = Residuals::full(&instance.network);
    instance
        .chains
        .iter()
        .zip(placements)
        .enumerate()
        .map(|(i, (chain, pl))| {
            let connected = pl.windows(2).all(|w| w[0] == w[1] || instance.network.is_link(w[0], w[1]));
            if connected && full.fits(chain, pl) {
                Ok(Footprint::of(chain, pl))
            } else {
                Err(LexError::BadPlacement(i))
            }
        })
        .collect()
}

fn build<R: Resource>(instance: &Instance<R>, placements: &[ChainPlacement], slots: &[Vec<u32>]) -> Deployment {
    let mut dep = Deployment::empty(instance);
    for (i, s) in slots.iter().enumerate() {
        dep.assign(i, &placements[i], s.iter().copied());
    }
    dep
}

/// Search from the last slot down. Later slots outrank earlier ones, so the
/// slot being decided is always the most significant one left: each level
/// keeps only the states reached with the least occupancy so far, provided
/// they can still be completed.
struct Search<'a, R> {
    instance: &'a Instance<R>,
    /// Capacity of every server and link, and each chain's `(resource, demand)` list.
    capacity: Vec<f64>,
    usage: Vec<Vec<(usize, f64)>>,
    /// Chains by release, latest first.
    by_release: Vec<usize>,
    /// Sets of chains no two of which fit together.
    cliques: Vec<u64>,
    /// Keyed by `(slots left, slots still to place per chain)`.
    completable: HashMap<(u32, Vec<u32>), bool>,
    states: u64,
    budget: u64,
}

impl<'a, R: Resource> Search<'a, R> {
    fn new(instance: &'a Instance<R>, fps: &[Footprint<R>], budget: u64) -> Self {
        let net = &instance.network;
        let n = net.node_count();
        let links = net.links();
        let mut capacity: Vec<f64> = (0..n).map(|p| net.capacity(p).as_f64()).collect();
        capacity.extend(links.iter().map(|l| l.2.as_f64()));
        let usage = fps
            .iter()
            .map(|fp| {
                let nodes = fp.nodes.iter().map(|&(p, c)| (p, c.as_f64()));
                let edges = fp.links.iter().map(|&(p, q, b)| {
                    let k = links.iter().position(|l| l.0 == p && l.1 == q).expect("placements use links");
                    (n + k, b.as_f64())
                });
                nodes.chain(edges).collect()
            })
            .collect();
        let mut by_release: Vec<usize> = (0..fps.len()).collect();
        by_release.sort_by_key(|&i| Reverse((instance.chains[i].release, i)));
        let cliques = exclusion_cliques(net, fps);
        Search { instance, capacity, usage, by_release, cliques, completable: HashMap::new(), states: 0, budget }
    }

    fn count_state(&mut self) -> Result<(), LexError> {
        self.states += 1;
        if self.states > self.budget {
            return Err(LexError::BudgetExceeded(self.budget));
        }
        Ok(())
    }

    // Whether the remaining work provably cannot fit into `0..left`: for each
    // release cutoff, the work released at or after it must fit after it, on
    // every resource and on every set of chains that exclude one another.
    fn hopeless(&self, left: u32, remaining: &[u32]) -> bool {
        let chains = &self.instance.chains;
        let mut need = vec![0.0; self.capacity.len()];
        let mut clique_need = vec![0u32; self.cliques.len()];
        for &i in &self.by_release {
            let r = remaining[i];
            if r == 0 {
                continue;
            }
            let rel = chains[i].release;
            if rel + r > left {
                return true;
            }
            let room = (left - rel) as f64;
            for &(k, d) in &self.usage[i] {
                need[k] += r as f64 * d;
                if need[k] > self.capacity[k] * room {
                    return true;
                }
            }
            for (c, clique) in self.cliques.iter().enumerate() {
                if clique >> i & 1 == 1 {
                    clique_need[c] += r;
                    if clique_need[c] + rel > left {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Chains that may run together in slot `left - 1`, fewest first. With
    /// `lex`, chains already running above this slot must not fit beside the
    /// chosen set; otherwise no chain with work left may.
    fn options(&self, left: u32, remaining: &[u32], lex: bool) -> Vec<u64> {
        let chains = &self.instance.chains;
        let t = left - 1;
        let candidates: Vec<usize> =
            (0..chains.len()).filter(|&i| remaining[i] > 0 && chains[i].release <= t).collect();
        let covering: Vec<usize> = if lex {
            (0..chains.len()).filter(|&i| remaining[i] < chains[i].duration && chains[i].release <= t).collect()
        } else {
            candidates.clone()
        };
        let forced: u64 =
            candidates.iter().filter(|&&i| chains[i].release + remaining[i] == left).fold(0, |m, &i| m | 1 << i);
        let mut enumerate =
            Subsets { usage: &self.usage, candidates: &candidates, covering: &covering, forced, out: Vec::new() };
        enumerate.run(0, &mut self.capacity.clone(), 0);
        let mut options = enumerate.out;
        options.sort_by_key(|m| (m.count_ones(), *m));
        options
    }

    /// Whether some schedule of the remaining work fits into `0..left`.
    ///
    /// Seen from the top, a chain only has a latest slot, so running it as
    /// early (high) as possible never hurts: only sets that leave no room for
    /// another chain with work left need to be tried.
    fn can_complete(&mut self, left: u32, remaining: &[u32]) -> Result<bool, LexError> {
        if left == 0 {
            return Ok(remaining.iter().all(|&r| r == 0));
        }
        let key = (left, remaining.to_vec());
        if let Some(&known) = self.completable.get(&key) {
            return Ok(known);
        }
        self.count_state()?;
        let mut ok = false;
        if !self.hopeless(left, remaining) {
            let chains = &self.instance.chains;
            let slack = |i: usize| (left - chains[i].release - remaining[i]) as u64;
            let mut options = self.options(left, remaining, false);
            // Least slack first, as in least-laxity scheduling.
            options.sort_by_key(|&m| {
                (Reverse(m.count_ones()), (0..chains.len()).filter(|&i| m >> i & 1 == 1).map(slack).sum::<u64>(), m)
            });
            let mut next = remaining.to_vec();
            for mask in options {
                take(&mut next, mask, remaining);
                if self.can_complete(left - 1, &next)? {
                    ok = true;
                    break;
                }
            }
        }
        self.completable.insert(key, ok);
        Ok(ok)
    }
}

/// `next = remaining` minus one slot for every chain in `mask`.
fn take(next: &mut [u32], mask: u64, remaining: &[u32]) {
    for (i, r) in next.iter_mut().enumerate() {
        *r = remaining[i] - (mask >> i & 1) as u32;
    }
}

/// A state kept at one level of the search.
struct Node {
    /// Completion times fixed so far, non-increasing.
    completion: Vec<u32>,
    parent: Vec<u32>,
    choice: u64,
}

// Grows one clique of the "cannot run together" graph from every chain,
// adding the most conflicted chains first.
fn exclusion_cliques<R: Resource>(net: &Network<R>, fps: &[Footprint<R>]) -> Vec<u64> {
    let n = fps.len();
    let apart = |i: usize, j: usize| {
        let mut res = Residuals::full(net);
        res.commit_footprint(&fps[i]);
        !res.fits_footprint(&fps[j])
    };
    let conflicts: Vec<u64> =
        (0..n).map(|i| (0..n).filter(|&j| j != i && apart(i, j)).fold(0, |m, j| m | 1 << j)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| Reverse(conflicts[i].count_ones()));
    let mut cliques = Vec::new();
    for i in 0..n {
        let mut clique = 1u64 << i;
        for &j in &order {
            if j != i && (0..n).filter(|&k| clique >> k & 1 == 1).all(|k| conflicts[k] >> j & 1 == 1) {
                clique |= 1 << j;
            }
        }
        if clique.count_ones() > 1 && !cliques.contains(&clique) {
            cliques.push(clique);
        }
    }
    cliques
}

// Each slot runs every released, unfinished chain that still fits, oldest first.
fn earliest_packing<R: Resource>(instance: &Instance<R>, fps: &[Footprint<R>]) -> Option<Vec<Vec<u32>>> {
    let mut order: Vec<usize> = (0..fps.len()).collect();
    order.sort_by_key(|&i| (instance.chains[i].release, i));
    let mut remaining: Vec<u32> = instance.chains.iter().map(|c| c.duration).collect();
    let mut slots = vec![Vec::new(); fps.len()];
    for t in 0..instance.deadline {
        let mut res = Residuals::full(&instance.network);
        for &i in &order {
            if remaining[i] > 0 && instance.chains[i].release <= t && res.fits_footprint(&fps[i]) {
                res.commit_footprint(&fps[i]);
                remaining[i] -= 1;
                slots[i].push(t);
            }
        }
    }
    remaining.iter().all(|&r| r == 0).then_some(slots)
}

/// Sets of `candidates` that include `forced`, fit together, and leave no
/// room for any chain of `covering` outside the set.
///
/// For the ranking this is safe with `covering` the released chains active
/// above slot `t`: if one fits in `t` but is idle there, moving its lowest
/// slot above `t` down to `t` improves the ranking, so some optimal schedule
/// never does this.
struct Subsets<'a> {
    usage: &'a [Vec<(usize, f64)>],
    candidates: &'a [usize],
    covering: &'a [usize],
    forced: u64,
    out: Vec<u64>,
}

const SLACK: f64 = 1e-9;

impl Subsets<'_> {
    fn fits(&self, res: &[f64], i: usize) -> bool {
        self.usage[i].iter().all(|&(k, d)| d <= res[k] + SLACK)
    }

    fn take(&self, res: &mut [f64], i: usize, sign: f64) {
        for &(k, d) in &self.usage[i] {
            res[k] -= sign * d;
        }
    }

    fn run(&mut self, k: usize, res: &mut [f64], chosen: u64) {
        if k == self.candidates.len() {
            if self.covering.iter().all(|&i| chosen >> i & 1 == 1 || !self.fits(res, i)) {
                self.out.push(chosen);
            }
            return;
        }
        let i = self.candidates[k];
        if self.fits(res, i) {
            self.take(res, i, 1.0);
            self.run(k + 1, res, chosen | 1 << i);
            self.take(res, i, -1.0);
        }
        if self.forced >> i & 1 == 0 {
            self.run(k + 1, res, chosen);
        }
    }
}

/// Lexicographically minimal schedule for fixed placements, within the default budget.
pub fn lex_minmax_schedule<R: Resource>(
    instance: &Instance<R>,
    placements: &[ChainPlacement],
) -> Result<Deployment, LexError> {
    lex_minmax_schedule_with_budget(instance, placements, LexBudget::default())
}

pub fn lex_minmax_schedule_with_budget<R: Resource>(
    instance: &Instance<R>,
    placements: &[ChainPlacement],
    budget: LexBudget,
) -> Result<Deployment, LexError> {
    lex_search(instance, placements, budget).map(|s| s.deployment)
}

/// Search from the last slot down; see `Search`. The earliest packing, when it
/// finishes every chain, bounds the last useful slot.
pub fn lex_search<R: Resource>(
    instance: &Instance<R>,
    placements: &[ChainPlacement],
    budget: LexBudget,
) -> Result<LexSchedule, LexError> {
    let fps = footprints(instance, placements)?;
    if instance.chain_count() > 64 {
        return Err(LexError::TooManyChains(instance.chain_count()));
    }
    // A failed packing proves nothing: it may need preemption the greedy rule misses.
    let top = match earliest_packing(instance, &fps) {
        Some(packed) => packed.iter().flatten().map(|&t| t + 1).max().unwrap_or(0),
        None => instance.deadline,
    };
    let mut search = Search::new(instance, &fps, budget.max_states);
    let durations: Vec<u32> = instance.chains.iter().map(|c| c.duration).collect();
    if !search.can_complete(top, &durations)? {
        return Err(LexError::Infeasible);
    }

    let mut exact = true;
    // Ordered maps keep tie-breaking independent of hashing.
    let mut levels: Vec<BTreeMap<Vec<u32>, Node>> = Vec::with_capacity(top as usize + 1);
    levels.push(BTreeMap::from([(durations.clone(), Node { completion: Vec::new(), parent: Vec::new(), choice: 0 })]));
    for t in (0..top).rev() {
        let frontier = levels.last().expect("levels start non-empty");
        let mut least = u32::MAX;
        let mut kept: Vec<(Vec<u32>, Node)> = Vec::new();
        for (remaining, node) in frontier {
            let mut next = remaining.clone();
            for mask in search.options(t + 1, remaining, true) {
                let busy = mask.count_ones();
                if busy > least {
                    break;
                }
                take(&mut next, mask, remaining);
                if !search.can_complete(t, &next)? {
                    continue;
                }
                if busy < least {
                    least = busy;
                    kept.clear();
                }
                let starting = (0..durations.len()).filter(|&i| mask >> i & 1 == 1 && remaining[i] == durations[i]);
                let mut completion = node.completion.clone();
                completion.extend(starting.map(|_| t));
                kept.push((next.clone(), Node { completion, parent: remaining.clone(), choice: mask }));
            }
        }
        let mut level: BTreeMap<Vec<u32>, Node> = BTreeMap::new();
        for (state, node) in kept {
            search.count_state()?;
            match level.get(&state) {
                Some(old) if old.completion <= node.completion => {}
                _ => {
                    level.insert(state, node);
                }
            }
        }
        if let Some(width) = budget.beam.filter(|&w| level.len() > w) {
            let mut ranked: Vec<_> = level.into_iter().collect();
            ranked.sort_by(|a, b| (&a.1.completion, &a.0).cmp(&(&b.1.completion, &b.0)));
            ranked.truncate(width);
            level = ranked.into_iter().collect();
            exact = false;
        }
        levels.push(level);
    }

    let mut slots = vec![Vec::new(); instance.chain_count()];
    let mut state = vec![0; instance.chain_count()];
    for (depth, level) in levels.iter().enumerate().skip(1).rev() {
        let node = level.get(&state).ok_or(LexError::Infeasible)?;
        let t = top - depth as u32;
        for (i, s) in slots.iter_mut().enumerate() {
            if node.choice >> i & 1 == 1 {
                s.push(t);
            }
        }
        state = node.parent.clone();
    }
    Ok(LexSchedule { deployment: build(instance, placements, &slots), exact })
}

/// Exhaustive reference for [`lex_minmax_schedule`] on tiny instances
/// (at most 3 chains and 6 slots): every choice of active slots per chain is
/// checked for capacity, and the schedule with the smallest non-increasing
/// vector of occupied slots (then of completion times) wins.
pub fn lex_oracle<R: Resource>(instance: &Instance<R>, placements: &[ChainPlacement]) -> Result<Deployment, LexError> {
    if instance.chain_count() > 3 || instance.deadline > 6 {
        return Err(LexError::OracleTooLarge { chains: instance.chain_count(), slots: instance.deadline });
    }
    let fps = footprints(instance, placements)?;
    let horizon = instance.deadline;
    let options: Vec<Vec<Vec<u32>>> = instance
        .chains
        .iter()
        .map(|c| {
            (0u32..1 << horizon)
                .filter(|mask| mask.count_ones() == c.duration && (0..c.release).all(|t| mask & (1 << t) == 0))
                .map(|mask| (0..horizon).filter(|t| mask & (1 << t) != 0).collect())
                .collect()
        })
        .collect();

    let mut best: Option<((Vec<u32>, Vec<u32>), Vec<Vec<u32>>)> = None;
    let mut pick = vec![0usize; options.len()];
    if options.iter().any(Vec::is_empty) {
        return Err(LexError::Infeasible);
    }
    loop {
        let slots: Vec<Vec<u32>> = pick.iter().zip(&options).map(|(&k, o)| o[k].clone()).collect();
        let fits = (0..horizon).all(|t| {
            let mut res = Residuals::full(&instance.network);
            slots.iter().enumerate().filter(|(_, s)| s.contains(&t)).all(|(i, _)| {
                let ok = res.fits_footprint(&fps[i]);
                if ok {
                    res.commit_footprint(&fps[i]);
                }
                ok
            })
        });
        if fits {
            let dep = build(instance, placements, &slots);
            let key = (sorted_occupied_slots(&dep), sorted_completion_times(&dep));
            if best.as_ref().is_none_or(|(b, _)| key < *b) {
                best = Some((key, slots));
            }
        }
        // odometer increment
        let mut d = 0;
        loop {
            if d == pick.len() {
                let (_, slots) = best.ok_or(LexError::Infeasible)?;
                return Ok(build(instance, placements, &slots));
            }
            pick[d] += 1;
            if pick[d] < options[d].len() {
                break;
            }
            pick[d] = 0;
            d += 1;
        }
    }
}
