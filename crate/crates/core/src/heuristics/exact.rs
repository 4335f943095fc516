use thiserror::Error;

use super::dfs::all_placements;
use crate::model::load::Footprint;
use crate::model::{Calendar, ChainPlacement, Deployment, Instance, Residuals};
use crate::scalar::Resource;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("search space of 10^{log10_space:.1} exceeds the budget of 10^{log10_budget:.1}")]
    BudgetExceeded { log10_space: f64, log10_budget: f64 },
}

/// Guard on the nominal search space `|V|^(sum L_i) * T^M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBudget {
    pub max_space: f64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { max_space: 1e13 }
    }
}

impl SearchBudget {
    pub fn log10_space<R: Resource>(instance: &Instance<R>) -> f64 {
        let vnfs: usize = instance.chains.iter().map(|c| c.len()).sum();
        vnfs as f64 * (instance.node_count() as f64).log10()
            + instance.chain_count() as f64 * (instance.deadline as f64).log10()
    }

    pub fn check<R: Resource>(&self, instance: &Instance<R>) -> Result<(), SolveError> {
        let log10_space = Self::log10_space(instance);
        let log10_budget = self.max_space.log10();
        if log10_space > log10_budget {
            return Err(SolveError::BudgetExceeded { log10_space, log10_budget });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub deployment: Deployment,
    pub reward: usize,
}

struct Solver<'a, R> {
    instance: &'a Instance<R>,
    order: Vec<usize>,
    options: Vec<Vec<(ChainPlacement, Footprint<R>)>>,
    calendar: Calendar<R>,
    current: Deployment,
    placed: usize,
    best: Deployment,
    best_reward: usize,
    ceiling: usize,
}

impl<'a, R: Resource> Solver<'a, R> {
    fn branch(&mut self, k: usize) {
        if self.best_reward == self.ceiling {
            return;
        }
        if k == self.order.len() {
            if self.placed > self.best_reward {
                self.best_reward = self.placed;
                self.best = self.current.clone();
            }
            return;
        }
        if self.placed + (self.order.len() - k) <= self.best_reward {
            return;
        }
        let i = self.order[k];
        for o in 0..self.options[k].len() {
            let mut slots = Vec::with_capacity(self.instance.chains[i].duration as usize);
            self.schedule(k, o, self.instance.chains[i].release, &mut slots);
            if self.best_reward == self.ceiling {
                return;
            }
        }
        self.branch(k + 1);
    }

    // Picks the chain's active slots in increasing order, pruning on capacity.
    fn schedule(&mut self, k: usize, o: usize, from: u32, slots: &mut Vec<u32>) {
        let i = self.order[k];
        let chain = &self.instance.chains[i];
        let need = chain.duration as usize - slots.len();
        if need == 0 {
            let placement = self.options[k][o].0.clone();
            self.current.assign(i, &placement, slots.iter().copied());
            self.placed += 1;
            self.branch(k + 1);
            self.placed -= 1;
            self.current.unassign(i);
            return;
        }
        let last = self.instance.deadline - need as u32;
        for t in from..=last {
            let fp = &self.options[k][o].1;
            if !self.calendar.at(t).fits_footprint(fp) {
                continue;
            }
            let fp = fp.clone();
            self.calendar_commit(t, &fp);
            slots.push(t);
            self.schedule(k, o, t + 1, slots);
            slots.pop();
            self.calendar_release(t, &fp);
            if self.best_reward == self.ceiling {
                return;
            }
        }
    }

    fn calendar_commit(&mut self, t: u32, fp: &Footprint<R>) {
        self.calendar.slot_mut(t).commit_footprint(fp);
    }

    fn calendar_release(&mut self, t: u32, fp: &Footprint<R>) {
        self.calendar.slot_mut(t).release_footprint(fp);
    }
}

/// Maximum-reward deployment by branch and bound over placements and schedules.
///
/// Chains are visited in release order; each is either skipped or given a
/// placement plus a set of active slots. A branch is cut once the chains left
/// cannot beat the incumbent.
pub fn exact_solve<R: Resource>(instance: &Instance<R>, budget: &SearchBudget) -> Result<ExactSolution, SolveError> {
    budget.check(instance)?;
    let full = Residuals::full(&instance.network);
    let mut servable: Vec<usize> = (0..instance.chain_count())
        .filter(|&i| {
            let c = &instance.chains[i];
            c.release.checked_add(c.duration).is_some_and(|end| end <= instance.deadline)
        })
        .collect();
    servable.sort_by_key(|&i| (instance.chains[i].release, i));
    let (order, options): (Vec<usize>, Vec<Vec<(ChainPlacement, Footprint<R>)>>) = servable
        .into_iter()
        .map(|i| {
            let chain = &instance.chains[i];
            let opts = all_placements(&instance.network, &full, chain)
                .into_iter()
                .map(|pl| {
                    let fp = Footprint::of(chain, &pl);
                    (pl, fp)
                })
                .collect::<Vec<_>>();
            (i, opts)
        })
        .filter(|(_, opts)| !opts.is_empty())
        .unzip();

    let empty = Deployment::empty(instance);
    let ceiling = order.len();
    let mut solver = Solver {
        instance,
        order,
        options,
        calendar: Calendar::new(&instance.network, instance.deadline),
        current: empty.clone(),
        placed: 0,
        best: empty,
        best_reward: 0,
        ceiling,
    };
    solver.branch(0);
    Ok(ExactSolution { deployment: solver.best, reward: solver.best_reward })
}
