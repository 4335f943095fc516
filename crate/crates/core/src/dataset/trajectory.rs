use crate::model::{ModelError, StateLayout};
use crate::simulator::Action;
use crate::State;

/// A state sequence with the actions between consecutive states.
///
/// `actions[t]` is the decision taken in the slot of `states[t]`; the decision
/// of the final state is not recorded. `returns[t]` is the number of chains
/// placed in that slot, with the last entry also absorbing anything earned
/// after the recorded window.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub actions: Vec<Action>,
    pub returns: Vec<u32>,
    /// Conditioning label `R * 1[all states satisfy the resource constraints]`.
    pub label: f64,
}

impl Trajectory {
    /// Builds a trajectory and computes its label.
    pub fn new(states: Vec<State>, actions: Vec<Action>, returns: Vec<u32>) -> Self {
        let mut traj = Trajectory { states, actions, returns, label: 0.0 };
        traj.label = label(&traj);
        traj
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Undiscounted return `R`.
    pub fn episode_return(&self) -> u32 {
        self.returns.iter().sum()
    }

    /// True when every state satisfies the capacity and bandwidth constraints.
    pub fn satisfies_constraints(&self) -> bool {
        self.states.iter().all(State::satisfies_resources)
    }

    /// Checks the shape invariants against a layout.
    pub fn validate(&self, layout: &StateLayout) -> Result<(), ModelError> {
        let h = self.states.len();
        if h == 0 {
            return Err(ModelError::Shape("trajectory has no states".into()));
        }
        if self.actions.len() + 1 != h || self.returns.len() != h {
            return Err(ModelError::Shape(format!(
                "{h} states need {} actions and {h} returns, found {} and {}",
                h - 1,
                self.actions.len(),
                self.returns.len()
            )));
        }
        for s in &self.states {
            if s.node_residual.len() != layout.nodes
                || s.link_residual.len() != layout.nodes * layout.nodes
                || s.sfc_features.len() != layout.max_tracked * layout.feature_width()
            {
                return Err(ModelError::Shape("state does not match the layout".into()));
            }
        }
        for a in &self.actions {
            if a.rows().len() != layout.max_tracked || a.nodes() != layout.nodes {
                return Err(ModelError::Shape("action does not match the layout".into()));
            }
        }
        if self.label != label(self) {
            return Err(ModelError::Shape(format!("stored label {} disagrees with {}", self.label, label(self))));
        }
        Ok(())
    }
}

/// `y = R * 1[every state respects capacity and bandwidth]`.
pub fn label(traj: &Trajectory) -> f64 {
    if traj.satisfies_constraints() {
        traj.episode_return() as f64
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SystemState;

    fn state(v: f64) -> State {
        SystemState { node_residual: vec![v], link_residual: vec![0.0], sfc_features: vec![0.0; 7] }
    }

    #[test]
    fn feasible_trajectory_label_is_return() {
        let t = Trajectory::new(vec![state(1.0), state(0.5)], vec![Action::defer(1, 1)], vec![2, 1]);
        assert_eq!(t.label, 3.0);
    }

    #[test]
    fn any_violation_zeroes_the_label() {
        let t = Trajectory::new(vec![state(1.0), state(-0.5)], vec![Action::defer(1, 1)], vec![2, 1]);
        assert_eq!(t.label, 0.0);
    }

    #[test]
    fn validate_shapes() {
        let layout = StateLayout {
            nodes: 1,
            max_tracked: 1,
            max_chain_len: 1,
            demand_scale: 1.0,
            duration_scale: 1.0,
            time_scale: 1.0,
        };
        let t = Trajectory::new(vec![state(1.0), state(1.0)], vec![Action::defer(1, 1)], vec![0, 0]);
        assert!(t.validate(&layout).is_ok());
        let mut bad = t.clone();
        bad.actions.clear();
        assert!(bad.validate(&layout).is_err());
        let mut bad = t;
        bad.label = 5.0;
        assert!(bad.validate(&layout).is_err());
    }
}
