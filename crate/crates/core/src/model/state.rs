use serde::{Deserialize, Serialize};

use super::{link_load, node_load, Deployment, Instance, ModelError};
use crate::scalar::{Resource, StateScalar};

/// Fixed geometry and normalization constants of an encoded state.
///
/// Each tracked chain occupies one row of `2 * max_chain_len + 5` features:
///
/// | offset | feature |
/// |---|---|
/// | 0 | 1 when the row holds a chain |
/// | 1 | `(anchor + 1) / n`, 0 while unplaced |
/// | 2 | release slot / `time_scale` |
/// | 3 .. 3+L | VNF demands / `demand_scale`, zero padded |
/// | 3+L .. 2+2L | flow demands / `demand_scale`, zero padded |
/// | 2+2L | duration / `duration_scale` |
/// | 3+2L | remaining duration / `duration_scale` |
/// | 4+2L | 1 when fully placed |
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateLayout {
    pub nodes: usize,
    pub max_tracked: usize,
    pub max_chain_len: usize,
    pub demand_scale: f64,
    pub duration_scale: f64,
    pub time_scale: f64,
}

impl StateLayout {
    pub fn feature_width(&self) -> usize {
        2 * self.max_chain_len + 5
    }

    pub fn graph_len(&self) -> usize {
        self.nodes + self.nodes * self.nodes
    }

    pub fn state_len(&self) -> usize {
        self.graph_len() + self.max_tracked * self.feature_width()
    }
}

/// `s_t = [V_t; E_t; F_t]`, normalized.
///
/// Residuals are divided by the matching capacity, so a feasible state has
/// every `V`/`E` entry in `[0, 1]`. An overload shows up as a negative entry;
/// load on a zero-bandwidth pair is encoded as minus the raw load.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState<F> {
    pub node_residual: Vec<F>,
    /// Row-major `n x n`.
    pub link_residual: Vec<F>,
    /// Row-major `m x feature_width`.
    pub sfc_features: Vec<F>,
}

impl<F: StateScalar> SystemState<F> {
    /// `V_t ++ E_t ++ F_t`.
    pub fn flatten(&self) -> Vec<F> {
        let mut out = Vec::with_capacity(self.node_residual.len() + self.link_residual.len() + self.sfc_features.len());
        out.extend_from_slice(&self.node_residual);
        out.extend_from_slice(&self.link_residual);
        out.extend_from_slice(&self.sfc_features);
        out
    }

    pub fn from_flat(layout: &StateLayout, flat: &[F]) -> Result<Self, ModelError> {
        if flat.len() != layout.state_len() {
            return Err(ModelError::Shape(format!(
                "state has {} values, layout needs {}",
                flat.len(),
                layout.state_len()
            )));
        }
        let (v, rest) = flat.split_at(layout.nodes);
        let (e, f) = rest.split_at(layout.nodes * layout.nodes);
        Ok(SystemState { node_residual: v.to_vec(), link_residual: e.to_vec(), sfc_features: f.to_vec() })
    }

    /// True when no residual is negative, i.e. capacity and bandwidth hold.
    pub fn satisfies_resources(&self) -> bool {
        self.node_residual.iter().chain(&self.link_residual).all(|&v| v >= F::zero())
    }

    pub fn feature_row<'a>(&'a self, layout: &StateLayout, row: usize) -> &'a [F] {
        let w = layout.feature_width();
        &self.sfc_features[row * w..(row + 1) * w]
    }
}

fn normalized_residual<R: Resource>(capacity: R, load: R) -> f64 {
    let (cap, load) = (capacity.as_f64(), load.as_f64());
    if cap > 0.0 {
        (cap - load) / cap
    } else {
        -load
    }
}

/// Encodes slot `t` of `dep` with feature rows for `tracked` chains.
pub fn encode_state<R: Resource, F: StateScalar>(
    instance: &Instance<R>,
    dep: &Deployment,
    t: u32,
    tracked: &[usize],
    layout: &StateLayout,
) -> Result<SystemState<F>, ModelError> {
    let n = instance.node_count();
    if layout.nodes != n {
        return Err(ModelError::Shape(format!("layout is for {} servers, instance has {n}", layout.nodes)));
    }
    if tracked.len() > layout.max_tracked {
        return Err(ModelError::TooManyTracked { given: tracked.len(), max: layout.max_tracked });
    }
    let nodes = node_load(instance, dep, t)?;
    let links = link_load(instance, dep, t)?;
    let net = &instance.network;

    let node_residual = (0..n).map(|p| F::of(normalized_residual(net.capacity(p), nodes[p]))).collect();
    let mut link_residual = Vec::with_capacity(n * n);
    for p in 0..n {
        for q in 0..n {
            link_residual.push(F::of(normalized_residual(net.bandwidth(p, q), links.get(p, q))));
        }
    }

    let width = layout.feature_width();
    let l_max = layout.max_chain_len;
    let mut sfc_features = vec![F::zero(); layout.max_tracked * width];
    for (row, &i) in tracked.iter().enumerate() {
        let chain = instance.chains.get(i).ok_or(ModelError::UnknownChain(i))?;
        if chain.len() > l_max {
            return Err(ModelError::ChainTooLong { chain: i, len: chain.len(), max: l_max });
        }
        let f = &mut sfc_features[row * width..(row + 1) * width];
        f[0] = F::one();
        let placed = dep.is_fully_placed(i);
        if let (true, Some(anchor)) = (placed, dep.anchor(i)) {
            f[1] = F::of((anchor + 1) as f64 / n as f64);
        }
        f[2] = F::of(chain.release as f64 / layout.time_scale);
        for (k, c) in chain.node_demands.iter().enumerate() {
            f[3 + k] = F::of(c.as_f64() / layout.demand_scale);
        }
        for (k, b) in chain.flow_demands.iter().enumerate() {
            f[3 + l_max + k] = F::of(b.as_f64() / layout.demand_scale);
        }
        let done = dep.slots(i).take_while(|&s| s < t).count() as u32;
        f[2 + 2 * l_max] = F::of(chain.duration as f64 / layout.duration_scale);
        f[3 + 2 * l_max] = F::of(chain.duration.saturating_sub(done) as f64 / layout.duration_scale);
        f[4 + 2 * l_max] = if placed { F::one() } else { F::zero() };
    }
    Ok(SystemState { node_residual, link_residual, sfc_features })
}

/// The state of an idle network with nothing tracked.
pub fn quiescent_state<R: Resource, F: StateScalar>(
    instance: &Instance<R>,
    layout: &StateLayout,
) -> Result<SystemState<F>, ModelError> {
    let n = instance.node_count();
    if layout.nodes != n {
        return Err(ModelError::Shape(format!("layout is for {} servers, instance has {n}", layout.nodes)));
    }
    let net = &instance.network;
    let unit = |cap: R| {
        if cap.is_positive() {
            F::one()
        } else {
            F::zero()
        }
    };
    Ok(SystemState {
        node_residual: (0..n).map(|p| unit(net.capacity(p))).collect(),
        link_residual: (0..n * n).map(|k| unit(net.bandwidth(k / n, k % n))).collect(),
        sfc_features: vec![F::zero(); layout.max_tracked * layout.feature_width()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Network, ServiceChain};

    fn layout(n: usize) -> StateLayout {
        StateLayout {
            nodes: n,
            max_tracked: 2,
            max_chain_len: 3,
            demand_scale: 2.0,
            duration_scale: 10.0,
            time_scale: 10.0,
        }
    }

    fn instance() -> Instance<u32> {
        let net = Network::from_links(vec![2, 2, 2], &[(0, 1, 1), (1, 2, 1)]).unwrap();
        Instance::new(net, vec![ServiceChain::uniform(0, 1, 2, 3), ServiceChain::uniform(1, 2, 4, 0)], 10).unwrap()
    }

    #[test]
    fn before_any_release_everything_is_free() {
        let inst = instance();
        let dep = Deployment::empty(&inst);
        let s: SystemState<f64> = encode_state(&inst, &dep, 0, &[], &layout(3)).unwrap();
        assert_eq!(s.node_residual, vec![1.0; 3]);
        assert_eq!(s.link_residual, vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        assert_eq!(s, quiescent_state(&inst, &layout(3)).unwrap());
        assert_eq!(s.flatten().len(), layout(3).state_len());
    }

    #[test]
    fn one_unit_on_capacity_two_is_half() {
        let inst = instance();
        let mut dep = Deployment::empty(&inst);
        dep.assign(0, &[0], [3, 4]);
        let s: SystemState<f64> = encode_state(&inst, &dep, 3, &[0], &layout(3)).unwrap();
        assert_eq!(s.node_residual[0], 0.5);
        let row = s.feature_row(&layout(3), 0);
        assert_eq!(row[0], 1.0);
        assert_eq!(row[1], 1.0 / 3.0);
        assert_eq!(row[2], 0.3);
        assert_eq!(row[3], 0.5);
        assert_eq!(row[8], 0.2);
        assert_eq!(row[9], 0.2);
        assert_eq!(row[10], 1.0);
        let later: SystemState<f64> = encode_state(&inst, &dep, 4, &[0], &layout(3)).unwrap();
        assert_eq!(later.feature_row(&layout(3), 0)[9], 0.1);
    }

    #[test]
    fn f32_and_f64_agree() {
        let inst = instance();
        let mut dep = Deployment::empty(&inst);
        dep.assign(1, &[1, 2], [0, 1, 2, 3]);
        let a: SystemState<f64> = encode_state(&inst, &dep, 1, &[1, 0], &layout(3)).unwrap();
        let b: SystemState<f32> = encode_state(&inst, &dep, 1, &[1, 0], &layout(3)).unwrap();
        for (x, y) in a.flatten().iter().zip(b.flatten()) {
            assert!((*x as f32 - y).abs() < 1e-6);
        }
    }

    #[test]
    fn overload_encodes_negative() {
        let inst = instance();
        let mut dep = Deployment::empty(&inst);
        dep.assign(1, &[0, 2], [0, 1, 2, 3]);
        let s: SystemState<f64> = encode_state(&inst, &dep, 0, &[], &layout(3)).unwrap();
        assert_eq!(s.link_residual[2], -1.0);
        assert!(!s.satisfies_resources());
    }

    #[test]
    fn tracking_limits() {
        let inst = instance();
        let dep = Deployment::empty(&inst);
        let err = encode_state::<u32, f64>(&inst, &dep, 0, &[0, 1, 0], &layout(3)).unwrap_err();
        assert_eq!(err, ModelError::TooManyTracked { given: 3, max: 2 });
        let mut small = layout(3);
        small.max_chain_len = 1;
        assert!(matches!(encode_state::<u32, f64>(&inst, &dep, 0, &[1], &small), Err(ModelError::ChainTooLong { .. })));
        assert!(encode_state::<u32, f64>(&inst, &dep, 10, &[], &layout(3)).is_err());
    }

    #[test]
    fn flat_roundtrip() {
        let inst = instance();
        let mut dep = Deployment::empty(&inst);
        dep.assign(1, &[1, 2], [0, 1, 2, 3]);
        let s: SystemState<f64> = encode_state(&inst, &dep, 2, &[1], &layout(3)).unwrap();
        assert_eq!(SystemState::from_flat(&layout(3), &s.flatten()).unwrap(), s);
    }
}
