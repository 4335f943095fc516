pub mod dataset;
pub mod gen;
pub mod heuristics;
pub mod invdemo;
pub mod model;
mod par;
pub mod scalar;
pub mod simulator;

pub use model::{Deployment, Instance, Network, ServiceChain};

/// Integer resource units used by generators, the simulator and the file formats.
pub type Units = u32;
pub type UnitNetwork = Network<Units>;
pub type UnitChain = ServiceChain<Units>;
pub type UnitInstance = Instance<Units>;
pub type State = model::SystemState<f64>;
