use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::gen::{ConfigError, GenConfig};
use crate::UnitChain;

/// Draws exactly `count` chains from a Poisson process of `rate` arrivals per slot.
///
/// Arrival times come from exponential gaps in continuous time and are floored
/// to slots, so per-slot counts are Poisson with mean `rate`. Releases may lie
/// beyond any horizon; such chains simply never arrive in time.
pub fn arrivals<G: Rng + ?Sized>(
    cfg: &GenConfig,
    count: usize,
    rate: f64,
    rng: &mut G,
) -> Result<Vec<UnitChain>, ConfigError> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(ConfigError(format!("arrival rate must be positive, got {rate}")));
    }
    let gap = Exp::new(rate).map_err(|e| ConfigError(e.to_string()))?;
    let mut clock = 0.0f64;
    let mut chains = Vec::with_capacity(count);
    for id in 0..count {
        clock += gap.sample(rng);
        // float-to-int casts saturate
        chains.push(cfg.chain(id, clock.floor() as u32, rng));
    }
    Ok(chains)
}
