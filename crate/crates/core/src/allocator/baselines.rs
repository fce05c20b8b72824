//! Equal and random power allocation baselines.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::{AllocationResult, Instance};
use crate::channel::ChannelRealization;
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::power::PowerVector;
use crate::rng::{self, Domain};

pub const RPA_MAX_ATTEMPTS: usize = 100_000;

/// Equal power allocation: `P_l = P_th / L`. Infeasible results are
/// flagged, not rejected.
pub fn epa(config: &ScenarioConfig, realization: &ChannelRealization) -> Result<AllocationResult> {
    let instance = Instance::new(config, realization)?;
    instance.evaluate(PowerVector::equal(config.cells, instance.constraints.budget))
}

/// Random allocation inside the feasible region: `P` uniform on the simplex
/// `Σ P = u · P_th` with `u` uniform on `(0, 1]`, redrawn until every
/// constraint holds.
pub fn rpa(config: &ScenarioConfig, realization: &ChannelRealization, seed: u64) -> Result<AllocationResult> {
    let instance = Instance::new(config, realization)?;
    let mut stream = rng::substream(seed, Domain::Baseline, 0);
    let budget = instance.constraints.budget;
    for _ in 0..RPA_MAX_ATTEMPTS {
        let weights: Vec<f64> = (0..config.cells).map(|_| Exp1.sample(&mut stream)).collect();
        let total: f64 = weights.iter().sum();
        let u = 1.0 - stream.random::<f64>();
        let p = PowerVector::from_unchecked(weights.iter().map(|w| u * budget * w / total).collect());
        if instance.constraints.slacks(&p).iter().all(|s| *s >= 0.0) {
            return instance.evaluate(p);
        }
    }
    Err(Error::SamplingExhausted {
        attempts: RPA_MAX_ATTEMPTS,
    })
}
