//! RMSE objective between a reference time series and simulated means.

use crate::error::{Error, Result};
use crate::model::{ReactionSystem, State};
use crate::rng::RngStream;
use crate::scalar::Scalar;
use crate::ssa::{mean_time_series_with_cap, TimeSeries, DEFAULT_MAX_EVENTS};

/// Default number of trajectories averaged per objective evaluation.
pub const DEFAULT_REPLICATIONS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct Objective<F> {
    reference: TimeSeries<F>,
    replications: usize,
    normalization: F,
    max_events: u64,
}

impl<F: Scalar> Objective<F> {
    pub fn new(reference: TimeSeries<F>, replications: usize, normalization: F) -> Result<Self> {
        if replications == 0 {
            return Err(Error::contract("replications must be at least 1"));
        }
        if !(normalization > F::zero()) || !normalization.is_finite() {
            return Err(Error::contract(format!(
                "normalization must be positive and finite, got {normalization}"
            )));
        }
        Ok(Self {
            reference,
            replications,
            normalization,
            max_events: DEFAULT_MAX_EVENTS,
        })
    }

    /// 20 replications, values normalized by the total initial population.
    pub fn with_defaults(reference: TimeSeries<F>, init: &State) -> Result<Self> {
        Self::new(reference, DEFAULT_REPLICATIONS, F::from_count(init.total().max(1)))
    }

    pub fn with_max_events(mut self, max_events: u64) -> Self {
        self.max_events = max_events;
        self
    }

    pub fn reference(&self) -> &TimeSeries<F> {
        &self.reference
    }

    pub fn replications(&self) -> usize {
        self.replications
    }

    pub fn normalization(&self) -> F {
        self.normalization
    }

    pub fn max_events(&self) -> u64 {
        self.max_events
    }

    /// Loss of `system` started from `init`; replication `i` uses `rng.child(i)`.
    pub fn evaluate(&self, system: &ReactionSystem<F>, init: &State, rng: RngStream) -> Result<F> {
        if system.species() != self.reference.species() {
            return Err(Error::contract(format!(
                "model species {:?} differ from reference species {:?}",
                system.species().names(),
                self.reference.species().names()
            )));
        }
        let simulated = mean_time_series_with_cap(
            system,
            init,
            self.reference.grid(),
            self.replications,
            rng,
            self.max_events,
        )?;
        rmse(&self.reference, &simulated, self.normalization)
    }
}

pub fn evaluate<F: Scalar>(
    objective: &Objective<F>,
    system: &ReactionSystem<F>,
    init: &State,
    rng: RngStream,
) -> Result<F> {
    objective.evaluate(system, init, rng)
}

/// `sqrt(mean(((reference - simulated) / normalization)^2))` over all cells.
pub fn rmse<F: Scalar>(reference: &TimeSeries<F>, simulated: &TimeSeries<F>, normalization: F) -> Result<F> {
    if reference.grid() != simulated.grid() {
        return Err(Error::contract("time series are on different snapshot grids"));
    }
    if reference.n_species() != simulated.n_species() {
        return Err(Error::contract(format!(
            "time series have {} and {} species",
            reference.n_species(),
            simulated.n_species()
        )));
    }
    if !(normalization > F::zero()) {
        return Err(Error::contract("normalization must be positive"));
    }
    let n = reference.values().len();
    if n == 0 {
        return Ok(F::zero());
    }
    let sum: F = reference
        .values()
        .iter()
        .zip(simulated.values())
        .map(|(&a, &b)| {
            let d = (a - b) / normalization;
            d * d
        })
        .sum();
    Ok((sum / F::from_usize_(n)).sqrt())
}
