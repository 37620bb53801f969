//! Gillespie direct-method simulation on a fixed snapshot grid.

use rand::distr::Open01;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{combinations, ReactionSystem, SpeciesSet, State};
use crate::rng::RngStream;
use crate::scalar::Scalar;

/// Default bound on the number of events in one trajectory.
pub const DEFAULT_MAX_EVENTS: u64 = 100_000_000;

/// Strictly increasing, positive observation times.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotGrid<F> {
    times: Vec<F>,
}

impl<F: Scalar> SnapshotGrid<F> {
    pub fn new(times: Vec<F>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::contract("snapshot grid must not be empty"));
        }
        if !(times[0] > F::zero()) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::contract("snapshot times must be finite and positive"));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::contract("snapshot times must be strictly increasing"));
        }
        Ok(Self { times })
    }

    /// `n` equidistant times `t_end * k / n` for `k = 1..=n`.
    pub fn uniform(t_end: f64, n: usize) -> Result<Self> {
        if n == 0 || !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::contract("uniform grid needs n >= 1 and a positive end time"));
        }
        Self::new((1..=n).map(|k| F::lit(t_end * k as f64 / n as f64)).collect())
    }

    pub fn times(&self) -> &[F] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Species values on a snapshot grid, one row per time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<F> {
    grid: SnapshotGrid<F>,
    species: SpeciesSet,
    values: Vec<F>,
}

impl<F: Scalar> TimeSeries<F> {
    /// `values` is row-major, `grid.len()` rows by `species.len()` columns.
    pub fn new(grid: SnapshotGrid<F>, species: SpeciesSet, values: Vec<F>) -> Result<Self> {
        if values.len() != grid.len() * species.len() {
            return Err(Error::contract(format!(
                "{} values for {} times x {} species",
                values.len(),
                grid.len(),
                species.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < F::zero()) {
            return Err(Error::contract("time-series values must be finite and non-negative"));
        }
        Ok(Self { grid, species, values })
    }

    pub fn grid(&self) -> &SnapshotGrid<F> {
        &self.grid
    }

    pub fn species(&self) -> &SpeciesSet {
        &self.species
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn n_rows(&self) -> usize {
        self.grid.len()
    }

    pub fn n_species(&self) -> usize {
        self.species.len()
    }

    pub fn row(&self, i: usize) -> &[F] {
        let w = self.n_species();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn get(&self, row: usize, species: usize) -> F {
        self.values[row * self.n_species() + species]
    }
}

/// How a reaction's propensity depends on the state.
#[derive(Debug, Clone, Copy)]
enum Kinetics {
    Source,
    Uni(usize),
    Bi(usize, usize),
    Dimer(usize),
    /// Reactant terms `reactant_terms[start..end]`.
    General(usize, usize),
}

/// A system prepared for repeated stepping.
struct Engine<F> {
    rates: Vec<F>,
    kinetics: Vec<Kinetics>,
    reactant_terms: Vec<(usize, u32)>,
    change_start: Vec<usize>,
    change_terms: Vec<(usize, i64)>,
    original: Vec<usize>,
    propensities: Vec<F>,
}

impl<F: Scalar> Engine<F> {
    /// With `skip_null`, reactions that leave the state unchanged are dropped;
    /// they only add self-loops to the chain, so snapshot distributions are unaffected.
    fn new(system: &ReactionSystem<F>, skip_null: bool) -> Self {
        let n = system.n_species();
        let mut engine = Engine {
            rates: Vec::new(),
            kinetics: Vec::new(),
            reactant_terms: Vec::new(),
            change_start: vec![0],
            change_terms: Vec::new(),
            original: Vec::new(),
            propensities: Vec::new(),
        };
        for i in 0..system.n_reactions() {
            let reactants = system.reactants(i);
            let products = system.products(i);
            let changes: Vec<(usize, i64)> = (0..n)
                .filter_map(|j| {
                    let d = i64::from(products[j]) - i64::from(reactants[j]);
                    (d != 0).then_some((j, d))
                })
                .collect();
            if skip_null && changes.is_empty() {
                continue;
            }
            let terms: Vec<(usize, u32)> = (0..n)
                .filter(|&j| reactants[j] > 0)
                .map(|j| (j, reactants[j]))
                .collect();
            let kinetics = match terms.as_slice() {
                [] => Kinetics::Source,
                [(a, 1)] => Kinetics::Uni(*a),
                [(a, 2)] => Kinetics::Dimer(*a),
                [(a, 1), (b, 1)] => Kinetics::Bi(*a, *b),
                _ => {
                    let start = engine.reactant_terms.len();
                    engine.reactant_terms.extend_from_slice(&terms);
                    Kinetics::General(start, engine.reactant_terms.len())
                }
            };
            engine.rates.push(system.rates()[i]);
            engine.kinetics.push(kinetics);
            engine.change_terms.extend(changes);
            engine.change_start.push(engine.change_terms.len());
            engine.original.push(i);
        }
        engine.propensities = vec![F::zero(); engine.rates.len()];
        engine
    }

    #[inline]
    fn update_propensities(&mut self, counts: &[u64]) -> F {
        let mut total = F::zero();
        for ((a, &rate), &kin) in self.propensities.iter_mut().zip(&self.rates).zip(&self.kinetics) {
            let combos = match kin {
                Kinetics::Source => F::one(),
                Kinetics::Uni(s) => F::from_count(counts[s]),
                Kinetics::Bi(s, t) => F::from_count(counts[s]) * F::from_count(counts[t]),
                Kinetics::Dimer(s) => {
                    let x = counts[s];
                    F::from_count(x) * F::from_count(x.saturating_sub(1)) * F::lit(0.5)
                }
                Kinetics::General(start, end) => {
                    let mut acc = F::one();
                    for &(s, c) in &self.reactant_terms[start..end] {
                        acc *= combinations::<F>(&[c], &[counts[s]]);
                    }
                    acc
                }
            };
            *a = rate * combos;
            total += *a;
        }
        total
    }

    /// One direct-method step from `counts`; returns `(dt, engine reaction index)`.
    #[inline]
    fn step<R: Rng + ?Sized>(&mut self, counts: &[u64], rng: &mut R) -> Option<(F, usize)> {
        let total = self.update_propensities(counts);
        if !(total > F::zero()) {
            return None;
        }
        let u: f64 = rng.sample(Open01);
        let dt = -F::lit(u.ln()) / total;
        let target = F::lit(rng.random::<f64>()) * total;
        let mut acc = F::zero();
        let mut chosen = None;
        for (i, &a) in self.propensities.iter().enumerate() {
            if a > F::zero() {
                acc += a;
                chosen = Some(i);
                if target < acc {
                    break;
                }
            }
        }
        chosen.map(|i| (dt, i))
    }

    #[inline]
    fn apply(&self, i: usize, counts: &mut [u64]) {
        for &(s, d) in &self.change_terms[self.change_start[i]..self.change_start[i + 1]] {
            counts[s] = counts[s]
                .checked_add_signed(d)
                .expect("mass action never fires a reaction without its reactants");
        }
    }
}

/// Samples the waiting time and firing reaction from `state`, or `None` when
/// every propensity is zero.
pub fn ssa_step<F: Scalar, R: Rng + ?Sized>(
    system: &ReactionSystem<F>,
    state: &State,
    rng: &mut R,
) -> Result<Option<(F, usize)>> {
    system.check_state(state)?;
    let mut engine = Engine::new(system, false);
    Ok(engine.step(state.counts(), rng).map(|(dt, i)| (dt, engine.original[i])))
}

/// One trajectory observed on `grid`. The row for time `t` holds the state
/// just before the first event later than `t`.
pub fn simulate<F: Scalar>(
    system: &ReactionSystem<F>,
    init: &State,
    grid: &SnapshotGrid<F>,
    rng: RngStream,
) -> Result<TimeSeries<F>> {
    simulate_with_cap(system, init, grid, rng, DEFAULT_MAX_EVENTS)
}

pub fn simulate_with_cap<F: Scalar>(
    system: &ReactionSystem<F>,
    init: &State,
    grid: &SnapshotGrid<F>,
    rng: RngStream,
    max_events: u64,
) -> Result<TimeSeries<F>> {
    system.check_state(init)?;
    let mut engine = Engine::new(system, true);
    let mut gen = rng.generator();
    let times = grid.times();
    let mut counts = init.counts().to_vec();
    let mut values = Vec::with_capacity(times.len() * counts.len());
    let mut t = F::zero();
    let mut next = 0;
    let mut events = 0u64;

    while next < times.len() {
        let Some((dt, i)) = engine.step(&counts, &mut gen) else {
            break;
        };
        let t_event = t + dt;
        while next < times.len() && times[next] < t_event {
            values.extend(counts.iter().map(|&c| F::from_count(c)));
            next += 1;
        }
        if next == times.len() {
            break;
        }
        if events == max_events {
            return Err(Error::EventCap {
                events,
                cap: max_events,
                time: t.as_f64(),
            });
        }
        engine.apply(i, &mut counts);
        events += 1;
        t = t_event;
    }
    for _ in next..times.len() {
        values.extend(counts.iter().map(|&c| F::from_count(c)));
    }
    TimeSeries::new(grid.clone(), system.species().clone(), values)
}

/// Element-wise mean of `replications` trajectories; replication `i` uses
/// sub-stream `rng.child(i)`.
pub fn mean_time_series<F: Scalar>(
    system: &ReactionSystem<F>,
    init: &State,
    grid: &SnapshotGrid<F>,
    replications: usize,
    rng: RngStream,
) -> Result<TimeSeries<F>> {
    mean_time_series_with_cap(system, init, grid, replications, rng, DEFAULT_MAX_EVENTS)
}

pub fn mean_time_series_with_cap<F: Scalar>(
    system: &ReactionSystem<F>,
    init: &State,
    grid: &SnapshotGrid<F>,
    replications: usize,
    rng: RngStream,
    max_events: u64,
) -> Result<TimeSeries<F>> {
    if replications == 0 {
        return Err(Error::contract("replications must be at least 1"));
    }
    let runs = (0..replications)
        .into_par_iter()
        .map(|i| simulate_with_cap(system, init, grid, rng.child(i as u64), max_events))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut sum = vec![F::zero(); runs[0].values().len()];
    for run in &runs {
        for (acc, v) in sum.iter_mut().zip(run.values()) {
            *acc += *v;
        }
    }
    let n = F::from_usize_(replications);
    let values = sum.into_iter().map(|s| s / n).collect();
    TimeSeries::new(grid.clone(), system.species().clone(), values)
}
