//! Reaction systems under stochastic mass-action kinetics.
//!
//! A system over `n_S` species is a dense coefficient matrix with one row per
//! reaction and `2 * n_S` columns (reactant coefficients followed by product
//! coefficients) together with one rate constant per reaction.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Ordered, unique species identifiers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SpeciesSet {
    names: Vec<String>,
}

impl SpeciesSet {
    /// Builds a species set; names must be unique identifiers and the set non-empty.
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::contract("species set must not be empty"));
        }
        for (i, name) in names.iter().enumerate() {
            if !is_identifier(name) {
                return Err(Error::contract(format!("invalid species name {name:?}")));
            }
            if names[..i].contains(name) {
                return Err(Error::contract(format!("duplicate species name {name:?}")));
            }
        }
        Ok(Self { names })
    }

    /// The species set of a system without reactions or species.
    pub fn empty() -> Self {
        Self { names: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub(crate) fn push_unchecked(&mut self, name: String) -> usize {
        self.names.push(name);
        self.names.len() - 1
    }
}

pub(crate) fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_alphanumeric() || c == '_')
}

/// Species copy numbers.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct State {
    counts: Vec<u64>,
}

impl State {
    pub fn new(counts: Vec<u64>) -> Self {
        Self { counts }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

impl From<Vec<u64>> for State {
    fn from(counts: Vec<u64>) -> Self {
        Self::new(counts)
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.counts.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Coefficient matrix `C` plus rate vector `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactionSystem<F> {
    species: SpeciesSet,
    coefficients: Vec<u32>,
    rates: Vec<F>,
}

impl<F: Scalar> ReactionSystem<F> {
    /// Builds a system from coefficient rows of width `2 * n_S` and one rate per row.
    pub fn new(species: SpeciesSet, rows: Vec<Vec<u32>>, rates: Vec<F>) -> Result<Self> {
        if rows.len() != rates.len() {
            return Err(Error::contract(format!(
                "{} coefficient rows but {} rates",
                rows.len(),
                rates.len()
            )));
        }
        let width = 2 * species.len();
        let mut coefficients = Vec::with_capacity(rows.len() * width);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::contract(format!(
                    "reaction {i} has {} coefficients, expected {width}",
                    row.len()
                )));
            }
            coefficients.extend_from_slice(row);
        }
        check_rates(&rates)?;
        Ok(Self {
            species,
            coefficients,
            rates,
        })
    }

    /// A system with no reactions over the given species.
    pub fn empty(species: SpeciesSet) -> Self {
        Self {
            species,
            coefficients: Vec::new(),
            rates: Vec::new(),
        }
    }

    pub fn species(&self) -> &SpeciesSet {
        &self.species
    }

    pub fn n_species(&self) -> usize {
        self.species.len()
    }

    pub fn n_reactions(&self) -> usize {
        self.rates.len()
    }

    pub fn rates(&self) -> &[F] {
        &self.rates
    }

    /// Full coefficient row `i`: reactants then products.
    pub fn row(&self, i: usize) -> &[u32] {
        let w = 2 * self.n_species();
        &self.coefficients[i * w..(i + 1) * w]
    }

    pub fn reactants(&self, i: usize) -> &[u32] {
        &self.row(i)[..self.n_species()]
    }

    pub fn products(&self, i: usize) -> &[u32] {
        &self.row(i)[self.n_species()..]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> + '_ {
        (0..self.n_reactions()).map(move |i| self.row(i))
    }

    /// Replaces the rate vector, keeping the structure.
    pub fn with_rates(&self, rates: Vec<F>) -> Result<Self> {
        if rates.len() != self.n_reactions() {
            return Err(Error::contract(format!(
                "expected {} rates, got {}",
                self.n_reactions(),
                rates.len()
            )));
        }
        check_rates(&rates)?;
        Ok(Self {
            species: self.species.clone(),
            coefficients: self.coefficients.clone(),
            rates,
        })
    }

    /// Appends a reaction.
    pub fn push(&mut self, row: &[u32], rate: F) -> Result<()> {
        if row.len() != 2 * self.n_species() {
            return Err(Error::contract(format!(
                "reaction has {} coefficients, expected {}",
                row.len(),
                2 * self.n_species()
            )));
        }
        check_rates(std::slice::from_ref(&rate))?;
        self.coefficients.extend_from_slice(row);
        self.rates.push(rate);
        Ok(())
    }

    /// Keeps only reactions with a positive rate of at least `threshold`.
    pub fn extract(&self, threshold: F) -> Self {
        let mut out = Self::empty(self.species.clone());
        for i in 0..self.n_reactions() {
            if self.rates[i] > F::zero() && self.rates[i] >= threshold {
                out.coefficients.extend_from_slice(self.row(i));
                out.rates.push(self.rates[i]);
            }
        }
        out
    }

    /// Stochastic mass-action propensities: `r_i * prod_j binom(x_j, c_ij)`.
    ///
    /// For the binary cases this is `r*A*B`, `r*A`, `r*A*(A-1)/2` and `r`.
    pub fn propensities(&self, state: &State) -> Result<Vec<F>> {
        self.check_state(state)?;
        Ok((0..self.n_reactions())
            .map(|i| self.rates[i] * combinations(self.reactants(i), state.counts()))
            .collect())
    }

    /// Net change `products - reactants` of reaction `i`.
    pub fn state_change(&self, i: usize) -> Result<Vec<i64>> {
        if i >= self.n_reactions() {
            return Err(Error::contract(format!(
                "reaction index {i} out of range for {} reactions",
                self.n_reactions()
            )));
        }
        Ok(self
            .reactants(i)
            .iter()
            .zip(self.products(i))
            .map(|(&r, &p)| i64::from(p) - i64::from(r))
            .collect())
    }

    pub fn check_state(&self, state: &State) -> Result<()> {
        if state.len() != self.n_species() {
            return Err(Error::contract(format!(
                "state has {} species, system has {}",
                state.len(),
                self.n_species()
            )));
        }
        Ok(())
    }

    /// Converts the rate type, e.g. to run an f64 model in f32.
    pub fn cast<G: Scalar>(&self) -> ReactionSystem<G> {
        ReactionSystem {
            species: self.species.clone(),
            coefficients: self.coefficients.clone(),
            rates: self.rates.iter().map(|r| G::lit(r.as_f64())).collect(),
        }
    }
}

fn check_rates<F: Scalar>(rates: &[F]) -> Result<()> {
    for (i, r) in rates.iter().enumerate() {
        if !r.is_finite() || *r < F::zero() {
            return Err(Error::contract(format!(
                "rate {i} must be finite and non-negative, got {r}"
            )));
        }
    }
    Ok(())
}

/// Number of distinct reactant combinations, `prod_j binom(x_j, c_j)`.
#[inline]
pub(crate) fn combinations<F: Scalar>(reactants: &[u32], counts: &[u64]) -> F {
    let mut acc = F::one();
    for (&c, &x) in reactants.iter().zip(counts) {
        for k in 0..u64::from(c) {
            if x <= k {
                return F::zero();
            }
            acc = acc * F::from_count(x - k) / F::from_count(k + 1);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sir() -> ReactionSystem<f64> {
        let species = SpeciesSet::new(["S", "I", "R"]).unwrap();
        ReactionSystem::new(
            species,
            vec![vec![1, 1, 0, 0, 2, 0], vec![0, 1, 0, 0, 0, 1]],
            vec![0.02, 5.0],
        )
        .unwrap()
    }

    #[test]
    fn sir_propensities() {
        let a = sir().propensities(&State::new(vec![1980, 20, 0])).unwrap();
        assert!((a[0] - 792.0).abs() < 1e-9);
        assert!((a[1] - 100.0).abs() < 1e-12);
    }

    #[test]
    fn zero_reactants_give_zero_propensity() {
        let a = sir().propensities(&State::new(vec![1980, 0, 20])).unwrap();
        assert_eq!(a, vec![0.0, 0.0]);
    }

    #[test]
    fn dimerisation_counts_pairs() {
        let species = SpeciesSet::new(["S"]).unwrap();
        let sys = ReactionSystem::new(species, vec![vec![2, 0]], vec![1.0]).unwrap();
        // Brute-force pair enumeration over five molecules.
        let pairs = (0..5).flat_map(|i| (i + 1..5).map(move |j| (i, j))).count();
        let a = sys.propensities(&State::new(vec![5])).unwrap();
        assert_eq!(a[0], pairs as f64);
        assert_eq!(a[0], 10.0);
        let a = sys.propensities(&State::new(vec![1])).unwrap();
        assert_eq!(a[0], 0.0);
    }

    #[test]
    fn source_reaction_propensity_is_rate() {
        let species = SpeciesSet::new(["A"]).unwrap();
        let sys = ReactionSystem::new(species, vec![vec![0, 1]], vec![3.5]).unwrap();
        assert_eq!(sys.propensities(&State::new(vec![0])).unwrap(), vec![3.5]);
    }

    #[test]
    fn sir_state_changes() {
        let sys = sir();
        assert_eq!(sys.state_change(0).unwrap(), vec![-1, 1, 0]);
        assert_eq!(sys.state_change(1).unwrap(), vec![0, -1, 1]);
        assert!(matches!(sys.state_change(2), Err(Error::Contract(_))));
    }

    #[test]
    fn identity_reaction_has_zero_change() {
        let species = SpeciesSet::new(["S", "I"]).unwrap();
        let sys = ReactionSystem::new(species, vec![vec![1, 1, 1, 1]], vec![1.0]).unwrap();
        assert_eq!(sys.state_change(0).unwrap(), vec![0, 0]);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        assert!(matches!(
            sir().propensities(&State::new(vec![1, 2])),
            Err(Error::Contract(_))
        ));
        let species = SpeciesSet::new(["S"]).unwrap();
        assert!(ReactionSystem::new(species.clone(), vec![vec![1]], vec![1.0]).is_err());
        assert!(ReactionSystem::<f64>::new(species.clone(), vec![vec![1, 0]], vec![]).is_err());
        assert!(ReactionSystem::new(species, vec![vec![1, 0]], vec![-1.0]).is_err());
    }

    #[test]
    fn species_validation() {
        assert!(SpeciesSet::new(Vec::<String>::new()).is_err());
        assert!(SpeciesSet::new(["S", "S"]).is_err());
        assert!(SpeciesSet::new(["1S"]).is_err());
        assert!(SpeciesSet::new(["S I"]).is_err());
        assert_eq!(SpeciesSet::new(["S", "I"]).unwrap().index_of("I"), Some(1));
    }

    #[test]
    fn extraction_thresholds() {
        let sys = sir();
        assert_eq!(sys.extract(0.0).n_reactions(), 2);
        assert_eq!(sys.extract(1.0).n_reactions(), 1);
        assert_eq!(sys.extract(f64::INFINITY).n_reactions(), 0);
    }

    #[test]
    fn propensities_work_in_f32() {
        let sys: ReactionSystem<f32> = sir().cast();
        let a = sys.propensities(&State::new(vec![1980, 20, 0])).unwrap();
        assert!((a[0] - 792.0).abs() < 1e-3);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn propensities_scale_with_rates(
                k in 0.0f64..100.0,
                s in 0u64..3000, i in 0u64..3000, r in 0u64..3000,
            ) {
                let sys = sir();
                let state = State::new(vec![s, i, r]);
                let scaled = sys.with_rates(sys.rates().iter().map(|x| x * k).collect()).unwrap();
                let a = sys.propensities(&state).unwrap();
                let b = scaled.propensities(&state).unwrap();
                for (x, y) in a.iter().zip(&b) {
                    prop_assert!((x * k - y).abs() <= 1e-12 * y.abs().max(1.0));
                    prop_assert!(*y >= 0.0);
                }
            }
        }
    }
}
