//! The conservation-constrained library of candidate reactions.
//!
//! A library reaction consumes either one or two molecules and produces the
//! same number, so any total population is conserved. Rows whose reactant
//! and product multisets coincide are excluded since they never change the
//! state. Over three species this gives 3·2 unimolecular conversions plus
//! 6·5 bimolecular ones, 36 in total.

use crate::error::{Error, Result};
use crate::model::{ReactionSystem, SpeciesSet};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReactionLibrary {
    species: SpeciesSet,
    reactions: Vec<Vec<u32>>,
    conserved_total: u64,
}

/// All count-conserving, non-trivial reactions with at most two reactants,
/// in ascending lexicographic order of their coefficient rows.
pub fn enumerate_library(species: &SpeciesSet, conserved_total: u64) -> ReactionLibrary {
    let n = species.len();
    let mut reactions = Vec::new();
    for order in 1..=2 {
        let sides = multisets(n, order);
        for lhs in &sides {
            for rhs in &sides {
                if lhs != rhs {
                    reactions.push(lhs.iter().chain(rhs).copied().collect::<Vec<u32>>());
                }
            }
        }
    }
    reactions.sort();
    ReactionLibrary {
        species: species.clone(),
        reactions,
        conserved_total,
    }
}

/// Count vectors of length `n` summing to `size`.
fn multisets(n: usize, size: u32) -> Vec<Vec<u32>> {
    fn rec(n: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == n {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for c in 0..=left {
            prefix.push(c);
            rec(n, left - c, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(n, size, &mut Vec::with_capacity(n), &mut out);
    }
    out
}

impl ReactionLibrary {
    pub fn species(&self) -> &SpeciesSet {
        &self.species
    }

    pub fn conserved_total(&self) -> u64 {
        self.conserved_total
    }

    pub fn len(&self) -> usize {
        self.reactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reactions.is_empty()
    }

    pub fn reaction(&self, i: usize) -> &[u32] {
        &self.reactions[i]
    }

    pub fn reactions(&self) -> &[Vec<u32>] {
        &self.reactions
    }

    pub fn position(&self, row: &[u32]) -> Option<usize> {
        self.reactions.iter().position(|r| r == row)
    }

    /// Sub-library of the given reactions, kept in library order.
    pub fn restrict(&self, indices: &[usize]) -> Result<Self> {
        let mut idx = indices.to_vec();
        idx.sort_unstable();
        idx.dedup();
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.len()) {
            return Err(Error::contract(format!(
                "library index {bad} out of range for {} reactions",
                self.len()
            )));
        }
        Ok(Self {
            species: self.species.clone(),
            reactions: idx.iter().map(|&i| self.reactions[i].clone()).collect(),
            conserved_total: self.conserved_total,
        })
    }

    /// Unordered pairs `(i, j)` with `i < j`, in lexicographic order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
    }

    /// Builds a system from the library reactions at `indices` with the given rates.
    pub fn system<F: Scalar>(&self, indices: &[usize], rates: Vec<F>) -> Result<ReactionSystem<F>> {
        let rows = indices
            .iter()
            .map(|&i| {
                self.reactions
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::contract(format!("library index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        ReactionSystem::new(self.species.clone(), rows, rates)
    }

    /// Every library reaction, each with its own rate.
    pub fn full_system<F: Scalar>(&self, rates: Vec<F>) -> Result<ReactionSystem<F>> {
        let all: Vec<usize> = (0..self.len()).collect();
        self.system(&all, rates)
    }
}

/// Number of library reactions for `n` species: `n(n-1) + m(m-1)` with `m = n(n+1)/2`.
pub fn library_size(n_species: usize) -> usize {
    let m = n_species * (n_species + 1) / 2;
    n_species * n_species.saturating_sub(1) + m * m.saturating_sub(1)
}
