//! Problem encodings: decoders from a flat raw vector to candidate systems.
//!
//! | kind                  | dimension              | decoded systems |
//! |-----------------------|------------------------|-----------------|
//! | `LibraryOfReactions`  | library size           | 1 (all reactions) |
//! | `CoefficientSteps`    | `2 * 2 n_S + 2`        | 1 (two reactions) |
//! | `ReactionSteps`       | library size + 2       | 1 (top-two ranked) |
//! | `LibraryOfSystems`    | `2 * C(library, 2)`    | one per reaction pair |
//! | `FixedStructure`      | reactions in structure | 1 |
//!
//! Rate coordinates always pass through the logarithmic reparametrization
//! and are clamped at zero.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::library::ReactionLibrary;
use crate::loss::Objective;
use crate::model::{ReactionSystem, SpeciesSet, State};
use crate::reparam::ReparamConfig;
use crate::rng::RngStream;
use crate::scalar::Scalar;

/// Reactions kept in the decoded model of the fixed-size encodings.
pub const MODEL_SIZE: usize = 2;
/// Default cut-off below which reactions are dropped from reported models.
pub const DEFAULT_THRESHOLD: f64 = 1e-4;
/// Largest coefficient reachable in the coefficient-steps encoding.
pub const MAX_COEFFICIENT: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    LibraryOfReactions,
    CoefficientSteps,
    ReactionSteps,
    LibraryOfSystems,
    /// Known structure, only the rates are estimated.
    FixedStructure,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 5] = [
        ProblemKind::LibraryOfReactions,
        ProblemKind::CoefficientSteps,
        ProblemKind::ReactionSteps,
        ProblemKind::LibraryOfSystems,
        ProblemKind::FixedStructure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::LibraryOfReactions => "library-of-reactions",
            ProblemKind::CoefficientSteps => "coefficient-steps",
            ProblemKind::ReactionSteps => "reaction-steps",
            ProblemKind::LibraryOfSystems => "library-of-systems",
            ProblemKind::FixedStructure => "fixed-structure",
        }
    }

    /// Tuned `(samples, sigma, learning rate)` for each kind.
    pub fn preset(self) -> (usize, f64, f64) {
        match self {
            ProblemKind::LibraryOfReactions => (100, 0.2, 1.0),
            ProblemKind::CoefficientSteps => (1000, 1.0, 1.0),
            ProblemKind::ReactionSteps => (100, 0.2, 0.1),
            ProblemKind::LibraryOfSystems => (100, 0.2, 0.5),
            ProblemKind::FixedStructure => (100, 0.2, 1.0),
        }
    }

    /// Uniform range of initial raw rate coordinates.
    pub fn default_rate_init(self) -> (f64, f64) {
        match self {
            // All library reactions fire at once; high initial rates make
            // every evaluation cost millions of events.
            ProblemKind::LibraryOfReactions => (30.0, 55.0),
            _ => (40.0, 90.0),
        }
    }

    fn single_system(self) -> bool {
        self != ProblemKind::LibraryOfSystems
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        let kind = match norm.as_str() {
            "library-of-reactions" | "lor" | "reactions" => ProblemKind::LibraryOfReactions,
            "coefficient-steps" | "cs" | "coefficients" => ProblemKind::CoefficientSteps,
            "reaction-steps" | "rs" | "ranking" => ProblemKind::ReactionSteps,
            "library-of-systems" | "los" | "systems" | "brute-force" => ProblemKind::LibraryOfSystems,
            "fixed-structure" | "rates" | "fixed" => ProblemKind::FixedStructure,
            _ => {
                return Err(Error::contract(format!(
                    "unknown problem kind {s:?}; expected one of {}",
                    ProblemKind::ALL.map(|k| k.name()).join(", ")
                )))
            }
        };
        Ok(kind)
    }
}

/// Loss of one raw vector: the optimized aggregate, the reported value and
/// the per-system losses it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemLoss<F> {
    pub optimized: F,
    pub reported: F,
    pub per_system: Vec<F>,
}

/// Single-system kinds pass their loss through. Library of systems optimizes
/// the sum (each rate pair only moves its own summand) and reports the minimum.
pub fn aggregate_loss<F: Scalar>(kind: ProblemKind, losses: &[F]) -> Result<(F, F)> {
    if kind.single_system() {
        if losses.len() != 1 {
            return Err(Error::contract(format!(
                "{kind} expects exactly one loss, got {}",
                losses.len()
            )));
        }
        return Ok((losses[0], losses[0]));
    }
    if losses.is_empty() {
        return Err(Error::contract("no per-system losses to aggregate"));
    }
    let sum = losses.iter().copied().sum();
    let min = losses.iter().copied().fold(F::infinity(), F::min);
    Ok((sum, min))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemEncoding<F> {
    kind: ProblemKind,
    species: SpeciesSet,
    library: Option<ReactionLibrary>,
    structure: Option<ReactionSystem<F>>,
    pairs: Vec<(usize, usize)>,
    reparam: ReparamConfig<F>,
    threshold: F,
    rate_init: (F, F),
}

impl<F: Scalar> ProblemEncoding<F> {
    fn base(kind: ProblemKind, species: SpeciesSet) -> Self {
        let (lo, hi) = kind.default_rate_init();
        Self {
            kind,
            species,
            library: None,
            structure: None,
            pairs: Vec::new(),
            reparam: ReparamConfig::default(),
            threshold: F::lit(DEFAULT_THRESHOLD),
            rate_init: (F::lit(lo), F::lit(hi)),
        }
    }

    /// Library-backed kinds; `FixedStructure` and `CoefficientSteps` use the
    /// library only for its species.
    pub fn new(kind: ProblemKind, library: ReactionLibrary) -> Result<Self> {
        if kind == ProblemKind::FixedStructure {
            return Err(Error::contract("fixed-structure problems are built from a system"));
        }
        let needed = match kind {
            ProblemKind::LibraryOfSystems => 2,
            ProblemKind::ReactionSteps => MODEL_SIZE,
            _ => 0,
        };
        if kind != ProblemKind::CoefficientSteps && library.len() < needed.max(1) {
            return Err(Error::contract(format!(
                "{kind} needs at least {} library reactions, library has {}",
                needed.max(1),
                library.len()
            )));
        }
        let mut enc = Self::base(kind, library.species().clone());
        if kind == ProblemKind::LibraryOfSystems {
            enc.pairs = library.pairs();
        }
        enc.library = Some(library);
        Ok(enc)
    }

    pub fn library_of_reactions(library: ReactionLibrary) -> Result<Self> {
        Self::new(ProblemKind::LibraryOfReactions, library)
    }

    pub fn coefficient_steps(species: SpeciesSet) -> Self {
        Self::base(ProblemKind::CoefficientSteps, species)
    }

    pub fn reaction_steps(library: ReactionLibrary) -> Result<Self> {
        Self::new(ProblemKind::ReactionSteps, library)
    }

    pub fn library_of_systems(library: ReactionLibrary) -> Result<Self> {
        Self::new(ProblemKind::LibraryOfSystems, library)
    }

    pub fn fixed_structure(structure: ReactionSystem<F>) -> Self {
        let mut enc = Self::base(ProblemKind::FixedStructure, structure.species().clone());
        enc.structure = Some(structure);
        enc
    }

    pub fn with_threshold(mut self, threshold: F) -> Result<Self> {
        if threshold.is_nan() || threshold < F::zero() {
            return Err(Error::contract(format!(
                "threshold must be non-negative, got {threshold}"
            )));
        }
        self.threshold = threshold;
        Ok(self)
    }

    pub fn with_rate_init(mut self, lo: F, hi: F) -> Result<Self> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::contract(format!("invalid initialization range [{lo}, {hi}]")));
        }
        self.rate_init = (lo, hi);
        Ok(self)
    }

    pub fn with_reparam(mut self, reparam: ReparamConfig<F>) -> Self {
        self.reparam = reparam;
        self
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn species(&self) -> &SpeciesSet {
        &self.species
    }

    pub fn library(&self) -> Option<&ReactionLibrary> {
        self.library.as_ref()
    }

    pub fn threshold(&self) -> F {
        self.threshold
    }

    pub fn reparam(&self) -> &ReparamConfig<F> {
        &self.reparam
    }

    /// Library pairs in decoding order (library of systems only).
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    fn lib(&self) -> &ReactionLibrary {
        self.library.as_ref().expect("library-backed encoding")
    }

    pub fn dimension(&self) -> usize {
        match self.kind {
            ProblemKind::LibraryOfReactions => self.lib().len(),
            ProblemKind::CoefficientSteps => MODEL_SIZE * 2 * self.species.len() + MODEL_SIZE,
            ProblemKind::ReactionSteps => self.lib().len() + MODEL_SIZE,
            ProblemKind::LibraryOfSystems => 2 * self.pairs.len(),
            ProblemKind::FixedStructure => self.structure.as_ref().map_or(0, |s| s.n_reactions()),
        }
    }

    /// Number of systems produced by `decode`.
    pub fn n_systems(&self) -> usize {
        match self.kind {
            ProblemKind::LibraryOfSystems => self.pairs.len(),
            _ => 1,
        }
    }

    fn rate(&self, raw: F) -> F {
        self.reparam.to_rate(raw).max(F::zero())
    }

    fn check_dim(&self, theta: &[F]) -> Result<()> {
        if theta.len() != self.dimension() {
            return Err(Error::contract(format!(
                "{} expects {} parameters, got {}",
                self.kind,
                self.dimension(),
                theta.len()
            )));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::contract("parameters must be finite"));
        }
        Ok(())
    }

    /// Candidate systems for `theta`.
    pub fn decode(&self, theta: &[F]) -> Result<Vec<ReactionSystem<F>>> {
        Ok(match self.kind {
            ProblemKind::LibraryOfReactions => vec![self.decode_library_of_reactions(theta)?],
            ProblemKind::CoefficientSteps => vec![self.decode_coefficient_steps(theta)?],
            ProblemKind::ReactionSteps => vec![self.decode_reaction_steps(theta)?],
            ProblemKind::LibraryOfSystems => self.decode_library_of_systems(theta)?,
            ProblemKind::FixedStructure => vec![self.decode_fixed_structure(theta)?],
        })
    }

    /// Every library reaction with rate `to_rate(theta[i])`.
    pub fn decode_library_of_reactions(&self, theta: &[F]) -> Result<ReactionSystem<F>> {
        self.expect_kind(ProblemKind::LibraryOfReactions)?;
        self.check_dim(theta)?;
        self.lib().full_system(theta.iter().map(|&t| self.rate(t)).collect())
    }

    /// `theta[..4 n_S]` are the two coefficient rows (clamped to `[0, 2]`
    /// and rounded half away from zero), `theta[4 n_S..]` the two rates.
    pub fn decode_coefficient_steps(&self, theta: &[F]) -> Result<ReactionSystem<F>> {
        self.expect_kind(ProblemKind::CoefficientSteps)?;
        self.check_dim(theta)?;
        let width = 2 * self.species.len();
        let max = F::from_u32(MAX_COEFFICIENT).expect("small integer");
        let rows = (0..MODEL_SIZE)
            .map(|r| {
                theta[r * width..(r + 1) * width]
                    .iter()
                    .map(|&x| x.max(F::zero()).min(max).round().to_u32().unwrap_or(0))
                    .collect()
            })
            .collect();
        let rates = theta[MODEL_SIZE * width..].iter().map(|&t| self.rate(t)).collect();
        ReactionSystem::new(self.species.clone(), rows, rates)
    }

    /// The two highest-ranked library reactions (ties toward the lower
    /// index); rank slot `k` takes rate `theta[library + k]`.
    pub fn decode_reaction_steps(&self, theta: &[F]) -> Result<ReactionSystem<F>> {
        self.expect_kind(ProblemKind::ReactionSteps)?;
        self.check_dim(theta)?;
        let n = self.lib().len();
        let selected = top_ranked(&theta[..n], MODEL_SIZE);
        let rates = theta[n..].iter().map(|&t| self.rate(t)).collect();
        self.lib().system(&selected, rates)
    }

    /// System `k` is library pair `pairs[k] = (i, j)` with rates
    /// `theta[2k]` and `theta[2k + 1]`.
    pub fn decode_library_of_systems(&self, theta: &[F]) -> Result<Vec<ReactionSystem<F>>> {
        self.expect_kind(ProblemKind::LibraryOfSystems)?;
        self.check_dim(theta)?;
        self.pairs
            .iter()
            .enumerate()
            .map(|(k, &(i, j))| {
                self.lib()
                    .system(&[i, j], vec![self.rate(theta[2 * k]), self.rate(theta[2 * k + 1])])
            })
            .collect()
    }

    pub fn decode_fixed_structure(&self, theta: &[F]) -> Result<ReactionSystem<F>> {
        self.expect_kind(ProblemKind::FixedStructure)?;
        self.check_dim(theta)?;
        let structure = self.structure.as_ref().expect("fixed structure");
        structure.with_rates(theta.iter().map(|&t| self.rate(t)).collect())
    }

    fn expect_kind(&self, kind: ProblemKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::contract(format!("encoding is {}, not {kind}", self.kind)));
        }
        Ok(())
    }

    /// Decodes, evaluates every candidate (system `k` on `rng.child(k)`) and aggregates.
    pub fn evaluate(
        &self,
        theta: &[F],
        objective: &Objective<F>,
        init: &State,
        rng: RngStream,
    ) -> Result<ProblemLoss<F>> {
        let systems = self.decode(theta)?;
        let per_system = systems
            .par_iter()
            .enumerate()
            .map(|(k, sys)| objective.evaluate(sys, init, rng.child(k as u64)))
            // Gather every result so the reported error is the lowest-index one, whatever the scheduling.
            .collect::<Vec<_>>()
            .into_iter()
            .collect::<Result<Vec<F>>>()?;
        let (optimized, reported) = aggregate_loss(self.kind, &per_system)?;
        Ok(ProblemLoss {
            optimized,
            reported,
            per_system,
        })
    }

    /// The reported model: the decoded system (for library of systems, the
    /// one with the lowest loss) without reactions below the threshold.
    pub fn extract(&self, theta: &[F], per_system: Option<&[F]>) -> Result<ReactionSystem<F>> {
        let systems = self.decode(theta)?;
        let best = match (self.kind, per_system) {
            (ProblemKind::LibraryOfSystems, Some(losses)) => {
                if losses.len() != systems.len() {
                    return Err(Error::contract("one loss per decoded system required"));
                }
                argmin(losses)
            }
            (ProblemKind::LibraryOfSystems, None) => {
                return Err(Error::contract("library of systems needs per-system losses to extract"))
            }
            _ => 0,
        };
        Ok(systems[best].extract(self.threshold))
    }

    /// Draws an initial raw vector: rates uniform in the rate-init range,
    /// coefficients uniform in `[0, 2]`, rankings uniform in `[0, 1]`.
    pub fn initialize(&self, rng: RngStream) -> Vec<F> {
        let mut gen = rng.generator();
        let (lo, hi) = (self.rate_init.0.as_f64(), self.rate_init.1.as_f64());
        let mut rate = || F::lit(if lo < hi { gen.random_range(lo..=hi) } else { lo });
        match self.kind {
            ProblemKind::LibraryOfReactions | ProblemKind::LibraryOfSystems | ProblemKind::FixedStructure => {
                (0..self.dimension()).map(|_| rate()).collect()
            }
            ProblemKind::CoefficientSteps => {
                let n_coef = self.dimension() - MODEL_SIZE;
                let coefs: Vec<F> = (0..n_coef)
                    .map(|_| F::lit(gen.random_range(0.0..=f64::from(MAX_COEFFICIENT))))
                    .collect();
                let mut gen_rates = rng.child(1).generator();
                coefs
                    .into_iter()
                    .chain((0..MODEL_SIZE).map(|_| F::lit(gen_rates.random_range(lo..=hi.max(lo)))))
                    .collect()
            }
            ProblemKind::ReactionSteps => {
                let n = self.lib().len();
                let ranks: Vec<F> = (0..n).map(|_| F::lit(gen.random_range(0.0..=1.0))).collect();
                let mut gen_rates = rng.child(1).generator();
                ranks
                    .into_iter()
                    .chain((0..MODEL_SIZE).map(|_| F::lit(gen_rates.random_range(lo..=hi.max(lo)))))
                    .collect()
            }
        }
    }

    /// A raw vector that decodes to `system`, when the encoding can represent it.
    pub fn encode(&self, system: &ReactionSystem<F>) -> Result<Vec<F>> {
        if system.species() != &self.species {
            return Err(Error::contract("system species differ from the encoding's species"));
        }
        let raw = |r: F| self.reparam.from_rate(r);
        let position = |row: &[u32]| {
            self.lib()
                .position(row)
                .ok_or_else(|| Error::contract(format!("reaction {row:?} is not in the library")))
        };
        match self.kind {
            ProblemKind::LibraryOfReactions => {
                let mut theta = vec![F::zero(); self.dimension()];
                for i in 0..system.n_reactions() {
                    theta[position(system.row(i))?] = raw(system.rates()[i])?;
                }
                Ok(theta)
            }
            ProblemKind::CoefficientSteps => {
                self.expect_size(system)?;
                let mut theta: Vec<F> = system
                    .rows()
                    .flat_map(|row| row.iter().map(|&c| F::from_u32(c.min(MAX_COEFFICIENT)).expect("small")))
                    .collect();
                if system.rows().flatten().any(|&c| c > MAX_COEFFICIENT) {
                    return Err(Error::contract("coefficients above 2 cannot be encoded"));
                }
                for &r in system.rates() {
                    theta.push(raw(r)?);
                }
                Ok(theta)
            }
            ProblemKind::ReactionSteps => {
                self.expect_size(system)?;
                let (i, j) = (position(system.row(0))?, position(system.row(1))?);
                if i == j {
                    return Err(Error::contract("reaction steps needs two distinct reactions"));
                }
                let n = self.lib().len();
                let mut theta = vec![F::zero(); n + MODEL_SIZE];
                theta[i] = F::lit(2.0);
                theta[j] = F::one();
                theta[n] = raw(system.rates()[0])?;
                theta[n + 1] = raw(system.rates()[1])?;
                Ok(theta)
            }
            ProblemKind::LibraryOfSystems => {
                self.expect_size(system)?;
                let (i, j) = (position(system.row(0))?, position(system.row(1))?);
                let (key, rates) = if i < j {
                    ((i, j), [system.rates()[0], system.rates()[1]])
                } else {
                    ((j, i), [system.rates()[1], system.rates()[0]])
                };
                let k = self
                    .pairs
                    .iter()
                    .position(|&p| p == key)
                    .ok_or_else(|| Error::contract("reaction steps needs two distinct reactions"))?;
                let mut theta = vec![F::zero(); self.dimension()];
                theta[2 * k] = raw(rates[0])?;
                theta[2 * k + 1] = raw(rates[1])?;
                Ok(theta)
            }
            ProblemKind::FixedStructure => {
                let structure = self.structure.as_ref().expect("fixed structure");
                if structure.rows().ne(system.rows()) {
                    return Err(Error::contract("system structure differs from the fixed structure"));
                }
                system.rates().iter().map(|&r| raw(r)).collect()
            }
        }
    }

    /// Index of the decoded system that holds `system`'s pair (library of systems).
    pub fn pair_index(&self, a: &[u32], b: &[u32]) -> Option<usize> {
        let lib = self.library.as_ref()?;
        let (i, j) = (lib.position(a)?, lib.position(b)?);
        let key = (i.min(j), i.max(j));
        self.pairs.iter().position(|&p| p == key)
    }

    fn expect_size(&self, system: &ReactionSystem<F>) -> Result<()> {
        if system.n_reactions() != MODEL_SIZE {
            return Err(Error::contract(format!(
                "{} encodes exactly {MODEL_SIZE} reactions, got {}",
                self.kind,
                system.n_reactions()
            )));
        }
        Ok(())
    }
}

/// Indices of the `k` largest values, largest first; ties go to the lower index.
fn top_ranked<F: Scalar>(values: &[F], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx.truncate(k);
    idx
}

fn argmin<F: Scalar>(values: &[F]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_system;
    use crate::library::enumerate_library;
    use crate::ssa::{simulate, SnapshotGrid};
    use proptest::prelude::*;

    const INFECTION: [u32; 6] = [1, 1, 0, 0, 2, 0];
    const RECOVERY: [u32; 6] = [0, 1, 0, 0, 0, 1];

    fn species() -> SpeciesSet {
        SpeciesSet::new(["S", "I", "R"]).unwrap()
    }

    fn library() -> ReactionLibrary {
        enumerate_library(&species(), 2000)
    }

    fn sir() -> ReactionSystem<f64> {
        parse_system("species: S I R\n1 S + 1 I -> 2 I @ 0.02\n1 I -> 1 R @ 5").unwrap()
    }

    /// Same reactions (in any order) with rates within relative `tol`.
    fn same_model(a: &ReactionSystem<f64>, b: &ReactionSystem<f64>, tol: f64) -> bool {
        if a.n_reactions() != b.n_reactions() || a.species() != b.species() {
            return false;
        }
        (0..a.n_reactions()).all(|i| {
            (0..b.n_reactions())
                .any(|j| a.row(i) == b.row(j) && (a.rates()[i] - b.rates()[j]).abs() <= tol * b.rates()[j].abs())
        })
    }

    fn raw(rate: f64) -> f64 {
        ReparamConfig::default().from_rate(rate).unwrap()
    }

    #[test]
    fn dimensions() {
        let lib = library();
        assert_eq!(
            ProblemEncoding::<f64>::library_of_reactions(lib.clone())
                .unwrap()
                .dimension(),
            36
        );
        assert_eq!(ProblemEncoding::<f64>::coefficient_steps(species()).dimension(), 14);
        assert_eq!(
            ProblemEncoding::<f64>::reaction_steps(lib.clone()).unwrap().dimension(),
            38
        );
        let los = ProblemEncoding::<f64>::library_of_systems(lib).unwrap();
        assert_eq!(los.dimension(), 1260);
        assert_eq!(los.n_systems(), 630);
        assert_eq!(ProblemEncoding::fixed_structure(sir()).dimension(), 2);
    }

    #[test]
    fn library_of_reactions_decoding() {
        let enc = ProblemEncoding::<f64>::library_of_reactions(library()).unwrap();
        let zeros = vec![0.0; 36];
        let sys = enc.decode_library_of_reactions(&zeros).unwrap();
        assert_eq!(sys.n_reactions(), 36);
        assert!(sys.rates().iter().all(|&r| r == 0.0));
        assert_eq!(enc.extract(&zeros, None).unwrap().n_reactions(), 0);

        let lib = library();
        let mut theta = vec![0.0; 36];
        theta[lib.position(&INFECTION).unwrap()] = raw(0.02);
        theta[lib.position(&RECOVERY).unwrap()] = raw(5.0);
        assert!(same_model(&enc.extract(&theta, None).unwrap(), &sir(), 1e-12));
        assert!(enc.decode_library_of_reactions(&theta[..35]).is_err());
    }

    #[test]
    fn coefficient_steps_decoding() {
        let enc = ProblemEncoding::<f64>::coefficient_steps(species());
        let mut theta = vec![0.0; 14];
        theta[0] = 1.6;
        theta[1] = -3.0;
        theta[2] = 0.5;
        theta[3] = 1.49;
        theta[4] = 7.0;
        let sys = enc.decode_coefficient_steps(&theta).unwrap();
        assert_eq!(sys.row(0), [2, 0, 1, 1, 2, 0]);

        let theta = enc.encode(&sir()).unwrap();
        assert_eq!(&theta[..6], &[1.0, 1.0, 0.0, 0.0, 2.0, 0.0]);
        let back = enc.decode_coefficient_steps(&theta).unwrap();
        assert!(same_model(&back, &sir(), 1e-12));
        assert_eq!(back.row(0), INFECTION);
    }

    #[test]
    fn reaction_steps_decoding() {
        let lib = library();
        let enc = ProblemEncoding::<f64>::reaction_steps(lib.clone()).unwrap();
        let mut theta = vec![0.1; 38];
        theta[7] = 0.9;
        theta[30] = 0.5;
        let sys = enc.decode_reaction_steps(&theta).unwrap();
        assert_eq!(sys.row(0), lib.reaction(7));
        assert_eq!(sys.row(1), lib.reaction(30));

        let flat = vec![0.3; 38];
        let sys = enc.decode_reaction_steps(&flat).unwrap();
        assert_eq!(sys.row(0), lib.reaction(0));
        assert_eq!(sys.row(1), lib.reaction(1));

        let theta = enc.encode(&sir()).unwrap();
        let back = enc.decode_reaction_steps(&theta).unwrap();
        assert!(same_model(&back, &sir(), 1e-12));
        assert_eq!(back.row(0), INFECTION);
    }

    #[test]
    fn library_of_systems_decoding() {
        let enc = ProblemEncoding::<f64>::library_of_systems(library()).unwrap();
        let zeros = vec![0.0; 1260];
        let systems = enc.decode_library_of_systems(&zeros).unwrap();
        assert_eq!(systems.len(), 630);
        assert!(systems.iter().all(|s| s.n_reactions() == 2 && s.rates() == [0.0, 0.0]));

        let theta = enc.encode(&sir()).unwrap();
        let k = enc.pair_index(&INFECTION, &RECOVERY).unwrap();
        let systems = enc.decode_library_of_systems(&theta).unwrap();
        assert!(same_model(&systems[k], &sir(), 1e-12));
        for (m, s) in systems.iter().enumerate() {
            if m != k {
                assert_eq!(s.rates(), [0.0, 0.0]);
            }
        }
        assert!(enc.pairs().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn fixed_structure_round_trip() {
        let enc = ProblemEncoding::fixed_structure(sir());
        let theta = enc.encode(&sir()).unwrap();
        assert!(same_model(&enc.decode_fixed_structure(&theta).unwrap(), &sir(), 1e-12));
    }

    #[test]
    fn negative_raw_rates_clamp_to_zero() {
        let enc = ProblemEncoding::fixed_structure(sir());
        let sys = enc.decode_fixed_structure(&[-10.0, -0.5]).unwrap();
        assert_eq!(sys.rates(), [0.0, 0.0]);
    }

    #[test]
    fn aggregation() {
        assert_eq!(
            aggregate_loss(ProblemKind::ReactionSteps, &[0.37]).unwrap(),
            (0.37, 0.37)
        );
        assert_eq!(
            aggregate_loss(ProblemKind::LibraryOfSystems, &[1.0, 2.0, 3.0]).unwrap(),
            (6.0, 1.0)
        );
        assert!(aggregate_loss(ProblemKind::LibraryOfReactions, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn extraction_threshold_extremes() {
        let enc = ProblemEncoding::<f64>::library_of_reactions(library()).unwrap();
        let theta: Vec<f64> = (0..36).map(|i| i as f64 * 2.0).collect();
        let all = enc.clone().with_threshold(0.0).unwrap().extract(&theta, None).unwrap();
        assert_eq!(all.n_reactions(), 35);
        let none = enc
            .with_threshold(f64::INFINITY)
            .unwrap()
            .extract(&theta, None)
            .unwrap();
        assert_eq!(none.n_reactions(), 0);
    }

    #[test]
    fn initialization_bounds_and_determinism() {
        let cfg = ReparamConfig::<f64>::default();
        assert!((cfg.to_rate(40.0) - 4.54e-5).abs() < 1e-7);
        assert!((cfg.to_rate(90.0) - 12.18).abs() < 0.01);
        for kind in ProblemKind::ALL {
            let enc = match kind {
                ProblemKind::FixedStructure => ProblemEncoding::fixed_structure(sir()),
                _ => ProblemEncoding::new(kind, library()).unwrap(),
            };
            let theta = enc.initialize(RngStream::new(3));
            assert_eq!(theta.len(), enc.dimension());
            assert_eq!(theta, enc.initialize(RngStream::new(3)));
            let (lo, hi) = kind.default_rate_init();
            let n_rates = match kind {
                ProblemKind::CoefficientSteps | ProblemKind::ReactionSteps => 2,
                _ => theta.len(),
            };
            let (head, rates) = theta.split_at(theta.len() - n_rates);
            assert!(rates.iter().all(|&r| (lo..=hi).contains(&r)), "{kind}");
            let bound = if kind == ProblemKind::CoefficientSteps {
                2.0
            } else {
                1.0
            };
            assert!(head.iter().all(|&x| (0.0..=bound).contains(&x)), "{kind}");
        }
    }

    #[test]
    fn pair_losses_decouple() {
        let full = library();
        let keep = [
            0,
            1,
            full.position(&INFECTION).unwrap(),
            full.position(&RECOVERY).unwrap(),
        ];
        let enc = ProblemEncoding::<f64>::library_of_systems(full.restrict(&keep).unwrap()).unwrap();
        let init = State::new(vec![1980, 20, 0]);
        let grid = SnapshotGrid::uniform(1.0, 20).unwrap();
        let reference = simulate(&sir(), &init, &grid, RngStream::new(1)).unwrap();
        let obj = Objective::new(reference, 4, 2000.0).unwrap();
        let k = enc.pair_index(&INFECTION, &RECOVERY).unwrap();
        let theta = vec![45.0; enc.dimension()];
        let mut moved = theta.clone();
        moved[2 * k] = 64.0;
        moved[2 * k + 1] = 86.0;
        let a = enc.evaluate(&theta, &obj, &init, RngStream::new(9)).unwrap();
        let b = enc.evaluate(&moved, &obj, &init, RngStream::new(9)).unwrap();
        for m in 0..enc.n_systems() {
            if m == k {
                assert!(b.per_system[m] < a.per_system[m]);
            } else {
                assert_eq!(a.per_system[m], b.per_system[m]);
            }
        }
        assert_eq!(a.optimized, a.per_system.iter().sum::<f64>());
    }

    #[test]
    fn kind_names_parse() {
        for kind in ProblemKind::ALL {
            assert_eq!(kind.name().parse::<ProblemKind>().unwrap(), kind);
        }
        assert!("nope".parse::<ProblemKind>().is_err());
    }

    proptest! {
        #[test]
        fn ranking_is_invariant_under_monotone_maps(
            ranks in proptest::collection::vec(-5.0f64..5.0, 36),
        ) {
            let enc = ProblemEncoding::<f64>::reaction_steps(library()).unwrap();
            let mut theta = ranks.clone();
            theta.extend([60.0, 80.0]);
            let mut mapped: Vec<f64> = ranks.iter().map(|x| x.exp() * 3.0 + 1.0).collect();
            mapped.extend([60.0, 80.0]);
            let a = enc.decode_reaction_steps(&theta).unwrap();
            let b = enc.decode_reaction_steps(&mapped).unwrap();
            prop_assert_eq!(a.row(0), b.row(0));
            prop_assert_eq!(a.row(1), b.row(1));
        }

        #[test]
        fn decoders_are_total(values in proptest::collection::vec(-1e3f64..1e3, 38)) {
            let enc = ProblemEncoding::<f64>::reaction_steps(library()).unwrap();
            prop_assert!(enc.decode(&values).is_ok());
            let enc = ProblemEncoding::<f64>::coefficient_steps(species());
            prop_assert!(enc.decode(&values[..14]).is_ok());
            let enc = ProblemEncoding::<f64>::library_of_reactions(library()).unwrap();
            prop_assert!(enc.decode(&values[..36]).is_ok());
        }
    }
}
