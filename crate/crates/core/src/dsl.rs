//! Text notation for reaction systems.
//!
//! ```text
//! # SIR
//! species: S I R
//! init: 1980 20 0
//! 1 S + 1 I -> 2 I @ 0.02
//! 1 I -> 1 R @ 5
//! ```
//!
//! One reaction per line, `#` starts a comment. The `species:` header is
//! optional; without it species are taken in order of first appearance. An
//! empty side is written `0`. The `init:` header gives an initial state.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{is_identifier, ReactionSystem, SpeciesSet, State};
use crate::scalar::Scalar;

/// A reaction system with an optional initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<F> {
    pub system: ReactionSystem<F>,
    pub init: Option<State>,
}

type Side = Vec<(usize, u32)>;

pub fn parse_system<F: Scalar>(text: &str) -> Result<ReactionSystem<F>> {
    Ok(parse_model(text)?.system)
}

pub fn parse_model<F: Scalar>(text: &str) -> Result<Model<F>> {
    let mut species = SpeciesSet::empty();
    let mut declared = false;
    let mut init: Option<(usize, Vec<u64>)> = None;
    let mut reactions: Vec<(Side, Side, F)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("species:") {
            if declared || !reactions.is_empty() {
                return Err(Error::parse(
                    lineno,
                    "species must be declared once, before any reaction",
                ));
            }
            let names: Vec<&str> = rest
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .collect();
            species = SpeciesSet::new(names).map_err(|e| Error::parse(lineno, e.to_string()))?;
            declared = true;
            continue;
        }
        if let Some(rest) = line.strip_prefix("init:") {
            if init.is_some() {
                return Err(Error::parse(lineno, "duplicate init line"));
            }
            let counts = rest
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<u64>()
                        .map_err(|_| Error::parse(lineno, format!("invalid count {s:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            init = Some((lineno, counts));
            continue;
        }
        reactions.push(parse_reaction(line, lineno, &mut species, declared)?);
    }

    let n = species.len();
    let mut system = ReactionSystem::empty(species);
    for (lhs, rhs, rate) in reactions {
        let mut row = vec![0u32; 2 * n];
        for (s, c) in lhs {
            row[s] += c;
        }
        for (s, c) in rhs {
            row[n + s] += c;
        }
        system.push(&row, rate)?;
    }
    let init = match init {
        None => None,
        Some((lineno, counts)) => {
            if counts.len() != n {
                return Err(Error::parse(
                    lineno,
                    format!("init has {} counts for {n} species", counts.len()),
                ));
            }
            Some(State::new(counts))
        }
    };
    Ok(Model { system, init })
}

fn parse_reaction<F: Scalar>(
    line: &str,
    lineno: usize,
    species: &mut SpeciesSet,
    declared: bool,
) -> Result<(Side, Side, F)> {
    let (body, rate) = line
        .rsplit_once('@')
        .ok_or_else(|| Error::parse(lineno, "missing '@ <rate>'"))?;
    let (lhs, rhs) = body
        .split_once("->")
        .ok_or_else(|| Error::parse(lineno, "missing '->'"))?;
    let rate_str = rate.trim();
    let rate: F = rate_str
        .parse()
        .map_err(|_| Error::parse(lineno, format!("invalid rate {rate_str:?}")))?;
    if !rate.is_finite() {
        return Err(Error::parse(lineno, format!("rate must be finite, got {rate_str}")));
    }
    if rate < F::zero() {
        return Err(Error::parse(lineno, format!("negative rate {rate_str}")));
    }
    let lhs = parse_side(lhs, lineno, species, declared)?;
    let rhs = parse_side(rhs, lineno, species, declared)?;
    Ok((lhs, rhs, rate))
}

fn parse_side(text: &str, lineno: usize, species: &mut SpeciesSet, declared: bool) -> Result<Side> {
    let text = text.trim();
    if text.is_empty() || text == "0" || text == "∅" {
        return Ok(Vec::new());
    }
    text.split('+')
        .map(|term| {
            let term = term.trim();
            let split = term
                .find(|c: char| !c.is_ascii_digit())
                .ok_or_else(|| Error::parse(lineno, format!("term {term:?} has no species")))?;
            let (coef, name) = term.split_at(split);
            let name = name.trim();
            let coef = if coef.is_empty() {
                1
            } else {
                coef.parse::<u32>()
                    .map_err(|_| Error::parse(lineno, format!("invalid coefficient {coef:?}")))?
            };
            if !is_identifier(name) {
                return Err(Error::parse(lineno, format!("invalid species name {name:?}")));
            }
            let idx = match species.index_of(name) {
                Some(i) => i,
                None if declared => return Err(Error::parse(lineno, format!("unknown species {name:?}"))),
                None => species.push_unchecked(name.to_string()),
            };
            Ok((idx, coef))
        })
        .collect()
}

pub fn format_system<F: Scalar>(system: &ReactionSystem<F>) -> String {
    let mut out = String::new();
    if !system.species().is_empty() {
        let _ = writeln!(out, "species: {}", system.species().names().join(" "));
    }
    for i in 0..system.n_reactions() {
        let _ = writeln!(out, "{}", format_reaction(system, i));
    }
    out
}

pub fn format_model<F: Scalar>(model: &Model<F>) -> String {
    let mut out = String::new();
    let sys = &model.system;
    if !sys.species().is_empty() {
        let _ = writeln!(out, "species: {}", sys.species().names().join(" "));
    }
    if let Some(init) = &model.init {
        let _ = writeln!(out, "init: {init}");
    }
    for i in 0..sys.n_reactions() {
        let _ = writeln!(out, "{}", format_reaction(sys, i));
    }
    out
}

/// One reaction as `1 S + 1 I -> 2 I @ 0.02`.
pub fn format_reaction<F: Scalar>(system: &ReactionSystem<F>, i: usize) -> String {
    let names = system.species().names();
    format!(
        "{} -> {} @ {}",
        format_side(system.reactants(i), names),
        format_side(system.products(i), names),
        system.rates()[i]
    )
}

/// A coefficient row `[reactants | products]` as `1 S + 1 I -> 2 I`.
pub fn format_row(row: &[u32], species: &SpeciesSet) -> String {
    let n = species.len();
    format!(
        "{} -> {}",
        format_side(&row[..n], species.names()),
        format_side(&row[n..], species.names())
    )
}

fn format_side(coefs: &[u32], names: &[String]) -> String {
    let terms: Vec<String> = coefs
        .iter()
        .zip(names)
        .filter(|(&c, _)| c > 0)
        .map(|(c, n)| format!("{c} {n}"))
        .collect();
    if terms.is_empty() {
        "0".to_string()
    } else {
        terms.join(" + ")
    }
}
