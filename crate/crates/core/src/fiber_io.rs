//! JSON fiber description files.
//!
//! ```json
//! { "prime_norm": 5, "residue_char": 5,
//!   "components": [ {"name": "C0", "multiplicity": 1, "genus": 0, "local_degree": "40/1"} ],
//!   "crossings": [ ["C0", "Cinf", 2] ],
//!   "sections": [ {"name": "e1", "width": 35, "hits": {"C0": 1}} ] }
//! ```
//!
//! Rationals are `"num/den"` strings; unknown keys are rejected.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::rational::Rational;
use crate::fiber::{ComponentRecord, FiberError, MarkedFiber, SectionHit, SpecialFiber};

#[derive(Debug, Error)]
pub enum FiberIoError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{location}: unknown component {name:?}")]
    UnknownComponent { location: String, name: String },
    #[error("{location}: {source}")]
    Fiber {
        location: String,
        #[source]
        source: FiberError,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentEntry {
    name: String,
    multiplicity: u64,
    genus: u64,
    #[serde(default, with = "crate::exact::rational::serde_str::option")]
    local_degree: Option<Rational>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SectionEntry {
    name: String,
    width: u64,
    hits: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FiberFile {
    prime_norm: u64,
    residue_char: u64,
    components: Vec<ComponentEntry>,
    #[serde(default)]
    crossings: Vec<(String, String, u64)>,
    #[serde(default)]
    sections: Vec<SectionEntry>,
}

/// Parses a fiber description. Semantic validation is left to the caller.
pub fn parse_fiber_json(text: &str) -> Result<MarkedFiber, FiberIoError> {
    let file: FiberFile = serde_json::from_str(text).map_err(|e| FiberIoError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let index: BTreeMap<&str, usize> = file
        .components
        .iter()
        .enumerate()
        .map(|(i, c)| (c.name.as_str(), i))
        .collect();
    let lookup = |location: String, name: &str| {
        index
            .get(name)
            .copied()
            .ok_or_else(|| FiberIoError::UnknownComponent {
                location,
                name: name.to_string(),
            })
    };
    let mut crossings = Vec::with_capacity(file.crossings.len());
    for (k, (a, b, n)) in file.crossings.iter().enumerate() {
        crossings.push((
            lookup(format!("crossings[{k}]"), a)?,
            lookup(format!("crossings[{k}]"), b)?,
            *n,
        ));
    }
    let mut sections = Vec::with_capacity(file.sections.len());
    for (k, s) in file.sections.iter().enumerate() {
        let mut hits = BTreeMap::new();
        for (name, &n) in &s.hits {
            hits.insert(lookup(format!("sections[{k}].hits"), name)?, n);
        }
        sections.push(SectionHit {
            name: s.name.clone(),
            width: s.width,
            hits,
        });
    }
    let components = file
        .components
        .into_iter()
        .map(|c| ComponentRecord {
            name: c.name,
            multiplicity: c.multiplicity,
            genus: c.genus,
            local_degree: c.local_degree,
        })
        .collect();
    let fiber = SpecialFiber::new(file.prime_norm, file.residue_char, components, crossings)
        .map_err(|source| FiberIoError::Fiber {
            location: "crossings".into(),
            source,
        })?;
    Ok(MarkedFiber::new(fiber, sections))
}

/// Serializes a fiber in the description format (pretty-printed, deterministic).
pub fn to_fiber_json(marked: &MarkedFiber) -> String {
    let f = &marked.fiber;
    let name = |i: usize| f.components()[i].name.clone();
    let file = FiberFile {
        prime_norm: f.prime_norm(),
        residue_char: f.residue_char(),
        components: f
            .components()
            .iter()
            .map(|c| ComponentEntry {
                name: c.name.clone(),
                multiplicity: c.multiplicity,
                genus: c.genus,
                local_degree: c.local_degree.clone(),
            })
            .collect(),
        crossings: f.crossings().map(|(i, j, n)| (name(i), name(j), n)).collect(),
        sections: marked
            .sections
            .iter()
            .map(|s| SectionEntry {
                name: s.name.clone(),
                width: s.width,
                hits: s.hits.iter().map(|(&i, &n)| (name(i), n)).collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("fiber file serializes")
}
