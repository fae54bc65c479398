//! Layered enrichments: a level for every element plus partial unary
//! functions that strictly lower the level.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::structure::{Elem, FiniteStructure, PartialFunction, Relation, StructureError};
use crate::terms::TermAlgebra;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EnrichmentError {
    #[error("{found} levels given for a carrier of size {expected}")]
    LevelCount { expected: usize, found: usize },
    #[error("function `{function}` mentions element {element}, outside the carrier of size {size}")]
    OutOfRange { function: String, element: Elem, size: usize },
    #[error(transparent)]
    Structure(#[from] StructureError),
}

/// The underlying set of an enrichment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Carrier {
    Structure(FiniteStructure),
    Terms(TermAlgebra),
}

impl Carrier {
    pub fn size(&self) -> usize {
        match self {
            Carrier::Structure(s) => s.universe_size(),
            Carrier::Terms(a) => a.len(),
        }
    }

    pub fn terms(&self) -> Option<&TermAlgebra> {
        match self {
            Carrier::Terms(a) => Some(a),
            Carrier::Structure(_) => None,
        }
    }

    /// The carrier as a structure; term algebras go through
    /// [`TermAlgebra::to_structure`].
    pub fn to_structure(&self) -> Result<FiniteStructure, StructureError> {
        match self {
            Carrier::Structure(s) => Ok(s.clone()),
            Carrier::Terms(a) => a.to_structure(),
        }
    }
}

/// A named partial unary function on the carrier.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct UnaryFn {
    pub name: String,
    pub map: BTreeMap<Elem, Elem>,
}

impl UnaryFn {
    pub fn new(name: impl Into<String>, pairs: impl IntoIterator<Item = (Elem, Elem)>) -> Self {
        UnaryFn { name: name.into(), map: pairs.into_iter().collect() }
    }
}

/// One failed validity condition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EnrichmentViolation {
    /// `function(element) = value` but the value's level is not lower.
    NonRegressive { function: String, element: Elem, value: Elem, element_level: usize, value_level: usize },
    /// An enrichment symbol reuses a name of the carrier's vocabulary.
    NameClash { name: String },
    /// Two enrichment functions share a name.
    DuplicateFunction { name: String },
}

impl core::fmt::Display for EnrichmentViolation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            EnrichmentViolation::NonRegressive { function, element, value, element_level, value_level } => write!(
                f,
                "non-regressive at {element}: {function}({element}) = {value}, levels {element_level} -> {value_level}"
            ),
            EnrichmentViolation::NameClash { name } => write!(f, "`{name}` clashes with the carrier vocabulary"),
            EnrichmentViolation::DuplicateFunction { name } => write!(f, "function `{name}` is declared twice"),
        }
    }
}

/// A carrier with a level map and unary functions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enrichment {
    carrier: Carrier,
    levels: Vec<usize>,
    unary_fns: Vec<UnaryFn>,
}

/// Name of the unary relation marking level `alpha`.
pub fn level_relation_name(alpha: usize) -> String {
    format!("P{alpha}")
}

impl Enrichment {
    /// Checks sizes and ranges only; semantic conditions are reported by
    /// [`validate_enrichment`].
    pub fn new(carrier: Carrier, levels: Vec<usize>, unary_fns: Vec<UnaryFn>) -> Result<Self, EnrichmentError> {
        let size = carrier.size();
        if levels.len() != size {
            return Err(EnrichmentError::LevelCount { expected: size, found: levels.len() });
        }
        for g in &unary_fns {
            if let Some((&x, &y)) = g.map.iter().find(|(&x, &y)| x >= size || y >= size) {
                let element = if x >= size { x } else { y };
                return Err(EnrichmentError::OutOfRange { function: g.name.clone(), element, size });
            }
        }
        Ok(Enrichment { carrier, levels, unary_fns })
    }

    /// Single level, no functions.
    pub fn trivial(carrier: Carrier) -> Self {
        let levels = vec![0; carrier.size()];
        Enrichment { carrier, levels, unary_fns: Vec::new() }
    }

    pub fn carrier(&self) -> &Carrier {
        &self.carrier
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn level(&self, x: Elem) -> usize {
        self.levels[x]
    }

    pub fn unary_fns(&self) -> &[UnaryFn] {
        &self.unary_fns
    }

    pub fn size(&self) -> usize {
        self.levels.len()
    }

    pub fn max_level(&self) -> usize {
        self.levels.iter().copied().max().unwrap_or(0)
    }

    /// The level classes `P_0, ..., P_max`.
    pub fn partition(&self) -> Vec<BTreeSet<Elem>> {
        let mut parts = vec![BTreeSet::new(); self.max_level() + 1];
        for (x, &l) in self.levels.iter().enumerate() {
            parts[l].insert(x);
        }
        parts
    }

    /// The enriched structure: the carrier plus unary relations `P{α}` for
    /// the levels and the unary functions.
    pub fn to_structure(&self) -> Result<FiniteStructure, StructureError> {
        let base = self.carrier.to_structure()?;
        let mut relations: Vec<Relation> = base.relations().to_vec();
        let mut functions: Vec<PartialFunction> = base.functions().to_vec();
        for (alpha, part) in self.partition().into_iter().enumerate() {
            relations.push(Relation::new(level_relation_name(alpha), 1, part.into_iter().map(|x| vec![x])));
        }
        for g in &self.unary_fns {
            functions.push(PartialFunction::unary(g.name.clone(), g.map.iter().map(|(&x, &y)| (x, y))));
        }
        FiniteStructure::new(base.universe_size(), relations, functions)
    }
}

pub fn trivial_enrichment(s: FiniteStructure) -> Enrichment {
    Enrichment::trivial(Carrier::Structure(s))
}

/// Lists every violated condition; empty iff the enrichment is valid.
pub fn validate_enrichment(e: &Enrichment) -> Vec<EnrichmentViolation> {
    let mut out = Vec::new();
    let mut vocabulary: BTreeSet<String> = BTreeSet::new();
    if let Ok(s) = e.carrier.to_structure() {
        vocabulary.extend(s.relations().iter().map(|r| r.name.clone()));
        vocabulary.extend(s.functions().iter().map(|f| f.name.clone()));
    }
    let mut ours: Vec<String> = (0..=e.max_level()).map(level_relation_name).collect();
    let mut seen = BTreeSet::new();
    for g in &e.unary_fns {
        if !seen.insert(g.name.clone()) {
            out.push(EnrichmentViolation::DuplicateFunction { name: g.name.clone() });
        }
        ours.push(g.name.clone());
    }
    ours.sort();
    ours.dedup();
    for name in ours {
        if vocabulary.contains(&name) {
            out.push(EnrichmentViolation::NameClash { name });
        }
    }
    for g in &e.unary_fns {
        for (&x, &y) in &g.map {
            if e.levels[y] >= e.levels[x] {
                out.push(EnrichmentViolation::NonRegressive {
                    function: g.name.clone(),
                    element: x,
                    value: y,
                    element_level: e.levels[x],
                    value_level: e.levels[y],
                });
            }
        }
    }
    out
}

/// Least superset of `s` closed under the enrichment's unary functions.
pub fn f_closure(e: &Enrichment, s: &BTreeSet<Elem>) -> BTreeSet<Elem> {
    let mut out = s.clone();
    let mut stack: Vec<Elem> = s.iter().copied().collect();
    while let Some(x) = stack.pop() {
        for g in &e.unary_fns {
            if let Some(&y) = g.map.get(&x) {
                if out.insert(y) {
                    stack.push(y);
                }
            }
        }
    }
    out
}
