//! Depth-bounded fragments of the free term algebra over a finite base.
//!
//! Terms live in a deduplicated, append-only table: structurally equal terms
//! share one [`TermId`], so term equality is id equality.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::structure::{Elem, FiniteStructure, PartialFunction, Relation, StructureError};

/// Default cap on the number of terms a table may hold.
pub const DEFAULT_TERM_LIMIT: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TermError {
    #[error("symbol name `{0}` is used twice")]
    DuplicateSymbol(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("symbol `{symbol}` takes {expected} arguments, got {found}")]
    Arity { symbol: String, expected: usize, found: usize },
    #[error("unknown term id {0}")]
    UnknownTerm(u32),
    #[error("base element {index} outside base of size {base_size}")]
    BaseOutOfRange { index: usize, base_size: usize },
    #[error("term would have depth {depth}, above the bound {bound}")]
    TooDeep { depth: usize, bound: usize },
    #[error("term table would exceed {limit} terms")]
    Overflow { limit: usize },
    #[error("the map is undefined on base term {0}")]
    UndefinedLeaf(u32),
    #[error("the image of term {0} is not in the table")]
    ImageAbsent(u32),
    #[error("base structure has {found} elements, signature expects {expected}")]
    BaseStructureSize { expected: usize, found: usize },
    #[error(transparent)]
    Structure(#[from] StructureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct TermId(pub u32);

impl TermId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Symbol {
    pub name: String,
    pub arity: usize,
}

impl Symbol {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        Symbol { name: name.into(), arity }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct AlgebraSignature {
    pub symbols: Vec<Symbol>,
    pub base_size: usize,
    pub depth_bound: usize,
}

impl AlgebraSignature {
    pub fn new(symbols: Vec<Symbol>, base_size: usize, depth_bound: usize) -> Self {
        AlgebraSignature { symbols, base_size, depth_bound }
    }

    fn validate(&self) -> Result<(), TermError> {
        let mut seen = BTreeSet::new();
        for s in &self.symbols {
            if !seen.insert(&s.name) {
                return Err(TermError::DuplicateSymbol(s.name.clone()));
            }
        }
        Ok(())
    }

    pub fn symbol_index(&self, name: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s.name == name)
    }
}

/// A term: a base element or a symbol (by index) applied to earlier terms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Term {
    Base(usize),
    App(usize, Vec<TermId>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermAlgebra {
    signature: AlgebraSignature,
    terms: Vec<Term>,
    depths: Vec<usize>,
    index: BTreeMap<Term, TermId>,
    base: FiniteStructure,
    limit: usize,
}

/// Number of terms of depth at most `depth_bound`, or `None` on overflow.
///
/// `N_0 = base_size + #nullary` and `N_{d+1} = N_0 + Σ_{arity k ≥ 1} N_d^k`.
pub fn term_count(sig: &AlgebraSignature) -> Option<u128> {
    let nullary = sig.symbols.iter().filter(|s| s.arity == 0).count() as u128;
    let n0 = sig.base_size as u128 + nullary;
    let mut n = n0;
    for _ in 0..sig.depth_bound {
        let mut next = n0;
        for s in sig.symbols.iter().filter(|s| s.arity > 0) {
            next = next.checked_add(n.checked_pow(s.arity as u32)?)?;
        }
        n = next;
    }
    Some(n)
}

/// Builds every term of depth at most `depth_bound` over a pure base set.
pub fn build_terms(sig: AlgebraSignature, limit: usize) -> Result<TermAlgebra, TermError> {
    let base = FiniteStructure::pure_set(sig.base_size);
    build_terms_over(sig, base, limit)
}

/// Like [`build_terms`] with the given base structure (its relations and
/// functions are carried over to the base terms).
pub fn build_terms_over(sig: AlgebraSignature, base: FiniteStructure, limit: usize) -> Result<TermAlgebra, TermError> {
    match term_count(&sig) {
        Some(n) if n <= limit as u128 => {}
        _ => return Err(TermError::Overflow { limit }),
    }
    let mut a = TermAlgebra::fragment(sig, base, limit)?;
    for (i, s) in a.signature.symbols.clone().iter().enumerate() {
        if s.arity == 0 {
            a.intern(i, Vec::new())?;
        }
    }
    for _ in 0..a.signature.depth_bound {
        let current: Vec<TermId> = (0..a.terms.len() as u32).map(TermId).collect();
        for (i, s) in a.signature.symbols.clone().iter().enumerate() {
            if s.arity == 0 || current.is_empty() {
                continue;
            }
            let mut idx = vec![0usize; s.arity];
            'tuples: loop {
                let children: Vec<TermId> = idx.iter().map(|&j| current[j]).collect();
                a.intern(i, children)?;
                let mut pos = s.arity;
                loop {
                    if pos == 0 {
                        break 'tuples;
                    }
                    pos -= 1;
                    idx[pos] += 1;
                    if idx[pos] < current.len() {
                        break;
                    }
                    idx[pos] = 0;
                }
            }
        }
    }
    Ok(a)
}

impl TermAlgebra {
    /// A table holding just the base terms; further terms are added with
    /// [`TermAlgebra::intern`].
    pub fn fragment(sig: AlgebraSignature, base: FiniteStructure, limit: usize) -> Result<TermAlgebra, TermError> {
        sig.validate()?;
        if base.universe_size() != sig.base_size {
            return Err(TermError::BaseStructureSize { expected: sig.base_size, found: base.universe_size() });
        }
        if sig.base_size > limit {
            return Err(TermError::Overflow { limit });
        }
        let mut a = TermAlgebra {
            signature: sig,
            terms: Vec::new(),
            depths: Vec::new(),
            index: BTreeMap::new(),
            base,
            limit,
        };
        for i in 0..a.signature.base_size {
            a.push(Term::Base(i), 0);
        }
        Ok(a)
    }

    fn push(&mut self, t: Term, depth: usize) -> TermId {
        let id = TermId(self.terms.len() as u32);
        self.index.insert(t.clone(), id);
        self.terms.push(t);
        self.depths.push(depth);
        id
    }

    /// Adds `symbol(children)` if absent and returns its id.
    pub fn intern(&mut self, symbol: usize, children: Vec<TermId>) -> Result<TermId, TermError> {
        let sym = self
            .signature
            .symbols
            .get(symbol)
            .ok_or_else(|| TermError::UnknownSymbol(format!("#{symbol}")))?;
        if sym.arity != children.len() {
            return Err(TermError::Arity { symbol: sym.name.clone(), expected: sym.arity, found: children.len() });
        }
        for c in &children {
            self.check_id(*c)?;
        }
        let t = Term::App(symbol, children);
        if let Some(&id) = self.index.get(&t) {
            return Ok(id);
        }
        let depth = match &t {
            Term::App(_, ch) => ch.iter().map(|c| self.depths[c.index()] + 1).max().unwrap_or(0),
            Term::Base(_) => 0,
        };
        if depth > self.signature.depth_bound {
            return Err(TermError::TooDeep { depth, bound: self.signature.depth_bound });
        }
        if self.terms.len() >= self.limit {
            return Err(TermError::Overflow { limit: self.limit });
        }
        Ok(self.push(t, depth))
    }

    /// Adds a symbol to the signature (or finds it) and returns its index.
    pub fn add_symbol(&mut self, name: &str, arity: usize) -> Result<usize, TermError> {
        match self.signature.symbol_index(name) {
            Some(i) if self.signature.symbols[i].arity == arity => Ok(i),
            Some(i) => Err(TermError::Arity {
                symbol: String::from(name),
                expected: self.signature.symbols[i].arity,
                found: arity,
            }),
            None => {
                self.signature.symbols.push(Symbol::new(name, arity));
                Ok(self.signature.symbols.len() - 1)
            }
        }
    }

    pub fn set_depth_bound(&mut self, bound: usize) {
        let max = self.depths.iter().copied().max().unwrap_or(0);
        self.signature.depth_bound = bound.max(max);
    }

    pub fn signature(&self) -> &AlgebraSignature {
        &self.signature
    }

    pub fn base_structure(&self) -> &FiniteStructure {
        &self.base
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn term(&self, id: TermId) -> Result<&Term, TermError> {
        self.terms.get(id.index()).ok_or(TermError::UnknownTerm(id.0))
    }

    pub fn depth(&self, id: TermId) -> Result<usize, TermError> {
        self.depths.get(id.index()).copied().ok_or(TermError::UnknownTerm(id.0))
    }

    pub fn lookup(&self, t: &Term) -> Option<TermId> {
        self.index.get(t).copied()
    }

    pub fn base_term(&self, i: usize) -> Result<TermId, TermError> {
        if i < self.signature.base_size {
            Ok(TermId(i as u32))
        } else {
            Err(TermError::BaseOutOfRange { index: i, base_size: self.signature.base_size })
        }
    }

    fn check_id(&self, id: TermId) -> Result<(), TermError> {
        if id.index() < self.terms.len() {
            Ok(())
        } else {
            Err(TermError::UnknownTerm(id.0))
        }
    }

    /// Immediate subterms, in argument order.
    pub fn children(&self, id: TermId) -> &[TermId] {
        match &self.terms[id.index()] {
            Term::Base(_) => &[],
            Term::App(_, ch) => ch,
        }
    }

    /// Smallest superset of `ids` closed under taking subterms.
    pub fn subterm_closure(&self, ids: &[TermId]) -> Result<BTreeSet<TermId>, TermError> {
        for id in ids {
            self.check_id(*id)?;
        }
        let mut out: BTreeSet<TermId> = BTreeSet::new();
        let mut stack: Vec<TermId> = ids.to_vec();
        while let Some(t) = stack.pop() {
            if out.insert(t) {
                stack.extend_from_slice(self.children(t));
            }
        }
        Ok(out)
    }

    /// Homomorphic extension of a partial map on terms: `m(t)` where
    /// defined, otherwise the symbol applied to the mapped children.
    pub fn apply_partial_map(&self, m: &BTreeMap<TermId, TermId>, t: TermId) -> Result<TermId, TermError> {
        self.check_id(t)?;
        for (k, v) in m {
            self.check_id(*k)?;
            self.check_id(*v)?;
        }
        self.apply_rec(m, t)
    }

    fn apply_rec(&self, m: &BTreeMap<TermId, TermId>, t: TermId) -> Result<TermId, TermError> {
        if let Some(&v) = m.get(&t) {
            return Ok(v);
        }
        match &self.terms[t.index()] {
            Term::Base(_) => Err(TermError::UndefinedLeaf(t.0)),
            Term::App(sym, ch) => {
                let mapped = ch.iter().map(|c| self.apply_rec(m, *c)).collect::<Result<Vec<_>, _>>()?;
                self.lookup(&Term::App(*sym, mapped)).ok_or(TermError::ImageAbsent(t.0))
            }
        }
    }

    /// Name of the unary relation marking terms headed by `symbol`.
    pub fn head_relation_name(&self, symbol: usize) -> String {
        format!("head:{}", self.signature.symbols[symbol].name)
    }

    /// Name of the projection onto argument `arg` of `symbol`-headed terms.
    pub fn projection_name(&self, symbol: usize, arg: usize) -> String {
        format!("{}#{}", self.signature.symbols[symbol].name, arg)
    }

    /// The table as a relational structure on term ids.
    ///
    /// Term formation is encoded by head relations `head:F`, a `base`
    /// relation, and unary projections `F#i`, so that closing a set under the
    /// structure's functions is exactly closing it under subterms. The base
    /// structure's relations and functions are carried over to the base
    /// terms under their own names.
    pub fn to_structure(&self) -> Result<FiniteStructure, StructureError> {
        let mut relations = Vec::new();
        let mut functions = Vec::new();
        relations.push(Relation::new(
            "base",
            1,
            (0..self.signature.base_size).map(|i| vec![i]),
        ));
        for (si, s) in self.signature.symbols.iter().enumerate() {
            let headed: Vec<Elem> = self
                .terms
                .iter()
                .enumerate()
                .filter(|(_, t)| matches!(t, Term::App(h, _) if *h == si))
                .map(|(i, _)| i)
                .collect();
            relations.push(Relation::new(self.head_relation_name(si), 1, headed.iter().map(|&i| vec![i])));
            for arg in 0..s.arity {
                functions.push(PartialFunction::unary(
                    self.projection_name(si, arg),
                    headed.iter().map(|&i| (i, self.children(TermId(i as u32))[arg].index())),
                ));
            }
        }
        // base terms are the first `base_size` ids, so base elements keep their index
        relations.extend(self.base.relations().iter().cloned());
        functions.extend(self.base.functions().iter().cloned());
        FiniteStructure::new(self.terms.len(), relations, functions)
    }

    /// Human-readable rendering of a term.
    pub fn display(&self, id: TermId) -> String {
        match &self.terms[id.index()] {
            Term::Base(i) => format!("x{i}"),
            Term::App(s, ch) => {
                let name = &self.signature.symbols[*s].name;
                if ch.is_empty() {
                    name.clone()
                } else {
                    let args: Vec<String> = ch.iter().map(|c| self.display(*c)).collect();
                    format!("{}({})", name, args.join(","))
                }
            }
        }
    }
}
