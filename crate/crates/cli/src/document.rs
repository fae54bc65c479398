//! The workspace document: one JSON file holding structures, enrichments,
//! signatures, representation maps, theories and command parameters.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use repset_core::stable::TheorySpec;
use repset_core::structure::{PartialFunction, Relation};
use repset_core::terms::{build_terms_over, Symbol, Term, TermId, DEFAULT_TERM_LIMIT};
use repset_core::{AlgebraSignature, Carrier, Enrichment, FiniteStructure, RepresentationMap, TermAlgebra, UnaryFn};
use serde::{Deserialize, Serialize};

pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkspaceDocument {
    pub version: u32,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub structures: BTreeMap<String, StructureDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub enrichments: BTreeMap<String, EnrichmentDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub signatures: BTreeMap<String, SignatureDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub representations: BTreeMap<String, RepresentationDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub theories: BTreeMap<String, TheorySpec>,
    #[serde(default, skip_serializing_if = "Params::is_empty")]
    pub params: Params,
}

impl Default for WorkspaceDocument {
    fn default() -> Self {
        WorkspaceDocument {
            version: VERSION,
            structures: BTreeMap::new(),
            enrichments: BTreeMap::new(),
            signatures: BTreeMap::new(),
            representations: BTreeMap::new(),
            theories: BTreeMap::new(),
            params: Params::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureDoc {
    pub universe: usize,
    #[serde(default)]
    pub relations: Vec<RelationDoc>,
    #[serde(default)]
    pub functions: Vec<FunctionDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationDoc {
    pub name: String,
    pub arity: usize,
    pub tuples: Vec<Vec<usize>>,
}

/// Graph rows are the arguments followed by the value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionDoc {
    pub name: String,
    pub arity: usize,
    pub graph: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnrichmentDoc {
    pub carrier: CarrierDoc,
    pub levels: Vec<usize>,
    #[serde(default)]
    pub unary_fns: Vec<UnaryFnDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CarrierDoc {
    Structure(String),
    Signature(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnaryFnDoc {
    pub name: String,
    pub map: Vec<(usize, usize)>,
}

/// Without `terms`, the carrier is every term up to `depth`; with it, the
/// listed table (base terms first, children before parents).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignatureDoc {
    pub symbols: Vec<Symbol>,
    pub base: BaseDoc,
    pub depth: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<Term>>,
}

/// A pure set of the given size, or a named structure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BaseDoc {
    Size(usize),
    Structure(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepresentationDoc {
    pub source: String,
    /// An enrichment name.
    pub target: String,
    pub map: Vec<usize>,
}

/// Command inputs that are data rather than flags.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Source tuples for `sieve`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuples: Option<Vec<Vec<usize>>>,
    /// Chain for `probe-instability`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    /// Sequences for `delta-system`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Vec<Vec<usize>>>,
    /// Sets for `delta-system`; used when `family` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sets: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<usize>,
}

impl Params {
    pub fn is_empty(&self) -> bool {
        self == &Params::default()
    }
}

/// A load failure, located by field path and, for syntax errors, line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for LoadError {}

fn err(path: impl Into<String>, message: impl fmt::Display) -> LoadError {
    LoadError { path: path.into(), message: message.to_string() }
}

pub fn parse(text: &str) -> Result<WorkspaceDocument, LoadError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: WorkspaceDocument = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let message = format!("{inner}");
        err(if path == "." { String::new() } else { path }, message)
    })?;
    if doc.version != VERSION {
        return Err(err("version", format!("unsupported version {}, expected {VERSION}", doc.version)));
    }
    Ok(doc)
}

pub fn load(path: &Path) -> Result<Workspace, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|e| err("", format!("cannot read {}: {e}", path.display())))?;
    let doc = parse(&text)?;
    Workspace::resolve(doc).map_err(|mut e| {
        e.message = format!("{} (in {})", e.message, path.display());
        e
    })
}

pub fn render(doc: &WorkspaceDocument) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents serialize");
    s.push('\n');
    s
}

/// A document with every cross-reference resolved.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub document: WorkspaceDocument,
    pub structures: BTreeMap<String, FiniteStructure>,
    pub algebras: BTreeMap<String, TermAlgebra>,
    pub enrichments: BTreeMap<String, Enrichment>,
    pub representations: BTreeMap<String, RepresentationMap>,
}

impl Workspace {
    pub fn resolve(doc: WorkspaceDocument) -> Result<Workspace, LoadError> {
        let mut structures = BTreeMap::new();
        for (name, s) in &doc.structures {
            structures.insert(name.clone(), structure_from_doc(&format!("structures.{name}"), s)?);
        }
        let mut algebras = BTreeMap::new();
        for (name, s) in &doc.signatures {
            algebras.insert(name.clone(), algebra_from_doc(&format!("signatures.{name}"), s, &structures)?);
        }
        let mut enrichments = BTreeMap::new();
        for (name, e) in &doc.enrichments {
            let at = format!("enrichments.{name}");
            let carrier = match &e.carrier {
                CarrierDoc::Structure(s) => Carrier::Structure(
                    structures.get(s).cloned().ok_or_else(|| err(format!("{at}.carrier"), format!("unknown structure `{s}`")))?,
                ),
                CarrierDoc::Signature(s) => Carrier::Terms(
                    algebras.get(s).cloned().ok_or_else(|| err(format!("{at}.carrier"), format!("unknown signature `{s}`")))?,
                ),
            };
            let fns = e.unary_fns.iter().map(|g| UnaryFn::new(g.name.clone(), g.map.iter().copied())).collect();
            let enrichment = Enrichment::new(carrier, e.levels.clone(), fns).map_err(|x| err(&at, x))?;
            enrichments.insert(name.clone(), enrichment);
        }
        let mut representations = BTreeMap::new();
        for (name, r) in &doc.representations {
            let at = format!("representations.{name}");
            let source = structures
                .get(&r.source)
                .cloned()
                .ok_or_else(|| err(format!("{at}.source"), format!("unknown structure `{}`", r.source)))?;
            let target = enrichments
                .get(&r.target)
                .cloned()
                .ok_or_else(|| err(format!("{at}.target"), format!("unknown enrichment `{}`", r.target)))?;
            let map = RepresentationMap::new(source, target, r.map.clone()).map_err(|x| err(format!("{at}.map"), x))?;
            representations.insert(name.clone(), map);
        }
        for (name, t) in &doc.theories {
            if t.universe_size() == 0 {
                return Err(err(format!("theories.{name}.params"), "empty universe"));
            }
        }
        Ok(Workspace { document: doc, structures, algebras, enrichments, representations })
    }

    /// The named representation, or the only one.
    pub fn representation(&self, name: Option<&str>) -> Result<(&str, &RepresentationMap), LoadError> {
        pick("representations", &self.representations, name)
    }

    pub fn theory(&self, name: Option<&str>) -> Result<(&str, &TheorySpec), LoadError> {
        pick("theories", &self.document.theories, name)
    }
}

fn pick<'a, T>(section: &str, items: &'a BTreeMap<String, T>, name: Option<&str>) -> Result<(&'a str, &'a T), LoadError> {
    match name {
        Some(n) => items.get_key_value(n).map(|(k, v)| (k.as_str(), v)).ok_or_else(|| err(section, format!("no entry named `{n}`"))),
        None if items.len() == 1 => {
            let (k, v) = items.iter().next().expect("one entry");
            Ok((k.as_str(), v))
        }
        None if items.is_empty() => Err(err(section, "section is empty")),
        None => Err(err(section, format!("{} entries; choose one with --name", items.len()))),
    }
}

fn structure_from_doc(at: &str, s: &StructureDoc) -> Result<FiniteStructure, LoadError> {
    let relations = s.relations.iter().map(|r| Relation::new(r.name.clone(), r.arity, r.tuples.iter().cloned())).collect();
    let mut functions = Vec::new();
    for (i, g) in s.functions.iter().enumerate() {
        let mut graph = BTreeMap::new();
        for (k, row) in g.graph.iter().enumerate() {
            if row.len() != g.arity + 1 {
                return Err(err(
                    format!("{at}.functions[{i}].graph[{k}]"),
                    format!("row of length {}, expected arity + 1 = {}", row.len(), g.arity + 1),
                ));
            }
            let (args, value) = row.split_at(g.arity);
            if graph.insert(args.to_vec(), value[0]).is_some_and(|old| old != value[0]) {
                return Err(err(format!("{at}.functions[{i}].graph[{k}]"), "argument tuple listed with two values"));
            }
        }
        functions.push(PartialFunction { name: g.name.clone(), arity: g.arity, graph });
    }
    FiniteStructure::new(s.universe, relations, functions).map_err(|e| err(at, e))
}

fn algebra_from_doc(
    at: &str,
    s: &SignatureDoc,
    structures: &BTreeMap<String, FiniteStructure>,
) -> Result<TermAlgebra, LoadError> {
    let base = match &s.base {
        BaseDoc::Size(n) => FiniteStructure::pure_set(*n),
        BaseDoc::Structure(name) => {
            structures.get(name).cloned().ok_or_else(|| err(format!("{at}.base"), format!("unknown structure `{name}`")))?
        }
    };
    let sig = AlgebraSignature::new(s.symbols.clone(), base.universe_size(), s.depth);
    let Some(terms) = &s.terms else {
        return build_terms_over(sig, base, DEFAULT_TERM_LIMIT).map_err(|e| err(at, e));
    };
    let mut a = TermAlgebra::fragment(sig, base, DEFAULT_TERM_LIMIT).map_err(|e| err(at, e))?;
    for (i, t) in terms.iter().enumerate() {
        let here = format!("{at}.terms[{i}]");
        match t {
            Term::Base(b) => {
                if i >= a.len() || a.terms()[i] != Term::Base(*b) {
                    return Err(err(here, "base terms must come first, in order"));
                }
            }
            Term::App(sym, children) => {
                if i < a.len() {
                    return Err(err(here, "base terms must come first, in order"));
                }
                if let Some(c) = children.iter().find(|c| c.index() >= i) {
                    return Err(err(here, format!("child {} is not listed earlier", c.0)));
                }
                let id = a.intern(*sym, children.clone()).map_err(|e| err(&here, e))?;
                if id != TermId(i as u32) {
                    return Err(err(here, format!("duplicate of term {}", id.0)));
                }
            }
        }
    }
    if terms.len() < a.len() {
        return Err(err(format!("{at}.terms"), "base terms missing"));
    }
    Ok(a)
}

/// Document form of a structure.
pub fn structure_doc(s: &FiniteStructure) -> StructureDoc {
    StructureDoc {
        universe: s.universe_size(),
        relations: s
            .relations()
            .iter()
            .map(|r| RelationDoc { name: r.name.clone(), arity: r.arity, tuples: r.tuples.iter().cloned().collect() })
            .collect(),
        functions: s
            .functions()
            .iter()
            .map(|f| FunctionDoc {
                name: f.name.clone(),
                arity: f.arity,
                graph: f
                    .graph
                    .iter()
                    .map(|(args, &v)| {
                        let mut row = args.clone();
                        row.push(v);
                        row
                    })
                    .collect(),
            })
            .collect(),
    }
}

/// Adds a representation and everything it refers to. Names are `name`
/// for the map, `{name}.source`, `{name}.target` and, for term carriers,
/// `{name}.terms` (with `{name}.base` when the base has vocabulary).
pub fn insert_representation(doc: &mut WorkspaceDocument, name: &str, r: &RepresentationMap) {
    let source = format!("{name}.source");
    let target = format!("{name}.target");
    doc.structures.insert(source.clone(), structure_doc(r.source()));
    let e = r.target();
    let carrier = match e.carrier() {
        Carrier::Structure(s) => {
            let c = format!("{name}.carrier");
            doc.structures.insert(c.clone(), structure_doc(s));
            CarrierDoc::Structure(c)
        }
        Carrier::Terms(a) => {
            let base = if a.base_structure().has_vocabulary() {
                let b = format!("{name}.base");
                doc.structures.insert(b.clone(), structure_doc(a.base_structure()));
                BaseDoc::Structure(b)
            } else {
                BaseDoc::Size(a.signature().base_size)
            };
            let t = format!("{name}.terms");
            doc.signatures.insert(
                t.clone(),
                SignatureDoc {
                    symbols: a.signature().symbols.clone(),
                    base,
                    depth: a.signature().depth_bound,
                    terms: Some(a.terms().to_vec()),
                },
            );
            CarrierDoc::Signature(t)
        }
    };
    doc.enrichments.insert(
        target.clone(),
        EnrichmentDoc {
            carrier,
            levels: e.levels().to_vec(),
            unary_fns: e
                .unary_fns()
                .iter()
                .map(|g| UnaryFnDoc { name: g.name.clone(), map: g.map.iter().map(|(&x, &y)| (x, y)).collect() })
                .collect(),
        },
    );
    doc.representations.insert(name.to_string(), RepresentationDoc { source, target, map: r.map().to_vec() });
}
