//! Command-line parsing and dispatch.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use repset_core::delta::{delta_system, delta_system_for_sets, validate_certificate};
use repset_core::enrichment::{trivial_enrichment, validate_enrichment};
use repset_core::indiscernible::{indiscernibility_certificate, instability_probe, sieve, validate_trace, Phi, ProbeOutcome};
use repset_core::representation::{check_by_partial_automorphisms, max_closure_size, CheckerPolicy, DeltaPolicy};
use repset_core::stable::{
    build_ex1_representation, build_ex2_representation, build_sid, build_sid_with_order, refine_decomposition,
    singleton_prefix_cuts, verify_decomposition, DecompositionMode, SymbolMode, TheorySpec,
};
use repset_core::{FiniteStructure, RepresentationMap};

use crate::document::{self, insert_representation, Workspace, WorkspaceDocument};
use crate::parallel::check_representation_parallel;
use crate::render;

#[derive(Debug, Parser)]
#[command(name = "repset", version, about = "Check and build representations of finite structures")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Longest source tuple compared by the checkers.
    #[arg(long, global = true, default_value_t = 3)]
    pub max_tuple_len: usize,
    /// Full-type oracle on the source: `orbit` or `ef:D`.
    #[arg(long, global = true, default_value = "orbit", value_parser = parse_delta)]
    pub delta: DeltaPolicy,
    /// Symbol choice of the term builder.
    #[arg(long, global = true, value_enum, default_value_t = Mode::CopyIndex)]
    pub mode: Mode,
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    /// Where to write the machine-readable result.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    CopyIndex,
    Literal,
}

impl From<Mode> for SymbolMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::CopyIndex => SymbolMode::CopyIndex,
            Mode::Literal => SymbolMode::Literal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Decomp {
    Generic,
    OmegaStable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Builder {
    Ex1,
    Ex2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DemoKind {
    Eqrel,
    Pureset,
    Nested,
    Order,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compare all source tuple pairs whose images share a qf type.
    CheckRepresentation {
        document: PathBuf,
        #[arg(long)]
        name: Option<String>,
    },
    /// The partial-automorphism criterion.
    CheckFact14 {
        document: PathBuf,
        #[arg(long)]
        name: Option<String>,
        /// Largest closure enumerated; defaults to the largest needed.
        #[arg(long)]
        max_domain: Option<usize>,
    },
    /// Greedy strongly independent decomposition of a catalog theory.
    BuildSid {
        document: PathBuf,
        #[arg(long)]
        theory: Option<String>,
        #[arg(long, value_enum, default_value_t = Decomp::OmegaStable)]
        decomposition: Decomp,
        /// Greedy order, comma separated; defaults to increasing.
        #[arg(long, value_delimiter = ',')]
        order: Option<Vec<usize>>,
    },
    /// Layered representation onto a pure set.
    BuildEx1 {
        document: PathBuf,
        #[arg(long)]
        theory: Option<String>,
    },
    /// Term representation.
    BuildEx2 {
        document: PathBuf,
        #[arg(long)]
        theory: Option<String>,
    },
    /// Extract indiscernible tuples from `params.tuples`.
    Sieve {
        document: PathBuf,
        #[arg(long)]
        name: Option<String>,
        /// Survivors required; defaults to `params.target`, else 2.
        #[arg(long)]
        target: Option<usize>,
        /// Length up to which survivors are checked for indiscernibility.
        #[arg(long, default_value_t = 3)]
        verify_len: usize,
    },
    /// Sunflower search over `params.family` or `params.sets`, or over
    /// random sets.
    DeltaSystem {
        document: Option<PathBuf>,
        #[arg(long)]
        target: Option<usize>,
        /// Draw this many distinct random sets instead of reading a document.
        #[arg(long)]
        random_sets: Option<usize>,
        #[arg(long, default_value_t = 2)]
        set_size: usize,
        #[arg(long, default_value_t = 12)]
        universe: usize,
    },
    /// Play a representation against a chain ordered by `phi`.
    ProbeInstability {
        document: PathBuf,
        #[arg(long)]
        name: Option<String>,
        /// Source relation; defaults to `params.phi`.
        #[arg(long)]
        phi: Option<String>,
    },
    /// Build and check a catalog example end to end.
    Demo {
        #[arg(value_enum)]
        kind: DemoKind,
        #[arg(long, default_value_t = 3)]
        classes: usize,
        #[arg(long, default_value_t = 3)]
        size: usize,
        #[arg(long, default_value_t = 2)]
        outer: usize,
        #[arg(long, default_value_t = 2)]
        inner: usize,
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Builder::Ex2)]
        builder: Builder,
    },
}

fn parse_delta(s: &str) -> Result<DeltaPolicy, String> {
    if s == "orbit" {
        return Ok(DeltaPolicy::Orbit);
    }
    match s.strip_prefix("ef:").map(str::parse::<usize>) {
        Some(Ok(d)) => Ok(DeltaPolicy::EfDepth(d)),
        _ => Err(format!("expected `orbit` or `ef:D`, got `{s}`")),
    }
}

/// What a command found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Clean,
    Found,
}

impl Status {
    fn from_clean(clean: bool) -> Self {
        if clean {
            Status::Clean
        } else {
            Status::Found
        }
    }
}

/// Exit code: 0 clean, 1 violations or failed certificates, 2 bad input.
pub fn exit_code(r: &Result<Status, String>) -> i32 {
    match r {
        Ok(Status::Clean) => 0,
        Ok(Status::Found) => 1,
        Err(_) => 2,
    }
}

/// Everything a command prints, kept apart from process IO for testing.
#[derive(Debug, Default)]
pub struct Output {
    pub stdout: String,
    pub stderr: String,
}

pub fn execute(cli: &Cli, out: &mut Output) -> Result<Status, String> {
    let g = &cli.global;
    match &cli.command {
        Command::CheckRepresentation { document, name } => {
            let ws = load(document)?;
            let (_, r) = ws.representation(name.as_deref()).map_err(|e| e.to_string())?;
            check(g, r, out)
        }
        Command::CheckFact14 { document, name, max_domain } => {
            let ws = load(document)?;
            let (_, r) = ws.representation(name.as_deref()).map_err(|e| e.to_string())?;
            let policy = policy(g)?;
            let max_domain = max_domain.unwrap_or_else(|| max_closure_size(r, g.max_tuple_len));
            match check_by_partial_automorphisms(r, &policy, max_domain) {
                Ok(report) => {
                    out.stdout.push_str(&render::report(&report));
                    write_out(g, &render::to_json(&report))?;
                    Ok(Status::from_clean(report.is_empty()))
                }
                Err(e @ repset_core::representation::RepresentationError::Inconclusive { .. }) => {
                    out.stdout.push_str(&format!("INCONCLUSIVE, {e}\n"));
                    Ok(Status::Found)
                }
                Err(e) => Err(e.to_string()),
            }
        }
        Command::BuildSid { document, theory, decomposition, order } => {
            let ws = load(document)?;
            let (_, spec) = ws.theory(theory.as_deref()).map_err(|e| e.to_string())?;
            let (m, o) = (spec.model(), spec.oracle().map_err(|e| e.to_string())?);
            let mode = match decomposition {
                Decomp::Generic => DecompositionMode::Generic,
                Decomp::OmegaStable => DecompositionMode::OmegaStable,
            };
            let d = match order {
                Some(order) => build_sid_with_order(&o, &m, mode, order),
                None => build_sid(&o, &m, mode),
            }
            .map_err(|e| e.to_string())?;
            out.stdout.push_str(&render::decomposition(&d));
            write_out(g, &render::to_json(&d))?;
            match verify_decomposition(&o, &m, &d) {
                Ok(()) => Ok(Status::Clean),
                Err(e) => {
                    out.stdout.push_str(&format!("verification failed: {e}\n"));
                    Ok(Status::Found)
                }
            }
        }
        Command::BuildEx1 { document, theory } => {
            let ws = load(document)?;
            let (tname, spec) = ws.theory(theory.as_deref()).map_err(|e| e.to_string())?;
            let r = build_ex1(spec)?;
            emit_built(g, out, tname, spec, "ex1", &r)
        }
        Command::BuildEx2 { document, theory } => {
            let ws = load(document)?;
            let (tname, spec) = ws.theory(theory.as_deref()).map_err(|e| e.to_string())?;
            let r = build_ex2(spec, g.mode.into())?;
            emit_built(g, out, tname, spec, "ex2", &r)
        }
        Command::Sieve { document, name, target, verify_len } => {
            let ws = load(document)?;
            let (_, r) = ws.representation(name.as_deref()).map_err(|e| e.to_string())?;
            let tuples = ws.document.params.tuples.clone().ok_or("params.tuples: missing")?;
            let target = target.or(ws.document.params.target).unwrap_or(2);
            run_sieve(g, out, r, &tuples, target, *verify_len)
        }
        Command::DeltaSystem { document, target, random_sets, set_size, universe } => {
            if let Some(count) = random_sets {
                let sets = random_family(*count, *set_size, *universe, g.seed)?;
                let target = target.unwrap_or(3);
                return run_sets(g, out, &sets, target);
            }
            let path = document.as_ref().ok_or("a document or --random-sets is required")?;
            let ws = load(path)?;
            let p = &ws.document.params;
            let target = target.or(p.target).unwrap_or(3);
            if let Some(family) = &p.family {
                return match delta_system(family, target) {
                    Ok(c) => {
                        out.stdout.push_str(&render::certificate(&c));
                        write_out(g, &render::to_json(&c))?;
                        Ok(Status::from_clean(validate_certificate(family, &c).is_ok()))
                    }
                    Err(e) => delta_failure(out, e),
                };
            }
            let sets = p.sets.as_ref().ok_or("params: `family` or `sets` is required")?;
            let sets: Vec<BTreeSet<usize>> = sets.iter().map(|s| s.iter().copied().collect()).collect();
            run_sets(g, out, &sets, target)
        }
        Command::ProbeInstability { document, name, phi } => {
            let ws = load(document)?;
            let (_, r) = ws.representation(name.as_deref()).map_err(|e| e.to_string())?;
            let phi = phi.clone().or_else(|| ws.document.params.phi.clone()).ok_or("params.phi: missing")?;
            let chain = ws.document.params.chain.clone().ok_or("params.chain: missing")?;
            probe(g, out, r, &phi, &chain)
        }
        Command::Demo { kind, classes, size, outer, inner, n, builder } => {
            let spec = match kind {
                DemoKind::Eqrel => TheorySpec::EqRel { classes: *classes, size: *size },
                DemoKind::Pureset => TheorySpec::PureSet { n: *n },
                DemoKind::Nested => TheorySpec::NestedEqRel { outer: *outer, inner: *inner, size: *size },
                DemoKind::Order => {
                    let m = TheorySpec::FiniteLinearOrder { n: *n }.model();
                    let r = identity_into_pure_set(m);
                    let chain: Vec<Vec<usize>> = (0..*n).map(|i| vec![i]).collect();
                    return probe(g, out, &r, "<", &chain);
                }
            };
            if spec.universe_size() == 0 {
                return Err("the demo model is empty".into());
            }
            let r = match builder {
                Builder::Ex1 => build_ex1(&spec)?,
                Builder::Ex2 => build_ex2(&spec, g.mode.into())?,
            };
            out.stdout.push_str(&format!(
                "{} with {} elements, {:?} builder onto {} target elements\n",
                spec.tag(),
                spec.universe_size(),
                builder,
                r.target().size()
            ));
            check(g, &r, out)
        }
    }
}

fn load(path: &Path) -> Result<Workspace, String> {
    document::load(path).map_err(|e| e.to_string())
}

fn policy(g: &Global) -> Result<CheckerPolicy, String> {
    let p = CheckerPolicy { delta: g.delta, max_tuple_len: g.max_tuple_len };
    if p.max_tuple_len == 0 {
        return Err("--max-tuple-len must be at least 1".into());
    }
    Ok(p)
}

fn write_out(g: &Global, text: &str) -> Result<(), String> {
    match &g.out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => Ok(()),
    }
}

fn check(g: &Global, r: &RepresentationMap, out: &mut Output) -> Result<Status, String> {
    let report = check_representation_parallel(r, &policy(g)?, g.workers).map_err(|e| e.to_string())?;
    out.stdout.push_str(&render::report(&report));
    write_out(g, &render::to_json(&report))?;
    Ok(Status::from_clean(report.is_empty()))
}

fn build_ex1(spec: &TheorySpec) -> Result<RepresentationMap, String> {
    let (m, o) = (spec.model(), spec.oracle().map_err(|e| e.to_string())?);
    let d = build_sid(&o, &m, DecompositionMode::OmegaStable).map_err(|e| e.to_string())?;
    let d = refine_decomposition(&d, &singleton_prefix_cuts(&d)).map_err(|e| e.to_string())?;
    let r = build_ex1_representation(&o, &m, &d).map_err(|e| e.to_string())?;
    debug_assert!(validate_enrichment(r.target()).is_empty());
    Ok(r)
}

fn build_ex2(spec: &TheorySpec, mode: SymbolMode) -> Result<RepresentationMap, String> {
    let (m, o) = (spec.model(), spec.oracle().map_err(|e| e.to_string())?);
    let d = build_sid(&o, &m, DecompositionMode::OmegaStable).map_err(|e| e.to_string())?;
    build_ex2_representation(&o, &m, &d, mode).map_err(|e| e.to_string())
}

/// The built document goes to `--out`, or to stdout with the summary on
/// stderr.
fn emit_built(
    g: &Global,
    out: &mut Output,
    tname: &str,
    spec: &TheorySpec,
    name: &str,
    r: &RepresentationMap,
) -> Result<Status, String> {
    let mut doc = WorkspaceDocument::default();
    doc.theories.insert(tname.to_string(), *spec);
    insert_representation(&mut doc, name, r);
    let problems = validate_enrichment(r.target());
    let summary = format!(
        "built `{name}`: {} elements onto {} target elements, {} levels, {} enrichment problems\n",
        r.source().universe_size(),
        r.target().size(),
        r.target().max_level() + 1,
        problems.len()
    );
    let text = document::render(&doc);
    match &g.out {
        Some(_) => {
            out.stdout.push_str(&summary);
            write_out(g, &text)?;
        }
        None => {
            out.stderr.push_str(&summary);
            out.stdout.push_str(&text);
        }
    }
    Ok(Status::from_clean(problems.is_empty()))
}

fn run_sieve(
    g: &Global,
    out: &mut Output,
    r: &RepresentationMap,
    tuples: &[Vec<usize>],
    target: usize,
    verify_len: usize,
) -> Result<Status, String> {
    use repset_core::indiscernible::SieveError;
    let trace = match sieve(r, tuples, target) {
        Ok(t) => t,
        Err(e @ SieveError::Bottleneck { .. }) => {
            out.stdout.push_str(&format!("FAIL, {e}\n"));
            return Ok(Status::Found);
        }
        Err(e) => return Err(e.to_string()),
    };
    out.stdout.push_str(&render::trace(&trace));
    write_out(g, &render::to_json(&trace))?;
    if let Err(d) = validate_trace(r, &trace) {
        out.stdout.push_str(&format!("trace rejected: {d:?}\n"));
        return Ok(Status::Found);
    }
    match indiscernibility_certificate(r, &trace, verify_len.min(trace.stage3.len())) {
        Ok(c) => {
            out.stdout.push_str(&render::indiscernibility(&c));
            Ok(Status::from_clean(c.verified))
        }
        Err(e) => {
            out.stdout.push_str(&format!("witness rejected: {e}\n"));
            Ok(Status::Found)
        }
    }
}

fn run_sets(g: &Global, out: &mut Output, sets: &[BTreeSet<usize>], target: usize) -> Result<Status, String> {
    match delta_system_for_sets(sets, target) {
        Ok(s) => {
            out.stdout.push_str(&render::certificate(&s.certificate));
            write_out(g, &render::to_json(&s))?;
            Ok(Status::from_clean(validate_certificate(&s.listing, &s.certificate).is_ok()))
        }
        Err(e) => delta_failure(out, e),
    }
}

fn delta_failure(out: &mut Output, e: repset_core::delta::DeltaError) -> Result<Status, String> {
    use repset_core::delta::DeltaError;
    match e {
        DeltaError::NotFound { .. } | DeltaError::Inconclusive { .. } => {
            out.stdout.push_str(&format!("FAIL, {e}\n"));
            Ok(Status::Found)
        }
        e => Err(e.to_string()),
    }
}

/// `count` distinct `k`-subsets of `0..universe`, drawn with `seed`.
pub fn random_family(count: usize, k: usize, universe: usize, seed: u64) -> Result<Vec<BTreeSet<usize>>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let available = (0..k).try_fold(1u128, |acc, i| Some(acc * (universe - i.min(universe)) as u128 / (i as u128 + 1)));
    if k > universe || available.is_some_and(|a| a < count as u128) {
        return Err(format!("fewer than {count} distinct {k}-subsets of {universe} elements"));
    }
    let elems: Vec<usize> = (0..universe).collect();
    let mut out = Vec::new();
    while out.len() < count {
        let mut pick = elems.clone();
        pick.shuffle(&mut rng);
        let s: BTreeSet<usize> = pick[..k].iter().copied().collect();
        if seen.insert(s.clone()) {
            out.push(s);
        }
    }
    Ok(out)
}

fn identity_into_pure_set(m: FiniteStructure) -> RepresentationMap {
    let n = m.universe_size();
    RepresentationMap::new(m, trivial_enrichment(FiniteStructure::pure_set(n)), (0..n).collect())
        .expect("the identity onto a pure set is a representation map")
}

fn probe(g: &Global, out: &mut Output, r: &RepresentationMap, phi: &str, chain: &[Vec<usize>]) -> Result<Status, String> {
    let outcome = instability_probe(r, &Phi::Relation(phi.to_string()), chain).map_err(|e| e.to_string())?;
    out.stdout.push_str(&render::probe(&outcome));
    write_out(g, &render::to_json(&outcome))?;
    Ok(match outcome {
        ProbeOutcome::Inconclusive { .. } => Status::Clean,
        _ => Status::Found,
    })
}
