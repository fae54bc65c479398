use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;

use repset::document::{insert_representation, parse, render, Params, Workspace, WorkspaceDocument};
use repset::render as show;
use repset_core::delta::{delta_system, delta_system_for_sets, SetSunflower, SunflowerCertificate};
use repset_core::indiscernible::{instability_probe, sieve, Phi, ProbeOutcome, SieveTrace};
use repset_core::representation::{check_representation, CheckerPolicy, ViolationReport};
use repset_core::stable::{build_ex2_representation, build_sid, build_sid_with_order, Decomposition, DecompositionMode, SymbolMode, TheorySpec};
use repset_core::{enrichment::trivial_enrichment, FiniteStructure, RepresentationMap};

fn repset(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_repset")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const THEORY: &str = r#"{ "version": 1, "theories": { "eq": { "tag": "eq_rel", "params": { "classes": 3, "size": 3 } } } }"#;

#[test]
fn syntax_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "bad.json", "{\n  \"version\": 1,\n  \"structures\": {\n    \"m\": { \"universe\": 2, }\n  }\n}\n");
    let (code, _, err) = repset(&["check-representation", s(&p)]);
    assert_eq!(code, 2);
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn schema_errors_name_the_field() {
    let e = parse(r#"{ "version": 1, "structures": { "m": { "universe": "two" } } }"#).unwrap_err();
    assert_eq!(e.path, "structures.m.universe");
    let e = parse(r#"{ "version": 1, "structures": { "m": { "universe": 2, "colour": 1 } } }"#).unwrap_err();
    assert!(e.message.contains("colour"), "{e}");
    let e = parse(r#"{ "version": 7 }"#).unwrap_err();
    assert_eq!(e.path, "version");
    assert!(parse(r#"{ "structures": {} }"#).is_err());
}

#[test]
fn cross_references_are_checked() {
    let doc = parse(
        r#"{ "version": 1,
             "structures": { "m": { "universe": 2, "relations": [ { "name": "R", "arity": 2, "tuples": [[0, 5]] } ] } } }"#,
    )
    .unwrap();
    let e = Workspace::resolve(doc).unwrap_err();
    assert_eq!(e.path, "structures.m");
    let doc = parse(
        r#"{ "version": 1,
             "structures": { "m": { "universe": 2 } },
             "enrichments": { "e": { "carrier": { "structure": "m" }, "levels": [0, 0] } },
             "representations": { "r": { "source": "m", "target": "nope", "map": [0, 1] } } }"#,
    )
    .unwrap();
    assert_eq!(Workspace::resolve(doc).unwrap_err().path, "representations.r.target");
    let doc = parse(
        r#"{ "version": 1,
             "structures": { "m": { "universe": 2 } },
             "enrichments": { "e": { "carrier": { "structure": "m" }, "levels": [0, 0] } },
             "representations": { "r": { "source": "m", "target": "e", "map": [0, 2] } } }"#,
    )
    .unwrap();
    assert_eq!(Workspace::resolve(doc).unwrap_err().path, "representations.r.map");
    let doc = parse(
        r#"{ "version": 1, "structures": { "m": { "universe": 2,
             "functions": [ { "name": "f", "arity": 1, "graph": [[0, 1], [1]] } ] } } }"#,
    )
    .unwrap();
    assert_eq!(Workspace::resolve(doc).unwrap_err().path, "structures.m.functions[0].graph[1]");
}

#[test]
fn documents_round_trip() {
    let spec = TheorySpec::EqRel { classes: 3, size: 2 };
    let (m, o) = (spec.model(), spec.oracle().unwrap());
    let d = build_sid(&o, &m, DecompositionMode::OmegaStable).unwrap();
    let r = build_ex2_representation(&o, &m, &d, SymbolMode::CopyIndex).unwrap();
    let mut doc = WorkspaceDocument::default();
    doc.theories.insert("eq".into(), spec);
    insert_representation(&mut doc, "r", &r);
    doc.params = Params { tuples: Some(vec![vec![1], vec![3]]), target: Some(2), ..Params::default() };
    let text = render(&doc);
    let back = parse(&text).unwrap();
    assert_eq!(back, doc);
    assert_eq!(render(&back), text);
    let ws = Workspace::resolve(back).unwrap();
    let (_, r2) = ws.representation(None).unwrap();
    assert_eq!(r2.map(), r.map());
    assert_eq!(r2.target(), r.target());
    assert_eq!(r2.source(), r.source());
}

#[test]
fn results_round_trip() {
    let spec = TheorySpec::EqRel { classes: 3, size: 3 };
    let (m, o) = (spec.model(), spec.oracle().unwrap());
    let d = build_sid(&o, &m, DecompositionMode::OmegaStable).unwrap();
    let back: Decomposition = show::from_json(&show::to_json(&d)).unwrap();
    assert_eq!(back, d);
    let r = build_ex2_representation(&o, &m, &d, SymbolMode::Literal).unwrap();
    let report = check_representation(&r, &CheckerPolicy::orbit(2)).unwrap();
    assert!(!report.is_empty());
    let back: ViolationReport = show::from_json(&show::to_json(&report)).unwrap();
    assert_eq!(back, report);

    let fam = vec![vec![1, 2], vec![1, 3], vec![1, 4]];
    let c = delta_system(&fam, 3).unwrap();
    let back: SunflowerCertificate<usize> = show::from_json(&show::to_json(&c)).unwrap();
    assert_eq!(back, c);
    let sets: Vec<BTreeSet<usize>> = vec![[1, 2].into(), [3, 4].into(), [5, 6].into()];
    let sf = delta_system_for_sets(&sets, 3).unwrap();
    let back: SetSunflower<usize> = show::from_json(&show::to_json(&sf)).unwrap();
    assert_eq!(back, sf);

    let order: Vec<usize> = (0..18).step_by(2).chain((1..18).step_by(2)).collect();
    let spec = TheorySpec::EqRel { classes: 9, size: 2 };
    let (m, o) = (spec.model(), spec.oracle().unwrap());
    let d = build_sid_with_order(&o, &m, DecompositionMode::OmegaStable, &order).unwrap();
    let r = build_ex2_representation(&o, &m, &d, SymbolMode::CopyIndex).unwrap();
    let tuples: Vec<Vec<usize>> = (0..9).map(|a| vec![2 * a + 1]).collect();
    let t = sieve(&r, &tuples, 9).unwrap();
    let back: SieveTrace = show::from_json(&show::to_json(&t)).unwrap();
    assert_eq!(back, t);

    let l4 = TheorySpec::FiniteLinearOrder { n: 4 }.model();
    let id = RepresentationMap::new(l4, trivial_enrichment(FiniteStructure::pure_set(4)), (0..4).collect()).unwrap();
    let chain: Vec<Vec<usize>> = (0..4).map(|i| vec![i]).collect();
    let p = instability_probe(&id, &Phi::Relation("<".into()), &chain).unwrap();
    let back: ProbeOutcome = show::from_json(&show::to_json(&p)).unwrap();
    assert_eq!(back, p);
}

#[test]
fn renders_match_fixtures() {
    assert_eq!(show::report(&ViolationReport { tuples_checked: 3, pairs_checked: 2, violations: vec![] }), "OK, 2 tuple-pairs checked\n");
    let fam = vec![vec![1, 2, 2], vec![1, 3, 3], vec![1, 4, 4]];
    let c = delta_system(&fam, 3).unwrap();
    assert_eq!(
        show::certificate(&c),
        "delta-system of 3 members, length 3\n  members  {0,1,2}\n  root     {1}\n  U        {0}\n  E        {0} {1,2}\n  search   Exhaustive\n"
    );
    let order: Vec<usize> = (0..18).step_by(2).chain((1..18).step_by(2)).collect();
    let spec = TheorySpec::EqRel { classes: 9, size: 2 };
    let (m, o) = (spec.model(), spec.oracle().unwrap());
    let d = build_sid_with_order(&o, &m, DecompositionMode::OmegaStable, &order).unwrap();
    let r = build_ex2_representation(&o, &m, &d, SymbolMode::CopyIndex).unwrap();
    let tuples: Vec<Vec<usize>> = (0..9).map(|a| vec![2 * a + 1]).collect();
    let t = sieve(&r, &tuples, 9).unwrap();
    assert_eq!(
        show::trace(&t),
        "sieve over 9 tuples, padded length 2\n  stage0     9 survivors    1 groups\n  stage1     9 survivors    1 groups\n  stage2     9 survivors    1 groups\n  stage3     9 survivors    1 groups\n  kept     {0,1,2,3,4,5,6,7,8}\n"
    );
}

#[test]
fn demos_follow_the_exit_code_contract() {
    let (code, out, _) = repset(&["demo", "eqrel", "--classes", "3", "--size", "3", "--mode", "copy-index"]);
    assert_eq!(code, 0);
    assert!(out.contains("OK, "), "{out}");
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("literal.json");
    let (code, out, _) = repset(&["demo", "eqrel", "--mode", "literal", "--out", s(&report)]);
    assert_eq!(code, 1);
    assert!(out.contains("(4,4) vs (4,5)"), "{out}");
    let parsed: ViolationReport = show::from_json(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(parsed.contains_pair(&[4, 5], &[4, 4]));
    assert_eq!(repset(&["demo", "pureset", "--n", "5"]).0, 0);
    assert_eq!(repset(&["demo", "nested", "--builder", "ex1"]).0, 0);
    assert_eq!(repset(&["demo", "order", "--n", "4"]).0, 1);
    assert_eq!(repset(&["check-representation", "missing.file"]).0, 2);
    assert_eq!(repset(&["demo", "eqrel", "--delta", "nonsense"]).0, 2);
}

#[test]
fn reports_do_not_depend_on_workers() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for w in ["1", "2", "5"] {
        let p = dir.path().join(format!("w{w}.json"));
        let (code, stdout, _) = repset(&["demo", "eqrel", "--mode", "literal", "--workers", w, "--out", s(&p)]);
        assert_eq!(code, 1);
        outputs.push((stdout, std::fs::read(&p).unwrap()));
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn builds_compose_with_checks() {
    let dir = tempfile::tempdir().unwrap();
    let theory = write(dir.path(), "theory.json", THEORY);
    let built = dir.path().join("ex2.json");
    let (code, out, _) = repset(&["build-ex2", s(&theory), "--out", s(&built)]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(repset(&["check-representation", s(&built)]).0, 0);
    assert_eq!(repset(&["check-fact14", s(&built), "--max-tuple-len", "2"]).0, 0);

    let literal = dir.path().join("lit.json");
    assert_eq!(repset(&["build-ex2", s(&theory), "--mode", "literal", "--out", s(&literal)]).0, 0);
    assert_eq!(repset(&["check-representation", s(&literal), "--max-tuple-len", "2"]).0, 1);
    assert_eq!(repset(&["check-fact14", s(&literal), "--max-tuple-len", "2"]).0, 1);
    assert_eq!(repset(&["check-fact14", s(&literal), "--max-tuple-len", "2", "--max-domain", "1"]).0, 1);

    // without --out the document goes to stdout
    let (code, text, summary) = repset(&["build-ex1", s(&theory)]);
    assert_eq!(code, 0);
    assert!(summary.starts_with("built `ex1`"));
    let ex1 = write(dir.path(), "ex1.json", &text);
    assert_eq!(repset(&["check-representation", s(&ex1), "--delta", "ef:9"]).0, 0);

    let sid = dir.path().join("sid.json");
    assert_eq!(repset(&["build-sid", s(&theory), "--decomposition", "generic", "--out", s(&sid)]).0, 0);
    let d: Decomposition = show::from_json(&std::fs::read_to_string(&sid).unwrap()).unwrap();
    assert_eq!(d.mode, DecompositionMode::Generic);
    assert_eq!(repset(&["build-sid", s(&theory), "--order", "0,1,2"]).0, 2);
}

#[test]
fn sieve_and_probe_read_params() {
    let dir = tempfile::tempdir().unwrap();
    let order: Vec<usize> = (0..18).step_by(2).chain((1..18).step_by(2)).collect();
    let spec = TheorySpec::EqRel { classes: 9, size: 2 };
    let (m, o) = (spec.model(), spec.oracle().unwrap());
    let d = build_sid_with_order(&o, &m, DecompositionMode::OmegaStable, &order).unwrap();
    let r = build_ex2_representation(&o, &m, &d, SymbolMode::CopyIndex).unwrap();
    let mut doc = WorkspaceDocument::default();
    insert_representation(&mut doc, "r", &r);
    doc.params.tuples = Some((0..9).map(|a| vec![2 * a + 1]).collect());
    doc.params.target = Some(9);
    let p = write(dir.path(), "sieve.json", &render(&doc));
    let (code, out, _) = repset(&["sieve", s(&p)]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("stage3     9 survivors"), "{out}");
    assert!(out.contains("36 witnesses validated; indiscernible up to length 3: yes"), "{out}");
    assert_eq!(repset(&["sieve", s(&p), "--target", "10"]).0, 1);

    let eq = TheorySpec::EqRel { classes: 3, size: 3 }.model();
    let id = RepresentationMap::new(eq, trivial_enrichment(FiniteStructure::pure_set(9)), (0..9).collect()).unwrap();
    let mut doc = WorkspaceDocument::default();
    insert_representation(&mut doc, "id", &id);
    doc.params.phi = Some("E".into());
    doc.params.chain = Some(vec![vec![1], vec![2], vec![3]]);
    let p = write(dir.path(), "probe.json", &render(&doc));
    let (code, _, err) = repset(&["probe-instability", s(&p)]);
    assert_eq!(code, 2);
    assert!(err.contains("not a chain"), "{err}");
}

#[test]
fn delta_system_reads_families_and_sets() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "fam.json", r#"{ "version": 1, "params": { "family": [[1, 2], [1, 3], [1, 4]], "target": 3 } }"#);
    let (code, out, _) = repset(&["delta-system", s(&p)]);
    assert_eq!(code, 0);
    assert!(out.contains("root     {1}"), "{out}");
    let p = write(dir.path(), "bad.json", r#"{ "version": 1, "params": { "family": [[1, 2], [2, 1]], "target": 2 } }"#);
    assert_eq!(repset(&["delta-system", s(&p)]).0, 1);
    let p = write(dir.path(), "sets.json", r#"{ "version": 1, "params": { "sets": [[1, 2], [1, 3], [4, 5]], "target": 2 } }"#);
    assert_eq!(repset(&["delta-system", s(&p)]).0, 0);
    let a = repset(&["delta-system", "--random-sets", "9", "--seed", "17"]);
    let b = repset(&["delta-system", "--random-sets", "9", "--seed", "17"]);
    assert_eq!(a, b);
    assert_eq!(a.0, 0);
    assert_eq!(repset(&["delta-system", "--random-sets", "99", "--universe", "4"]).0, 2);
}
