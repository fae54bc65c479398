//! The sieve on built representations.

use std::time::Instant;

use repset_core::indiscernible::{
    indiscernibility_certificate, sieve, validate_trace, verify_indiscernible, witness_automorphism, SieveError, Stage,
};
use repset_core::representation::{check_representation, CheckerPolicy};
use repset_core::stable::{build_ex2_representation, build_sid_with_order, DecompositionMode, SymbolMode, TheorySpec};
use repset_core::terms::{AlgebraSignature, Symbol, TermAlgebra, TermId};
use repset_core::{Carrier, Enrichment, FiniteStructure, RepresentationMap};

/// EQ(9×2) built with one element of every class first, so the first layer
/// takes the even elements and each odd element sits over its classmate.
fn eq9x2() -> RepresentationMap {
    let spec = TheorySpec::EqRel { classes: 9, size: 2 };
    let (m, o) = (spec.model(), spec.oracle().unwrap());
    let order: Vec<usize> = (0..18).step_by(2).chain((1..18).step_by(2)).collect();
    let d = build_sid_with_order(&o, &m, DecompositionMode::OmegaStable, &order).unwrap();
    assert_eq!(d.layers[0], (0..18).step_by(2).collect::<Vec<_>>());
    build_ex2_representation(&o, &m, &d, SymbolMode::CopyIndex).unwrap()
}

fn generic_singletons() -> Vec<Vec<usize>> {
    (0..9).map(|a| vec![2 * a + 1]).collect()
}

#[test]
fn nine_generics_survive() {
    let start = Instant::now();
    let r = eq9x2();
    let tuples = generic_singletons();
    let trace = sieve(&r, &tuples, 9).unwrap();
    assert_eq!(trace.stage3, (0..9).collect::<Vec<_>>());
    assert!(trace.certificate.root.is_empty());
    assert!(trace.certificate.agree_idx.is_empty());
    assert_eq!(trace.survivor_counts(), [9, 9, 9, 9]);
    assert_eq!(validate_trace(&r, &trace), Ok(()));
    for u in 0..9 {
        for v in 0..9 {
            if u != v {
                witness_automorphism(&r, &trace, &[u, v], &[v, u]).unwrap();
            }
        }
    }
    let cert = indiscernibility_certificate(&r, &trace, 3).unwrap();
    assert!(cert.verified);
    assert_eq!(cert.witnesses.len(), 36);
    assert!(verify_indiscernible(r.source(), &tuples, &trace.stage3, 3));
    assert!(start.elapsed().as_secs() < 60);
}

#[test]
fn witnesses_compose() {
    let r = eq9x2();
    let trace = sieve(&r, &generic_singletons(), 9).unwrap();
    let uv = witness_automorphism(&r, &trace, &[0, 1], &[2, 3]).unwrap();
    let vw = witness_automorphism(&r, &trace, &[2, 3], &[4, 5]).unwrap();
    let uw = witness_automorphism(&r, &trace, &[0, 1], &[4, 5]).unwrap();
    for (x, y) in vw.as_map() {
        assert_eq!(uv.get(*y), uw.get(*x));
    }
    let id = witness_automorphism(&r, &trace, &[3], &[3]).unwrap();
    assert!(id.as_map().iter().all(|(x, y)| x == y));
    assert!(witness_automorphism(&r, &trace, &[0, 0], &[1, 2]).is_err());
}

#[test]
fn extraction_is_sound_on_represented_models() {
    let r = eq9x2();
    assert!(check_representation(&r, &CheckerPolicy::orbit(2)).unwrap().is_empty());
    // mixed tuples: the sieve keeps some, and whatever it keeps is indiscernible
    let tuples: Vec<Vec<usize>> = (0..9).map(|a| vec![2 * a, 2 * a + 1]).chain([vec![1, 3], vec![5, 7]]).collect();
    let trace = sieve(&r, &tuples, 2).unwrap();
    assert_eq!(validate_trace(&r, &trace), Ok(()));
    for (x, &i) in trace.stage3.iter().enumerate() {
        for &j in &trace.stage3[x + 1..] {
            witness_automorphism(&r, &trace, &[i, j], &[j, i]).unwrap();
        }
    }
    assert!(verify_indiscernible(r.source(), &tuples, &trace.stage3, 2));
}

#[test]
fn two_shapes_fail_at_stage0() {
    let sig = AlgebraSignature::new(vec![Symbol::new("F", 1)], 2, 1);
    let mut a = TermAlgebra::fragment(sig, FiniteStructure::pure_set(2), 100).unwrap();
    let fx = a.intern(0, vec![TermId(0)]).unwrap();
    let target = Enrichment::trivial(Carrier::Terms(a));
    let r = RepresentationMap::new(FiniteStructure::pure_set(3), target, vec![0, 1, fx.index()]).unwrap();
    let err = sieve(&r, &[vec![1], vec![2]], 2).unwrap_err();
    assert_eq!(err, SieveError::Bottleneck { stage: Stage::Stage0, size: 1, target: 2 });
}
