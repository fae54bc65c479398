//! Human-readable summaries and machine-readable JSON for command results.

use std::fmt::Write;

use repset_core::delta::SunflowerCertificate;
use repset_core::indiscernible::{IndiscernibilityCertificate, ProbeOutcome, SieveTrace};
use repset_core::representation::{Separation, ViolationReport};
use repset_core::stable::Decomposition;
use serde::de::DeserializeOwned;
use serde::Serialize;

pub fn to_json<T: Serialize>(x: &T) -> String {
    let mut s = serde_json::to_string_pretty(x).expect("results serialize");
    s.push('\n');
    s
}

pub fn from_json<T: DeserializeOwned>(s: &str) -> serde_json::Result<T> {
    serde_json::from_str(s)
}

pub fn tuple(t: &[usize]) -> String {
    let parts: Vec<String> = t.iter().map(usize::to_string).collect();
    format!("({})", parts.join(","))
}

fn set<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    let parts: Vec<String> = items.into_iter().map(|x| x.to_string()).collect();
    format!("{{{}}}", parts.join(","))
}

pub fn report(r: &ViolationReport) -> String {
    if r.is_empty() {
        return format!("OK, {} tuple-pairs checked\n", r.pairs_checked);
    }
    let mut out = format!(
        "FAIL, {} violations among {} tuple-pairs checked ({} tuples)\n",
        r.violations.len(),
        r.pairs_checked,
        r.tuples_checked
    );
    for v in &r.violations {
        let why = match v.separation {
            Separation::SourceQfDiffers => "source qf types differ".to_string(),
            Separation::NoAutomorphism => "no source automorphism".to_string(),
            Separation::SpoilerWins { depth } => format!("spoiler wins in {depth} rounds"),
        };
        let _ = writeln!(
            out,
            "  {} vs {}: images {} and {} agree, {why}",
            tuple(&v.left),
            tuple(&v.right),
            tuple(&v.left_image),
            tuple(&v.right_image)
        );
    }
    out
}

pub fn certificate<V: ToString>(c: &SunflowerCertificate<V>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "delta-system of {} members, length {}", c.selected.len(), c.common_length);
    let _ = writeln!(out, "  members  {}", set(&c.selected));
    let _ = writeln!(out, "  root     {}", set(c.root.iter().map(ToString::to_string)));
    let _ = writeln!(out, "  U        {}", set(&c.agree_idx));
    let classes: Vec<String> = c.rep_classes().iter().map(set).collect();
    let _ = writeln!(out, "  E        {}", classes.join(" "));
    let _ = writeln!(out, "  search   {:?}", c.mode);
    out
}

pub fn trace(t: &SieveTrace) -> String {
    let mut out = format!("sieve over {} tuples, padded length {}\n", t.tuples.len(), t.xi);
    let counts = t.survivor_counts();
    let groups = [t.stage0.len(), t.stage1.len(), t.stage2.len(), 1];
    for (k, (c, g)) in counts.iter().zip(groups).enumerate() {
        let _ = writeln!(out, "  stage{k}  {c:>4} survivors  {g:>3} groups");
    }
    let _ = writeln!(out, "  kept     {}", set(&t.stage3));
    out
}

pub fn indiscernibility(c: &IndiscernibilityCertificate) -> String {
    format!(
        "{} witnesses validated; indiscernible up to length {}: {}\n",
        c.witnesses.len(),
        c.verified_len,
        if c.verified { "yes" } else { "no" }
    )
}

pub fn decomposition(d: &Decomposition) -> String {
    let mut out = format!("{:?} decomposition, {} layers\n", d.mode, d.layers.len());
    for (i, l) in d.layers.iter().enumerate() {
        let _ = writeln!(out, "  layer {i}  {}", set(l));
    }
    out
}

pub fn probe(o: &ProbeOutcome) -> String {
    match o {
        ProbeOutcome::RepresentationRefuted { i, j, left, right, .. } => format!(
            "representation refuted: chain members {i} < {j}; {} and {} have images of one qf type but different types\n",
            tuple(left),
            tuple(right)
        ),
        ProbeOutcome::ChainRefuted { i, j, left, right, .. } => format!(
            "chain refuted: chain members {i} < {j}; {} and {} have one type but phi orders them differently\n",
            tuple(left),
            tuple(right)
        ),
        ProbeOutcome::Inconclusive { reason } => format!("inconclusive: {reason}\n"),
    }
}
