//! Representation of finite structures over enriched sets.
//!
//! The crate is `no_std` and only needs `alloc`. It contains:
//!
//! * [`structure`]: finite structures with relations and partial functions,
//!   canonical quantifier-free types and partial automorphisms;
//! * [`types`]: full-type oracles (automorphism orbits and bounded
//!   back-and-forth games);
//! * [`terms`]: depth-bounded fragments of free term algebras;
//! * [`enrichment`]: layered partitions with regressive unary functions;
//! * [`representation`]: the representation checker and its
//!   partial-automorphism counterpart;
//! * [`delta`]: pigeonhole fibers and sunflower (Δ-system) certificates;
//! * [`indiscernible`]: the extraction sieve, witness automorphisms and the
//!   instability probe;
//! * [`stable`]: independence oracles for a small catalog of theories,
//!   strongly independent decompositions and the two representation builders.
//!
//! All values are immutable after construction and every operation is
//! deterministic.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

mod iso;

pub mod delta;
pub mod enrichment;
pub mod indiscernible;
pub mod representation;
pub mod stable;
pub mod structure;
pub mod terms;
pub mod types;

pub use delta::{delta_system, delta_system_for_sets, regressive_fiber, SunflowerCertificate};
pub use enrichment::{Carrier, Enrichment, UnaryFn};
pub use representation::{CheckerPolicy, DeltaPolicy, RepresentationMap, ViolationReport};
pub use structure::{Elem, FiniteStructure, PartialAutomorphism, QfType};
pub use terms::{AlgebraSignature, Term, TermAlgebra, TermId};
