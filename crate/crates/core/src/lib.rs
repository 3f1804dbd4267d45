//! Exact-arithmetic homotopy invariants of finite-poset-indexed diagrams of
//! chain complexes over a prime field.
//!
//! The crate is organized around the pipeline
//!
//! ```text
//!   exactalg  ->  chain  ->  poset  ->  diagram  ->  derived  ->  hybrid
//!                                   \->  specseq
//! ```
//!
//! `exactalg` supplies deterministic linear algebra over `F_p`; `chain` the
//! chain-complex calculus (homology, cones, truncations, sphere/disk
//! splittings); `poset` the indexing combinatorics (filtrations, antichains,
//! path objects, derived and Ind-completed indices); `diagram` functors from a
//! poset into chain complexes together with colimits and cofibrant
//! replacement; `derived` the kernel families, evaluation maps and global
//! derived diagrams; `hybrid` the hybridization tower and its reconstruction
//! checks; `specseq` double/filtered complexes, cube chases and classical
//! spectral-sequence pages.
//!
//! Every operation is pure: values are immutable after construction and all
//! "choices of splittings" are routed through deterministic echelon-form
//! complements, so identical inputs give bit-identical outputs.

pub mod chain;
pub mod derived;
pub mod diagram;
pub mod exactalg;
pub mod generators;
pub mod hybrid;
pub mod poset;
pub mod specseq;
pub mod util;

pub use chain::{ChainComplex, ChainMap, GradedMap, GradedVS};
pub use exactalg::{FieldSpec, Matrix, Subspace};
