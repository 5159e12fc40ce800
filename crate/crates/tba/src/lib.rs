//! Exhaustive Boolean solving over free Boolean vectors, with a first-order
//! front end for constructing and counting finite models.
//!
//! The crate is organized bottom-up:
//!
//! - [`boolcore`] — Boolean terms, constant reduction, substitution, naive
//!   evaluation oracle.
//! - [`bitengine`] — free-vector generation and chunked word-parallel
//!   evaluation of a term over all valuations.
//! - [`fol`] — finite first-order signatures and the grounding translation
//!   into propositional letters.
//! - [`modelkit`] — labeled models, the decode/encode correspondence,
//!   satisfaction, isomorphism and automorphism machinery.
//! - [`countlab`] — c-partitions, variable killing and the partitioned
//!   labeled/unlabeled counting procedure.
//! - [`shell`] — the script and theory file front ends, the solve pipeline
//!   and the CLI.

pub mod bitengine;
pub mod boolcore;
pub mod countlab;
pub mod fol;
pub mod modelkit;
pub mod shell;
