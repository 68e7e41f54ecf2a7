//! Independent cross-checks for the deciders.

pub mod brute;
pub mod replay;
pub mod synth;

pub use brute::{brute_partial_witness, brute_search, verify_partial_witness, BruteOutcome, PartialWitness};
pub use replay::{pointed_grid, replay, ReplayCheck, ReplayReport};
pub use synth::{pp_semantics, synthesize_pp, PpAtom, PpFormula};
