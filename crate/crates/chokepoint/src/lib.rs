//! An executable laboratory for space-bounded sum-exclude-self computation.
//!
//! Given an array of `n` unsigned `d`-bit integers, the task is to produce,
//! for every index, the sum of all other elements — under a read-only input
//! tape, a write-only output tape, and at most `t` bits of working state
//! between tape operations. The crate provides:
//!
//! * [`model`] — the instrumented execution harness: budget-enforced runs,
//!   full traces, and the first/second pass split at the earliest final
//!   write;
//! * [`algorithms`] — reference algorithms (plain two-pass, counter
//!   optimized, first-pass minimal) and a deliberately broken one;
//! * [`formulas`] — the defining map, its explicit inverse, and the
//!   closed-form read/space bounds;
//! * [`adversary`] — perturbation counterexamples against algorithms whose
//!   earliest final write saw too little of the input;
//! * [`audit`] — choke-point accounting: injectivity of (boundary state,
//!   second-pass transcript) pairs over the full input domain;
//! * [`search`] — exhaustive enumeration of small-memory protocols and the
//!   true minimum read counts at tiny shapes;
//! * [`bits`] / [`rng`] — bit-exact state serialization and a reproducible
//!   instance generator.

pub mod adversary;
pub mod algorithms;
pub mod audit;
pub mod bits;
pub mod formulas;
pub mod model;
pub mod rng;
pub mod search;
