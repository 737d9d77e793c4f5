//! Falsification of algorithms whose earliest final write depends on too
//! few inputs.
//!
//! If the earliest final write to some cell `i` happens after at most
//! `n - 2` distinct positions were read, there is an unread position
//! `p != i`; changing `In[p]` cannot change anything the machine has seen,
//! so the write to `i` repeats verbatim while the correct value moves. The
//! search below constructs exactly that witness.

use crate::formulas::forward_map;
use crate::model::{
    all_inputs, default_max_steps, execute, split_passes, verify_output, Algorithm, ExecutionTrace,
    InputInstance, ModelError,
};
use num_bigint::BigInt;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

/// Exhaustive sweeps refuse shapes with more than `2^ENUMERATION_BIT_CAP`
/// inputs.
pub const ENUMERATION_BIT_CAP: u64 = 20;

#[derive(Debug, Error)]
pub enum AdversaryError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("enumeration of 2^{bits} inputs exceeds the 2^{cap} guard")]
    EnumerationTooLarge { bits: u64, cap: u64 },
    #[error("algorithm is incorrect on input {input:?} (cell {cell}: wrote {written:?}, expected {expected})")]
    AlgorithmIncorrect {
        input: Vec<u64>,
        cell: usize,
        written: Option<BigInt>,
        expected: BigInt,
    },
    #[error("falsification needs n >= 2, got {0}")]
    TooSmall(usize),
}

fn guard_enumeration(n: usize, d: u32) -> Result<(), AdversaryError> {
    let bits = n as u64 * d as u64;
    if bits > ENUMERATION_BIT_CAP {
        return Err(AdversaryError::EnumerationTooLarge {
            bits,
            cap: ENUMERATION_BIT_CAP,
        });
    }
    Ok(())
}

/// A replayable witness against an algorithm.
///
/// The two inputs differ only at `perturbed_index`, which the algorithm
/// never read before its earliest final write; the write to
/// `affected_output_index` carries `base_output_value` on both inputs, while
/// the correct value on the perturbed input is `true_value_on_perturbed`.
/// When the base run's final write is already wrong the witness is
/// degenerate: the perturbed input equals the base input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub base_input: InputInstance,
    pub perturbed_input: InputInstance,
    pub perturbed_index: usize,
    pub affected_output_index: usize,
    pub base_output_value: BigInt,
    pub true_value_on_perturbed: BigInt,
}

impl Counterexample {
    pub fn is_degenerate(&self) -> bool {
        self.base_input == self.perturbed_input
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "base_input": self.base_input.values().collect::<Vec<_>>(),
            "perturbed_input": self.perturbed_input.values().collect::<Vec<_>>(),
            "perturbed_index": self.perturbed_index,
            "affected_output_index": self.affected_output_index,
            "base_output_value": self.base_output_value.to_string(),
            "true_value_on_perturbed": self.true_value_on_perturbed.to_string(),
        })
    }
}

fn final_write_to(trace: &ExecutionTrace, cell: usize) -> Option<BigInt> {
    trace.outputs[cell].clone()
}

/// Hunt for a witness starting from one base input.
///
/// Runs the algorithm on `base` and splits the trace. If fewer than `n - 1`
/// distinct positions were read before the boundary, picks the smallest
/// unread position other than the boundary cell and tries every alternative
/// value there in ascending order, returning the first perturbation whose
/// final write to the boundary cell is unchanged while the correct value
/// changed. Returns `None` when the first pass already covers `n - 1`
/// positions.
pub fn find_counterexample(
    alg: &dyn Algorithm,
    base: &InputInstance,
    budget_t: u64,
) -> Result<Option<Counterexample>, AdversaryError> {
    let n = base.n();
    let d = base.d();
    if n < 2 {
        return Err(AdversaryError::TooSmall(n));
    }
    let max_steps = default_max_steps(n);
    let trace = execute(alg, base, budget_t, max_steps)?;
    let split = split_passes(&trace)?;
    if split.first_pass_distinct_reads() >= n as u64 - 1 {
        return Ok(None);
    }
    let cell = split.boundary_cell;
    let unread = (0..n)
        .find(|p| *p != cell && !split.first_pass_read_index_set.contains(p))
        .expect("at most n-2 positions read leaves an unread p != cell");

    let base_written = final_write_to(&trace, cell).expect("boundary cell was written");
    let truth_base = forward_map(base).values[cell].clone();
    if base_written != truth_base {
        // Already wrong as it stands; no perturbation needed.
        return Ok(Some(Counterexample {
            base_input: base.clone(),
            perturbed_input: base.clone(),
            perturbed_index: unread,
            affected_output_index: cell,
            base_output_value: base_written,
            true_value_on_perturbed: truth_base,
        }));
    }

    let limit = if d >= 64 { u64::MAX } else { (1u64 << d) - 1 };
    for value in 0..=limit {
        if value == base.value(unread) {
            continue;
        }
        let perturbed = base.with_value(unread, value)?;
        let perturbed_trace = execute(alg, &perturbed, budget_t, max_steps)?;
        let perturbed_written = final_write_to(&perturbed_trace, cell);
        let truth_perturbed = forward_map(&perturbed).values[cell].clone();
        if perturbed_written.as_ref() == Some(&base_written) && truth_perturbed != truth_base {
            return Ok(Some(Counterexample {
                base_input: base.clone(),
                perturbed_input: perturbed,
                perturbed_index: unread,
                affected_output_index: cell,
                base_output_value: base_written,
                true_value_on_perturbed: truth_perturbed,
            }));
        }
    }
    Ok(None)
}

/// Sweep base inputs in lexicographic order and return the first witness.
pub fn find_counterexample_exhaustive(
    alg: &dyn Algorithm,
    n: usize,
    d: u32,
    budget_t: u64,
) -> Result<Option<Counterexample>, AdversaryError> {
    guard_enumeration(n, d)?;
    if n < 2 {
        return Err(AdversaryError::TooSmall(n));
    }
    for values in all_inputs(n, d) {
        let base = InputInstance::new(d, values)?;
        if let Some(found) = find_counterexample(alg, &base, budget_t)? {
            return Ok(Some(found));
        }
    }
    Ok(None)
}

/// Re-run both sides of a witness and confirm everything it claims.
pub fn replay_counterexample(
    alg: &dyn Algorithm,
    witness: &Counterexample,
    budget_t: u64,
) -> Result<bool, AdversaryError> {
    let n = witness.base_input.n();
    let max_steps = default_max_steps(n);
    let base_trace = execute(alg, &witness.base_input, budget_t, max_steps)?;
    let cell = witness.affected_output_index;
    let base_written = final_write_to(&base_trace, cell);
    if base_written.as_ref() != Some(&witness.base_output_value) {
        return Ok(false);
    }
    if witness.is_degenerate() {
        let truth = forward_map(&witness.base_input).values[cell].clone();
        return Ok(truth == witness.true_value_on_perturbed && truth != witness.base_output_value);
    }
    // differ exactly at the perturbed index
    let differing: Vec<usize> = (0..n)
        .filter(|i| witness.base_input.value(*i) != witness.perturbed_input.value(*i))
        .collect();
    if differing != vec![witness.perturbed_index] || witness.perturbed_index == cell {
        return Ok(false);
    }
    let perturbed_trace = execute(alg, &witness.perturbed_input, budget_t, max_steps)?;
    let perturbed_written = final_write_to(&perturbed_trace, cell);
    let truth_base = forward_map(&witness.base_input).values[cell].clone();
    let truth_perturbed = forward_map(&witness.perturbed_input).values[cell].clone();
    Ok(perturbed_written == base_written
        && truth_perturbed == witness.true_value_on_perturbed
        && truth_perturbed != truth_base)
}

/// Outcome of exhaustively checking first-pass reads for one shape.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct FirstPassBoundReport {
    pub algorithm: String,
    pub n: usize,
    pub d: u32,
    pub inputs_checked: u64,
    pub min_first_pass_distinct_reads: u64,
    pub min_first_pass_read_ops: u64,
    pub bound: u64,
    pub bound_respected: bool,
}

/// Verify the algorithm is correct on every input of shape `(n, d)` and
/// that its first pass always covers at least `n - 1` distinct positions.
/// Reports the minima observed over all inputs.
pub fn verify_first_pass_bound(
    alg: &dyn Algorithm,
    n: usize,
    d: u32,
    budget_t: u64,
) -> Result<FirstPassBoundReport, AdversaryError> {
    guard_enumeration(n, d)?;
    let max_steps = default_max_steps(n);
    let mut inputs_checked = 0u64;
    let mut min_distinct = u64::MAX;
    let mut min_ops = u64::MAX;
    for values in all_inputs(n, d) {
        let inst = InputInstance::new(d, values.clone())?;
        let trace = execute(alg, &inst, budget_t, max_steps)?;
        let verdict = verify_output(&trace);
        if let Some(miss) = verdict.mismatches.first() {
            return Err(AdversaryError::AlgorithmIncorrect {
                input: values,
                cell: miss.cell,
                written: miss.written.clone(),
                expected: miss.expected.clone(),
            });
        }
        let split = split_passes(&trace)?;
        min_distinct = min_distinct.min(split.first_pass_distinct_reads());
        min_ops = min_ops.min(split.first_pass_reads);
        inputs_checked += 1;
    }
    let bound = n as u64 - 1;
    Ok(FirstPassBoundReport {
        algorithm: alg.name(),
        n,
        d,
        inputs_checked,
        min_first_pass_distinct_reads: min_distinct,
        min_first_pass_read_ops: min_ops,
        bound,
        bound_respected: min_distinct >= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{FirstPassMinimal, GreedyCheat, Optimized, Standard};
    use crate::model::instance;

    const BUDGET: u64 = 512;

    #[test]
    fn cheat_on_zeros_yields_the_least_witness() {
        let witness = find_counterexample(&GreedyCheat::new(1), &instance(1, &[0, 0, 0]), BUDGET)
            .unwrap()
            .unwrap();
        assert_eq!(witness.perturbed_index, 2);
        assert_eq!(
            witness.perturbed_input.values().collect::<Vec<_>>(),
            vec![0, 0, 1]
        );
        assert_eq!(witness.affected_output_index, 0);
        assert_eq!(witness.base_output_value, BigInt::from(0));
        assert_eq!(witness.true_value_on_perturbed, BigInt::from(1));
        assert!(!witness.is_degenerate());
        assert!(replay_counterexample(&GreedyCheat::new(1), &witness, BUDGET).unwrap());
    }

    #[test]
    fn already_wrong_base_runs_yield_degenerate_witnesses() {
        let witness = find_counterexample(&GreedyCheat::new(1), &instance(1, &[0, 0, 1]), BUDGET)
            .unwrap()
            .unwrap();
        assert!(witness.is_degenerate());
        assert_eq!(witness.base_output_value, BigInt::from(0));
        assert_eq!(witness.true_value_on_perturbed, BigInt::from(1));
        assert!(replay_counterexample(&GreedyCheat::new(1), &witness, BUDGET).unwrap());
    }

    #[test]
    fn correct_algorithms_admit_no_witness() {
        for alg in crate::algorithms::correct_algorithms() {
            for n in 2..=4usize {
                for d in 1..=2u32 {
                    let found = find_counterexample_exhaustive(alg.as_ref(), n, d, BUDGET).unwrap();
                    assert!(found.is_none(), "{} at ({n},{d})", alg.name());
                }
            }
        }
    }

    #[test]
    fn first_pass_minimal_reads_exactly_the_bound() {
        let report = verify_first_pass_bound(&FirstPassMinimal, 4, 1, BUDGET).unwrap();
        assert_eq!(report.min_first_pass_distinct_reads, 3);
        assert_eq!(report.bound, 3);
        assert!(report.bound_respected);
    }

    #[test]
    fn standard_overshoots_the_bound() {
        let report = verify_first_pass_bound(&Standard, 3, 1, BUDGET).unwrap();
        assert_eq!(report.min_first_pass_distinct_reads, 3);
        assert_eq!(report.inputs_checked, 8);
        assert!(report.bound_respected);
    }

    #[test]
    fn two_element_shapes_still_need_a_read() {
        for alg in [&Standard as &dyn Algorithm, &Optimized, &FirstPassMinimal] {
            let report = verify_first_pass_bound(alg, 2, 1, BUDGET).unwrap();
            assert!(report.min_first_pass_distinct_reads >= 1);
        }
    }

    #[test]
    fn incorrect_algorithms_fail_the_precondition() {
        let err = verify_first_pass_bound(&GreedyCheat::new(0), 2, 1, BUDGET).unwrap_err();
        assert!(matches!(err, AdversaryError::AlgorithmIncorrect { .. }));
    }

    #[test]
    fn enumeration_guard_fires() {
        let err = verify_first_pass_bound(&Standard, 11, 2, BUDGET).unwrap_err();
        assert!(matches!(
            err,
            AdversaryError::EnumerationTooLarge { bits: 22, cap: 20 }
        ));
    }

    #[test]
    fn witness_json_mirrors_the_fields() {
        let witness = find_counterexample_exhaustive(&GreedyCheat::new(1), 3, 1, BUDGET)
            .unwrap()
            .unwrap();
        let value = witness.to_json();
        for key in [
            "base_input",
            "perturbed_input",
            "perturbed_index",
            "affected_output_index",
            "base_output_value",
            "true_value_on_perturbed",
        ] {
            assert!(value.get(key).is_some(), "missing {key}");
        }
    }
}
