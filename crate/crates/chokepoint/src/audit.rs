//! Empirical choke-point verification.
//!
//! Everything an algorithm knows when it starts committing final outputs is
//! its boundary state; everything it learns afterwards is its second-pass
//! read transcript. For a correct algorithm that pair must determine the
//! whole input — over a domain of `2^(n*d)` inputs the pair space cannot be
//! smaller, which forces `state_bits + transcript_bits >= n*d`. The audit
//! enumerates the full domain, counts distinct pairs, checks the bit
//! inequality, and can resume an algorithm from a recorded pair to
//! reconstruct the unique input behind it.

use crate::bits::Bits;
use crate::formulas;
use crate::model::{
    all_inputs, default_max_steps, execute, resume, split_passes, verify_output, Algorithm,
    InputInstance, ModelError, PassSplit, ReadFeed, StateSnapshot,
};
use num_bigint::BigInt;
use serde::Serialize;
use std::collections::BTreeSet;
use thiserror::Error;

pub use crate::adversary::ENUMERATION_BIT_CAP;

#[derive(Debug, Error)]
pub enum AuditError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Formula(#[from] formulas::FormulaError),
    #[error("enumeration of 2^{bits} inputs exceeds the 2^{cap} guard")]
    EnumerationTooLarge { bits: u64, cap: u64 },
    #[error("audit requires a correct algorithm, but {algorithm} is wrong on {input:?}")]
    AlgorithmIncorrect { algorithm: String, input: Vec<u64> },
    #[error("audit requires n >= 2, got {0}")]
    TooSmall(usize),
    #[error("transcript shorter than the resumed run demands: {0}")]
    ResumeMismatch(String),
    #[error("pair reconstruction needs an input-oblivious algorithm, {0} is not")]
    NotOblivious(String),
    #[error("transcript capacity {u_max} bits cannot hold {needed} bits of reads")]
    TranscriptTooShort { u_max: u64, needed: u64 },
}

/// A second-pass read transcript: the values read from the boundary on,
/// packed as `d`-bit fields and zero-padded to a common length.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Transcript {
    pub bits: Bits,
}

impl Transcript {
    /// Number of real (unpadded) `d`-bit fields is not recorded; padding is
    /// indistinguishable from zero reads by design.
    pub fn bit_len(&self) -> usize {
        self.bits.bit_len()
    }

    pub fn values(&self, d: u32) -> Vec<u64> {
        (0..self.bits.bit_len() / d as usize)
            .map(|i| self.bits.read_uint(i * d as usize, d) as u64)
            .collect()
    }
}

/// Encode a split's second-pass reads as a `u_max`-bit transcript.
pub fn transcript_of(split: &PassSplit, d: u32, u_max: u64) -> Result<Transcript, AuditError> {
    if u_max < split.second_pass_read_bits {
        return Err(AuditError::TranscriptTooShort {
            u_max,
            needed: split.second_pass_read_bits,
        });
    }
    Ok(encode_transcript(&split.second_pass_read_values, d, u_max))
}

fn encode_transcript(values: &[u64], d: u32, u_max: u64) -> Transcript {
    let mut bits = Bits::new();
    for v in values {
        bits.push_uint(*v as u128, d);
    }
    while (bits.bit_len() as u64) < u_max {
        bits.push_bit(false);
    }
    Transcript { bits }
}

/// The boundary snapshot of a split trace: the machine image recorded
/// immediately before the earliest final write.
pub fn boundary_snapshot<'t>(
    trace: &'t crate::model::ExecutionTrace,
    split: &PassSplit,
) -> &'t StateSnapshot {
    trace
        .snapshot_before(split.boundary_tick)
        .expect("a state is recorded before every write")
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct PairDump {
    pub input: Vec<u64>,
    pub state_hex: String,
    pub state_bits: u64,
    pub transcript_hex: String,
    pub transcript_bits: u64,
}

/// Result of enumerating all inputs of one shape through the choke point.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct AuditReport {
    pub algorithm: String,
    pub n: usize,
    pub d: u32,
    /// Largest boundary state observed, in bits (including a pending read).
    pub t_state_bits: u64,
    /// Largest second-pass read volume observed, in bits.
    pub u_max: u64,
    pub inputs: u64,
    pub distinct_pairs: u64,
    pub injective: bool,
    pub bit_inequality_holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<PairDump>>,
}

/// Run every input of shape `(n, d)`, capture (boundary state, transcript)
/// pairs, and report injectivity plus the bit inequality
/// `t_state_bits + u_max >= n*d`.
///
/// Refuses incorrect algorithms: the choke-point argument only constrains
/// machines that actually compute the map.
pub fn chokepoint_audit(
    alg: &dyn Algorithm,
    n: usize,
    d: u32,
    budget_t: u64,
    dump_pairs: bool,
) -> Result<AuditReport, AuditError> {
    if n < 2 {
        return Err(AuditError::TooSmall(n));
    }
    let bits = n as u64 * d as u64;
    if bits > ENUMERATION_BIT_CAP {
        return Err(AuditError::EnumerationTooLarge {
            bits,
            cap: ENUMERATION_BIT_CAP,
        });
    }
    let max_steps = default_max_steps(n);

    // First sweep: run everything, keep per-input boundary state and raw
    // second-pass values; the transcript width is only known at the end.
    let mut captured: Vec<(Vec<u64>, Bits, Vec<u64>)> = Vec::new();
    let mut t_state_bits = 0u64;
    let mut u_max = 0u64;
    for values in all_inputs(n, d) {
        let inst = InputInstance::new(d, values.clone())?;
        let trace = execute(alg, &inst, budget_t, max_steps)?;
        if !verify_output(&trace).is_correct() {
            return Err(AuditError::AlgorithmIncorrect {
                algorithm: alg.name(),
                input: values,
            });
        }
        let split = split_passes(&trace)?;
        let state = boundary_snapshot(&trace, &split).state_bits(d);
        t_state_bits = t_state_bits.max(state.bit_len() as u64);
        u_max = u_max.max(split.second_pass_read_bits);
        captured.push((values, state, split.second_pass_read_values));
    }

    // Second sweep: pad transcripts to the common width and count pairs.
    let mut pairs: BTreeSet<(Bits, Bits)> = BTreeSet::new();
    let mut dumps = Vec::new();
    for (values, state, second_values) in captured {
        let transcript = encode_transcript(&second_values, d, u_max);
        if dump_pairs {
            dumps.push(PairDump {
                input: values,
                state_hex: state.to_hex(),
                state_bits: state.bit_len() as u64,
                transcript_hex: transcript.bits.to_hex(),
                transcript_bits: transcript.bits.bit_len() as u64,
            });
        }
        pairs.insert((state, transcript.bits));
    }

    let inputs = 1u64 << bits;
    let distinct_pairs = pairs.len() as u64;
    Ok(AuditReport {
        algorithm: alg.name(),
        n,
        d,
        t_state_bits,
        u_max,
        inputs,
        distinct_pairs,
        injective: distinct_pairs == inputs,
        bit_inequality_holds: t_state_bits + u_max >= bits,
        pairs: dump_pairs.then_some(dumps),
    })
}

/// Recover the unique input behind a (boundary state, transcript) pair.
///
/// A reference run on the all-zero input locates the boundary and fixes the
/// state layout — sound because the algorithm's schedule is input-oblivious.
/// The machine is then resumed from the given state with reads served from
/// the transcript; the resumed suffix performs every cell's final write, and
/// inverting the defining map on that output yields the input.
pub fn reconstruct_from_pair(
    state_bits: &Bits,
    transcript: &Transcript,
    alg: &dyn Algorithm,
    n: usize,
    d: u32,
) -> Result<InputInstance, AuditError> {
    if n < 2 {
        return Err(AuditError::TooSmall(n));
    }
    if !alg.oblivious() {
        return Err(AuditError::NotOblivious(alg.name()));
    }
    let max_steps = default_max_steps(n);
    let budget = state_bits.bit_len().max(64) as u64 * 4;

    let reference = InputInstance::new(d, vec![0; n])?;
    let ref_trace = execute(alg, &reference, budget, max_steps)?;
    let ref_split = split_passes(&ref_trace)?;
    let shape = boundary_snapshot(&ref_trace, &ref_split);

    let counted_len = shape.counted.bit_len();
    let expected_len = counted_len
        + if shape.pending_read.is_some() {
            d as usize
        } else {
            0
        };
    if state_bits.bit_len() != expected_len {
        return Err(AuditError::ResumeMismatch(format!(
            "state has {} bits, the boundary layout holds {expected_len}",
            state_bits.bit_len()
        )));
    }
    let pending = shape
        .pending_read
        .is_some()
        .then(|| state_bits.read_uint(counted_len, d) as u64);
    let start = StateSnapshot {
        tick: shape.tick,
        control: shape.control,
        counted: state_bits.slice(0, counted_len),
        pending_read: pending,
    };

    let script = transcript.values(d);
    let tail = resume(
        alg,
        n,
        d,
        &start,
        ReadFeed::Script(&script),
        budget,
        max_steps,
    )
    .map_err(|e| match e {
        ModelError::FeedExhausted { tick } => {
            AuditError::ResumeMismatch(format!("transcript exhausted at tick {tick}"))
        }
        other => AuditError::Model(other),
    })?;

    let outputs: Vec<BigInt> = tail
        .outputs
        .iter()
        .enumerate()
        .map(|(cell, v)| v.clone().ok_or(ModelError::IncompleteOutput(cell)))
        .collect::<Result<_, _>>()?;
    let elements = formulas::reconstruct(&outputs, Some(d))?;
    let values: Vec<u64> = elements
        .iter()
        .map(|e| u64::try_from(e).expect("domain-checked element fits u64"))
        .collect();
    Ok(InputInstance::new(d, values)?)
}
