//! The computation model: a read-only input tape, a write-only output tape,
//! and a bit-budgeted working state, with every run producing a full trace.
//!
//! An algorithm is a state machine whose only carrier of information between
//! tape operations is its serialized counted state. The harness holds nothing
//! else across operations: after each action it keeps only the control
//! register (input-independent by contract), the counted bits, and — between
//! a read and the next operation — the value just read, which is charged `d`
//! bits. The next step rebuilds the machine from exactly those pieces, so
//! the declared budget cannot be circumvented by hidden live state.

use crate::bits::Bits;
use crate::formulas;
use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("value {value} does not fit in {width} bits")]
    WordOutOfRange { value: u64, width: u32 },
    #[error("element width must be between 1 and 64 bits, got {0}")]
    BadWidth(u32),
    #[error("an instance must contain at least one element")]
    EmptyInstance,
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("counted state of {bits} bits exceeds budget {budget} at tick {tick}")]
    BudgetExceeded { tick: u64, bits: u64, budget: u64 },
    #[error("step limit {max_steps} exceeded")]
    StepLimitExceeded { max_steps: u64 },
    #[error("invalid action at tick {tick}: {reason}")]
    InvalidAction { tick: u64, reason: String },
    #[error("output cell {0} was never written")]
    IncompleteOutput(usize),
    #[error("read feed exhausted at tick {tick}")]
    FeedExhausted { tick: u64 },
    #[error("algorithm does not support this instance: {0}")]
    Unsupported(String),
}

/// Default action cap for a run: generous room for two passes over the
/// input plus one write per cell.
pub fn default_max_steps(n: usize) -> u64 {
    8 * n as u64 + 8
}

/// One unsigned value together with its declared bit width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Word {
    value: u64,
    width: u32,
}

impl Word {
    pub fn new(value: u64, width: u32) -> Result<Self, ModelError> {
        if width == 0 || width > 64 {
            return Err(ModelError::BadWidth(width));
        }
        if width < 64 && value >> width != 0 {
            return Err(ModelError::WordOutOfRange { value, width });
        }
        Ok(Word { value, width })
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn width(&self) -> u32 {
        self.width
    }
}

/// A problem input: `n` elements drawn from `[0, 2^d - 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputInstance {
    d: u32,
    elements: Vec<Word>,
}

impl InputInstance {
    pub fn new(d: u32, values: impl IntoIterator<Item = u64>) -> Result<Self, ModelError> {
        let elements = values
            .into_iter()
            .map(|v| Word::new(v, d))
            .collect::<Result<Vec<_>, _>>()?;
        if elements.is_empty() {
            return Err(ModelError::EmptyInstance);
        }
        Ok(InputInstance { d, elements })
    }

    pub fn n(&self) -> usize {
        self.elements.len()
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn value(&self, index: usize) -> u64 {
        self.elements[index].value()
    }

    pub fn values(&self) -> impl Iterator<Item = u64> + '_ {
        self.elements.iter().map(Word::value)
    }

    pub fn elements(&self) -> &[Word] {
        &self.elements
    }

    /// Copy of this instance with one element replaced.
    pub fn with_value(&self, index: usize, value: u64) -> Result<Self, ModelError> {
        let mut values: Vec<u64> = self.values().collect();
        values[index] = value;
        InputInstance::new(self.d, values)
    }
}

/// Test/CLI convenience: build an instance or panic on invalid data.
pub fn instance(d: u32, values: &[u64]) -> InputInstance {
    InputInstance::new(d, values.iter().copied()).expect("valid instance literal")
}

/// Enumerate every instance value vector of shape `(n, d)` in
/// lexicographic order (index 0 most significant).
pub fn all_inputs(n: usize, d: u32) -> impl Iterator<Item = Vec<u64>> {
    assert!(
        (1..32).contains(&d),
        "exhaustive enumeration needs a small width"
    );
    let per = 1u64 << d;
    let mut current = Some(vec![0u64; n]);
    std::iter::from_fn(move || {
        let out = current.clone()?;
        let mut next = out.clone();
        let mut i = n;
        loop {
            if i == 0 {
                current = None;
                break;
            }
            i -= 1;
            next[i] += 1;
            if next[i] < per {
                current = Some(next);
                break;
            }
            next[i] = 0;
        }
        Some(out)
    })
}

/// An output vector over the unbounded integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputVector {
    pub values: Vec<BigInt>,
}

/// Control register: the input-independent part of a machine state.
///
/// For an oblivious algorithm this holds the program phase and schedule
/// position and is exempt from the bit budget; algorithms whose control
/// depends on input values must declare themselves non-oblivious and keep
/// everything that varies inside the counted bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Control {
    pub phase: u32,
    pub pos: u64,
}

impl Control {
    pub fn new(phase: u32, pos: u64) -> Self {
        Control { phase, pos }
    }
}

/// Machine state between tape operations: uncounted control plus the
/// serialized counted state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineState {
    pub control: Control,
    pub counted: Bits,
}

impl MachineState {
    pub fn new(control: Control, counted: Bits) -> Self {
        MachineState { control, counted }
    }
}

/// One tape-facing action. There is deliberately no action that returns
/// output-tape contents: the output tape is write-only by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Read(usize),
    Write(usize, BigInt),
    Mark(&'static str),
    Halt,
}

/// Result of one transition.
#[derive(Debug, Clone)]
pub struct Step {
    pub action: Action,
    pub state: MachineState,
}

impl Step {
    pub fn new(action: Action, state: MachineState) -> Self {
        Step { action, state }
    }
}

/// A deterministic algorithm against the tape model.
///
/// `step` consumes the rebuilt machine state and the value delivered by the
/// previous read (if the previous action was a read), and yields the next
/// action together with the state to carry across it.
pub trait Algorithm: Send + Sync {
    fn name(&self) -> String;

    /// Whether the control register evolves independently of input values.
    fn oblivious(&self) -> bool {
        true
    }

    /// Whether this algorithm is expected to produce correct outputs.
    fn declared_correct(&self) -> bool {
        true
    }

    fn validate(&self, n: usize, d: u32) -> Result<(), ModelError> {
        let _ = (n, d);
        Ok(())
    }

    fn init(&self, n: usize, d: u32) -> MachineState;

    fn step(
        &self,
        n: usize,
        d: u32,
        state: MachineState,
        last_read: Option<u64>,
    ) -> Result<Step, ModelError>;
}

/// Event kinds recorded in a trace. Reads carry the index and the value
/// obtained; writes carry the index and the value stored; `StateSize` records
/// the counted bits held between two tape operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEventKind {
    ReadInput { index: usize, value: u64 },
    WriteOutput { index: usize, value: BigInt },
    PhaseMark { label: String },
    StateSize { bits: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub tick: u64,
    pub kind: TraceEventKind,
}

/// Resumable image of the machine between two tape operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSnapshot {
    pub tick: u64,
    pub control: Control,
    pub counted: Bits,
    pub pending_read: Option<u64>,
}

impl StateSnapshot {
    /// Counted size in bits, including the `d` bits of a read value held for
    /// a pending operation: that value is input-derived information carried
    /// between a read and the next action.
    pub fn measured_bits(&self, d: u32) -> u64 {
        self.counted.bit_len() as u64
            + if self.pending_read.is_some() {
                d as u64
            } else {
                0
            }
    }

    /// The full input-derived state as one bit string: counted bits followed
    /// by the pending read value as a `d`-bit field.
    pub fn state_bits(&self, d: u32) -> Bits {
        let mut bits = self.counted.clone();
        if let Some(v) = self.pending_read {
            bits.push_uint(v as u128, d);
        }
        bits
    }
}

/// Exact bit length of a serialized state.
pub fn measure_state_bits(state: &Bits) -> u64 {
    state.bit_len() as u64
}

/// Complete record of one run.
#[derive(Debug, Clone)]
pub struct ExecutionTrace {
    pub instance: InputInstance,
    pub declared_budget_t: u64,
    pub events: Vec<TraceEvent>,
    pub outputs: Vec<Option<BigInt>>,
    pub snapshots: Vec<StateSnapshot>,
    pub max_counted_state_bits: u64,
}

impl ExecutionTrace {
    pub fn n(&self) -> usize {
        self.instance.n()
    }

    pub fn d(&self) -> u32 {
        self.instance.d()
    }

    pub fn read_count(&self) -> u64 {
        self.events
            .iter()
            .filter(|e| matches!(e.kind, TraceEventKind::ReadInput { .. }))
            .count() as u64
    }

    /// The completed output vector, if every cell was written.
    pub fn final_output(&self) -> Option<OutputVector> {
        let values = self.outputs.iter().cloned().collect::<Option<Vec<_>>>()?;
        Some(OutputVector { values })
    }

    /// Last snapshot recorded strictly before `tick`.
    pub fn snapshot_before(&self, tick: u64) -> Option<&StateSnapshot> {
        self.snapshots.iter().rev().find(|s| s.tick < tick)
    }

    /// Counted state size held right after the first mark with this label.
    pub fn state_bits_at_mark(&self, label: &str) -> Option<u64> {
        let mark_tick = self.events.iter().find_map(|e| match &e.kind {
            TraceEventKind::PhaseMark { label: l } if l == label => Some(e.tick),
            _ => None,
        })?;
        self.snapshots
            .iter()
            .find(|s| s.tick > mark_tick)
            .map(|s| s.measured_bits(self.d()))
    }

    /// Tape-operation schedule with values erased: what an input-oblivious
    /// algorithm must keep identical across all inputs of one shape.
    pub fn schedule_signature(&self) -> Vec<ScheduleOp> {
        self.events
            .iter()
            .filter_map(|e| match &e.kind {
                TraceEventKind::ReadInput { index, .. } => Some(ScheduleOp::Read(*index)),
                TraceEventKind::WriteOutput { index, .. } => Some(ScheduleOp::Write(*index)),
                TraceEventKind::PhaseMark { .. } => Some(ScheduleOp::Mark),
                TraceEventKind::StateSize { .. } => None,
            })
            .collect()
    }

    pub fn to_json(&self) -> TraceJson {
        TraceJson::from_trace(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleOp {
    Read(usize),
    Write(usize),
    Mark,
}

/// Where resumed reads come from: the instance tape itself, or a scripted
/// sequence of values (a recorded transcript).
pub enum ReadFeed<'a> {
    Instance(&'a InputInstance),
    Script(&'a [u64]),
}

/// Suffix of a run produced by [`resume`]. Ticks continue from the snapshot,
/// so a resumed suffix can be compared event-for-event against the original.
#[derive(Debug, Clone)]
pub struct ResumeRun {
    pub events: Vec<TraceEvent>,
    pub snapshots: Vec<StateSnapshot>,
    pub outputs: Vec<Option<BigInt>>,
    pub reads_consumed: usize,
    pub max_counted_state_bits: u64,
}

struct Driver<'a> {
    alg: &'a dyn Algorithm,
    n: usize,
    d: u32,
    feed: ReadFeed<'a>,
    budget_t: u64,
    max_steps: u64,
    tick: u64,
    events: Vec<TraceEvent>,
    snapshots: Vec<StateSnapshot>,
    outputs: Vec<Option<BigInt>>,
    reads_consumed: usize,
    max_bits: u64,
}

impl<'a> Driver<'a> {
    fn record(&mut self, state: &MachineState, pending: Option<u64>) -> Result<(), ModelError> {
        let snapshot = StateSnapshot {
            tick: self.tick,
            control: state.control,
            counted: state.counted.clone(),
            pending_read: pending,
        };
        let bits = snapshot.measured_bits(self.d);
        self.events.push(TraceEvent {
            tick: self.tick,
            kind: TraceEventKind::StateSize { bits },
        });
        self.snapshots.push(snapshot);
        self.max_bits = self.max_bits.max(bits);
        if bits > self.budget_t {
            return Err(ModelError::BudgetExceeded {
                tick: self.tick,
                bits,
                budget: self.budget_t,
            });
        }
        self.tick += 1;
        Ok(())
    }

    fn run(&mut self, mut state: MachineState, mut pending: Option<u64>) -> Result<(), ModelError> {
        let mut actions: u64 = 0;
        loop {
            if actions >= self.max_steps {
                return Err(ModelError::StepLimitExceeded {
                    max_steps: self.max_steps,
                });
            }
            // Destroy and rebuild: the algorithm only ever receives the
            // serialized counted bits plus the control register.
            let rebuilt = MachineState::new(state.control, state.counted.clone());
            let step = self.alg.step(self.n, self.d, rebuilt, pending.take())?;
            state = step.state;
            actions += 1;
            match step.action {
                Action::Read(index) => {
                    if index >= self.n {
                        return Err(ModelError::InvalidAction {
                            tick: self.tick,
                            reason: format!("read index {index} out of range 0..{}", self.n),
                        });
                    }
                    let value = match self.feed {
                        ReadFeed::Instance(inst) => inst.value(index),
                        ReadFeed::Script(values) => match values.get(self.reads_consumed) {
                            Some(v) => *v,
                            None => return Err(ModelError::FeedExhausted { tick: self.tick }),
                        },
                    };
                    self.reads_consumed += 1;
                    self.events.push(TraceEvent {
                        tick: self.tick,
                        kind: TraceEventKind::ReadInput { index, value },
                    });
                    pending = Some(value);
                    self.tick += 1;
                }
                Action::Write(index, value) => {
                    if index >= self.n {
                        return Err(ModelError::InvalidAction {
                            tick: self.tick,
                            reason: format!("write index {index} out of range 0..{}", self.n),
                        });
                    }
                    self.events.push(TraceEvent {
                        tick: self.tick,
                        kind: TraceEventKind::WriteOutput {
                            index,
                            value: value.clone(),
                        },
                    });
                    self.outputs[index] = Some(value);
                    self.tick += 1;
                }
                Action::Mark(label) => {
                    self.events.push(TraceEvent {
                        tick: self.tick,
                        kind: TraceEventKind::PhaseMark {
                            label: label.to_string(),
                        },
                    });
                    self.tick += 1;
                }
                Action::Halt => return Ok(()),
            }
            self.record(&state, pending)?;
        }
    }
}

/// Run an algorithm on an instance under a bit budget and an action cap.
///
/// Between every pair of tape operations the counted state is serialized,
/// measured, recorded, and rebuilt; a measurement above `budget_t` aborts the
/// run. Execution ends at the algorithm's halt action or fails once
/// `max_steps` actions have been taken.
pub fn execute(
    alg: &dyn Algorithm,
    instance: &InputInstance,
    budget_t: u64,
    max_steps: u64,
) -> Result<ExecutionTrace, ModelError> {
    if budget_t == 0 {
        return Err(ModelError::BadParameter(
            "budget_t must be at least 1".into(),
        ));
    }
    if max_steps == 0 {
        return Err(ModelError::BadParameter(
            "max_steps must be at least 1".into(),
        ));
    }
    let n = instance.n();
    let d = instance.d();
    alg.validate(n, d)?;
    let state = alg.init(n, d);
    let mut driver = Driver {
        alg,
        n,
        d,
        feed: ReadFeed::Instance(instance),
        budget_t,
        max_steps,
        tick: 0,
        events: Vec::new(),
        snapshots: Vec::new(),
        outputs: vec![None; n],
        reads_consumed: 0,
        max_bits: 0,
    };
    driver.record(&state, None)?;
    driver.run(state, None)?;
    Ok(ExecutionTrace {
        instance: instance.clone(),
        declared_budget_t: budget_t,
        events: driver.events,
        outputs: driver.outputs,
        snapshots: driver.snapshots,
        max_counted_state_bits: driver.max_bits,
    })
}

/// Continue a run from a recorded between-operations snapshot.
///
/// Reads are served from `feed`; for a scripted feed the requested index is
/// ignored and values are consumed in order. Ticks continue from the
/// snapshot, so the produced events line up with the original suffix.
pub fn resume(
    alg: &dyn Algorithm,
    n: usize,
    d: u32,
    snapshot: &StateSnapshot,
    feed: ReadFeed<'_>,
    budget_t: u64,
    max_steps: u64,
) -> Result<ResumeRun, ModelError> {
    let state = MachineState::new(snapshot.control, snapshot.counted.clone());
    let mut driver = Driver {
        alg,
        n,
        d,
        feed,
        budget_t,
        max_steps,
        tick: snapshot.tick + 1,
        events: Vec::new(),
        snapshots: Vec::new(),
        outputs: vec![None; n],
        reads_consumed: 0,
        max_bits: 0,
    };
    driver.run(state, snapshot.pending_read)?;
    Ok(ResumeRun {
        events: driver.events,
        snapshots: driver.snapshots,
        outputs: driver.outputs,
        reads_consumed: driver.reads_consumed,
        max_counted_state_bits: driver.max_bits,
    })
}

/// A trace partitioned at the earliest final write.
///
/// The final write to a cell is the last write it receives; the boundary is
/// the earliest of those over all cells. Everything before it is the first
/// pass, everything from it on is the second pass. Read operations and
/// distinct read positions are both reported, since different checks count
/// differently.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PassSplit {
    pub boundary_tick: u64,
    pub boundary_cell: usize,
    pub first_pass_reads: u64,
    pub second_pass_reads: u64,
    pub second_pass_read_bits: u64,
    pub boundary_state_bits: u64,
    pub first_pass_read_index_set: BTreeSet<usize>,
    pub second_pass_read_values: Vec<u64>,
}

impl PassSplit {
    pub fn first_pass_distinct_reads(&self) -> u64 {
        self.first_pass_read_index_set.len() as u64
    }
}

/// Split a complete trace into its two passes.
pub fn split_passes(trace: &ExecutionTrace) -> Result<PassSplit, ModelError> {
    let n = trace.n();
    let mut last_write: Vec<Option<(u64, usize)>> = vec![None; n];
    for event in &trace.events {
        if let TraceEventKind::WriteOutput { index, .. } = &event.kind {
            last_write[*index] = Some((event.tick, *index));
        }
    }
    let mut boundary: Option<(u64, usize)> = None;
    for (cell, lw) in last_write.iter().enumerate() {
        match lw {
            None => return Err(ModelError::IncompleteOutput(cell)),
            Some(entry) => {
                if boundary.is_none_or(|b| entry.0 < b.0) {
                    boundary = Some(*entry);
                }
            }
        }
    }
    let (boundary_tick, boundary_cell) = boundary.expect("n >= 1 so some cell exists");

    let mut first_pass_reads = 0u64;
    let mut second_pass_reads = 0u64;
    let mut first_set = BTreeSet::new();
    let mut second_values = Vec::new();
    for event in &trace.events {
        if let TraceEventKind::ReadInput { index, value } = &event.kind {
            if event.tick < boundary_tick {
                first_pass_reads += 1;
                first_set.insert(*index);
            } else {
                second_pass_reads += 1;
                second_values.push(*value);
            }
        }
    }
    let boundary_state_bits = trace
        .snapshot_before(boundary_tick)
        .map(|s| s.measured_bits(trace.d()))
        .unwrap_or(0);
    Ok(PassSplit {
        boundary_tick,
        boundary_cell,
        first_pass_reads,
        second_pass_reads,
        second_pass_read_bits: trace.d() as u64 * second_pass_reads,
        boundary_state_bits,
        first_pass_read_index_set: first_set,
        second_pass_read_values: second_values,
    })
}

/// One wrong or missing output cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub cell: usize,
    pub written: Option<BigInt>,
    pub expected: BigInt,
}

/// Outcome of comparing a trace's final output against the defining map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrectnessVerdict {
    pub mismatches: Vec<Mismatch>,
}

impl CorrectnessVerdict {
    pub fn is_correct(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Compare a trace's final output cell-by-cell against the defining map.
/// A mismatch is a verdict, not an error; unwritten cells mismatch.
pub fn verify_output(trace: &ExecutionTrace) -> CorrectnessVerdict {
    let expected = formulas::forward_map(&trace.instance);
    let mismatches = expected
        .values
        .iter()
        .enumerate()
        .filter_map(|(cell, want)| {
            let written = trace.outputs[cell].clone();
            if written.as_ref() == Some(want) {
                None
            } else {
                Some(Mismatch {
                    cell,
                    written,
                    expected: want.clone(),
                })
            }
        })
        .collect();
    CorrectnessVerdict { mismatches }
}

// ---------------------------------------------------------------------------
// JSON export
// ---------------------------------------------------------------------------

/// Wire form of a trace. `value` is a decimal string for reads, writes and
/// state sizes, and the label text for phase marks; `output` entries are
/// decimal strings with `null` for never-written cells.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceJson {
    pub n: usize,
    pub d: u32,
    pub t: u64,
    pub events: Vec<TraceEventJson>,
    pub output: Vec<Option<String>>,
    pub max_state_bits: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEventJson {
    pub tick: u64,
    pub kind: String,
    pub index: Option<usize>,
    pub value: Option<String>,
}

impl TraceJson {
    pub fn from_trace(trace: &ExecutionTrace) -> Self {
        let events = trace
            .events
            .iter()
            .map(|e| {
                let (kind, index, value) = match &e.kind {
                    TraceEventKind::ReadInput { index, value } => {
                        ("read_input", Some(*index), Some(value.to_string()))
                    }
                    TraceEventKind::WriteOutput { index, value } => {
                        ("write_output", Some(*index), Some(value.to_string()))
                    }
                    TraceEventKind::PhaseMark { label } => {
                        ("phase_mark", None, Some(label.clone()))
                    }
                    TraceEventKind::StateSize { bits } => {
                        ("state_size", None, Some(bits.to_string()))
                    }
                };
                TraceEventJson {
                    tick: e.tick,
                    kind: kind.to_string(),
                    index,
                    value,
                }
            })
            .collect();
        TraceJson {
            n: trace.n(),
            d: trace.d(),
            t: trace.declared_budget_t,
            events,
            output: trace
                .outputs
                .iter()
                .map(|c| c.as_ref().map(|v| v.to_string()))
                .collect(),
            max_state_bits: trace.max_counted_state_bits,
        }
    }
}
