//! Bounded exhaustive search over deterministic small-memory protocols.
//!
//! A protocol here is a straight-line program with an input-oblivious
//! program counter and a `t`-bit data register — the register is the only
//! state that may depend on input values, mirroring the execution model's
//! counted/control split. Instructions:
//!
//! * `Read(i)` — read `In[i]` into the register (reduced mod `2^t`);
//! * `WriteConst(i, c)` — write the constant `c` to `Out[i]`,
//!   with `c` in `[0, n*(2^d - 1)]`, the output domain padded to a round
//!   table;
//! * `WriteReg(i)` — write the register to `Out[i]`;
//! * `Jump(l)` — continue at line `l` (targets are fixed, so control stays
//!   oblivious; backward jumps only build non-halting loops);
//! * `Halt` — stop (running off the end also stops).
//!
//! Programs have a fixed line count of `2n + 2`, enough for a full
//! read/write interleaving over the input plus slack, and every distinct
//! program is enumerated exactly once in lexicographic order. The searched
//! class is a finite surrogate for "any deterministic algorithm with `t`
//! bits of working memory": minima reported here are exact for the class
//! and upper-bound witnesses for the model at large.

use crate::bits::Bits;
use crate::formulas;
use crate::model::{default_max_steps, Action, Algorithm, Control, MachineState, ModelError, Step};
use num_bigint::BigInt;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("search space of {estimated} protocols exceeds the cap of {cap}")]
    SearchSpaceTooLarge { estimated: u128, cap: u64 },
    #[error("search requires 1 <= d < 32 and n >= 1, got n={n}, d={d}")]
    BadShape { n: usize, d: u32 },
    #[error("register width must be between 1 and 63 bits, got {0}")]
    BadRegisterWidth(u32),
}

/// Limits for one search.
#[derive(Debug, Clone)]
pub struct SearchCaps {
    pub max_protocols: u64,
    pub max_steps: Option<u64>,
}

impl Default for SearchCaps {
    fn default() -> Self {
        SearchCaps {
            max_protocols: 100_000_000,
            max_steps: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Instr {
    Halt,
    Read { index: usize },
    WriteConst { index: usize, value: u64 },
    WriteReg { index: usize },
    Jump { line: usize },
}

/// One deterministic protocol: a fixed-length program over a `t`-bit
/// register.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Protocol {
    pub t: u32,
    pub lines: Vec<Instr>,
}

/// The enumerable program space for one `(n, d, t)` shape.
#[derive(Debug, Clone)]
pub struct ProtocolSpace {
    pub n: usize,
    pub d: u32,
    pub t: u32,
    pub lines: usize,
    /// Largest enumerated write constant: `n * (2^d - 1)`.
    pub max_write_value: u64,
}

pub fn default_program_length(n: usize) -> usize {
    2 * n + 2
}

impl ProtocolSpace {
    pub fn new(n: usize, d: u32, t: u32) -> Result<Self, SearchError> {
        Self::with_lines(n, d, t, default_program_length(n))
    }

    pub fn with_lines(n: usize, d: u32, t: u32, lines: usize) -> Result<Self, SearchError> {
        if n == 0 || d == 0 || d >= 32 {
            return Err(SearchError::BadShape { n, d });
        }
        if t == 0 || t > 63 {
            return Err(SearchError::BadRegisterWidth(t));
        }
        Ok(ProtocolSpace {
            n,
            d,
            t,
            lines,
            max_write_value: n as u64 * ((1u64 << d) - 1),
        })
    }

    /// Distinct actions one line can hold: halt, reads, constant writes,
    /// register writes, jumps.
    pub fn actions_per_line(&self) -> u64 {
        1 + self.n as u64
            + self.n as u64 * (self.max_write_value + 1)
            + self.n as u64
            + self.lines as u64
    }

    /// Closed-form size of the space: the per-line action count raised to
    /// the number of lines.
    pub fn total_protocols(&self) -> u128 {
        (self.actions_per_line() as u128)
            .checked_pow(self.lines as u32)
            .unwrap_or(u128::MAX)
    }

    fn decode_action(&self, code: u64) -> Instr {
        let n = self.n as u64;
        let consts = self.max_write_value + 1;
        let mut code = code;
        if code == 0 {
            return Instr::Halt;
        }
        code -= 1;
        if code < n {
            return Instr::Read {
                index: code as usize,
            };
        }
        code -= n;
        if code < n * consts {
            return Instr::WriteConst {
                index: (code / consts) as usize,
                value: code % consts,
            };
        }
        code -= n * consts;
        if code < n {
            return Instr::WriteReg {
                index: code as usize,
            };
        }
        code -= n;
        Instr::Jump {
            line: code as usize,
        }
    }

    /// Decode a lexicographic rank (line 0 most significant) into a program.
    pub fn decode(&self, rank: u64) -> Protocol {
        let base = self.actions_per_line();
        let mut codes = vec![0u64; self.lines];
        let mut rest = rank;
        for slot in codes.iter_mut().rev() {
            *slot = rest % base;
            rest /= base;
        }
        debug_assert_eq!(rest, 0);
        Protocol {
            t: self.t,
            lines: codes.iter().map(|c| self.decode_action(*c)).collect(),
        }
    }

    /// Lines reachable from line 0 through fallthrough and jumps.
    fn reachable(&self, lines: &[Instr]) -> Vec<bool> {
        let mut seen = vec![false; lines.len()];
        let mut stack = vec![0usize];
        while let Some(pc) = stack.pop() {
            if pc >= lines.len() || seen[pc] {
                continue;
            }
            seen[pc] = true;
            match lines[pc] {
                Instr::Halt => {}
                Instr::Jump { line } => stack.push(line),
                _ => stack.push(pc + 1),
            }
        }
        seen
    }

    /// A protocol is canonical when every line unreachable from line 0
    /// holds the first action (`Halt`). Skipping the rest deduplicates
    /// programs that differ only in dead lines.
    pub fn is_canonical(&self, protocol: &Protocol) -> bool {
        let seen = self.reachable(&protocol.lines);
        protocol
            .lines
            .iter()
            .zip(seen)
            .all(|(instr, reachable)| reachable || *instr == Instr::Halt)
    }
}

/// Every protocol of the space in canonical lexicographic order.
///
/// Yields each distinct action table exactly once; the feasibility guard
/// rejects shapes whose closed-form count exceeds `caps.max_protocols`.
pub fn enumerate_protocols<'s>(
    space: &'s ProtocolSpace,
    caps: &SearchCaps,
) -> Result<impl Iterator<Item = Protocol> + 's, SearchError> {
    let total = space.total_protocols();
    if total > caps.max_protocols as u128 {
        return Err(SearchError::SearchSpaceTooLarge {
            estimated: total,
            cap: caps.max_protocols,
        });
    }
    Ok((0..total as u64).map(|rank| space.decode(rank)))
}

/// Outcome of checking one protocol against every input of its shape.
///
/// `total_reads` and `second_pass_reads` are worst-case (maximum) over
/// inputs; `first_pass_distinct_reads` is the adversarial minimum over
/// inputs, the quantity the first-pass bound constrains on every input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Correct {
        total_reads: u64,
        first_pass_distinct_reads: u64,
        second_pass_reads: u64,
    },
    Incorrect,
    Diverged,
}

struct Shape {
    max_steps: u64,
    /// Every input paired with its expected outputs.
    cases: Vec<(Vec<u64>, Vec<u64>)>,
}

impl Shape {
    fn new(n: usize, d: u32, max_steps: u64) -> Self {
        let cases = crate::model::all_inputs(n, d)
            .map(|values| {
                let total: u64 = values.iter().sum();
                let outs = values.iter().map(|v| total - v).collect();
                (values, outs)
            })
            .collect();
        Shape { max_steps, cases }
    }
}

struct Scratch {
    last_write: Vec<Option<(u64, u64)>>,
    reads: Vec<(u64, usize)>,
    read_mask: u64,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            last_write: vec![None; n],
            reads: Vec::with_capacity(64),
            read_mask: 0,
        }
    }
}

enum PerInput {
    Diverged,
    Wrong,
    Right {
        total_reads: u64,
        first_pass_distinct: u64,
        second_pass_reads: u64,
    },
}

fn simulate(
    protocol: &Protocol,
    shape: &Shape,
    input: &[u64],
    expected: &[u64],
    scratch: &mut Scratch,
) -> PerInput {
    let reg_mask = (1u64 << protocol.t) - 1;
    scratch.last_write.iter_mut().for_each(|w| *w = None);
    scratch.reads.clear();
    scratch.read_mask = 0;

    let mut reg = 0u64;
    let mut pc = 0usize;
    let mut steps = 0u64;
    let mut op_tick = 0u64;
    let halted = loop {
        if pc >= protocol.lines.len() {
            break true;
        }
        if steps >= shape.max_steps {
            break false;
        }
        steps += 1;
        match protocol.lines[pc] {
            Instr::Halt => break true,
            Instr::Read { index } => {
                op_tick += 1;
                scratch.reads.push((op_tick, index));
                scratch.read_mask |= 1 << index;
                reg = input[index] & reg_mask;
                pc += 1;
            }
            Instr::WriteConst { index, value } => {
                op_tick += 1;
                scratch.last_write[index] = Some((op_tick, value));
                pc += 1;
            }
            Instr::WriteReg { index } => {
                op_tick += 1;
                scratch.last_write[index] = Some((op_tick, reg));
                pc += 1;
            }
            Instr::Jump { line } => pc = line,
        }
    };
    if !halted {
        return PerInput::Diverged;
    }
    for (cell, write) in scratch.last_write.iter().enumerate() {
        match write {
            Some((_, value)) if *value == expected[cell] => {}
            _ => return PerInput::Wrong,
        }
    }
    let boundary = scratch
        .last_write
        .iter()
        .map(|w| w.expect("checked above").0)
        .min()
        .expect("n >= 1");
    let mut first_mask = 0u64;
    let mut second = 0u64;
    for (tick, index) in &scratch.reads {
        if *tick < boundary {
            first_mask |= 1 << index;
        } else {
            second += 1;
        }
    }
    PerInput::Right {
        total_reads: scratch.reads.len() as u64,
        first_pass_distinct: first_mask.count_ones() as u64,
        second_pass_reads: second,
    }
}

fn check_against(protocol: &Protocol, shape: &Shape, scratch: &mut Scratch) -> Verdict {
    let mut total = 0u64;
    let mut first = u64::MAX;
    let mut second = 0u64;
    for (input, expected) in &shape.cases {
        match simulate(protocol, shape, input, expected, scratch) {
            PerInput::Diverged => return Verdict::Diverged,
            PerInput::Wrong => return Verdict::Incorrect,
            PerInput::Right {
                total_reads,
                first_pass_distinct,
                second_pass_reads,
            } => {
                total = total.max(total_reads);
                first = first.min(first_pass_distinct);
                second = second.max(second_pass_reads);
            }
        }
    }
    Verdict::Correct {
        total_reads: total,
        first_pass_distinct_reads: first,
        second_pass_reads: second,
    }
}

/// Simulate one protocol on every input of shape `(n, d)`.
///
/// Correct means: it halts within the step cap on every input, every cell is
/// written, and every cell's final written value is the expected output.
pub fn check_protocol(protocol: &Protocol, n: usize, d: u32, caps: &SearchCaps) -> Verdict {
    let shape = Shape::new(n, d, caps.max_steps.unwrap_or_else(|| default_max_steps(n)));
    let mut scratch = Scratch::new(n);
    check_against(protocol, &shape, &mut scratch)
}

/// Minimum read counts over all correct protocols of one shape.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct MinReadsReport {
    pub n: usize,
    pub d: u32,
    pub t: u32,
    pub protocols_enumerated: u64,
    pub canonical_protocols: u64,
    pub correct_protocols: u64,
    pub min_total_reads: Option<u64>,
    pub min_first_pass_reads: Option<u64>,
    pub min_second_pass_reads: Option<u64>,
    pub bound_total: i64,
    pub bound_respected: bool,
}

impl MinReadsReport {
    pub const CSV_HEADER: &'static str = "n,d,t,protocols_enumerated,canonical_protocols,correct_protocols,min_total_reads,min_first_pass_reads,min_second_pass_reads,bound_total,bound_respected";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.n,
            self.d,
            self.t,
            self.protocols_enumerated,
            self.canonical_protocols,
            self.correct_protocols,
            opt(self.min_total_reads),
            opt(self.min_first_pass_reads),
            opt(self.min_second_pass_reads),
            self.bound_total,
            self.bound_respected
        )
    }
}

#[derive(Default, Clone, Copy)]
struct Fold {
    canonical: u64,
    correct: u64,
    min_total: Option<u64>,
    min_first: Option<u64>,
    min_second: Option<u64>,
}

impl Fold {
    fn absorb(&mut self, verdict: Verdict) {
        if let Verdict::Correct {
            total_reads,
            first_pass_distinct_reads,
            second_pass_reads,
        } = verdict
        {
            self.correct += 1;
            self.min_total = Some(self.min_total.map_or(total_reads, |m| m.min(total_reads)));
            self.min_first = Some(self.min_first.map_or(first_pass_distinct_reads, |m| {
                m.min(first_pass_distinct_reads)
            }));
            self.min_second = Some(
                self.min_second
                    .map_or(second_pass_reads, |m| m.min(second_pass_reads)),
            );
        }
    }

    fn merge(mut self, other: Fold) -> Fold {
        self.canonical += other.canonical;
        self.correct += other.correct;
        let min = |a: Option<u64>, b: Option<u64>| match (a, b) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        };
        self.min_total = min(self.min_total, other.min_total);
        self.min_first = min(self.min_first, other.min_first);
        self.min_second = min(self.min_second, other.min_second);
        self
    }
}

/// Exhaustively fold [`check_protocol`] over the whole space and compare
/// the minima against the closed-form total bound.
///
/// Non-canonical programs (dead lines not holding `Halt`) are skipped so
/// each behavior is counted once; diverging and incorrect programs never
/// enter the minima. Shards by rank range and merges associatively, so the
/// result is deterministic regardless of parallelism.
pub fn min_reads(
    n: usize,
    d: u32,
    t: u32,
    caps: &SearchCaps,
) -> Result<MinReadsReport, SearchError> {
    let space = ProtocolSpace::new(n, d, t)?;
    let total = space.total_protocols();
    if total > caps.max_protocols as u128 {
        return Err(SearchError::SearchSpaceTooLarge {
            estimated: total,
            cap: caps.max_protocols,
        });
    }
    let total = total as u64;
    let shape = Shape::new(n, d, caps.max_steps.unwrap_or_else(|| default_max_steps(n)));

    let fold = (0..total as usize)
        .into_par_iter()
        .with_min_len(8192)
        .fold(
            || (Fold::default(), Scratch::new(n)),
            |(mut acc, mut scratch), rank| {
                let protocol = space.decode(rank as u64);
                if space.is_canonical(&protocol) {
                    acc.canonical += 1;
                    acc.absorb(check_against(&protocol, &shape, &mut scratch));
                }
                (acc, scratch)
            },
        )
        .map(|(acc, _)| acc)
        .reduce(Fold::default, Fold::merge);

    let bound_total = formulas::total_bound(n as u64, d, t as u64) as i64;
    let bound_respected = match fold.min_total {
        None => true,
        Some(min) => min as i64 >= bound_total.max(0),
    };
    Ok(MinReadsReport {
        n,
        d,
        t,
        protocols_enumerated: total,
        canonical_protocols: fold.canonical,
        correct_protocols: fold.correct,
        min_total_reads: fold.min_total,
        min_first_pass_reads: fold.min_first,
        min_second_pass_reads: fold.min_second,
        bound_total,
        bound_respected,
    })
}

/// Run a protocol as a model algorithm: the program counter is the
/// (oblivious) control register and the `t`-bit data register is the
/// counted state, so the model's budget accounting sees exactly `t` bits
/// between operations plus any pending read.
pub struct ProtocolAlgorithm {
    protocol: Protocol,
}

impl ProtocolAlgorithm {
    pub fn new(protocol: Protocol) -> Self {
        ProtocolAlgorithm { protocol }
    }
}

impl Algorithm for ProtocolAlgorithm {
    fn name(&self) -> String {
        format!("protocol:{}b", self.protocol.t)
    }

    fn init(&self, _n: usize, _d: u32) -> MachineState {
        let mut reg = Bits::new();
        reg.push_uint(0, self.protocol.t);
        MachineState::new(Control::new(0, 0), reg)
    }

    fn step(
        &self,
        _n: usize,
        _d: u32,
        state: MachineState,
        last_read: Option<u64>,
    ) -> Result<Step, ModelError> {
        let t = self.protocol.t;
        let mut reg = state.counted.read_uint(0, t) as u64;
        if let Some(value) = last_read {
            reg = value & ((1u64 << t) - 1);
        }
        let pack = |reg: u64| {
            let mut bits = Bits::new();
            bits.push_uint(reg as u128, t);
            bits
        };
        let mut pc = state.control.pos as usize;
        let mut hops = 0usize;
        loop {
            if pc >= self.protocol.lines.len() {
                return Ok(Step::new(
                    Action::Halt,
                    MachineState::new(state.control, pack(reg)),
                ));
            }
            match self.protocol.lines[pc] {
                Instr::Halt => {
                    return Ok(Step::new(
                        Action::Halt,
                        MachineState::new(state.control, pack(reg)),
                    ))
                }
                Instr::Jump { line } => {
                    hops += 1;
                    if hops > self.protocol.lines.len() {
                        // jump cycle: burn a step so the harness cap fires
                        return Ok(Step::new(
                            Action::Mark("spin"),
                            MachineState::new(state.control, pack(reg)),
                        ));
                    }
                    pc = line;
                }
                Instr::Read { index } => {
                    return Ok(Step::new(
                        Action::Read(index),
                        MachineState::new(Control::new(0, pc as u64 + 1), pack(reg)),
                    ))
                }
                Instr::WriteConst { index, value } => {
                    return Ok(Step::new(
                        Action::Write(index, BigInt::from(value)),
                        MachineState::new(Control::new(0, pc as u64 + 1), pack(reg)),
                    ))
                }
                Instr::WriteReg { index } => {
                    return Ok(Step::new(
                        Action::Write(index, BigInt::from(reg)),
                        MachineState::new(Control::new(0, pc as u64 + 1), pack(reg)),
                    ))
                }
            }
        }
    }
}
