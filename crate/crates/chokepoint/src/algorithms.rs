//! Reference algorithms expressed against the tape model, plus a
//! deliberately broken one for falsification demos.
//!
//! All four are input-oblivious: their control registers advance on a fixed
//! schedule determined by `(n, d)` alone, and everything input-derived lives
//! in the counted bits. Counted fields are packed at their declared widths,
//! so a running total over `k` elements occupies exactly
//! `width_for_max(k * (2^d - 1))` bits.

use crate::bits::{width_for_max, BitReader, Bits};
use crate::model::{Action, Algorithm, Control, MachineState, ModelError, Step};
use num_bigint::BigInt;

const PHASE_TRIVIAL: u32 = 0;
const PHASE_ACCUMULATE: u32 = 1;
const PHASE_OUTPUT: u32 = 2;
const PHASE_DONE: u32 = 3;
const PHASE_PARTIAL: u32 = 4;
const PHASE_COMPLETE: u32 = 5;
const PHASE_FILL: u32 = 6;

fn max_element(d: u32) -> u128 {
    (1u128 << d) - 1
}

/// Width of a running total over `k` elements of width `d`.
fn sum_width(k: u64, d: u32) -> u32 {
    width_for_max(k as u128 * max_element(d))
}

fn pack_sum(value: u128, k: u64, d: u32) -> Bits {
    let mut bits = Bits::new();
    bits.push_uint(value, sum_width(k, d));
    bits
}

fn unpack_sum(state: &Bits, k: u64, d: u32) -> u128 {
    state.read_uint(0, sum_width(k, d))
}

fn trivial_init() -> MachineState {
    MachineState::new(Control::new(PHASE_TRIVIAL, 0), Bits::new())
}

fn trivial_step(state: MachineState) -> Step {
    match state.control.pos {
        0 => Step::new(
            Action::Write(0, BigInt::from(0)),
            MachineState::new(Control::new(PHASE_TRIVIAL, 1), Bits::new()),
        ),
        _ => Step::new(Action::Halt, state),
    }
}

/// Shared first phase: read every element once, folding it into the total.
///
/// Returns `None` while the accumulation is still running, or the completed
/// total once all `n` elements are folded.
fn accumulate(n: usize, d: u32, state: &MachineState, last_read: Option<u64>) -> AccumulateOutcome {
    let j = state.control.pos;
    let folded = if j == 0 {
        0
    } else {
        unpack_sum(&state.counted, j - 1, d) + last_read.expect("a read precedes this step") as u128
    };
    if (j as usize) < n {
        AccumulateOutcome::Reading(Step::new(
            Action::Read(j as usize),
            MachineState::new(
                Control::new(PHASE_ACCUMULATE, j + 1),
                pack_sum(folded, j, d),
            ),
        ))
    } else {
        AccumulateOutcome::Done(folded)
    }
}

enum AccumulateOutcome {
    Reading(Step),
    Done(u128),
}

fn write_value(total: u128, element: u128) -> BigInt {
    BigInt::from(total - element)
}

/// The plain two-pass algorithm: sum everything, then for each cell re-read
/// its element and write `total - element`. Reads every element exactly
/// twice for `n >= 2`; a single-cell instance is written directly.
pub struct Standard;

impl Algorithm for Standard {
    fn name(&self) -> String {
        "standard".into()
    }

    fn init(&self, n: usize, _d: u32) -> MachineState {
        if n == 1 {
            trivial_init()
        } else {
            MachineState::new(Control::new(PHASE_ACCUMULATE, 0), Bits::new())
        }
    }

    fn step(
        &self,
        n: usize,
        d: u32,
        state: MachineState,
        last_read: Option<u64>,
    ) -> Result<Step, ModelError> {
        Ok(match state.control.phase {
            PHASE_TRIVIAL => trivial_step(state),
            PHASE_ACCUMULATE => match accumulate(n, d, &state, last_read) {
                AccumulateOutcome::Reading(step) => step,
                AccumulateOutcome::Done(total) => Step::new(
                    Action::Mark("summary"),
                    MachineState::new(Control::new(PHASE_OUTPUT, 0), pack_sum(total, n as u64, d)),
                ),
            },
            PHASE_OUTPUT => {
                let total = unpack_sum(&state.counted, n as u64, d);
                let p = state.control.pos;
                let cell = (p / 2) as usize;
                if p.is_multiple_of(2) {
                    Step::new(
                        Action::Read(cell),
                        MachineState::new(Control::new(PHASE_OUTPUT, p + 1), state.counted),
                    )
                } else {
                    let element = last_read.expect("a read precedes each write") as u128;
                    let next = if cell + 1 == n {
                        Control::new(PHASE_DONE, 0)
                    } else {
                        Control::new(PHASE_OUTPUT, p + 1)
                    };
                    Step::new(
                        Action::Write(cell, write_value(total, element)),
                        MachineState::new(next, state.counted),
                    )
                }
            }
            PHASE_DONE => Step::new(Action::Halt, state),
            phase => unreachable!("standard: unknown phase {phase}"),
        })
    }
}

/// Two-pass with a running counter: the final cell is derived from the
/// counter instead of a read, for `2n - 1` total reads.
///
/// After the summary mark the counted state holds the total `S` and the
/// counter `C` (the sum of not-yet-rewritten elements); the last write emits
/// `S - C` without touching the tape.
pub struct Optimized;

impl Algorithm for Optimized {
    fn name(&self) -> String {
        "optimized".into()
    }

    fn init(&self, n: usize, _d: u32) -> MachineState {
        if n == 1 {
            trivial_init()
        } else {
            MachineState::new(Control::new(PHASE_ACCUMULATE, 0), Bits::new())
        }
    }

    fn step(
        &self,
        n: usize,
        d: u32,
        state: MachineState,
        last_read: Option<u64>,
    ) -> Result<Step, ModelError> {
        let w = sum_width(n as u64, d);
        let pack_pair = |total: u128, counter: u128| {
            let mut bits = Bits::new();
            bits.push_uint(total, w);
            bits.push_uint(counter, w);
            bits
        };
        Ok(match state.control.phase {
            PHASE_TRIVIAL => trivial_step(state),
            PHASE_ACCUMULATE => match accumulate(n, d, &state, last_read) {
                AccumulateOutcome::Reading(step) => step,
                AccumulateOutcome::Done(total) => Step::new(
                    Action::Mark("summary"),
                    MachineState::new(Control::new(PHASE_OUTPUT, 0), pack_sum(total, n as u64, d)),
                ),
            },
            PHASE_OUTPUT => {
                let p = state.control.pos;
                if p == 0 {
                    // counter starts at the full total
                    let total = unpack_sum(&state.counted, n as u64, d);
                    return Ok(Step::new(
                        Action::Read(0),
                        MachineState::new(Control::new(PHASE_OUTPUT, 1), pack_pair(total, total)),
                    ));
                }
                let mut reader = BitReader::new(&state.counted);
                let total = reader.read_uint(w);
                let counter = reader.read_uint(w);
                let cell = (p / 2) as usize;
                if cell == n - 1 {
                    // final cell: no read, the counter is what remains
                    Step::new(
                        Action::Write(n - 1, write_value(total, counter)),
                        MachineState::new(Control::new(PHASE_DONE, 0), Bits::new()),
                    )
                } else if p % 2 == 1 {
                    let element = last_read.expect("a read precedes each write") as u128;
                    Step::new(
                        Action::Write(cell, write_value(total, element)),
                        MachineState::new(
                            Control::new(PHASE_OUTPUT, p + 1),
                            pack_pair(total, counter - element),
                        ),
                    )
                } else {
                    Step::new(
                        Action::Read(cell),
                        MachineState::new(Control::new(PHASE_OUTPUT, p + 1), state.counted),
                    )
                }
            }
            PHASE_DONE => Step::new(Action::Halt, state),
            phase => unreachable!("optimized: unknown phase {phase}"),
        })
    }
}

/// Reads everything except `In[0]`, then makes its earliest final write
/// `Out[0]` from that partial sum — exactly `n - 1` reads before the write,
/// the fewest any correct algorithm can manage. The remaining cells are
/// completed by reading `In[0]` and re-reading each element.
pub struct FirstPassMinimal;

impl Algorithm for FirstPassMinimal {
    fn name(&self) -> String {
        "first-pass-minimal".into()
    }

    fn init(&self, n: usize, _d: u32) -> MachineState {
        if n == 1 {
            trivial_init()
        } else {
            MachineState::new(Control::new(PHASE_PARTIAL, 0), Bits::new())
        }
    }

    fn step(
        &self,
        n: usize,
        d: u32,
        state: MachineState,
        last_read: Option<u64>,
    ) -> Result<Step, ModelError> {
        Ok(match state.control.phase {
            PHASE_TRIVIAL => trivial_step(state),
            PHASE_PARTIAL => {
                // partial sum over In[1..=j]
                let j = state.control.pos;
                let folded = if j == 0 {
                    0
                } else {
                    unpack_sum(&state.counted, j - 1, d)
                        + last_read.expect("a read precedes this step") as u128
                };
                if (j as usize) < n - 1 {
                    Step::new(
                        Action::Read(j as usize + 1),
                        MachineState::new(
                            Control::new(PHASE_PARTIAL, j + 1),
                            pack_sum(folded, j, d),
                        ),
                    )
                } else {
                    Step::new(
                        Action::Write(0, BigInt::from(folded)),
                        MachineState::new(Control::new(PHASE_COMPLETE, 0), pack_sum(folded, j, d)),
                    )
                }
            }
            PHASE_COMPLETE => match state.control.pos {
                0 => Step::new(
                    Action::Read(0),
                    MachineState::new(Control::new(PHASE_COMPLETE, 1), state.counted),
                ),
                1 => {
                    let partial = unpack_sum(&state.counted, n as u64 - 1, d);
                    let total = partial + last_read.expect("In[0] was just read") as u128;
                    Step::new(
                        Action::Read(1),
                        MachineState::new(
                            Control::new(PHASE_OUTPUT, 3),
                            pack_sum(total, n as u64, d),
                        ),
                    )
                }
                pos => unreachable!("first-pass-minimal: completion pos {pos}"),
            },
            PHASE_OUTPUT => {
                let total = unpack_sum(&state.counted, n as u64, d);
                let p = state.control.pos;
                let cell = (p / 2) as usize;
                if p % 2 == 1 {
                    let element = last_read.expect("a read precedes each write") as u128;
                    let next = if cell + 1 == n {
                        Control::new(PHASE_DONE, 0)
                    } else {
                        Control::new(PHASE_OUTPUT, p + 1)
                    };
                    Step::new(
                        Action::Write(cell, write_value(total, element)),
                        MachineState::new(next, state.counted),
                    )
                } else {
                    Step::new(
                        Action::Read(cell),
                        MachineState::new(Control::new(PHASE_OUTPUT, p + 1), state.counted),
                    )
                }
            }
            PHASE_DONE => Step::new(Action::Halt, state),
            phase => unreachable!("first-pass-minimal: unknown phase {phase}"),
        })
    }
}

/// Deliberately incorrect: reads only `In[1..=k]`, commits that partial sum
/// as `Out[0]`'s final value, and fills every other cell with zero.
///
/// With `k <= n - 2` its earliest final write depends on too few elements,
/// so a one-coordinate perturbation of any input it happens to get right
/// must break it.
pub struct GreedyCheat {
    k: u64,
}

impl GreedyCheat {
    pub fn new(k: u64) -> Self {
        GreedyCheat { k }
    }

    pub fn k(&self) -> u64 {
        self.k
    }
}

impl Algorithm for GreedyCheat {
    fn name(&self) -> String {
        format!("cheat:{}", self.k)
    }

    fn declared_correct(&self) -> bool {
        false
    }

    fn validate(&self, n: usize, _d: u32) -> Result<(), ModelError> {
        if n < 2 || self.k > n as u64 - 2 {
            return Err(ModelError::Unsupported(format!(
                "cheat:{} requires n >= {} (k <= n - 2)",
                self.k,
                self.k + 2
            )));
        }
        Ok(())
    }

    fn init(&self, _n: usize, _d: u32) -> MachineState {
        MachineState::new(Control::new(PHASE_PARTIAL, 0), Bits::new())
    }

    fn step(
        &self,
        n: usize,
        d: u32,
        state: MachineState,
        last_read: Option<u64>,
    ) -> Result<Step, ModelError> {
        Ok(match state.control.phase {
            PHASE_PARTIAL => {
                let j = state.control.pos;
                let folded = if j == 0 {
                    0
                } else {
                    unpack_sum(&state.counted, j - 1, d)
                        + last_read.expect("a read precedes this step") as u128
                };
                if j < self.k {
                    Step::new(
                        Action::Read(j as usize + 1),
                        MachineState::new(
                            Control::new(PHASE_PARTIAL, j + 1),
                            pack_sum(folded, j, d),
                        ),
                    )
                } else {
                    Step::new(
                        Action::Write(0, BigInt::from(folded)),
                        MachineState::new(Control::new(PHASE_FILL, 1), Bits::new()),
                    )
                }
            }
            PHASE_FILL => {
                let cell = state.control.pos as usize;
                if cell < n {
                    Step::new(
                        Action::Write(cell, BigInt::from(0)),
                        MachineState::new(
                            Control::new(PHASE_FILL, state.control.pos + 1),
                            Bits::new(),
                        ),
                    )
                } else {
                    Step::new(Action::Halt, state)
                }
            }
            phase => unreachable!("cheat: unknown phase {phase}"),
        })
    }
}

/// Look up an algorithm by its command-line name: `standard`, `optimized`,
/// `first-pass-minimal`, or `cheat:<k>`.
pub fn by_name(name: &str) -> Result<Box<dyn Algorithm>, ModelError> {
    match name {
        "standard" => Ok(Box::new(Standard)),
        "optimized" => Ok(Box::new(Optimized)),
        "first-pass-minimal" => Ok(Box::new(FirstPassMinimal)),
        other => {
            if let Some(k) = other.strip_prefix("cheat:") {
                let k: u64 = k.parse().map_err(|_| {
                    ModelError::Unsupported(format!("bad cheat parameter in {other:?}"))
                })?;
                Ok(Box::new(GreedyCheat::new(k)))
            } else {
                Err(ModelError::Unsupported(format!(
                    "unknown algorithm {other:?} (expected standard, optimized, first-pass-minimal, or cheat:<k>)"
                )))
            }
        }
    }
}

/// The implemented algorithms that are expected to be correct.
pub fn correct_algorithms() -> Vec<Box<dyn Algorithm>> {
    vec![
        Box::new(Standard),
        Box::new(Optimized),
        Box::new(FirstPassMinimal),
    ]
}
