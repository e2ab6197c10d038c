//! Optimal two-bit code over a line of `n` cells.
//!
//! Bit 0 grows from the left end and bit 1 from the right end: a write
//! raises the leftmost (rightmost) cell that is not yet full. When only one
//! non-full cell remains it stores both bits at once through its residue
//! modulo 4, `r <-> (r / 2, r % 2)`.
//!
//! Every bit value is read as the parity of the levels on its side of the
//! line. For odd `q` full cells are even, so this is just the parity of the
//! frontier cell. For even `q` each full cell contributes a one, and the
//! last free cell stores its two bits relative to the parities of all other
//! cells; that cell stops at `q - 2` so it can still be told apart.

use crate::error::{FlashError, Result};
use crate::model::{check_write_args, CellState, FlashCode, Params, VariableVector, WriteOutcome};

/// Bits encoded by a residue modulo 4.
pub fn residue_bits(r: u8) -> (bool, bool) {
    let r = r % 4;
    (r / 2 == 1, r % 2 == 1)
}

pub fn bits_residue(v1: bool, v2: bool) -> u8 {
    (u8::from(v1) << 1) | u8::from(v2)
}

/// Phase of a two-bit state, read off the cells below `q - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseView {
    /// At least two free cells; `left` and `right` are the outermost ones.
    MultiCell { left: usize, right: usize },
    /// Exactly one free cell at `index` with the given level.
    SingleCell { index: usize, level: u8 },
    AllFull,
}

pub fn phase_view(levels: &[u8], q: u8) -> PhaseView {
    let full = q - 1;
    let mut free = levels.iter().enumerate().filter(|(_, &l)| l < full);
    match (free.next(), free.next_back()) {
        (None, _) => PhaseView::AllFull,
        (Some((index, &level)), None) => PhaseView::SingleCell { index, level },
        (Some((left, _)), Some((right, _))) => PhaseView::MultiCell { left, right },
    }
}

fn parity(cells: &[u8]) -> bool {
    cells.iter().map(|&l| u32::from(l)).sum::<u32>() % 2 == 1
}

/// Bits contributed by every cell except `index`.
fn base_bits(levels: &[u8], index: usize) -> (bool, bool) {
    (parity(&levels[..index]), parity(&levels[index + 1..]))
}

fn single_cell_bits(levels: &[u8], index: usize, level: u8) -> (bool, bool) {
    let (b1, b2) = base_bits(levels, index);
    let (r1, r2) = residue_bits(level % 4);
    (b1 ^ r1, b2 ^ r2)
}

fn decode_pair(levels: &[u8], q: u8) -> (bool, bool) {
    match phase_view(levels, q) {
        PhaseView::MultiCell { left, right } => {
            (parity(&levels[..=left]), parity(&levels[right..]))
        }
        PhaseView::SingleCell { index, level } => single_cell_bits(levels, index, level),
        // unreachable for even q; read it as the last cell holding the pair
        PhaseView::AllFull => single_cell_bits(levels, levels.len() - 1, q - 1),
    }
}

/// Highest level the shared last cell may use.
fn single_cell_cap(q: u8) -> u8 {
    if q % 2 == 1 {
        q - 1
    } else {
        q - 2
    }
}

/// Smallest level `>= from` whose residue stores `target` relative to the
/// other cells, or `None` if it exceeds the cap.
fn raise_to_residue(levels: &[u8], index: usize, from: u8, target: (bool, bool), q: u8) -> Option<u8> {
    let (b1, b2) = base_bits(levels, index);
    let want = bits_residue(target.0 ^ b1, target.1 ^ b2);
    let from = u16::from(from);
    let delta = (u16::from(want) + 4 - from % 4) % 4;
    let level = from + delta;
    (level <= u16::from(single_cell_cap(q))).then_some(level as u8)
}

pub fn decode2(state: &CellState, q: u8) -> VariableVector {
    let (v1, v2) = decode_pair(state.levels(), q);
    VariableVector::from_bits(vec![v1, v2])
}

pub fn write2(state: &CellState, bit: usize, q: u8) -> Result<WriteOutcome> {
    if bit > 1 {
        return Err(FlashError::usage(format!("bit index {bit} out of range for k = 2")));
    }
    let levels = state.levels();
    let (v1, v2) = decode_pair(levels, q);
    let target = if bit == 0 { (!v1, v2) } else { (v1, !v2) };
    let mut next = levels.to_vec();
    match phase_view(levels, q) {
        PhaseView::MultiCell { left, right } => {
            next[if bit == 0 { left } else { right }] += 1;
            if let PhaseView::SingleCell { index, level } = phase_view(&next, q) {
                match raise_to_residue(&next, index, level, target, q) {
                    Some(l) => next[index] = l,
                    None => return Ok(WriteOutcome::EraseRequired),
                }
            }
        }
        PhaseView::SingleCell { index, level } => {
            // the target residue differs from the current one, so this raises
            match raise_to_residue(levels, index, level, target, q) {
                Some(l) => next[index] = l,
                None => return Ok(WriteOutcome::EraseRequired),
            }
        }
        PhaseView::AllFull => return Ok(WriteOutcome::EraseRequired),
    }
    Ok(WriteOutcome::Next(CellState::new(next)))
}

/// Guaranteed writes of the two-bit code: `(n-1)(q-1) + floor((q-1)/2)`.
pub fn guarantee2(n: u64, q: u64) -> u64 {
    (n - 1) * (q - 1) + (q - 1) / 2
}

#[derive(Debug, Clone)]
pub struct TwoBitCode {
    params: Params,
}

impl TwoBitCode {
    pub fn new(n: usize, q: u8) -> Result<Self> {
        if q < 3 {
            return Err(FlashError::usage(format!("two-bit code needs q >= 3, got {q}")));
        }
        if n == 0 {
            return Err(FlashError::usage("two-bit code needs at least one cell"));
        }
        Ok(TwoBitCode { params: Params::linear(q, 2, n)? })
    }

    pub fn guarantee(&self) -> u64 {
        guarantee2(self.params.n() as u64, u64::from(self.params.q))
    }
}

impl FlashCode for TwoBitCode {
    fn name(&self) -> &str {
        "twobit"
    }

    fn params(&self) -> &Params {
        &self.params
    }

    fn decode(&self, state: &CellState) -> VariableVector {
        decode2(state, self.params.q)
    }

    fn write(&self, state: &CellState, bit: usize) -> Result<WriteOutcome> {
        check_write_args(&self.params, state, bit)?;
        write2(state, bit, self.params.q)
    }
}
