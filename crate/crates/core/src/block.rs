//! Recursive block codes on blocks of `2^i` cells.
//!
//! An order-1 block is a pair of cells storing two bits. An order-`i` block
//! is a left and a right sub-block of order `i - 1`; it serves either the
//! lower or the upper half of its `2^i` bit positions. Lower blocks fill
//! their sub-blocks left to right, upper blocks right to left with bit
//! `2^(i-1) + j` written as local bit `j`. In an order-2 upper block the
//! left column additionally swaps its two bits, which is what lets a block
//! with two active columns be classified from its levels.
//!
//! Every successful block write raises exactly one cell by one. A block
//! never asks for an erase: when it cannot take a write it reports
//! [`BlockWrite::CannotAbsorb`] and the containing code moves on.
//!
//! All functions expect `q` odd.

use crate::model::VariableVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockStatus {
    Empty,
    Active,
    Full,
}

/// Which half of its bit range a block serves, as read from its levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dedication {
    Unset,
    LowerHalf,
    UpperHalf,
    Spent,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BlockWrite {
    Next(Vec<u8>),
    CannotAbsorb,
}

/// Order of a block with `len` cells.
pub fn order_of(len: usize) -> u32 {
    debug_assert!(len >= 2 && len.is_power_of_two());
    len.trailing_zeros()
}

pub fn status(cells: &[u8], q: u8) -> BlockStatus {
    if cells.iter().all(|&l| l == 0) {
        BlockStatus::Empty
    } else if cells.iter().all(|&l| l == q - 1) {
        BlockStatus::Full
    } else {
        BlockStatus::Active
    }
}

/// Cell of a two-cell block raised by writing `bit`, if any.
///
/// The first `q - 1` writes raise the cell named by the bit. From the
/// `q`-th write on the opposite cell is raised, and a block with one full
/// cell only takes the bit stored in the other cell's parity.
pub fn c1_target(cells: &[u8], bit: usize, q: u8) -> Option<usize> {
    let (x1, x2) = (cells[0], cells[1]);
    let full = q - 1;
    if u16::from(x1) + u16::from(x2) <= u16::from(q) - 2 {
        return Some(bit);
    }
    match (x1 == full, x2 == full) {
        (true, true) => None,
        (true, false) => (bit == 0).then_some(1),
        (false, true) => (bit == 1).then_some(0),
        (false, false) => Some(1 - bit),
    }
}

pub fn c1_write(cells: &[u8], bit: usize, q: u8) -> BlockWrite {
    apply(cells, c1_target(cells, bit, q))
}

pub fn c1_decode(cells: &[u8], q: u8) -> [bool; 2] {
    let (x1, x2) = (cells[0], cells[1]);
    if u16::from(x1) + u16::from(x2) < u16::from(q) {
        [x1 % 2 == 1, x2 % 2 == 1]
    } else {
        [x2 % 2 == 1, x1 % 2 == 1]
    }
}

/// Bits a two-cell block can still take.
fn c1_admits(cells: &[u8], q: u8) -> (bool, bool) {
    (c1_target(cells, 0, q).is_some(), c1_target(cells, 1, q).is_some())
}

/// Reads the dedication of a block of order at least 2 from its levels.
pub fn classify(cells: &[u8], q: u8) -> Dedication {
    let half = cells.len() / 2;
    let (left, right) = cells.split_at(half);
    let (ls, rs) = (status(left, q), status(right, q));
    use BlockStatus::*;
    match (ls, rs) {
        (Empty, Empty) => return Dedication::Unset,
        (Full, Full) => return Dedication::Spent,
        (_, Empty) => return Dedication::LowerHalf,
        (Empty, _) => return Dedication::UpperHalf,
        (Full, _) => return Dedication::LowerHalf,
        (_, Full) => return Dedication::UpperHalf,
        (Active, Active) => {}
    }
    if half > 2 {
        // strict sequencing never leaves both halves active
        return Dedication::LowerHalf;
    }
    let (l0, l1) = c1_admits(left, q);
    let (r0, r1) = c1_admits(right, q);
    if r0 && r1 {
        Dedication::LowerHalf
    } else if l0 && l1 {
        Dedication::UpperHalf
    } else if l0 == r0 {
        // both columns only take their first bits, or both their second
        Dedication::UpperHalf
    } else {
        Dedication::LowerHalf
    }
}

/// Cell raised by writing `bit` (in `[0, len)`) into a block, if any.
pub fn block_target(cells: &[u8], bit: usize, q: u8) -> Option<usize> {
    let len = cells.len();
    if len == 2 {
        return c1_target(cells, bit, q);
    }
    let half = len / 2;
    let upper = bit >= half;
    match (classify(cells, q), upper) {
        (Dedication::Spent, _) | (Dedication::LowerHalf, true) | (Dedication::UpperHalf, false) => {
            return None
        }
        _ => {}
    }
    let local = bit % half;
    let (left, right) = cells.split_at(half);
    let swap_left = half == 2 && upper;
    let left_bit = if swap_left { 1 - local } else { local };
    // (first sub-block, its offset, its bit), then the second one
    let (first, second) = if upper {
        ((right, half, local), (left, 0, left_bit))
    } else {
        ((left, 0, local), (right, half, local))
    };
    if let Some(c) = block_target(first.0, first.2, q) {
        return Some(first.1 + c);
    }
    let first_full = status(first.0, q) == BlockStatus::Full;
    if half > 2 && !first_full {
        return None;
    }
    let c = block_target(second.0, second.2, q)?;
    if !first_full {
        // the second column may not fill up before the first
        let mut probe = second.0.to_vec();
        probe[c] += 1;
        if status(&probe, q) == BlockStatus::Full {
            return None;
        }
    }
    Some(second.1 + c)
}

pub fn ci_write(cells: &[u8], bit: usize, q: u8) -> BlockWrite {
    apply(cells, block_target(cells, bit, q))
}

/// Decodes a block into its `len` bit positions.
pub fn block_decode(cells: &[u8], q: u8) -> Vec<bool> {
    let len = cells.len();
    if len == 2 {
        return c1_decode(cells, q).to_vec();
    }
    let half = len / 2;
    let mut out = vec![false; len];
    let (left, right) = cells.split_at(half);
    let (offset, swap_left) = match classify(cells, q) {
        Dedication::Unset | Dedication::Spent => return out,
        Dedication::LowerHalf => (0, false),
        Dedication::UpperHalf => (half, half == 2),
    };
    let lv = block_decode(left, q);
    let rv = block_decode(right, q);
    for j in 0..half {
        let from_left = if swap_left { lv[1 - j] } else { lv[j] };
        out[offset + j] = from_left ^ rv[j];
    }
    out
}

pub fn ci_decode(cells: &[u8], q: u8) -> VariableVector {
    VariableVector::from_bits(block_decode(cells, q))
}

fn apply(cells: &[u8], target: Option<usize>) -> BlockWrite {
    match target {
        Some(c) => {
            let mut next = cells.to_vec();
            next[c] += 1;
            BlockWrite::Next(next)
        }
        None => BlockWrite::CannotAbsorb,
    }
}
