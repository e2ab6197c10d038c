//! Basic multidimensional code: `2^D` bits in an `n_1 x ... x n_D` box.
//!
//! A column of `n_1` cells stores two bits, the first growing from the top
//! and the second from the bottom, each read as the parity of its frontier
//! cell. A column takes a write only if at least two of its cells stay below
//! `q - 1` afterwards; those two cells play the part of the separation cell
//! and keep both frontiers readable.
//!
//! One level up, a `D`-dimensional box is a row of `n_D` hyperplanes. The
//! lower half of the bits uses hyperplanes in increasing order, the upper
//! half in decreasing order with bit `2^(D-1) + j` written as local bit `j`.
//! A write goes to the oldest hyperplane of its side that takes it, else a
//! new hyperplane is opened as long as an untouched one still separates the
//! sides afterwards.

use crate::bounds;
use crate::enhanced::Frontiers;
use crate::error::{FlashError, Result};
use crate::model::{check_write_args, CellState, FlashCode, Params, VariableVector, WriteOutcome};

/// Frontier cells of a column: the first and last cell below `q - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnView {
    pub top: usize,
    pub bottom: usize,
    /// Cells below `q - 1`.
    pub free: usize,
}

impl ColumnView {
    pub fn of(column: &[u8], q: u8) -> Option<ColumnView> {
        let full = q - 1;
        let top = column.iter().position(|&l| l < full)?;
        let bottom = column.iter().rposition(|&l| l < full)?;
        let free = column.iter().filter(|&&l| l < full).count();
        Some(ColumnView { top, bottom, free })
    }
}

/// Cell of a column raised by `bit`, if the column can take it.
pub fn column_target(column: &[u8], bit: usize, q: u8) -> Option<usize> {
    let view = ColumnView::of(column, q)?;
    let c = if bit == 0 { view.top } else { view.bottom };
    let fills = column[c] + 1 == q - 1;
    (view.free >= 3 || (view.free == 2 && !fills)).then_some(c)
}

pub fn column_decode(column: &[u8], q: u8) -> [bool; 2] {
    match ColumnView::of(column, q) {
        Some(v) => [column[v.top] % 2 == 1, column[v.bottom] % 2 == 1],
        None => [false, false],
    }
}

fn box_target(cells: &[u8], dims: &[usize], bit: usize, q: u8) -> Option<usize> {
    let d = dims.len();
    if d == 1 {
        return column_target(cells, bit, q);
    }
    let count = dims[d - 1];
    let size = cells.len() / count;
    let sub = &dims[..d - 1];
    let half = 1usize << (d - 1);
    let local = bit % half;
    let fr = Frontiers::of(cells, count);
    let plane = |h: usize| &cells[h * size..(h + 1) * size];
    let (opened, next): (Vec<usize>, Option<usize>) = if bit < half {
        ((0..fr.lower_len).collect(), Some(fr.lower_len))
    } else {
        ((fr.upper_start..count).rev().collect(), fr.upper_start.checked_sub(1))
    };
    for h in opened {
        if let Some(c) = box_target(plane(h), sub, local, q) {
            return Some(h * size + c);
        }
    }
    if fr.gap() < 2 {
        return None;
    }
    let h = next?;
    box_target(plane(h), sub, local, q).map(|c| h * size + c)
}

fn box_decode(cells: &[u8], dims: &[usize], q: u8, out: &mut [bool]) {
    let d = dims.len();
    if d == 1 {
        let v = column_decode(cells, q);
        out[0] ^= v[0];
        out[1] ^= v[1];
        return;
    }
    let count = dims[d - 1];
    let size = cells.len() / count;
    let half = 1usize << (d - 1);
    let fr = Frontiers::of(cells, count);
    let (lower, upper) = out.split_at_mut(half);
    for h in 0..fr.lower_len {
        box_decode(&cells[h * size..(h + 1) * size], &dims[..d - 1], q, lower);
    }
    for h in fr.upper_start..count {
        box_decode(&cells[h * size..(h + 1) * size], &dims[..d - 1], q, upper);
    }
}

#[derive(Debug, Clone)]
pub struct BasicBoxCode {
    params: Params,
}

impl BasicBoxCode {
    pub fn new(dims: Vec<usize>, q: u8) -> Result<Self> {
        if dims.is_empty() || dims.len() > 10 {
            return Err(FlashError::usage(format!("basic code needs 1..=10 dimensions, got {}", dims.len())));
        }
        if dims.iter().any(|&n| n < 2) {
            return Err(FlashError::usage(format!("every dimension must be at least 2, got {dims:?}")));
        }
        if q < 3 || q.is_multiple_of(2) {
            return Err(FlashError::usage(format!(
                "basic code runs on odd q >= 3, got {q}; virtualize even q"
            )));
        }
        let k = 1 << dims.len();
        Ok(BasicBoxCode { params: Params::new(q, k, dims)? })
    }

    pub fn formula_guarantee(&self) -> i64 {
        bounds::basic_guarantee(&self.params.dims, i64::from(self.params.q))
    }

    pub fn target(&self, state: &CellState, bit: usize) -> Option<usize> {
        box_target(state.levels(), &self.params.dims, bit, self.params.q)
    }
}

impl FlashCode for BasicBoxCode {
    fn name(&self) -> &str {
        "basic"
    }

    fn params(&self) -> &Params {
        &self.params
    }

    fn decode(&self, state: &CellState) -> VariableVector {
        let mut out = vec![false; self.params.k];
        box_decode(state.levels(), &self.params.dims, self.params.q, &mut out);
        VariableVector::from_bits(out)
    }

    fn write(&self, state: &CellState, bit: usize) -> Result<WriteOutcome> {
        check_write_args(&self.params, state, bit)?;
        Ok(match self.target(state, bit) {
            Some(c) => WriteOutcome::Next(state.incremented(c)),
            None => WriteOutcome::EraseRequired,
        })
    }

    fn unit_increment(&self) -> bool {
        true
    }
}
