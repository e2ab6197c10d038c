//! Enhanced multidimensional code: `k = 2^D` bits in a `2 x ... x 2 x n_D`
//! box, seen as a row of `n_D` blocks of `2^(D-1)` cells.
//!
//! The lower `2^(D-1)` bits fill blocks from the left, the upper ones from
//! the right (bit `2^(D-1) + j` is written as local bit `j`). A write goes
//! to the oldest block of its side that can take it; otherwise the next
//! block on that side is opened, as long as one untouched block still
//! separates the two sides afterwards. Each bit reads as the XOR of its
//! value over all blocks of its side.

use crate::block::{block_decode, block_target, status, BlockStatus};
use crate::bounds;
use crate::error::{FlashError, Result};
use crate::model::{check_write_args, CellState, FlashCode, Params, VariableVector, WriteOutcome};

/// Extent of the two filled sides of a row of blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frontiers {
    /// Number of leading non-empty blocks.
    pub lower_len: usize,
    /// Index of the first block of the trailing non-empty run.
    pub upper_start: usize,
}

impl Frontiers {
    /// Computes the frontiers of `count` consecutive slices of `cells`.
    pub fn of(cells: &[u8], count: usize) -> Frontiers {
        let size = cells.len() / count;
        let touched = |b: usize| cells[b * size..(b + 1) * size].iter().any(|&l| l > 0);
        let lower_len = (0..count).take_while(|&b| touched(b)).count();
        let upper_len = (0..count).rev().take_while(|&b| touched(b)).count();
        Frontiers { lower_len, upper_start: count - upper_len.min(count - lower_len) }
    }

    /// Untouched blocks strictly between the two sides.
    pub fn gap(&self) -> usize {
        self.upper_start - self.lower_len
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ActiveBlocks {
    pub lower: usize,
    pub upper: usize,
}

impl ActiveBlocks {
    pub fn total(&self) -> usize {
        self.lower + self.upper
    }
}

#[derive(Debug, Clone)]
pub struct EnhancedCode {
    params: Params,
    dim: u32,
    blocks: usize,
}

impl EnhancedCode {
    /// Code for `2^dim` bits over `blocks` blocks of `2^(dim-1)` cells,
    /// with odd `q`.
    pub fn new(dim: u32, blocks: usize, q: u8) -> Result<Self> {
        if !(2..=10).contains(&dim) {
            return Err(FlashError::usage(format!("enhanced code needs 2 <= D <= 10, got {dim}")));
        }
        if blocks < 3 {
            return Err(FlashError::usage(format!("enhanced code needs n_D >= 3, got {blocks}")));
        }
        if q < 3 || q.is_multiple_of(2) {
            return Err(FlashError::usage(format!(
                "enhanced code runs on odd q >= 3, got {q}; virtualize even q"
            )));
        }
        let mut dims = vec![2; dim as usize - 1];
        dims.push(blocks);
        Ok(EnhancedCode { params: Params::new(q, 1 << dim, dims)?, dim, blocks })
    }

    /// Same as [`EnhancedCode::new`] but taking `k` instead of `D`.
    pub fn with_bits(k: usize, blocks: usize, q: u8) -> Result<Self> {
        if k < 4 || !k.is_power_of_two() {
            return Err(FlashError::usage(format!("k must be a power of two >= 4, got {k}")));
        }
        EnhancedCode::new(k.trailing_zeros(), blocks, q)
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn block_len(&self) -> usize {
        1 << (self.dim - 1)
    }

    fn block<'a>(&self, cells: &'a [u8], b: usize) -> &'a [u8] {
        let size = self.block_len();
        &cells[b * size..(b + 1) * size]
    }

    pub fn frontiers(&self, state: &CellState) -> Frontiers {
        Frontiers::of(state.levels(), self.blocks)
    }

    /// Cell raised by writing `bit`, or `None` when an erase is required.
    pub fn target(&self, state: &CellState, bit: usize) -> Option<usize> {
        let cells = state.levels();
        let q = self.params.q;
        let half = self.block_len();
        let size = self.block_len();
        let fr = self.frontiers(state);
        let local = bit % half;
        let (opened, next): (Vec<usize>, Option<usize>) = if bit < half {
            ((0..fr.lower_len).collect(), Some(fr.lower_len))
        } else {
            ((fr.upper_start..self.blocks).rev().collect(), fr.upper_start.checked_sub(1))
        };
        for b in opened {
            if let Some(c) = block_target(self.block(cells, b), local, q) {
                return Some(b * size + c);
            }
        }
        if fr.gap() < 2 {
            return None;
        }
        let b = next?;
        block_target(self.block(cells, b), local, q).map(|c| b * size + c)
    }

    /// Active blocks on each side.
    pub fn active_blocks(&self, state: &CellState) -> ActiveBlocks {
        let fr = self.frontiers(state);
        let q = self.params.q;
        let active = |b: &usize| status(self.block(state.levels(), *b), q) == BlockStatus::Active;
        ActiveBlocks {
            lower: (0..fr.lower_len).filter(active).count(),
            upper: (fr.upper_start..self.blocks).filter(active).count(),
        }
    }

    /// Active-block budget for one side: two for two-cell blocks, else
    /// `3 * 2^(D-2)`.
    pub fn side_budget(&self) -> usize {
        if self.dim == 2 {
            2
        } else {
            3 << (self.dim - 2)
        }
    }

    /// Active-block budget for the whole box: both sides at their limit.
    pub fn total_budget(&self) -> usize {
        2 * self.side_budget()
    }

    /// Floor `n(q-1) - (2 A_{D-1} + 2^(D-1)(q-1))`: the active-block loss
    /// of both sides plus one untouched separation block.
    pub fn conservative_floor(&self) -> i64 {
        let q = i64::from(self.params.q);
        self.params.capacity() as i64
            - (2 * bounds::loss_budget_a(self.dim - 1, q) + (1i64 << (self.dim - 1)) * (q - 1))
    }

    /// `n(q-1)` minus the closed-form deficiency.
    pub fn formula_guarantee(&self) -> i64 {
        let q = i64::from(self.params.q);
        let delta = bounds::thm3_deficiency(1 << self.dim, q).expect("k is a power of two >= 4");
        self.params.capacity() as i64 - delta
    }
}

impl FlashCode for EnhancedCode {
    fn name(&self) -> &str {
        "enhanced"
    }

    fn params(&self) -> &Params {
        &self.params
    }

    fn decode(&self, state: &CellState) -> VariableVector {
        let cells = state.levels();
        let q = self.params.q;
        let half = self.block_len();
        let fr = self.frontiers(state);
        let mut out = VariableVector::zeros(self.params.k);
        for b in 0..fr.lower_len {
            out.xor_at(0, &block_decode(self.block(cells, b), q));
        }
        for b in fr.upper_start..self.blocks {
            out.xor_at(half, &block_decode(self.block(cells, b), q));
        }
        out
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
