//! Shared data model: cell states, variable vectors, box geometry and the
//! rewriting-code contract implemented by every construction.
//!
//! A code stores `k` bits in `n` cells of `q` levels. A write flips one bit
//! and may only raise cell levels; when no admissible raise exists the code
//! answers [`WriteOutcome::EraseRequired`]. Codes are stateless: both
//! [`FlashCode::decode`] and [`FlashCode::write`] are pure functions of the
//! cell state, which is what lets the oracle memoize on states alone.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{FlashError, Result};

/// Shape of a code: `q` levels per cell, `k` stored bits, and the box
/// dimensions whose product is the cell count.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Params {
    pub q: u8,
    pub k: usize,
    pub dims: Vec<usize>,
}

impl Params {
    pub fn new(q: u8, k: usize, dims: Vec<usize>) -> Result<Self> {
        if q < 2 {
            return Err(FlashError::usage(format!("q must be at least 2, got {q}")));
        }
        if k == 0 {
            return Err(FlashError::usage("k must be at least 1"));
        }
        if dims.is_empty() || dims.contains(&0) {
            return Err(FlashError::usage(format!(
                "dims must be non-empty and positive, got {dims:?}"
            )));
        }
        Ok(Params { q, k, dims })
    }

    /// Linear (one-dimensional) layout of `n` cells.
    pub fn linear(q: u8, k: usize, n: usize) -> Result<Self> {
        Params::new(q, k, vec![n])
    }

    /// Number of cells.
    pub fn n(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn max_level(&self) -> u8 {
        self.q - 1
    }

    /// `n(q-1)`, the trivial upper bound on the number of writes.
    pub fn capacity(&self) -> u64 {
        self.n() as u64 * u64::from(self.q - 1)
    }
}

/// Cell levels, each in `[0, q-1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellState(Vec<u8>);

impl CellState {
    pub fn new(levels: Vec<u8>) -> Self {
        CellState(levels)
    }

    /// Builds a state after checking every level against `q`.
    pub fn checked(levels: Vec<u8>, q: u8) -> Result<Self> {
        if let Some((j, &l)) = levels.iter().enumerate().find(|(_, &l)| l >= q) {
            return Err(FlashError::usage(format!(
                "cell {j} has level {l}, outside [0, {}]",
                q - 1
            )));
        }
        Ok(CellState(levels))
    }

    pub fn zeros(n: usize) -> Self {
        CellState(vec![0; n])
    }

    pub fn levels(&self) -> &[u8] {
        &self.0
    }

    pub fn levels_mut(&mut self) -> &mut [u8] {
        &mut self.0
    }

    pub fn into_levels(self) -> Vec<u8> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weight(&self) -> u64 {
        weight(self)
    }

    /// Copy of the state with cell `idx` raised by one.
    pub fn incremented(&self, idx: usize) -> CellState {
        let mut next = self.clone();
        next.0[idx] += 1;
        next
    }
}

impl From<Vec<u8>> for CellState {
    fn from(levels: Vec<u8>) -> Self {
        CellState(levels)
    }
}

impl fmt::Display for CellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl FromStr for CellState {
    type Err = FlashError;

    fn from_str(s: &str) -> Result<Self> {
        s.split_whitespace()
            .map(|tok| {
                tok.parse::<u8>()
                    .map_err(|_| FlashError::Parse(format!("bad cell level {tok:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(CellState)
    }
}

/// The `k` stored bits. Index 0 is printed first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VariableVector(Vec<bool>);

impl VariableVector {
    pub fn zeros(k: usize) -> Self {
        VariableVector(vec![false; k])
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        VariableVector(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn flipped(&self, i: usize) -> VariableVector {
        let mut v = self.clone();
        v.0[i] = !v.0[i];
        v
    }

    /// XORs `other` into this vector starting at bit `offset`.
    pub fn xor_at(&mut self, offset: usize, other: &[bool]) {
        for (dst, &src) in self.0[offset..offset + other.len()].iter_mut().zip(other) {
            *dst ^= src;
        }
    }
}

impl fmt::Display for VariableVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for VariableVector {
    type Err = FlashError;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(FlashError::Parse(format!("bad bit {c:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(VariableVector)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WriteOutcome {
    Next(CellState),
    EraseRequired,
}

impl WriteOutcome {
    pub fn next(self) -> Option<CellState> {
        match self {
            WriteOutcome::Next(s) => Some(s),
            WriteOutcome::EraseRequired => None,
        }
    }

    pub fn is_erase(&self) -> bool {
        matches!(self, WriteOutcome::EraseRequired)
    }
}

/// A flash code: a decoding map and a transition map over cell states.
///
/// Implementations hold no mutable state and must be shareable across
/// threads.
pub trait FlashCode: Send + Sync {
    /// Construction name as used on the command line.
    fn name(&self) -> &str;

    fn params(&self) -> &Params;

    fn decode(&self, state: &CellState) -> VariableVector;

    /// Writes bit `bit` (flips it). `bit` must be below `k` and `state`
    /// must have `n` cells.
    fn write(&self, state: &CellState, bit: usize) -> Result<WriteOutcome>;

    /// True when every successful write raises exactly one cell by one.
    fn unit_increment(&self) -> bool {
        false
    }

    fn initial_state(&self) -> CellState {
        initial_state(self.params())
    }
}

pub(crate) fn check_write_args(params: &Params, state: &CellState, bit: usize) -> Result<()> {
    if bit >= params.k {
        return Err(FlashError::usage(format!(
            "bit index {bit} out of range for k = {}",
            params.k
        )));
    }
    if state.len() != params.n() {
        return Err(FlashError::usage(format!(
            "state has {} cells, code expects {}",
            state.len(),
            params.n()
        )));
    }
    Ok(())
}

pub fn weight(state: &CellState) -> u64 {
    state.levels().iter().map(|&l| u64::from(l)).sum()
}

/// True iff `to` is reachable from `from` by raising cells and is strictly
/// heavier.
pub fn ascent_check(from: &CellState, to: &CellState) -> Result<bool> {
    if from.len() != to.len() {
        return Err(FlashError::usage(format!(
            "length mismatch: {} vs {}",
            from.len(),
            to.len()
        )));
    }
    let monotone = from.levels().iter().zip(to.levels()).all(|(a, b)| b >= a);
    Ok(monotone && weight(to) > weight(from))
}

pub fn initial_state(params: &Params) -> CellState {
    CellState::zeros(params.n())
}

/// Row-major index with the first dimension varying fastest and the last
/// slowest, so each slice along the last dimension is a contiguous range.
pub fn linearize(dims: &[usize], coords: &[usize]) -> Result<usize> {
    if dims.len() != coords.len() {
        return Err(FlashError::usage(format!(
            "expected {} coordinates, got {}",
            dims.len(),
            coords.len()
        )));
    }
    let mut index = 0;
    for (&d, &c) in dims.iter().zip(coords).rev() {
        if c >= d {
            return Err(FlashError::usage(format!(
                "coordinate {c} out of range for extent {d}"
            )));
        }
        index = index * d + c;
    }
    Ok(index)
}

pub fn delinearize(dims: &[usize], index: usize) -> Result<Vec<usize>> {
    let n: usize = dims.iter().product();
    if index >= n {
        return Err(FlashError::usage(format!(
            "index {index} out of range for {n} cells"
        )));
    }
    let mut rest = index;
    Ok(dims
        .iter()
        .map(|&d| {
            let c = rest % d;
            rest /= d;
            c
        })
        .collect())
}
