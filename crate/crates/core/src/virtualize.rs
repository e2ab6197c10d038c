//! Even-`q` support: pairs of physical cells act as one virtual cell with
//! `2q - 1` levels.
//!
//! Virtual cell `m` is physical cells `2m` and `2m + 1` with level equal to
//! their sum. Raising it fills the first cell to `q - 1` before touching the
//! second, so every reachable physical pair is canonical and a single
//! virtual step is a single physical step.

use crate::error::{FlashError, Result};
use crate::model::{check_write_args, CellState, FlashCode, Params, VariableVector, WriteOutcome};

/// Virtual level of the pair `(a, b)`.
pub fn virtual_level(a: u8, b: u8) -> u8 {
    a + b
}

/// Canonical physical pair holding virtual level `v`.
pub fn physical_pair(v: u8, q: u8) -> (u8, u8) {
    let full = q - 1;
    if v <= full {
        (v, 0)
    } else {
        (full, v - full)
    }
}

/// Physical state after one virtual increment of the pair `(a, b)`.
pub fn virtual_increment(a: u8, b: u8, q: u8) -> (u8, u8) {
    if a < q - 1 {
        (a + 1, b)
    } else {
        (a, b + 1)
    }
}

pub fn to_virtual(state: &CellState) -> CellState {
    CellState::new(state.levels().chunks(2).map(|p| virtual_level(p[0], p[1])).collect())
}

pub fn to_physical(state: &CellState, q: u8) -> CellState {
    let mut out = Vec::with_capacity(state.len() * 2);
    for &v in state.levels() {
        let (a, b) = physical_pair(v, q);
        out.push(a);
        out.push(b);
    }
    CellState::new(out)
}

/// An odd-level code run over virtual cells of an even-`q` memory.
#[derive(Debug, Clone)]
pub struct Virtualized<C> {
    inner: C,
    params: Params,
}

impl<C: FlashCode> Virtualized<C> {
    /// Wraps `inner`, which must be built for `2q - 1` levels.
    pub fn new(inner: C, q: u8) -> Result<Self> {
        if !q.is_multiple_of(2) || q < 2 {
            return Err(FlashError::usage(format!("virtualization needs even q, got {q}")));
        }
        let ip = inner.params();
        if u16::from(ip.q) != 2 * u16::from(q) - 1 {
            return Err(FlashError::usage(format!(
                "inner code has {} levels, expected {}",
                ip.q,
                2 * u16::from(q) - 1
            )));
        }
        let mut dims = vec![2];
        dims.extend_from_slice(&ip.dims);
        let params = Params::new(q, ip.k, dims)?;
        Ok(Virtualized { inner, params })
    }

    pub fn inner(&self) -> &C {
        &self.inner
    }
}

/// Builds an odd-level code for `2q - 1` levels with `make` and runs it on
/// `q`-level cells in pairs. Fails for odd `q`.
pub fn virtualize_even_q<C, F>(q: u8, make: F) -> Result<Virtualized<C>>
where
    C: FlashCode,
    F: FnOnce(u8) -> Result<C>,
{
    if !q.is_multiple_of(2) {
        return Err(FlashError::usage(format!("virtualization needs even q, got {q}")));
    }
    let inner_q = q
        .checked_mul(2)
        .map(|v| v - 1)
        .ok_or_else(|| FlashError::usage(format!("q = {q} too large to virtualize")))?;
    Virtualized::new(make(inner_q)?, q)
}

/// Checks that a physical cell count can be paired up.
pub fn check_pairable(n: usize) -> Result<usize> {
    if !n.is_multiple_of(2) {
        return Err(FlashError::usage(format!("odd physical cell count {n} cannot be paired")));
    }
    Ok(n / 2)
}

impl<C: FlashCode> FlashCode for Virtualized<C> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn params(&self) -> &Params {
        &self.params
    }

    fn decode(&self, state: &CellState) -> VariableVector {
        self.inner.decode(&to_virtual(state))
    }

    fn write(&self, state: &CellState, bit: usize) -> Result<WriteOutcome> {
        check_write_args(&self.params, state, bit)?;
        Ok(match self.inner.write(&to_virtual(state), bit)? {
            WriteOutcome::Next(v) => WriteOutcome::Next(to_physical(&v, self.params.q)),
            WriteOutcome::EraseRequired => WriteOutcome::EraseRequired,
        })
    }

    fn unit_increment(&self) -> bool {
        self.inner.unit_increment()
    }
}
