//! Closed-form limits and guarantees, all in exact integer or rational
//! arithmetic.
//!
//! `ell` is the alphabet size of a stored variable (2 for bits).

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{FlashError, Result};

/// Largest number of writes any code on `n` cells of `q` levels can
/// guarantee for `k` variables over an alphabet of size `ell`.
pub fn thm1_upper(n: i64, k: i64, ell: i64, q: i64) -> i64 {
    let m = k * (ell - 1) - 1;
    if n >= m {
        (n - m) * (q - 1) + m * (q - 1) / 2
    } else {
        n * (q - 1) / 2
    }
}

/// Smallest possible write deficiency `n(q-1) - t`.
pub fn cor1_deficiency_lb(n: i64, k: i64, ell: i64, q: i64) -> i64 {
    let m = k * (ell - 1) - 1;
    let levels = if n >= m { m * (q - 1) } else { n * (q - 1) };
    levels - levels / 2
}

/// Unused levels in the active blocks of the `2^i`-bit block code.
///
/// `A_1 = 3(q-1) - 1` and `A_2 = 10(q-1)` come from the two- and four-cell
/// analyses; from `i = 3` on `A_i = 2 A_{i-1} + 3(q-1) 4^i / 4`.
pub fn loss_budget_a(i: u32, q: i64) -> i64 {
    match i {
        0 => panic!("loss budget is defined for i >= 1"),
        1 => 3 * (q - 1) - 1,
        2 => 10 * (q - 1),
        _ => 2 * loss_budget_a(i - 1, q) + 2 * empty_subblock_loss(i, q),
    }
}

/// `B_i = 3 (q-1) 4^i / 8`: levels left in the empty right halves of one
/// side's active blocks.
pub fn empty_subblock_loss(i: u32, q: i64) -> i64 {
    3 * (q - 1) * (1i64 << (2 * i)) / 8
}

/// Closed form `3/2 (q-1) 4^i - 7/2 (q-1) 2^i`, valid for `i >= 2`.
pub fn loss_budget_a_closed(i: u32, q: i64) -> Result<i64> {
    if i < 2 {
        return Err(FlashError::usage(format!("closed form needs i >= 2, got {i}")));
    }
    let p = 1i64 << i;
    Ok((q - 1) * (3 * p * p - 7 * p) / 2)
}

/// Write deficiency of the enhanced code for `k = 2^D` bits.
///
/// Odd `q`: `3/4 (q-1) k^2 - 7/2 (q-1) k + 1` for `D >= 3` and
/// `2 A_1 + 1` for `D = 2`. Even `q` runs on `2q - 1` virtual levels, which
/// doubles the `(q-1)` factor.
pub fn thm3_deficiency(k: u64, q: i64) -> Result<i64> {
    if k < 4 || !k.is_power_of_two() {
        return Err(FlashError::usage(format!("k must be a power of two >= 4, got {k}")));
    }
    if q < 2 {
        return Err(FlashError::usage(format!("q must be at least 2, got {q}")));
    }
    let odd_q = if q % 2 == 1 { q } else { 2 * q - 1 };
    let d = k.trailing_zeros();
    if d == 2 {
        return Ok(2 * loss_budget_a(1, odd_q) + 1);
    }
    let k = k as i64;
    Ok((odd_q - 1) * (3 * k * k - 14 * k) / 4 + 1)
}

/// Guaranteed writes of the basic box code with the given dimensions.
/// May be negative for small boxes.
pub fn basic_guarantee(dims: &[usize], q: i64) -> i64 {
    let d = dims.len();
    let prod = |upto: usize| dims[..upto].iter().map(|&n| n as i64 - 1).product::<i64>() * (q - 1);
    let separation: i64 = (1..d).map(|i| (1i64 << (i - 1)) * (prod(d - i) - 1)).sum();
    prod(d) - separation - (1i64 << (d - 1)) * (q - 2)
}

/// `t / (n(q-1))`.
pub fn asymptotic_ratio(t: i64, n: i64, q: i64) -> Ratio<i64> {
    Ratio::new(t, n * (q - 1))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundReport {
    pub n: i64,
    pub k: i64,
    pub ell: i64,
    pub q: i64,
    pub t_upper: i64,
    pub deficiency_lb: i64,
    /// Guarantee of the matching construction, if one applies.
    pub guarantee: Option<i64>,
    /// `t_upper / (n(q-1))` as `num/den`.
    pub ratio: String,
}

impl BoundReport {
    pub fn new(n: i64, k: i64, ell: i64, q: i64) -> BoundReport {
        let t_upper = thm1_upper(n, k, ell, q);
        let ratio = asymptotic_ratio(t_upper, n, q);
        BoundReport {
            n,
            k,
            ell,
            q,
            t_upper,
            deficiency_lb: cor1_deficiency_lb(n, k, ell, q),
            guarantee: construction_guarantee(n, k, ell, q),
            ratio: format!("{}/{}", ratio.numer(), ratio.denom()),
        }
    }

    pub const CSV_HEADER: &'static str = "n,k,ell,q,t_upper,deficiency_lb,guarantee";

    pub fn csv_row(&self) -> String {
        let g = self.guarantee.map(|g| g.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{}",
            self.n, self.k, self.ell, self.q, self.t_upper, self.deficiency_lb, g
        )
    }
}

/// Closed-form guarantee of the construction that fits `(n, k, q)`: the
/// two-bit code for `k = 2`, the enhanced code for larger powers of two
/// when `n` splits into at least three blocks.
pub fn construction_guarantee(n: i64, k: i64, ell: i64, q: i64) -> Option<i64> {
    if ell != 2 || n < 1 || q < 2 {
        return None;
    }
    if k == 2 {
        return (q >= 3).then(|| (n - 1) * (q - 1) + (q - 1) / 2);
    }
    if k < 4 || !(k as u64).is_power_of_two() {
        return None;
    }
    // even q pairs cells, so each block takes twice as many
    let block = if q % 2 == 1 { k / 2 } else { k };
    if n % block != 0 || n / block < 3 {
        return None;
    }
    Some(n * (q - 1) - thm3_deficiency(k as u64, q).ok()?)
}
