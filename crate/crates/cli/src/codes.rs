//! Builds a code instance from command-line shape flags.

use std::sync::atomic::{AtomicUsize, Ordering};

use clap::{Args, ValueEnum};
use flashcode::basic::BasicBoxCode;
use flashcode::enhanced::EnhancedCode;
use flashcode::oracle::Monitor;
use flashcode::twobit::TwoBitCode;
use flashcode::virtualize::{to_virtual, virtualize_even_q};
use flashcode::{CellState, FlashCode, FlashError};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CodeKind {
    Twobit,
    Basic,
    Enhanced,
}

#[derive(Debug, Clone, Args)]
pub struct CodeArgs {
    /// Construction to run.
    #[arg(long, value_enum)]
    pub code: CodeKind,
    /// Levels per cell. Even values run basic and enhanced codes on cell
    /// pairs with 2q-1 virtual levels.
    #[arg(long)]
    pub q: u8,
    /// Cell count (twobit).
    #[arg(long)]
    pub n: Option<usize>,
    /// Box dimensions, comma separated (basic).
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Stored bits, a power of two >= 4 (enhanced).
    #[arg(long)]
    pub k: Option<usize>,
    /// Number of top-level blocks (enhanced).
    #[arg(long)]
    pub nd: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamsRecord {
    pub q: u8,
    pub k: usize,
    pub n: usize,
    pub dims: Vec<usize>,
}

pub struct Built {
    pub code: Box<dyn FlashCode>,
    /// Closed-form guarantee: exact for twobit, a floor for the others.
    pub formula: i64,
    /// Enhanced code on virtual cells, and whether states are paired.
    pub enhanced: Option<(EnhancedCode, bool)>,
}

impl Built {
    pub fn params(&self) -> ParamsRecord {
        let p = self.code.params();
        ParamsRecord { q: p.q, k: p.k, n: p.n(), dims: p.dims.clone() }
    }
}

fn required<T: Copy>(v: Option<T>, flag: &str, code: &str) -> Result<T, FlashError> {
    v.ok_or_else(|| FlashError::Usage(format!("--code {code} needs --{flag}")))
}

pub fn build(args: &CodeArgs) -> Result<Built, FlashError> {
    let q = args.q;
    let even = q.is_multiple_of(2);
    match args.code {
        CodeKind::Twobit => {
            if args.k.is_some_and(|k| k != 2) {
                return Err(FlashError::Usage("twobit stores exactly k = 2 bits".into()));
            }
            let code = TwoBitCode::new(required(args.n, "n", "twobit")?, q)?;
            let formula = code.guarantee() as i64;
            Ok(Built { code: Box::new(code), formula, enhanced: None })
        }
        CodeKind::Basic => {
            let dims = args
                .dims
                .clone()
                .ok_or_else(|| FlashError::Usage("--code basic needs --dims".into()))?;
            if even {
                let code = virtualize_even_q(q, |iq| BasicBoxCode::new(dims, iq))?;
                let formula = code.inner().formula_guarantee();
                Ok(Built { code: Box::new(code), formula, enhanced: None })
            } else {
                let code = BasicBoxCode::new(dims, q)?;
                let formula = code.formula_guarantee();
                Ok(Built { code: Box::new(code), formula, enhanced: None })
            }
        }
        CodeKind::Enhanced => {
            let k = required(args.k, "k", "enhanced")?;
            let nd = required(args.nd, "nd", "enhanced")?;
            if even {
                let code = virtualize_even_q(q, |iq| EnhancedCode::with_bits(k, nd, iq))?;
                let formula = code.inner().conservative_floor();
                let inner = code.inner().clone();
                Ok(Built { code: Box::new(code), formula, enhanced: Some((inner, true)) })
            } else {
                let code = EnhancedCode::with_bits(k, nd, q)?;
                let formula = code.conservative_floor();
                let inner = code.clone();
                Ok(Built { code: Box::new(code), formula, enhanced: Some((inner, false)) })
            }
        }
    }
}

/// Tracks the most active blocks seen and flags states over budget.
pub struct BlockWatch<'a> {
    code: &'a EnhancedCode,
    paired: bool,
    max: AtomicUsize,
}

impl<'a> BlockWatch<'a> {
    pub fn new(code: &'a EnhancedCode, paired: bool) -> Self {
        BlockWatch { code, paired, max: AtomicUsize::new(0) }
    }

    pub fn max(&self) -> usize {
        self.max.load(Ordering::Relaxed)
    }
}

impl Monitor for BlockWatch<'_> {
    fn name(&self) -> &str {
        "active-blocks"
    }

    fn check(&self, state: &CellState) -> Option<String> {
        let s = if self.paired { to_virtual(state) } else { state.clone() };
        let a = self.code.active_blocks(&s);
        self.max.fetch_max(a.total(), Ordering::Relaxed);
        flashcode::oracle::ActiveBlockMonitor::new(self.code).check(&s)
    }
}
