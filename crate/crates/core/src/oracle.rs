//! Exhaustive verification of flash codes.
//!
//! A code guarantees `t` writes when every sequence of `t` bit writes from
//! the all-zero state succeeds. The largest such `t` is the value of a game
//! against an adversary who picks the bit at each step:
//!
//! ```text
//! f(s) = min over b of { 0 if write(s, b) needs an erase, else 1 + f(write(s, b)) }
//! ```
//!
//! Codes are pure functions of the cell state, so `f` is memoized on states.
//! Every transition expanded along the way is checked against the write
//! contract (decode flips exactly the written bit, levels only rise, and
//! for unit-increment codes exactly one cell rises by one) and against any
//! registered [`Monitor`].

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};

use dashmap::DashMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::enhanced::EnhancedCode;
use crate::error::FlashError;
use crate::model::{ascent_check, CellState, FlashCode, WriteOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    DecodeFlip,
    Ascent,
    SingleIncrement,
    Monitor,
    InitialDecode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub state: String,
    pub bit: Option<usize>,
    pub kind: ViolationKind,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("state budget of {cap} memo entries exceeded")]
    ResourceCap { cap: usize },
    #[error("contract violation ({:?}) at state [{}] bit {:?}: {}", .0.kind, .0.state, .0.bit, .0.detail)]
    Contract(Violation),
    #[error(transparent)]
    Code(#[from] FlashError),
}

/// An invariant checked on every state a search or walk reaches.
pub trait Monitor: Send + Sync {
    fn name(&self) -> &str;

    /// Returns a description of the breach, if any.
    fn check(&self, state: &CellState) -> Option<String>;
}

#[derive(Debug, Clone)]
pub struct OracleConfig {
    /// Maximum number of memoized states.
    pub max_states: usize,
    /// Worker threads; 1 runs on the calling thread.
    pub threads: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { max_states: 100_000_000, threads: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GameResult {
    pub t_star: u64,
    /// Adversarial bits: `t_star` successful writes, then one that needs an
    /// erase.
    pub witness: Vec<usize>,
    pub states_explored: usize,
    /// Largest number of reachable states sharing one weight.
    pub max_frontier: usize,
}

/// Checks one transition of `code` against the write contract.
pub fn check_transition(
    code: &dyn FlashCode,
    from: &CellState,
    bit: usize,
    to: &CellState,
) -> Option<Violation> {
    let fail = |kind, detail: String| {
        Some(Violation { state: from.to_string(), bit: Some(bit), kind, detail })
    };
    if !ascent_check(from, to).unwrap_or(false) {
        return fail(ViolationKind::Ascent, format!("-> [{to}] is not an ascent"));
    }
    if code.unit_increment() && to.weight() != from.weight() + 1 {
        return fail(ViolationKind::SingleIncrement, format!("-> [{to}] raises weight by {}", to.weight() - from.weight()));
    }
    let expect = code.decode(from).flipped(bit);
    let got = code.decode(to);
    if got != expect {
        return fail(ViolationKind::DecodeFlip, format!("-> [{to}] decodes {got}, expected {expect}"));
    }
    None
}

fn check_monitors(monitors: &[&dyn Monitor], state: &CellState) -> Option<Violation> {
    monitors.iter().find_map(|m| {
        m.check(state).map(|detail| Violation {
            state: state.to_string(),
            bit: None,
            kind: ViolationKind::Monitor,
            detail: format!("{}: {detail}", m.name()),
        })
    })
}

fn check_initial(code: &dyn FlashCode) -> Option<Violation> {
    let zero = code.initial_state();
    let v = code.decode(&zero);
    (v.bits().iter().any(|&b| b)).then(|| Violation {
        state: zero.to_string(),
        bit: None,
        kind: ViolationKind::InitialDecode,
        detail: format!("all-zero state decodes {v}"),
    })
}

struct Search<'a> {
    code: &'a dyn FlashCode,
    monitors: &'a [&'a dyn Monitor],
    memo: DashMap<CellState, u64>,
    cap: usize,
    parallel: bool,
    abort: AtomicBool,
}

/// Depth below which children are evaluated in parallel.
const PARALLEL_DEPTH: usize = 6;

impl Search<'_> {
    fn value(&self, state: &CellState, depth: usize) -> Result<u64, OracleError> {
        if let Some(v) = self.memo.get(state) {
            return Ok(*v);
        }
        if self.abort.load(Ordering::Relaxed) {
            return Err(OracleError::ResourceCap { cap: self.cap });
        }
        let k = self.code.params().k;
        let child = |bit: usize| -> Result<u64, OracleError> {
            match self.code.write(state, bit)? {
                WriteOutcome::EraseRequired => Ok(0),
                WriteOutcome::Next(next) => {
                    if let Some(v) = check_transition(self.code, state, bit, &next)
                        .or_else(|| check_monitors(self.monitors, &next))
                    {
                        return Err(OracleError::Contract(v));
                    }
                    Ok(1 + self.value(&next, depth + 1)?)
                }
            }
        };
        let best = if self.parallel && depth < PARALLEL_DEPTH {
            (0..k).into_par_iter().map(child).try_reduce(|| u64::MAX, |a, b| Ok(a.min(b)))?
        } else {
            // every bit is expanded so every transition gets checked
            let mut best = u64::MAX;
            for bit in 0..k {
                best = best.min(child(bit)?);
            }
            best
        };
        if self.memo.len() >= self.cap {
            self.abort.store(true, Ordering::Relaxed);
            return Err(OracleError::ResourceCap { cap: self.cap });
        }
        self.memo.insert(state.clone(), best);
        Ok(best)
    }
}

/// Exact number of writes `code` guarantees from the all-zero state.
pub fn exact_guarantee(code: &dyn FlashCode, config: &OracleConfig) -> Result<GameResult, OracleError> {
    exact_guarantee_monitored(code, &[], config)
}

pub fn exact_guarantee_monitored(
    code: &dyn FlashCode,
    monitors: &[&dyn Monitor],
    config: &OracleConfig,
) -> Result<GameResult, OracleError> {
    if let Some(v) = check_initial(code) {
        return Err(OracleError::Contract(v));
    }
    let search = Search {
        code,
        monitors,
        memo: DashMap::new(),
        cap: config.max_states,
        parallel: config.threads > 1,
        abort: AtomicBool::new(false),
    };
    let start = code.initial_state();
    let t_star = if search.parallel {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .expect("thread pool");
        pool.install(|| search.value(&start, 0))?
    } else {
        search.value(&start, 0)?
    };
    let memo = search.memo;
    let witness = extract_witness(code, &memo, &start)?;
    let mut layers: BTreeMap<u64, usize> = BTreeMap::new();
    for entry in memo.iter() {
        *layers.entry(entry.key().weight()).or_default() += 1;
    }
    Ok(GameResult {
        t_star,
        witness,
        states_explored: memo.len(),
        max_frontier: layers.values().copied().max().unwrap_or(0),
    })
}

/// Follows a minimizing bit from `start`, lowest index first.
fn extract_witness(
    code: &dyn FlashCode,
    memo: &DashMap<CellState, u64>,
    start: &CellState,
) -> Result<Vec<usize>, OracleError> {
    let k = code.params().k;
    let mut witness = Vec::new();
    let mut state = start.clone();
    loop {
        let target = *memo.get(&state).expect("every reachable state is memoized");
        let mut moved = false;
        for bit in 0..k {
            match code.write(&state, bit)? {
                WriteOutcome::EraseRequired if target == 0 => {
                    witness.push(bit);
                    return Ok(witness);
                }
                WriteOutcome::Next(next) if target > 0 && *memo.get(&next).expect("memoized") + 1 == target => {
                    witness.push(bit);
                    state = next;
                    moved = true;
                    break;
                }
                _ => {}
            }
        }
        assert!(moved, "no minimizing bit at [{state}]");
    }
}

/// Same game value without memoization. Exponential; for tiny codes only.
pub fn naive_guarantee(code: &dyn FlashCode) -> Result<u64, FlashError> {
    fn go(code: &dyn FlashCode, state: &CellState) -> Result<u64, FlashError> {
        let mut best = u64::MAX;
        for bit in 0..code.params().k {
            let v = match code.write(state, bit)? {
                WriteOutcome::EraseRequired => 0,
                WriteOutcome::Next(next) => 1 + go(code, &next)?,
            };
            best = best.min(v);
        }
        Ok(best)
    }
    go(code, &code.initial_state())
}

/// Outcome of replaying a bit sequence from the all-zero state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Replay {
    pub successful: usize,
    pub erased_at: Option<usize>,
    pub final_state: CellState,
}

pub fn replay(code: &dyn FlashCode, bits: &[usize]) -> Result<Replay, FlashError> {
    let mut state = code.initial_state();
    for (i, &bit) in bits.iter().enumerate() {
        match code.write(&state, bit)? {
            WriteOutcome::Next(next) => state = next,
            WriteOutcome::EraseRequired => {
                return Ok(Replay { successful: i, erased_at: Some(i), final_state: state })
            }
        }
    }
    Ok(Replay { successful: bits.len(), erased_at: None, final_state: state })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WalkReport {
    pub seed: u64,
    pub steps: u64,
    /// Successful writes before the first erase, if one happened.
    pub writes_until_erase: Option<u64>,
    pub violations: Vec<Violation>,
}

/// Writes uniformly random bits from the all-zero state until an erase is
/// needed or `steps` writes were attempted, checking every transition.
pub fn random_walk(code: &dyn FlashCode, steps: u64, seed: u64, monitors: &[&dyn Monitor]) -> WalkReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = WalkReport { seed, steps: 0, writes_until_erase: None, violations: Vec::new() };
    let mut state = code.initial_state();
    if steps > 0 {
        report.violations.extend(check_initial(code));
    }
    let k = code.params().k;
    while report.steps < steps {
        let bit = rng.gen_range(0..k);
        report.steps += 1;
        match code.write(&state, bit).expect("bit is in range") {
            WriteOutcome::EraseRequired => {
                report.writes_until_erase = Some(report.steps - 1);
                break;
            }
            WriteOutcome::Next(next) => {
                report.violations.extend(check_transition(code, &state, bit, &next));
                report.violations.extend(check_monitors(monitors, &next));
                state = next;
            }
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CampaignReport {
    pub seed: u64,
    pub steps: u64,
    pub erasures: u64,
    /// Fewest successful writes seen before an erase.
    pub min_writes_until_erase: Option<u64>,
    pub violations: Vec<Violation>,
}

/// Random walks restarted from zeros after every erase until `steps`
/// writes were attempted in total. Walk `i` uses seed `seed + i`.
pub fn walk_campaign(code: &dyn FlashCode, steps: u64, seed: u64, monitors: &[&dyn Monitor]) -> CampaignReport {
    let mut report = CampaignReport { seed, steps: 0, erasures: 0, min_writes_until_erase: None, violations: Vec::new() };
    let mut walk_seed = seed;
    while report.steps < steps {
        let walk = random_walk(code, steps - report.steps, walk_seed, monitors);
        walk_seed = walk_seed.wrapping_add(1);
        report.steps += walk.steps;
        report.violations.extend(walk.violations);
        if let Some(w) = walk.writes_until_erase {
            report.erasures += 1;
            report.min_writes_until_erase = Some(report.min_writes_until_erase.map_or(w, |m| m.min(w)));
        }
    }
    report
}

/// Active top-level blocks of an enhanced-code state on each side.
pub fn monitor_active_blocks(state: &CellState, code: &EnhancedCode) -> crate::enhanced::ActiveBlocks {
    code.active_blocks(state)
}

/// Flags states with more active blocks than the loss analysis allows, per
/// side and in total, and any state without a separation block.
pub struct ActiveBlockMonitor<'a> {
    code: &'a EnhancedCode,
}

impl<'a> ActiveBlockMonitor<'a> {
    pub fn new(code: &'a EnhancedCode) -> Self {
        ActiveBlockMonitor { code }
    }
}

impl Monitor for ActiveBlockMonitor<'_> {
    fn name(&self) -> &str {
        "active-blocks"
    }

    fn check(&self, state: &CellState) -> Option<String> {
        let a = monitor_active_blocks(state, self.code);
        let side = self.code.side_budget();
        if a.lower > side || a.upper > side {
            return Some(format!("{} lower / {} upper active blocks, budget {side} per side", a.lower, a.upper));
        }
        if a.total() > self.code.total_budget() {
            return Some(format!("{} active blocks, budget {}", a.total(), self.code.total_budget()));
        }
        let gap = self.code.frontiers(state).gap();
        (gap < 1).then(|| format!("no separation block left (gap {gap})"))
    }
}

/// Same as [`ActiveBlockMonitor`] for an enhanced code running on paired
/// even-level cells.
pub struct VirtualActiveBlockMonitor<'a> {
    code: &'a EnhancedCode,
}

impl<'a> VirtualActiveBlockMonitor<'a> {
    pub fn new(code: &'a EnhancedCode) -> Self {
        VirtualActiveBlockMonitor { code }
    }
}

impl Monitor for VirtualActiveBlockMonitor<'_> {
    fn name(&self) -> &str {
        "active-blocks"
    }

    fn check(&self, state: &CellState) -> Option<String> {
        ActiveBlockMonitor::new(self.code).check(&crate::virtualize::to_virtual(state))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Params, VariableVector};
    use crate::twobit::TwoBitCode;

    /// Stores one bit per cell by parity; guarantees `q - 1` writes.
    struct ParityCode(Params);

    impl FlashCode for ParityCode {
        fn name(&self) -> &str {
            "parity"
        }
        fn params(&self) -> &Params {
            &self.0
        }
        fn decode(&self, s: &CellState) -> VariableVector {
            VariableVector::from_bits(s.levels().iter().map(|l| l % 2 == 1).collect())
        }
        fn write(&self, s: &CellState, bit: usize) -> crate::Result<WriteOutcome> {
            Ok(if s.levels()[bit] + 1 < self.0.q {
                WriteOutcome::Next(s.incremented(bit))
            } else {
                WriteOutcome::EraseRequired
            })
        }
        fn unit_increment(&self) -> bool {
            true
        }
    }

    /// Breaks decode-flip by writing bit 1 into cell 0.
    struct Broken(Params);

    impl FlashCode for Broken {
        fn name(&self) -> &str {
            "broken"
        }
        fn params(&self) -> &Params {
            &self.0
        }
        fn decode(&self, s: &CellState) -> VariableVector {
            VariableVector::from_bits(s.levels().iter().map(|l| l % 2 == 1).collect())
        }
        fn write(&self, s: &CellState, _bit: usize) -> crate::Result<WriteOutcome> {
            Ok(if s.levels()[0] + 1 < self.0.q {
                WriteOutcome::Next(s.incremented(0))
            } else {
                WriteOutcome::EraseRequired
            })
        }
    }

    #[test]
    fn parity_code_value() {
        let code = ParityCode(Params::linear(4, 2, 2).unwrap());
        let r = exact_guarantee(&code, &OracleConfig::default()).unwrap();
        // the adversary hammers one cell: q-1 writes, then an erase
        assert_eq!(r.t_star, 3);
        assert_eq!(r.witness, vec![0, 0, 0, 0]);
        assert_eq!(r.states_explored, 16);
        assert_eq!(naive_guarantee(&code).unwrap(), 3);
    }

    #[test]
    fn contract_violation_is_reported() {
        let code = Broken(Params::linear(3, 2, 2).unwrap());
        match exact_guarantee(&code, &OracleConfig::default()) {
            Err(OracleError::Contract(v)) => {
                assert_eq!(v.kind, ViolationKind::DecodeFlip);
                assert_eq!(v.bit, Some(1));
            }
            other => panic!("expected a contract violation, got {other:?}"),
        }
        let walk = random_walk(&code, 100, 3, &[]);
        assert!(!walk.violations.is_empty());
    }

    #[test]
    fn resource_cap() {
        let code = TwoBitCode::new(3, 5).unwrap();
        let cfg = OracleConfig { max_states: 5, threads: 1 };
        assert_eq!(exact_guarantee(&code, &cfg), Err(OracleError::ResourceCap { cap: 5 }));
    }

    #[test]
    fn twobit_small() {
        let code = TwoBitCode::new(2, 3).unwrap();
        let r = exact_guarantee(&code, &OracleConfig::default()).unwrap();
        assert_eq!(r.t_star, 3);
        assert_eq!(naive_guarantee(&code).unwrap(), 3);
        let rep = replay(&code, &r.witness).unwrap();
        assert_eq!((rep.successful, rep.erased_at), (3, Some(3)));
    }

    #[test]
    fn parallel_matches_serial() {
        let code = TwoBitCode::new(4, 5).unwrap();
        let serial = exact_guarantee(&code, &OracleConfig::default()).unwrap();
        let parallel = exact_guarantee(&code, &OracleConfig { threads: 4, ..Default::default() }).unwrap();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn walks_are_deterministic() {
        let code = TwoBitCode::new(3, 5).unwrap();
        assert_eq!(random_walk(&code, 0, 1, &[]).steps, 0);
        let a = random_walk(&code, 10_000, 1, &[]);
        assert_eq!(a, random_walk(&code, 10_000, 1, &[]));
        assert!(a.violations.is_empty());
        assert!(a.writes_until_erase.unwrap() >= 10);
        let c = walk_campaign(&code, 5_000, 9, &[]);
        assert_eq!(c.steps, 5_000);
        assert!(c.erasures > 0 && c.min_writes_until_erase.unwrap() >= 10);
    }
}
