//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run with `cargo test -p flashcode --test acceptance`.

use std::collections::{HashMap, VecDeque};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use flashcode::basic::BasicBoxCode;
use flashcode::block::{ci_write, classify, status, BlockStatus, BlockWrite, Dedication};
use flashcode::bounds::{
    basic_guarantee, loss_budget_a, loss_budget_a_closed, thm1_upper, thm3_deficiency,
};
use flashcode::enhanced::EnhancedCode;
use flashcode::oracle::{
    exact_guarantee_monitored, naive_guarantee, replay, walk_campaign, ActiveBlockMonitor,
    GameResult, Monitor, OracleConfig, VirtualActiveBlockMonitor,
};
use flashcode::twobit::{guarantee2, TwoBitCode};
use flashcode::virtualize::{to_virtual, virtualize_even_q};
use flashcode::{CellState, FlashCode};

/// Every comparison below is exact integer arithmetic.
const TOLERANCE: i64 = 0;
const WALK_STEPS_TOTAL: u64 = 1_000_000;
const WALK_SEED: u64 = 20_240_501;

struct Outcome {
    pass: bool,
    detail: String,
}

fn ok(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn oracle(code: &dyn FlashCode, monitors: &[&dyn Monitor]) -> Result<GameResult, String> {
    let cfg = OracleConfig { threads: 4, ..OracleConfig::default() };
    exact_guarantee_monitored(code, monitors, &cfg).map_err(|e| format!("{} {:?}: {e}", code.name(), code.params().dims))
}

fn upper(code: &dyn FlashCode) -> i64 {
    let p = code.params();
    thm1_upper(p.n() as i64, p.k as i64, 2, i64::from(p.q))
}

/// Records the largest active-block count seen.
struct MaxActive<'a> {
    code: &'a EnhancedCode,
    virtual_cells: bool,
    max: AtomicUsize,
}

impl<'a> MaxActive<'a> {
    fn new(code: &'a EnhancedCode, virtual_cells: bool) -> Self {
        MaxActive { code, virtual_cells, max: AtomicUsize::new(0) }
    }

    fn get(&self) -> usize {
        self.max.load(Ordering::Relaxed)
    }
}

impl Monitor for MaxActive<'_> {
    fn name(&self) -> &str {
        "max-active"
    }

    fn check(&self, state: &CellState) -> Option<String> {
        let s = if self.virtual_cells { to_virtual(state) } else { state.clone() };
        self.max.fetch_max(self.code.active_blocks(&s).total(), Ordering::Relaxed);
        None
    }
}

fn two_bit_optimality() -> Result<Outcome, String> {
    let mut cases: Vec<(usize, u8)> = Vec::new();
    for n in [2, 3, 4] {
        for q in [3, 5, 7] {
            cases.push((n, q));
        }
    }
    for n in [2, 3] {
        for q in [4, 6] {
            cases.push((n, q));
        }
    }
    let mut bad = Vec::new();
    for &(n, q) in &cases {
        let code = TwoBitCode::new(n, q).map_err(|e| e.to_string())?;
        let t = oracle(&code, &[])?.t_star as i64;
        let expect = ((n - 1) * (usize::from(q) - 1) + (usize::from(q) - 1) / 2) as i64;
        if (t - expect).abs() > TOLERANCE || t > upper(&code) {
            bad.push(format!("(n={n},q={q}) t*={t} expected {expect}"));
        }
    }
    Ok(ok(bad.is_empty(), format!("{} cases exact; mismatches: {bad:?}", cases.len())))
}

fn basic_floor() -> Result<Outcome, String> {
    let mut parts = Vec::new();
    let mut pass = true;
    for (dims, floor) in [(vec![3, 4], 7), (vec![2, 4], 3)] {
        let code = BasicBoxCode::new(dims.clone(), 3).map_err(|e| e.to_string())?;
        let t = oracle(&code, &[])?.t_star as i64;
        let u = upper(&code);
        pass &= t >= floor && t <= u && floor == basic_guarantee(&dims, 3);
        parts.push(format!("{dims:?}: t*={t} floor={floor} upper={u}"));
    }
    Ok(ok(pass, parts.join("; ")))
}

fn enhanced_floors() -> Result<Outcome, String> {
    let q = 3i64;
    let a1 = loss_budget_a(1, q);
    let mut parts = Vec::new();
    let mut pass = a1 == 5;
    for nd in [3usize, 4, 5] {
        let code = EnhancedCode::new(2, nd, 3).map_err(|e| e.to_string())?;
        let monitor = ActiveBlockMonitor::new(&code);
        let t = oracle(&code, &[&monitor])?.t_star as i64;
        let n = code.params().n() as i64;
        let floor = n * (q - 1) - (2 * a1 + 2 * (q - 1));
        let closed_form = n * (q - 1) - 11;
        pass &= t >= floor && t <= upper(&code);
        parts.push(format!("n_2={nd}: t*={t} floor={floor} gap to n(q-1)-11 = {:+}", t - closed_form));
    }
    let code = EnhancedCode::new(3, 3, 3).map_err(|e| e.to_string())?;
    let monitor = ActiveBlockMonitor::new(&code);
    let t = oracle(&code, &[&monitor])?.t_star as i64;
    let u = thm1_upper(12, 8, 2, 3);
    pass &= t <= u;
    parts.push(format!("D=3 n_3=3: t*={t} <= {u}"));
    Ok(ok(pass, parts.join("; ")))
}

fn formula_identities() -> Result<Outcome, String> {
    let mut bad = Vec::new();
    for i in 2..=20u32 {
        for q in (3..=21i64).step_by(2) {
            if loss_budget_a(i, q) != loss_budget_a_closed(i, q).map_err(|e| e.to_string())? {
                bad.push(format!("A_{i}(q={q})"));
            }
        }
    }
    for d in 3..=10u32 {
        for q in (3..=21i64).step_by(2) {
            if thm3_deficiency(1 << d, q).map_err(|e| e.to_string())? != 2 * loss_budget_a(d - 1, q) + 1 {
                bad.push(format!("delta_{d}(q={q})"));
            }
        }
    }
    for n in 1..=100u64 {
        for q in 2..=16u64 {
            if thm1_upper(n as i64, 2, 2, q as i64) != guarantee2(n, q) as i64 {
                bad.push(format!("thm1 vs two-bit (n={n},q={q})"));
            }
        }
    }
    let spots = [
        ("A_1(5)", loss_budget_a(1, 5), 11),
        ("A_2(3)", loss_budget_a(2, 3), 20),
        ("delta(8,3)", thm3_deficiency(8, 3).map_err(|e| e.to_string())?, 41),
        ("delta(8,4)", thm3_deficiency(8, 4).map_err(|e| e.to_string())?, 121),
        ("basic((3,3),3)", basic_guarantee(&[3, 3], 3), 3),
        ("basic((3,10),5)", basic_guarantee(&[3, 10], 5), 59),
    ];
    for (name, got, want) in spots {
        if got != want {
            bad.push(format!("{name}={got}, expected {want}"));
        }
    }
    Ok(ok(bad.is_empty(), format!("mismatches: {bad:?}")))
}

/// Reachable states of a lone block with the dedication implied by the
/// bits written into it.
fn block_truths(len: usize, q: u8) -> HashMap<Vec<u8>, Vec<Dedication>> {
    let mut seen: HashMap<Vec<u8>, Vec<Dedication>> = HashMap::new();
    let start = vec![0u8; len];
    seen.insert(start.clone(), vec![Dedication::Unset]);
    let mut queue = VecDeque::from([(start, Dedication::Unset)]);
    while let Some((s, truth)) = queue.pop_front() {
        for bit in 0..len {
            let BlockWrite::Next(t) = ci_write(&s, bit, q) else { continue };
            let d = match (status(&t, q), truth) {
                (BlockStatus::Full, _) => Dedication::Spent,
                (_, Dedication::Unset) if bit < len / 2 => Dedication::LowerHalf,
                (_, Dedication::Unset) => Dedication::UpperHalf,
                (_, d) => d,
            };
            let entry = seen.entry(t.clone()).or_default();
            if !entry.contains(&d) {
                entry.push(d);
                queue.push_back((t, d));
            }
        }
    }
    seen
}

type Criterion = fn() -> Result<Outcome, String>;
type WalkTarget<'a> = (&'static str, Box<dyn FlashCode + 'a>, Vec<Box<dyn Monitor + 'a>>);

fn property_suite() -> Result<Outcome, String> {
    let mut notes = Vec::new();
    let mut pass = true;

    // classification soundness over every reachable C_2 state
    for q in [3u8, 5] {
        let truths = block_truths(4, q);
        let wrong = truths
            .iter()
            .filter(|(s, d)| d.len() != 1 || classify(s, q) != d[0])
            .count();
        pass &= wrong == 0;
        notes.push(format!("C_2 q={q}: {} states, {wrong} misclassified", truths.len()));
    }

    // exhaustive active-block maxima for two-cell blocks
    for nd in 3..=5 {
        let code = EnhancedCode::new(2, nd, 3).map_err(|e| e.to_string())?;
        let max = MaxActive::new(&code, false);
        let limit = ActiveBlockMonitor::new(&code);
        oracle(&code, &[&max, &limit])?;
        pass &= max.get() <= code.total_budget();
        notes.push(format!("D=2 n_2={nd} max active {}", max.get()));
    }

    // every transition of these oracle runs is checked for the write contract
    let virt = virtualize_even_q(4, |q| EnhancedCode::new(2, 3, q)).map_err(|e| e.to_string())?;
    let vmon = VirtualActiveBlockMonitor::new(virt.inner());
    oracle(&virt, &[&vmon])?;
    let vbasic = virtualize_even_q(4, |q| BasicBoxCode::new(vec![2, 3], q)).map_err(|e| e.to_string())?;
    oracle(&vbasic, &[])?;

    let e2 = EnhancedCode::new(2, 6, 5).map_err(|e| e.to_string())?;
    let e3 = EnhancedCode::new(3, 4, 3).map_err(|e| e.to_string())?;
    let e4 = EnhancedCode::new(4, 3, 5).map_err(|e| e.to_string())?;
    let ev = virtualize_even_q(4, |q| EnhancedCode::new(3, 4, q)).map_err(|e| e.to_string())?;
    let bv = virtualize_even_q(6, |q| BasicBoxCode::new(vec![3, 4], q)).map_err(|e| e.to_string())?;
    let codes: Vec<WalkTarget> = vec![
        ("twobit n=3 q=5", Box::new(TwoBitCode::new(3, 5).map_err(|e| e.to_string())?), vec![]),
        ("twobit n=8 q=7", Box::new(TwoBitCode::new(8, 7).map_err(|e| e.to_string())?), vec![]),
        ("twobit n=5 q=4", Box::new(TwoBitCode::new(5, 4).map_err(|e| e.to_string())?), vec![]),
        ("basic (3,4) q=3", Box::new(BasicBoxCode::new(vec![3, 4], 3).map_err(|e| e.to_string())?), vec![]),
        ("basic (3,3,5) q=5", Box::new(BasicBoxCode::new(vec![3, 3, 5], 5).map_err(|e| e.to_string())?), vec![]),
        ("basic (3,4) q=6 paired", Box::new(bv), vec![]),
        ("enhanced D=2 n_2=6 q=5", Box::new(e2.clone()), vec![Box::new(ActiveBlockMonitor::new(&e2))]),
        ("enhanced D=3 n_3=4 q=3", Box::new(e3.clone()), vec![Box::new(ActiveBlockMonitor::new(&e3))]),
        ("enhanced D=4 n_4=3 q=5", Box::new(e4.clone()), vec![Box::new(ActiveBlockMonitor::new(&e4))]),
        ("enhanced D=3 n_3=4 q=4 paired", Box::new(ev.clone()), vec![Box::new(VirtualActiveBlockMonitor::new(ev.inner()))]),
    ];
    let per_code = WALK_STEPS_TOTAL / codes.len() as u64;
    let mut total = 0;
    for (i, (label, code, monitors)) in codes.iter().enumerate() {
        let mons: Vec<&dyn Monitor> = monitors.iter().map(|m| m.as_ref()).collect();
        let report = walk_campaign(code.as_ref(), per_code, WALK_SEED + 1000 * i as u64, &mons);
        total += report.steps;
        if !report.violations.is_empty() {
            pass = false;
            notes.push(format!("{label}: {} violations, first {:?}", report.violations.len(), report.violations[0]));
        }
    }
    pass &= total >= WALK_STEPS_TOTAL;
    notes.push(format!("{total} random-walk steps over {} codes", codes.len()));
    Ok(ok(pass, notes.join("; ")))
}

fn oracle_self_check() -> Result<Outcome, String> {
    let two = TwoBitCode::new(2, 3).map_err(|e| e.to_string())?;
    let enh = EnhancedCode::new(2, 3, 3).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    let mut pass = true;
    for code in [&two as &dyn FlashCode, &enh] {
        let r = oracle(code, &[])?;
        let naive = naive_guarantee(code).map_err(|e| e.to_string())?;
        let rep = replay(code, &r.witness).map_err(|e| e.to_string())?;
        let t = r.t_star as usize;
        let replays = r.witness.len() == t + 1 && rep.successful == t && rep.erased_at == Some(t);
        pass &= naive == r.t_star && replays;
        parts.push(format!("{}: memo {} naive {naive} witness {:?}", code.name(), r.t_star, r.witness));
    }
    Ok(ok(pass, parts.join("; ")))
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 6] = [
        ("1 two-bit optimality", two_bit_optimality),
        ("2 basic construction floor", basic_floor),
        ("3 enhanced construction floors", enhanced_floors),
        ("4 formula identities", formula_identities),
        ("5 property suite", property_suite),
        ("6 oracle self-check", oracle_self_check),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = run().unwrap_or_else(|e| ok(false, format!("error: {e}")));
        let secs = start.elapsed().as_secs_f64();
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {name} ({secs:.2}s): {}", outcome.detail);
        failed += usize::from(!outcome.pass);
    }
    println!("acceptance: {} passed, {failed} failed", 6 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
