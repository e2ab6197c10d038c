//! `flashcode`: verify, simulate and trace flash codes, and tabulate bounds.
//!
//! Exit codes: 0 on success, 1 when a verification or simulation finds a
//! failure, 2 on usage or resource errors.

mod codes;

use std::io::{self, BufRead, Write};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use flashcode::bounds::{thm1_upper, BoundReport};
use flashcode::oracle::{
    exact_guarantee_monitored, random_walk, walk_campaign, Monitor, OracleConfig, OracleError,
    Violation,
};
use flashcode::WriteOutcome;
use serde::Serialize;

use codes::{build, BlockWatch, Built, CodeArgs, ParamsRecord};

#[derive(Parser)]
#[command(name = "flashcode", version, about = "Flash codes for multilevel cells")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the exact guaranteed write count and compare it with the
    /// closed forms.
    Verify {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long)]
        json: bool,
        /// Oracle worker threads.
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Memo entry cap.
        #[arg(long, default_value_t = 100_000_000)]
        max_states: usize,
        /// Report wall time in JSON output too.
        #[arg(long)]
        timing: bool,
    },
    /// Random writes from the all-zero state with contract checks.
    Simulate {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long, default_value_t = 10_000)]
        steps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Check active-block budgets (enhanced code).
        #[arg(long)]
        monitors: bool,
        /// Start over after each erase until all steps are used.
        #[arg(long)]
        restart: bool,
        #[arg(long)]
        json: bool,
    },
    /// Upper bounds and construction guarantees over a range of cell counts.
    Bounds {
        #[arg(long)]
        k: i64,
        #[arg(long)]
        q: i64,
        #[arg(long, default_value_t = 2)]
        ell: i64,
        /// Inclusive range `a:b`.
        #[arg(long, value_parser = parse_range)]
        n_range: (i64, i64),
        #[arg(long, conflicts_with = "json")]
        csv: bool,
        #[arg(long)]
        json: bool,
    },
    /// Apply bit writes read from stdin, one index per line.
    Trace {
        #[command(flatten)]
        code: CodeArgs,
    },
}

fn parse_range(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s.split_once(':').ok_or("expected a:b")?;
    let a: i64 = a.trim().parse().map_err(|e| format!("bad start: {e}"))?;
    let b: i64 = b.trim().parse().map_err(|e| format!("bad end: {e}"))?;
    if a < 1 || b < a {
        return Err(format!("need 1 <= a <= b, got {a}:{b}"));
    }
    Ok((a, b))
}

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn usage_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string(value).expect("serializable"));
}

#[derive(Serialize)]
struct VerifyRecord {
    code: String,
    params: ParamsRecord,
    t_star: u64,
    t_formula: i64,
    t_upper: i64,
    deficiency: i64,
    pass: bool,
    states: usize,
    ms: u64,
}

fn verify(built: Built, json: bool, threads: usize, max_states: usize, timing: bool) -> ExitCode {
    let params = built.params();
    let watch = built.enhanced.as_ref().map(|(c, paired)| BlockWatch::new(c, *paired));
    let monitors: Vec<&dyn Monitor> = watch.iter().map(|w| w as &dyn Monitor).collect();
    let cfg = OracleConfig { max_states, threads: threads.max(1) };
    let start = Instant::now();
    let result = exact_guarantee_monitored(built.code.as_ref(), &monitors, &cfg);
    let elapsed = start.elapsed();
    let r = match result {
        Ok(r) => r,
        Err(OracleError::Contract(v)) => {
            eprintln!("contract violation: {}", describe(&v));
            return ExitCode::from(EXIT_FAIL);
        }
        Err(e) => return usage_error(e),
    };
    let q = i64::from(params.q);
    let n = params.n as i64;
    let t_upper = thm1_upper(n, params.k as i64, 2, q);
    let t = r.t_star as i64;
    let pass = (built.formula < 0 || t >= built.formula) && t <= t_upper;
    let record = VerifyRecord {
        code: built.code.name().to_string(),
        params,
        t_star: r.t_star,
        t_formula: built.formula,
        t_upper,
        deficiency: n * (q - 1) - t,
        pass,
        states: r.states_explored,
        ms: if timing { elapsed.as_millis() as u64 } else { 0 },
    };
    if json {
        print_json(&record);
    } else {
        let p = &record.params;
        println!("code        {}", record.code);
        println!("params      q={} k={} n={} dims={:?}", p.q, p.k, p.n, p.dims);
        println!("t_star      {}", record.t_star);
        println!("t_formula   {}", record.t_formula);
        println!("t_upper     {}", record.t_upper);
        println!("deficiency  {}", record.deficiency);
        println!("states      {}", record.states);
        println!("frontier    {}", r.max_frontier);
        println!("witness     {:?}", r.witness);
        if let Some(w) = &watch {
            println!("max active  {}", w.max());
        }
        println!("time        {:.3}s", elapsed.as_secs_f64());
        println!("{}", if pass { "PASS" } else { "FAIL" });
    }
    ExitCode::from(if pass { 0 } else { EXIT_FAIL })
}

fn describe(v: &Violation) -> String {
    match v.bit {
        Some(b) => format!("{:?} at [{}] bit {b}: {}", v.kind, v.state, v.detail),
        None => format!("{:?} at [{}]: {}", v.kind, v.state, v.detail),
    }
}

#[derive(Serialize)]
struct SimulateRecord {
    code: String,
    params: ParamsRecord,
    seed: u64,
    steps: u64,
    erasures: u64,
    /// Fewest writes before an erase, over all walks that hit one.
    min_writes_until_erase: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_active_blocks: Option<usize>,
    violations: Vec<Violation>,
}

fn simulate(built: Built, steps: u64, seed: u64, monitors: bool, restart: bool, json: bool) -> ExitCode {
    if monitors && built.enhanced.is_none() {
        return usage_error("--monitors needs --code enhanced");
    }
    let params = built.params();
    let watch = if monitors {
        built.enhanced.as_ref().map(|(c, paired)| BlockWatch::new(c, *paired))
    } else {
        None
    };
    let mons: Vec<&dyn Monitor> = watch.iter().map(|w| w as &dyn Monitor).collect();
    let code = built.code.as_ref();
    let (done, erasures, min_writes, violations) = if restart {
        let c = walk_campaign(code, steps, seed, &mons);
        (c.steps, c.erasures, c.min_writes_until_erase, c.violations)
    } else {
        let w = random_walk(code, steps, seed, &mons);
        let erased = w.writes_until_erase.is_some();
        (w.steps, u64::from(erased), w.writes_until_erase, w.violations)
    };
    let record = SimulateRecord {
        code: code.name().to_string(),
        params,
        seed,
        steps: done,
        erasures,
        min_writes_until_erase: min_writes,
        max_active_blocks: watch.as_ref().map(BlockWatch::max),
        violations,
    };
    if json {
        print_json(&record);
    } else {
        println!("code        {}", record.code);
        println!("steps       {}", record.steps);
        println!("erasures    {}", record.erasures);
        match record.min_writes_until_erase {
            Some(m) => println!("min writes  {m}"),
            None => println!("min writes  -"),
        }
        if let Some(m) = record.max_active_blocks {
            println!("max active  {m}");
        }
        println!("violations  {}", record.violations.len());
        for v in record.violations.iter().take(10) {
            println!("  {}", describe(v));
        }
    }
    ExitCode::from(if record.violations.is_empty() { 0 } else { EXIT_FAIL })
}

fn bounds(k: i64, q: i64, ell: i64, (a, b): (i64, i64), csv: bool, json: bool) -> ExitCode {
    if k < 1 || q < 2 || ell < 2 {
        return usage_error(format!("need k >= 1, q >= 2, ell >= 2; got k={k} q={q} ell={ell}"));
    }
    let rows: Vec<BoundReport> = (a..=b).map(|n| BoundReport::new(n, k, ell, q)).collect();
    if csv {
        println!("{}", BoundReport::CSV_HEADER);
        for r in &rows {
            println!("{}", r.csv_row());
        }
    } else if json {
        for r in &rows {
            print_json(r);
        }
    } else {
        println!("{:>6} {:>10} {:>10} {:>10} {:>12}", "n", "t_upper", "delta_lb", "guarantee", "t/(n(q-1))");
        for r in &rows {
            let g = r.guarantee.map_or("-".to_string(), |g| g.to_string());
            println!("{:>6} {:>10} {:>10} {:>10} {:>12}", r.n, r.t_upper, r.deficiency_lb, g, r.ratio);
        }
    }
    ExitCode::SUCCESS
}

fn trace(built: Built) -> ExitCode {
    let code = built.code.as_ref();
    let k = code.params().k;
    let mut state = code.initial_state();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut step = 0;
    for (i, line) in io::stdin().lock().lines().enumerate() {
        let lineno = i + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) => return usage_error(format!("line {lineno}: {e}")),
        };
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let bit: usize = match text.parse() {
            Ok(b) if b < k => b,
            Ok(b) => return usage_error(format!("line {lineno}: bit {b} out of range 0..{k}")),
            Err(_) => return usage_error(format!("line {lineno}: not a bit index: {text:?}")),
        };
        step += 1;
        match code.write(&state, bit) {
            Ok(WriteOutcome::Next(next)) => {
                state = next;
                let _ = writeln!(out, "{step},{bit},{state},{}", code.decode(&state));
            }
            Ok(WriteOutcome::EraseRequired) => {
                let _ = writeln!(out, "ERASE");
                break;
            }
            Err(e) => return usage_error(e),
        }
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let with_code = |args: &CodeArgs| build(args).map_err(usage_error);
    match cli.command {
        Command::Verify { code, json, threads, max_states, timing } => match with_code(&code) {
            Ok(b) => verify(b, json, threads, max_states, timing),
            Err(e) => e,
        },
        Command::Simulate { code, steps, seed, monitors, restart, json } => match with_code(&code) {
            Ok(b) => simulate(b, steps, seed, monitors, restart, json),
            Err(e) => e,
        },
        Command::Bounds { k, q, ell, n_range, csv, json } => bounds(k, q, ell, n_range, csv, json),
        Command::Trace { code } => match with_code(&code) {
            Ok(b) => trace(b),
            Err(e) => e,
        },
    }
}
