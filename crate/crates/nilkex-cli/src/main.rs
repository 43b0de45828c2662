//! Command-line driver: presentation checking, protocol runs, transcript
//! attacks, and the DLP/PSP cost benchmarks.
//!
//! Exit codes: 0 success, 1 semantic failure (inconsistent presentation,
//! invalid parameters), 2 I/O or malformed input, 3 attack failed within
//! its budget. `NILKEX_FIXTURES` overrides the fixture directory used to
//! resolve named platform specs.

use clap::{Parser, Subcommand};
use num_bigint::{BigInt, BigUint};
use num_traits::{Num, ToPrimitive};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use nilkex::attack::{break_exchange, bsgs_ladder, ut_reduce_ladder, AttackReport, SolverKind};
use nilkex::group::Group;
use nilkex::platform::{self, PlatformError};
use nilkex::protocol::{
    self, parse_transcript_json, run_exchange, transcript_from_file, transcript_to_json, ProtocolId,
};

#[derive(Parser)]
#[command(
    name = "nilkex",
    about = "Nilpotent-group multiparty key exchange: runs, checks, and attacks",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a presentation, run the consistency identities, and bound the
    /// nilpotency class.
    Check {
        /// Path to a .npres file, or a shipped fixture name.
        presentation: String,
    },
    /// Run an honest multiparty exchange and write the public transcript.
    Exchange {
        /// I or II.
        #[arg(long)]
        protocol: ProtocolId,
        /// Platform spec: heisenberg, ut3z, ut4z, ut3zmod:<m>,
        /// heisenberg-fp:<p>, safeprime:<p>, cyclic:<m>, or a .npres path.
        #[arg(long)]
        platform: String,
        /// Comma-separated private keys, one per party; generated from the
        /// seed when omitted.
        #[arg(long)]
        keys: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Private-key magnitude bound for generated keys (decimal or
        /// 2^k); platform default when omitted.
        #[arg(long)]
        bound: Option<String>,
        /// Transcript output path.
        #[arg(long, default_value = "transcript.json")]
        out: PathBuf,
    },
    /// Recover the shared key of a recorded transcript as a passive
    /// eavesdropper.
    Attack {
        /// Transcript JSON written by `exchange`.
        transcript: PathBuf,
        #[arg(long, default_value = "ut-reduce")]
        solver: SolverKind,
        /// Group-multiplication budget; unlimited when omitted.
        #[arg(long)]
        budget: Option<u64>,
        /// Also write the report as JSON to this path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cost ladders: BSGS over safe primes vs the band reduction.
    Bench {
        /// Comma-separated suites, out of: bsgs, ut-reduce. An empty
        /// string selects nothing.
        #[arg(long, default_value = "bsgs,ut-reduce")]
        suite: String,
        /// Largest subgroup bit size for the BSGS ladder.
        #[arg(long, default_value_t = 20)]
        qbits_max: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Check { presentation } => cmd_check(&presentation),
        Cmd::Exchange {
            protocol,
            platform,
            keys,
            seed,
            bound,
            out,
        } => cmd_exchange(
            protocol,
            &platform,
            keys.as_deref(),
            seed,
            bound.as_deref(),
            &out,
        ),
        Cmd::Attack {
            transcript,
            solver,
            budget,
            out,
        } => cmd_attack(&transcript, solver, budget, out.as_deref()),
        Cmd::Bench {
            suite,
            qbits_max,
            seed,
        } => cmd_bench(&suite, qbits_max, seed),
    }
}

fn fixtures_dir() -> Option<PathBuf> {
    std::env::var_os("NILKEX_FIXTURES").map(PathBuf::from)
}

fn resolve(spec: &str) -> Result<Group, PlatformError> {
    platform::resolve_group(spec, fixtures_dir().as_deref())
}

fn cmd_check(spec: &str) -> ExitCode {
    let group = match resolve(spec) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let Group::Presentation(pres) = &group else {
        eprintln!("error: `{spec}` is not a presentation platform");
        return ExitCode::from(2);
    };

    println!(
        "presentation: {} generators, orders {}",
        pres.n_gens(),
        pres.orders()
            .iter()
            .map(|o| match o.finite() {
                Some(s) => s.to_string(),
                None => "inf".to_string(),
            })
            .collect::<Vec<_>>()
            .join(" ")
    );
    let report = pres.check_consistency();
    if !report.passed() {
        println!(
            "inconsistent: {} of {} identities failed",
            report.failures.len(),
            report.checked
        );
        for f in &report.failures {
            println!("  FAIL {f}");
        }
        return ExitCode::from(1);
    }
    println!(
        "PASS all {} overlap and inverse-compatibility identities",
        report.checked
    );
    match (1..=pres.n_gens()).find(|&c| pres.verify_class_at_most(c)) {
        Some(c) => println!("consistent, class <= {c} confirmed"),
        None => println!(
            "consistent; class not bounded by {} (generator count)",
            pres.n_gens()
        ),
    }
    ExitCode::SUCCESS
}

fn parse_bound(text: &str) -> Result<BigUint, String> {
    if let Some(exp) = text.strip_prefix("2^") {
        let k: u32 = exp
            .parse()
            .map_err(|_| format!("bad exponent in `{text}`"))?;
        return Ok(BigUint::from(1u32) << k);
    }
    BigUint::from_str_radix(text, 10).map_err(|_| format!("`{text}` is not a positive integer"))
}

fn parse_keys(text: &str) -> Result<Vec<BigInt>, String> {
    text.split(',')
        .map(|w| {
            let w = w.trim();
            w.parse::<BigInt>()
                .map_err(|_| format!("`{w}` is not an integer"))
        })
        .collect()
}

fn cmd_exchange(
    protocol: ProtocolId,
    platform_spec: &str,
    keys: Option<&str>,
    seed: u64,
    bound: Option<&str>,
    out: &Path,
) -> ExitCode {
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() && !parent.is_dir() {
            eprintln!(
                "error: output directory {} does not exist",
                parent.display()
            );
            return ExitCode::from(2);
        }
    }
    let group = match resolve(platform_spec) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let params = match platform::default_params(group, protocol) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    let key_values = match keys {
        Some(csv) => match parse_keys(csv) {
            Ok(v) => v,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => {
            let bound = match bound {
                Some(b) => match parse_bound(b) {
                    Ok(b) => b,
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(2);
                    }
                },
                None => protocol::default_key_bound(params.group()),
            };
            protocol::generate_keys(&params, seed, &bound)
        }
    };

    let outcome = match run_exchange(&params, &key_values) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: invalid parameters: {e}");
            return ExitCode::from(1);
        }
    };

    println!(
        "protocol {} on {} ({} parties)",
        params.protocol(),
        params.group().description(),
        params.parties()
    );
    for w in &outcome.warnings {
        println!("warning: {w}");
    }
    println!("all {} derived keys agree", outcome.role_keys.len());
    let encoded = params
        .group()
        .encode_element(&outcome.shared_key)
        .expect("own key encodes");
    println!("shared key: {}", encoded.trim_end().replace('\n', " | "));
    println!(
        "trivial key: {}",
        if outcome.trivial_key { "yes" } else { "no" }
    );

    let json = match transcript_to_json(&params, platform_spec, &outcome.transcript) {
        Ok(j) => j,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = std::fs::write(out, json) {
        eprintln!("error: cannot write {}: {e}", out.display());
        return ExitCode::from(2);
    }
    println!("transcript written to {}", out.display());
    ExitCode::SUCCESS
}

/// Attack report file contents. Wall time stays out of the file so a
/// fixed seed and config always produce identical bytes.
#[derive(Serialize)]
struct ReportFile {
    solver: String,
    success: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    recovered_exponent: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    recovered_key: Option<String>,
    group_ops: u64,
    ring_ops: u64,
    verify_ops: u64,
    detail: String,
}

fn report_file(report: &AttackReport, group: &Group) -> ReportFile {
    ReportFile {
        solver: report.solver.to_string(),
        success: report.success,
        recovered_exponent: report.recovered_exponent.as_ref().map(|e| e.to_string()),
        recovered_key: report
            .recovered_key
            .as_ref()
            .map(|k| group.encode_element(k).expect("recovered key encodes")),
        group_ops: report.group_ops,
        ring_ops: report.ring_ops,
        verify_ops: report.verify_ops,
        detail: report.detail.clone(),
    }
}

fn cmd_attack(
    transcript_path: &Path,
    solver: SolverKind,
    budget: Option<u64>,
    out: Option<&Path>,
) -> ExitCode {
    let text = match std::fs::read_to_string(transcript_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", transcript_path.display());
            return ExitCode::from(2);
        }
    };
    let file = match parse_transcript_json(&text) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let group = match platform::group_for_transcript(&file, fixtures_dir().as_deref()) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let (params, transcript) = match transcript_from_file(&file, group) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    let report = match break_exchange(&params, &transcript, solver, budget) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    let rf = report_file(&report, params.group());
    let json = serde_json::to_string_pretty(&rf).expect("report serializes");
    if let Some(path) = out {
        if let Err(e) = std::fs::write(path, &json) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    println!("{json}");
    println!("elapsed: {:.3} ms", report.elapsed.as_secs_f64() * 1000.0);
    if report.success {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}

fn cmd_bench(suite: &str, qbits_max: u32, seed: u64) -> ExitCode {
    let suites: Vec<&str> = suite
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    for s in &suites {
        if !matches!(*s, "bsgs" | "ut-reduce") {
            eprintln!("error: unknown suite `{s}` (expected bsgs, ut-reduce)");
            return ExitCode::from(2);
        }
    }

    if suites.contains(&"bsgs") {
        let instances = 16;
        println!("BSGS over safe-prime subgroups ({instances} instances per rung, seed {seed})");
        println!(
            "{:>7} {:>22} {:>12} {:>10} {:>10}",
            "q_bits", "q", "avg_ops", "ratio", "sqrt(q2/q1)"
        );
        match bsgs_ladder(10, qbits_max, instances, seed) {
            Ok(rungs) => {
                let mut prev: Option<(f64, f64)> = None;
                for r in &rungs {
                    let q = r.q.to_f64().unwrap_or(f64::NAN);
                    let (ratio, pred) = match prev {
                        Some((pq, pops)) => (r.avg_ops / pops, (q / pq).sqrt()),
                        None => (f64::NAN, f64::NAN),
                    };
                    println!(
                        "{:>7} {:>22} {:>12.1} {:>10.3} {:>10.3}",
                        r.q_bits, r.q, r.avg_ops, ratio, pred
                    );
                    prev = Some((q, r.avg_ops));
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
        println!();
    }

    if suites.contains(&"ut-reduce") {
        let instances = 10;
        println!("band reduction in UT(4, Z), exponent-bound sweep ({instances} instances per rung, seed {seed})");
        println!("{:>9} {:>12} {:>12}", "exp_bits", "ring_ops", "group_ops");
        match ut_reduce_ladder(4, &[16, 32, 64, 128, 256], instances, seed) {
            Ok(rungs) => {
                for r in &rungs {
                    println!(
                        "{:>9} {:>12.1} {:>12.1}",
                        r.exponent_bits, r.avg_ring_ops, r.avg_group_ops
                    );
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
        println!();
        println!("band reduction dimension sweep at 128-bit exponents");
        println!("{:>4} {:>12} {:>12}", "n", "ring_ops", "group_ops");
        for n in 3..=6 {
            match ut_reduce_ladder(n, &[128], instances, seed) {
                Ok(rungs) => {
                    let r = &rungs[0];
                    println!(
                        "{:>4} {:>12.1} {:>12.1}",
                        n, r.avg_ring_ops, r.avg_group_ops
                    );
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            }
        }
    }

    if suites.is_empty() {
        println!("no suites selected");
    }
    ExitCode::SUCCESS
}
