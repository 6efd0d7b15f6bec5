use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use pbcode_core::algebra::rational::{render, render_decimal};
use pbcode_core::algebra::FieldSpec;
use pbcode_core::designs::{build, CodeParams, DesignId};
use pbcode_core::engine::{emit_tables, measure_gamma, plan_validate, TableRow};
use pbcode_core::framework::{theorem1_check, DEFAULT_BOUND};
use pbcode_core::{golden, store, Error};

#[derive(Parser)]
#[command(name = "pbcode", version, about = "Piggybacked erasure-coded shard store")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CodeArgs {
    /// base, d1, d2, d3 or pp
    #[arg(long)]
    design: DesignId,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    /// Instance groups; m1 for d3. Defaults to 2 for d3 and 1 otherwise.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value = "GF(2^8)")]
    field: FieldSpec,
    /// Selects the evaluation points of the Cauchy base; 0 is canonical.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl CodeArgs {
    fn params(&self) -> CodeParams {
        CodeParams {
            design: self.design,
            field: self.field,
            n: self.n,
            k: self.k,
            m: self.m.unwrap_or(self.design.default_m()),
            seed: self.seed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Split a file into n shards plus a manifest.
    Encode {
        file: PathBuf,
        /// Shard directory.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        code: CodeArgs,
    },
    /// Rebuild one lost shard, reading only what its repair plan needs.
    Repair {
        dir: PathBuf,
        /// Shard number, from 1.
        #[arg(long)]
        lost: usize,
    },
    /// Restore the original file from any k intact shards.
    Decode {
        dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print repair read fractions over a parameter sweep.
    Analyze {
        #[arg(long)]
        design: DesignId,
        /// Inclusive, e.g. 10..20
        #[arg(long, value_parser = parse_range)]
        k_range: RangeInclusive<usize>,
        /// Inclusive range of n - k.
        #[arg(long, value_parser = parse_range)]
        r_range: RangeInclusive<usize>,
        #[arg(long)]
        m: Option<usize>,
    },
    /// Check the MDS property, decodability against the base and every repair plan.
    Verify {
        #[command(flatten)]
        code: CodeArgs,
        /// Largest number of node subsets to enumerate.
        #[arg(long, default_value_t = DEFAULT_BOUND)]
        bound: u128,
    },
    /// Check the built-in worked examples.
    Selftest,
}

fn parse_range(s: &str) -> Result<RangeInclusive<usize>, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| format!("bad number {t:?} in range {s:?}"))
    };
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?),
        None => (num(s)?, num(s)?),
    };
    if lo > hi {
        return Err(format!("empty range {s:?}"));
    }
    Ok(lo..=hi)
}

enum CmdError {
    Core(Error),
    /// The command ran but a check failed.
    Failed(String),
}

impl From<Error> for CmdError {
    fn from(e: Error) -> Self {
        CmdError::Core(e)
    }
}

fn run(cli: Cli) -> Result<(), CmdError> {
    match cli.command {
        Command::Encode { file, out, code } => {
            let m = store::encode_file(&file, &out, &code.params())?;
            println!(
                "encoded {} bytes into {} shards ({} stripes, alpha {}) in {}",
                m.file_len,
                m.n,
                m.stripes,
                m.alpha,
                out.display()
            );
        }
        Command::Repair { dir, lost } => {
            if lost == 0 {
                return Err(Error::InvalidParams("shards are numbered from 1".into()).into());
            }
            let rep = store::repair(&dir, lost - 1)?;
            for (node, &bytes) in rep.bytes_per_node.iter().enumerate() {
                if bytes > 0 {
                    println!("shard {}: {} bytes", node + 1, bytes);
                }
            }
            println!("header bytes: {}", rep.header_bytes);
            println!(
                "read {} payload bytes, fraction {} ({})",
                rep.payload_bytes,
                render(&rep.fraction),
                render_decimal(&rep.fraction)
            );
            println!(
                "plan fraction {} ({})",
                render(&rep.plan_fraction),
                render_decimal(&rep.plan_fraction)
            );
            println!("repaired shard {lost}");
        }
        Command::Decode { dir, out } => {
            let rep = store::decode_to_file(&dir, &out)?;
            for (node, why) in &rep.rejected {
                eprintln!("skipped shard {}: {why}", node + 1);
            }
            let used: Vec<String> = rep.used.iter().map(|n| (n + 1).to_string()).collect();
            println!("decoded {} bytes from shards {}", rep.data.len(), used.join(","));
        }
        Command::Analyze {
            design,
            k_range,
            r_range,
            m,
        } => {
            let m = m.unwrap_or(design.default_m());
            let grid: Vec<(usize, usize)> = k_range.flat_map(|k| r_range.clone().map(move |r| (k, r))).collect();
            let rows: Vec<Option<TableRow>> = grid
                .par_iter()
                .map(|&(k, r)| {
                    let mut p = CodeParams::new(design, k + r, k);
                    p.m = m;
                    let built = build(&p).ok()?;
                    let g = measure_gamma(built.design.as_ref()).ok()?;
                    Some(TableRow {
                        n: k + r,
                        k,
                        design: design.name().into(),
                        m,
                        sys: g.sys,
                        par: g.par,
                        all: g.all,
                    })
                })
                .collect();
            let skipped = rows.iter().filter(|r| r.is_none()).count();
            let rows: Vec<TableRow> = rows.into_iter().flatten().collect();
            print!("{}", emit_tables(&rows));
            if skipped > 0 {
                eprintln!("skipped {skipped} parameter combinations the design does not support");
            }
        }
        Command::Verify { code, bound } => {
            let built = build(&code.params())?;
            let c = built.code();
            let mds = c.verify_mds(bound)?;
            println!("mds: {}", if mds { "ok" } else { "FAILED" });
            let preserved = theorem1_check(built.base.as_ref(), c, bound)?;
            println!(
                "base decodability preserved: {}",
                if preserved { "ok" } else { "FAILED" }
            );
            let mut bad_plans = Vec::new();
            for node in 0..c.n() {
                match built.design.repair_plan(node) {
                    Ok(plan) if plan_validate(c, &plan) => {}
                    _ => bad_plans.push(node + 1),
                }
            }
            if bad_plans.is_empty() {
                println!("repair plans: ok");
            } else {
                println!("repair plans: FAILED for shards {bad_plans:?}");
            }
            if !(mds && preserved && bad_plans.is_empty()) {
                return Err(CmdError::Failed("verification failed".into()));
            }
        }
        Command::Selftest => {
            let results = golden::selftest();
            for r in &results {
                println!("{} {}", if r.passed() { "PASS" } else { "FAIL" }, r.name);
                for f in &r.failures {
                    println!("    {f}");
                }
            }
            let line = golden::summary(&results);
            println!("{line}");
            if results.iter().any(|r| !r.passed()) {
                return Err(CmdError::Failed(line));
            }
        }
    }
    Ok(())
}

fn configure_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var("PBCODE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidParams(format!("PBCODE_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidParams(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().map_err(CmdError::from).and_then(|()| run(cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(CmdError::Failed(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(4)
        }
    }
}
