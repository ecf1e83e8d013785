use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dynloop::harness::fuzz::{fuzz, FuzzConfig};
use dynloop::harness::{format_stream, parse_stream, run_stream, Mode};
use dynloop::IrreduciblePolicy;

const CHECK_FAILED: u8 = 1;
const USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "dynloop",
    version,
    about = "Replay and fuzz dynamic loop nesting forest maintenance"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay an update stream file.
    Run {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Maintain)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = PolicyArg::Reject)]
        policy: PolicyArg,
        /// Print the final state to stdout.
        #[arg(long, value_enum)]
        dump: Option<DumpArg>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Generate random streams and check every event against the oracles.
    Fuzz {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Vertex count (the maximum when --vary-n is set).
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        events: usize,
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, value_enum, default_value_t = PolicyArg::Reject)]
        policy: PolicyArg,
        /// Draw each case's vertex count from 1..=n.
        #[arg(long)]
        vary_n: bool,
        /// Share of irreducible insertions submitted instead of dropped.
        #[arg(long, default_value_t = 0.1)]
        irreducible_rate: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Maintain,
    Recompute,
    Differential,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Reject,
    Latch,
}

#[derive(Clone, Copy, ValueEnum)]
enum DumpArg {
    Lnf,
    Dfst,
    Dot,
}

impl From<PolicyArg> for IrreduciblePolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Reject => IrreduciblePolicy::Reject,
            PolicyArg::Latch => IrreduciblePolicy::Latch,
        }
    }
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Maintain => Mode::Maintain,
            ModeArg::Recompute => Mode::Recompute,
            ModeArg::Differential => Mode::Differential,
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            file,
            mode,
            policy,
            dump,
            report,
        } => run(file, mode, policy, dump, report),
        Command::Fuzz {
            seed,
            n,
            events,
            cases,
            policy,
            vary_n,
            irreducible_rate,
        } => {
            if n == 0 || !(0.0..=1.0).contains(&irreducible_rate) {
                eprintln!("error: --n must be at least 1 and --irreducible-rate within [0, 1]");
                return ExitCode::from(USAGE);
            }
            let config = FuzzConfig {
                seed,
                n,
                vary_n,
                events,
                cases,
                policy: policy.into(),
                irreducible_rate,
                ..Default::default()
            };
            run_fuzz(&config)
        }
    }
}

fn run(
    file: PathBuf,
    mode: ModeArg,
    policy: PolicyArg,
    dump: Option<DumpArg>,
    report_path: Option<PathBuf>,
) -> ExitCode {
    let text = match std::fs::read_to_string(&file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", file.display());
            return ExitCode::from(USAGE);
        }
    };
    let stream = match parse_stream(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}: {e}", file.display());
            return ExitCode::from(USAGE);
        }
    };
    let (report, state) = match run_stream(&stream, mode.into(), policy.into()) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(CHECK_FAILED);
        }
    };
    let rendered = report.render();
    match &report_path {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &rendered) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(USAGE);
            }
        }
        None if dump.is_none() => print!("{rendered}"),
        None => {}
    }
    match dump {
        Some(DumpArg::Lnf) => print!("{}", state.lnf.as_deref().unwrap_or("latched\n")),
        Some(DumpArg::Dfst) => print!("{}", state.dfst),
        Some(DumpArg::Dot) => print!("{}", state.dot),
        None => {}
    }
    if let Some(m) = &report.mismatch {
        eprintln!("mismatch after event {}", m.seq);
        eprintln!("maintained:\n{}", m.maintained);
        eprintln!("recomputed:\n{}", m.recomputed);
        return ExitCode::from(CHECK_FAILED);
    }
    ExitCode::SUCCESS
}

fn run_fuzz(config: &FuzzConfig) -> ExitCode {
    let summary = fuzz(config);
    let s = &summary.stats;
    println!("cases={}", summary.cases);
    println!("events={}", s.events);
    println!("inserts={}", s.inserts);
    println!("deletes={}", s.deletes);
    println!("rejected={}", s.rejected);
    println!("latched={}", s.latched);
    println!("total_k={}", s.total_k);
    println!("total_delta={}", s.total_delta);
    println!("max_k={}", s.max_k);
    println!("failures={}", summary.failures.len());
    for f in &summary.failures {
        println!();
        println!(
            "# seed {} failed check `{}` at event {}",
            f.seed, f.check, f.event
        );
        for line in f.detail.lines() {
            println!("# {line}");
        }
        print!("{}", format_stream(&f.minimized));
    }
    if summary.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(CHECK_FAILED)
    }
}
