use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pktgeom::classifier::{build_classifier, BuildMode};
use pktgeom::conflict::{detect_conflict, detect_conflict_filtered};
use pktgeom::RuleSet;
use pktgeom_cli::bench::{bench, BenchConfig};
use pktgeom_cli::format::{parse_packets, parse_rules, render_rules};
use pktgeom_cli::gen::{generate, GenConfig, Model};
use pktgeom_cli::verify::{verify, VerifyConfig};
use pktgeom_cli::{conflict_line, match_line};

/// Exit codes: 0 success or no conflict, 1 conflict or verify mismatch,
/// 2 input error.
#[derive(Parser)]
#[command(name = "pktgeom", version, about = "Two-dimensional packet classification and rule conflict auditing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Auto,
    General,
    Laminar,
}

#[derive(Subcommand)]
enum Command {
    /// Classify each packet of a trace against a rule file.
    Classify {
        rules: PathBuf,
        packets: PathBuf,
        #[arg(long, default_value_t = 8)]
        k: u32,
        #[arg(long, value_enum, default_value = "auto")]
        mode: ModeArg,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Report a point without a unique highest-priority rule.
    Conflicts {
        rules: PathBuf,
        /// Only tied rules with different actions count.
        #[arg(long)]
        actions_differ: bool,
    },
    /// Print a seeded random rule file.
    Gen {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "cidr")]
        model: Model,
        #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u32).range(1..=64))]
        bits: u32,
        /// 0 gives every rule a distinct priority.
        #[arg(long, default_value_t = 0)]
        priority_levels: u64,
    },
    /// Cross-check classifier and conflict detector against brute force.
    Verify {
        #[arg(long, default_value_t = 60)]
        n: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        trials: u64,
        #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u32).range(1..=20))]
        bits: u32,
        #[arg(long, default_value_t = 4)]
        k: u32,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Build, query and conflict timings on generated CIDR rules.
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = [1000usize, 4000, 16000])]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [4u32, 8, 16])]
        k: Vec<u32>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u32).range(1..=64))]
        bits: u32,
        #[arg(long, default_value_t = 200_000)]
        queries: usize,
    },
}

/// Input problems; always exit 2.
struct InputError(String);

fn read(path: &Path) -> Result<String, InputError> {
    std::fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn load_rules(path: &Path) -> Result<RuleSet, InputError> {
    parse_rules(&read(path)?).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(String, u8), InputError> {
    let mut out = String::new();
    let code = match cli.command {
        Command::Classify { rules, packets, k, mode, threads } => {
            let rs = load_rules(&rules)?;
            let pkts = parse_packets(&read(&packets)?, rs.universe_bits)
                .map_err(|e| InputError(format!("{}: {e}", packets.display())))?;
            let mode = match mode {
                ModeArg::Auto => BuildMode::Auto,
                ModeArg::General => BuildMode::General,
                ModeArg::Laminar => BuildMode::Laminar,
            };
            let c = build_classifier(&rs, k, mode).map_err(|e| InputError(e.to_string()))?;
            let results = c.classify_batch(&pkts, threads.max(1)).map_err(|e| InputError(e.to_string()))?;
            for (i, m) in results.into_iter().enumerate() {
                out.push_str(&match_line(i, &rs, m.map(|m| m.rule)));
                out.push('\n');
            }
            0
        }
        Command::Conflicts { rules, actions_differ } => {
            let rs = load_rules(&rules)?;
            let report = if actions_differ {
                detect_conflict_filtered(&rs, |a, b| a != b)
            } else {
                detect_conflict(&rs)
            }
            .map_err(|e| InputError(e.to_string()))?;
            out.push_str(&conflict_line(report.witness.as_ref()));
            out.push('\n');
            u8::from(report.witness.is_some())
        }
        Command::Gen { n, seed, model, bits, priority_levels } => {
            out = render_rules(&generate(&GenConfig { n, seed, model, bits, priority_levels }));
            0
        }
        Command::Verify { n, seed, trials, bits, k, inject_fault } => {
            let cfg = VerifyConfig { n, seed, trials, bits, k, inject_fault };
            let r = verify(&cfg);
            let _ = writeln!(out, "classify: {}/{} trials pass ({} points)", r.classify_passed, r.trials, r.points_checked);
            let _ = writeln!(out, "conflicts: {}/{} trials pass", r.conflict_passed, r.trials);
            for m in &r.mismatches {
                let _ = writeln!(out, "{m}");
            }
            u8::from(!r.all_passed())
        }
        Command::Bench { n, k, seed, bits, queries } => {
            out = bench(&BenchConfig { ns: n, ks: k, seed, bits, queries });
            0
        }
    };
    Ok((out, code))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok((out, code)) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).and_then(|()| stdout.flush()).is_err() {
                return ExitCode::from(2);
            }
            ExitCode::from(code)
        }
        Err(InputError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
