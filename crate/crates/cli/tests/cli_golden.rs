use std::path::PathBuf;
use std::process::{Command, Output};

use pktgeom::is_laminar;
use pktgeom_cli::format::{parse_rules, render_rules};
use pktgeom_cli::gen::{generate, GenConfig, Model};
use proptest::prelude::*;

fn golden(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pktgeom"))
        .args(args)
        .current_dir(golden(""))
        .output()
        .expect("binary runs")
}

fn expect(args: &[&str], code: i32, out_file: Option<&str>) -> String {
    let out = run(args);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(code), "{args:?}: {stdout}{}", String::from_utf8_lossy(&out.stderr));
    if let Some(f) = out_file {
        assert_eq!(stdout, std::fs::read_to_string(golden(f)).unwrap(), "{args:?}");
    }
    stdout
}

#[test]
fn classify_goldens() {
    expect(&["classify", "two_rules.rules", "two_rules.packets"], 0, Some("classify_two_rules.out"));
    for mode in ["general", "auto"] {
        expect(
            &["classify", "two_rules.rules", "two_rules.packets", "--k", "3", "--mode", mode, "--threads", "3"],
            0,
            Some("classify_two_rules.out"),
        );
    }
    assert_eq!(expect(&["classify", "two_rules.rules", "empty.packets"], 0, None), "");
}

#[test]
fn conflict_goldens() {
    expect(&["conflicts", "duplicate.rules"], 1, Some("conflicts_duplicate.out"));
    assert_eq!(expect(&["conflicts", "--actions-differ", "duplicate.rules"], 0, None), "no-conflict\n");
    assert_eq!(expect(&["conflicts", "covered.rules"], 0, None), "no-conflict\n");
    expect(&["conflicts", "mixed_actions.rules"], 1, Some("conflicts_mixed.out"));
    expect(&["conflicts", "--actions-differ", "mixed_actions.rules"], 1, Some("conflicts_mixed_differ.out"));
}

#[test]
fn input_errors_exit_2_and_name_the_line() {
    for args in [
        &["conflicts", "bad_prefix.rules"][..],
        &["classify", "bad_prefix.rules", "empty.packets"],
        &["classify", "two_rules.rules", "two_rules.rules"],
        &["conflicts", "missing.rules"],
        &["classify", "crossing.rules", "two_rules.packets", "--mode", "laminar"],
        &["gen", "--model", "zipf"],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty());
        assert!(!out.stderr.is_empty());
    }
    let err = String::from_utf8(run(&["conflicts", "bad_prefix.rules"]).stderr).unwrap();
    assert!(err.contains("line 3") && err.contains("/33"), "{err}");
}

#[test]
fn gen_goldens_and_determinism() {
    expect(&["gen", "--n", "0"], 0, Some("gen_n0.out"));
    let a = expect(&["gen", "--n", "5", "--seed", "1"], 0, Some("gen_cidr_n5_s1.out"));
    let b = expect(&["gen", "--n", "5", "--seed", "1"], 0, None);
    assert_eq!(a.as_bytes(), b.as_bytes());
    let args = ["gen", "--n", "6", "--seed", "2", "--model", "uniform", "--bits", "12", "--priority-levels", "3"];
    expect(&args, 0, Some("gen_uniform_n6_s2.out"));

    let text = expect(&["gen", "--n", "100", "--model", "cidr", "--seed", "5"], 0, None);
    let rs = parse_rules(&text).unwrap();
    assert_eq!(rs.len(), 100);
    assert!(is_laminar(&rs.rules.iter().map(|r| r.src).collect::<Vec<_>>()));
    assert!(is_laminar(&rs.rules.iter().map(|r| r.dst).collect::<Vec<_>>()));
}

#[test]
fn verify_goldens() {
    expect(&["verify", "--n", "20", "--trials", "4"], 0, Some("verify_n20_t4.out"));
    expect(&["verify", "--trials", "0"], 0, Some("verify_t0.out"));
    expect(&["verify", "--n", "20", "--trials", "4", "--inject-fault"], 1, Some("verify_fault.out"));
    // The printed repro regenerates the failing input.
    let repro = expect(&["gen", "--n", "20", "--seed", "7", "--model", "uniform", "--bits", "16", "--priority-levels", "2"], 0, None);
    assert_eq!(parse_rules(&repro).unwrap().len(), 20);
}

#[test]
fn verify_default_scale_passes() {
    let out = expect(&["verify", "--n", "60", "--seed", "7", "--trials", "50"], 0, None);
    assert!(out.starts_with("classify: 50/50"), "{out}");
}

#[test]
fn generated_files_feed_the_other_commands() {
    let dir = tempfile::tempdir().unwrap();
    let rules = dir.path().join("g.rules");
    let packets = dir.path().join("g.packets");
    std::fs::write(&rules, expect(&["gen", "--n", "40", "--seed", "3", "--bits", "10", "--model", "uniform"], 0, None)).unwrap();
    std::fs::write(&packets, "0 0\n1023 1023\n0x200 0x1ff\n").unwrap();
    let out = expect(&["classify", rules.to_str().unwrap(), packets.to_str().unwrap()], 0, None);
    assert_eq!(out.lines().count(), 3);
    // Distinct priorities can still leave no conflict; the exit code must
    // agree with the printed verdict either way.
    let res = run(&["conflicts", rules.to_str().unwrap()]);
    let verdict = String::from_utf8(res.stdout).unwrap();
    assert_eq!(res.status.code(), Some(if verdict.starts_with("conflict ") { 1 } else { 0 }));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gen_round_trips(n in 0usize..60, seed in any::<u64>(), bits in 1u32..=64, uniform in any::<bool>(), levels in 0u64..5) {
        let model = if uniform { Model::Uniform } else { Model::Cidr };
        let rs = generate(&GenConfig { n, seed, model, bits, priority_levels: levels });
        prop_assert_eq!(parse_rules(&render_rules(&rs)).unwrap(), rs);
    }
}
