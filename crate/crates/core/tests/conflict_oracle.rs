mod common;

use pktgeom::conflict::{detect_conflict, detect_conflict_filtered};
use pktgeom::oracle::{exhaustive_conflict, naive_conflict, witness_is_valid};
use pktgeom::{max_address, prefix_to_range, AddressRange, Priority, Rule, RuleSet};
use proptest::prelude::*;
use rand::Rng;

fn check(rs: &RuleSet) -> bool {
    let report = detect_conflict(rs).unwrap();
    let naive = naive_conflict(rs);
    assert_eq!(report.witness.is_some(), naive.is_some(), "{rs:?}");
    if let Some(w) = report.witness {
        assert!(witness_is_valid(rs, &w), "{w:?}");
    }
    assert!(report.counters.peak_resident <= 10 * rs.len() as u64, "{:?}", report.counters);
    naive.is_some()
}

#[test]
fn random_sets_match_naive() {
    let mut rng = common::rng(41);
    let mut conflicts = 0;
    let total = 2000;
    for i in 0..total {
        let bits = rng.gen_range(2..=10);
        let n = rng.gen_range(0..=120);
        // Wide priority ranges make conflict-free sets common enough.
        let levels = if i % 2 == 0 { rng.gen_range(1..5) } else { 4 * n as u64 + 1 };
        let rs = common::mixed_rules(&mut rng, n, bits, levels);
        conflicts += usize::from(check(&rs));
    }
    assert!(conflicts > total / 10 && conflicts < total * 9 / 10, "{conflicts}");
}

#[test]
fn tiny_universes_match_exhaustive_scan() {
    let mut rng = common::rng(42);
    for _ in 0..300 {
        let bits = rng.gen_range(1..=5);
        let n = rng.gen_range(0..12);
        let rs = common::mixed_rules(&mut rng, n, bits, 3);
        let report = detect_conflict(&rs).unwrap();
        assert_eq!(report.witness.is_some(), exhaustive_conflict(&rs).is_some(), "{rs:?}");
    }
}

fn rule(id: u32, x: (u64, u64), y: (u64, u64), p: Priority) -> Rule {
    Rule::new(id, p, AddressRange::new(x.0, x.1), AddressRange::new(y.0, y.1), "permit")
}

fn renumber(rules: Vec<Rule>) -> Vec<Rule> {
    rules
        .into_iter()
        .enumerate()
        .map(|(i, r)| Rule { id: i as u32, ..r })
        .collect()
}

#[test]
fn adversarial_fixtures() {
    let max = max_address(8);
    let fixtures: Vec<(Vec<Rule>, bool)> = vec![
        // Shared edges, no overlap.
        (vec![rule(0, (0, 9), (0, 9), 1), rule(0, (10, 19), (0, 9), 1), rule(0, (0, 9), (10, 19), 1)], false),
        // Shared edge overlapping in one column.
        (vec![rule(0, (0, 10), (0, 9), 1), rule(0, (10, 19), (0, 9), 1)], true),
        // Identical rectangles.
        (vec![rule(0, (3, 7), (3, 7), 2), rule(0, (3, 7), (3, 7), 2)], true),
        (vec![rule(0, (3, 7), (3, 7), 2), rule(0, (3, 7), (3, 7), 3)], false),
        // Point rectangles.
        (vec![rule(0, (5, 5), (5, 5), 1), rule(0, (5, 5), (5, 5), 1)], true),
        (vec![rule(0, (5, 5), (5, 5), 1), rule(0, (5, 5), (6, 6), 1), rule(0, (0, max), (0, max), 1)], true),
        (vec![rule(0, (5, 5), (5, 5), 2), rule(0, (4, 6), (4, 6), 1), rule(0, (0, 9), (5, 5), 1)], true),
        // Equal-priority cross covered exactly by a higher rule.
        (vec![rule(0, (0, 20), (8, 12), 1), rule(0, (8, 12), (0, 20), 1), rule(0, (8, 12), (8, 12), 5)], false),
        (vec![rule(0, (0, 20), (8, 12), 1), rule(0, (8, 12), (0, 20), 1), rule(0, (8, 12), (8, 11), 5)], true),
        // Full universe pair with a distinct top rule.
        (vec![rule(0, (0, max), (0, max), 1), rule(0, (0, max), (0, max), 1), rule(0, (0, max), (0, max), 2)], false),
    ];
    for (rules, expected) in fixtures {
        let rs = RuleSet::checked(8, renumber(rules)).unwrap();
        assert_eq!(check(&rs), expected, "{rs:?}");
    }
}

#[test]
fn nested_cidr_stacks() {
    let bits = 16;
    let mut rng = common::rng(43);
    for round in 0..40 {
        let base = rng.gen_range(0..=max_address(bits));
        let other = rng.gen_range(0..=max_address(bits));
        let depth = rng.gen_range(2..12);
        let rules: Vec<Rule> = (0..depth)
            .map(|d| {
                let len = 2 + d;
                let src = prefix_to_range(base, len, bits).unwrap();
                let dst = prefix_to_range(other, len + (round % 3), bits).unwrap();
                // Deeper prefixes win; the last round shares a priority.
                let p = if round % 4 == 0 && d == depth - 1 { d as u64 - 1 } else { d as u64 };
                Rule::new(d, p, src, dst, "permit")
            })
            .collect();
        let rs = RuleSet::checked(bits, rules).unwrap();
        let has = check(&rs);
        assert_eq!(has, round % 4 == 0, "{rs:?}");
    }
}

/// Candidate-grid scan restricted to points where two tied top rules have
/// different actions.
fn naive_filtered(rs: &RuleSet) -> bool {
    let max = rs.max_address();
    let axis = |pick: fn(&Rule) -> AddressRange| {
        let mut v: Vec<u64> = rs
            .rules
            .iter()
            .flat_map(|r| {
                let e = pick(r);
                [Some(e.lo), e.hi.checked_add(1).filter(|&c| c <= max)]
            })
            .flatten()
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let (xs, ys) = (axis(|r| r.src), axis(|r| r.dst));
    xs.iter().any(|&x| {
        ys.iter().any(|&y| {
            let hits: Vec<&Rule> = rs
                .rules
                .iter()
                .filter(|r| r.src.lo <= x && x <= r.src.hi && r.dst.lo <= y && y <= r.dst.hi)
                .collect();
            let Some(top) = hits.iter().map(|r| r.priority).max() else {
                return false;
            };
            let actions: std::collections::BTreeSet<&str> =
                hits.iter().filter(|r| r.priority == top).map(|r| r.action.as_str()).collect();
            actions.len() >= 2
        })
    })
}

#[test]
fn filtered_matches_naive() {
    let mut rng = common::rng(44);
    let differ = |a: &str, b: &str| a != b;
    for _ in 0..400 {
        let bits = rng.gen_range(2..=8);
        let n = rng.gen_range(0..=40);
        let levels = rng.gen_range(1..4);
        let rs = common::mixed_rules(&mut rng, n, bits, levels);
        let report = detect_conflict_filtered(&rs, differ).unwrap();
        assert_eq!(report.witness.is_some(), naive_filtered(&rs), "{rs:?}");
        if let Some(w) = report.witness {
            assert!(witness_is_valid(&rs, &w));
            assert_ne!(rs.rule(w.rule_a).action, rs.rule(w.rule_b).action);
        }
    }
}

#[test]
fn filtered_with_asymmetric_predicate() {
    // Only "deny" against "log" counts; permit is compatible with both.
    let pred = |a: &str, b: &str| (a == "deny" && b == "log") || (a == "log" && b == "deny");
    let mut rng = common::rng(45);
    let actions = ["permit", "deny", "log"];
    for _ in 0..300 {
        let bits = rng.gen_range(2..=6);
        let n = rng.gen_range(0..=20);
        let mut rs = common::mixed_rules(&mut rng, n, bits, 2);
        for r in &mut rs.rules {
            r.action = actions[rng.gen_range(0..3)].to_string();
        }
        let report = detect_conflict_filtered(&rs, pred).unwrap();
        let expected = (0..=rs.max_address()).any(|x| {
            (0..=rs.max_address()).any(|y| {
                let hits: Vec<&Rule> = rs
                    .rules
                    .iter()
                    .filter(|r| r.src.lo <= x && x <= r.src.hi && r.dst.lo <= y && y <= r.dst.hi)
                    .collect();
                let top = hits.iter().map(|r| r.priority).max();
                let tied: Vec<&&Rule> = hits.iter().filter(|r| Some(r.priority) == top).collect();
                tied.iter().any(|a| tied.iter().any(|b| pred(&a.action, &b.action)))
            })
        });
        assert_eq!(report.witness.is_some(), expected, "{rs:?}");
        if let Some(w) = report.witness {
            assert!(witness_is_valid(&rs, &w));
            assert!(pred(&rs.rule(w.rule_a).action, &rs.rule(w.rule_b).action));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn prop_conflict_matches_naive(seed in any::<u64>(), n in 0usize..50, bits in 1u32..=9, levels in 1u64..6) {
        let mut rng = common::rng(seed);
        let rs = common::mixed_rules(&mut rng, n, bits, levels);
        check(&rs);
    }
}
