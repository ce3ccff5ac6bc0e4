//! Randomized cross-checks of the fast structures against the oracles.

use std::fmt;

use pktgeom::classifier::{build_classifier, BuildMode};
use pktgeom::conflict::detect_conflict;
use pktgeom::oracle::{naive_classify, naive_conflict, witness_is_valid};
use pktgeom::{Address, AddressRange, Packet, Rule, RuleId, RuleSet};

use crate::gen::{generate, GenConfig, Model};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyConfig {
    pub n: usize,
    pub seed: u64,
    pub trials: u64,
    pub bits: u32,
    pub k: u32,
    /// Test hook: corrupts the first classifier answer.
    pub inject_fault: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            n: 60,
            seed: 7,
            trials: 50,
            bits: 16,
            k: 4,
            inject_fault: false,
        }
    }
}

/// Everything needed to rebuild the failing input with `gen`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub trial: u64,
    pub gen: GenConfig,
    pub check: &'static str,
    pub detail: String,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g = &self.gen;
        let model = match g.model {
            Model::Cidr => "cidr",
            Model::Uniform => "uniform",
        };
        write!(
            f,
            "mismatch trial={} check={} {}\n  repro: pktgeom gen --n {} --seed {} --model {} --bits {} --priority-levels {}",
            self.trial, self.check, self.detail, g.n, g.seed, model, g.bits, g.priority_levels
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub trials: u64,
    pub classify_passed: u64,
    pub conflict_passed: u64,
    pub points_checked: u64,
    pub mismatches: Vec<Mismatch>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Input for trial `t`: models alternate and the priority spread cycles
/// through few levels, many levels and all-distinct.
pub fn trial_config(cfg: &VerifyConfig, t: u64) -> GenConfig {
    GenConfig {
        n: cfg.n,
        seed: cfg.seed.wrapping_add(t),
        model: if t.is_multiple_of(2) { Model::Uniform } else { Model::Cidr },
        bits: cfg.bits,
        priority_levels: [2, 4 * cfg.n as u64 + 1, 0][(t % 3) as usize],
    }
}

/// Each rule edge and its neighbours, crossed between the axes.
pub fn boundary_grid(rs: &RuleSet) -> Vec<Packet> {
    let max = rs.max_address();
    let axis = |pick: fn(&Rule) -> AddressRange| {
        let mut v: Vec<Address> = rs
            .rules
            .iter()
            .flat_map(|r| {
                let e = pick(r);
                [e.lo.checked_sub(1), Some(e.lo), Some(e.hi), e.hi.checked_add(1)].into_iter().flatten()
            })
            .filter(|&c| c <= max)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let ys = axis(|r| r.dst);
    axis(|r| r.src)
        .into_iter()
        .flat_map(|x| ys.iter().map(move |&y| Packet::new(x, y)))
        .collect()
}

fn check_classify(rs: &RuleSet, cfg: &VerifyConfig, fault: bool, report: &mut VerifyReport) -> Result<(), String> {
    let c = build_classifier(rs, cfg.k, BuildMode::Auto).map_err(|e| format!("build failed: {e}"))?;
    for (i, pkt) in boundary_grid(rs).into_iter().enumerate() {
        report.points_checked += 1;
        let mut fast: Option<RuleId> = c.classify(pkt).map_err(|e| e.to_string())?.map(|m| m.rule);
        if fault && i == 0 {
            fast = if fast.is_some() { None } else { Some(RuleId::MAX) };
        }
        let slow = naive_classify(rs, pkt).map(|(id, _)| id);
        if fast != slow {
            return Err(format!(
                "point={i} ({}, {}) classifier={fast:?} naive={slow:?}",
                pkt.src, pkt.dst
            ));
        }
    }
    Ok(())
}

fn check_conflict(rs: &RuleSet) -> Result<(), String> {
    let fast = detect_conflict(rs).map_err(|e| e.to_string())?.witness;
    let slow = naive_conflict(rs);
    if fast.is_some() != slow.is_some() {
        return Err(format!("detector={fast:?} naive={slow:?}"));
    }
    match fast {
        Some(w) if !witness_is_valid(rs, &w) => Err(format!("invalid witness {w:?}")),
        _ => Ok(()),
    }
}

pub fn verify(cfg: &VerifyConfig) -> VerifyReport {
    let mut report = VerifyReport {
        trials: cfg.trials,
        ..VerifyReport::default()
    };
    for t in 0..cfg.trials {
        let gen = trial_config(cfg, t);
        let rs = generate(&gen);
        match check_classify(&rs, cfg, cfg.inject_fault && t == 0, &mut report) {
            Ok(()) => report.classify_passed += 1,
            Err(detail) => report.mismatches.push(Mismatch { trial: t, gen, check: "classify", detail }),
        }
        match check_conflict(&rs) {
            Ok(()) => report.conflict_passed += 1,
            Err(detail) => report.mismatches.push(Mismatch { trial: t, gen, check: "conflicts", detail }),
        }
    }
    report
}
