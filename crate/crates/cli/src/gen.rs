//! Seeded synthetic rule sets.

use std::str::FromStr;

use pktgeom::{max_address, prefix_to_range, AddressRange, Rule, RuleSet};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    /// Prefix length uniform in `[bits/4, bits]`, then a random prefix of
    /// that length. Laminar on both axes.
    Cidr,
    /// Arbitrary closed ranges.
    Uniform,
}

impl FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cidr" => Ok(Model::Cidr),
            "uniform" => Ok(Model::Uniform),
            _ => Err(format!("unknown model {s:?} (expected cidr or uniform)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenConfig {
    pub n: usize,
    pub seed: u64,
    pub model: Model,
    pub bits: u32,
    /// Priorities uniform in `0..levels`; 0 means a random permutation of
    /// `0..n` so every priority is distinct.
    pub priority_levels: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            n: 100,
            seed: 0,
            model: Model::Cidr,
            bits: 32,
            priority_levels: 0,
        }
    }
}

pub fn random_field(rng: &mut impl Rng, model: Model, bits: u32) -> AddressRange {
    let max = max_address(bits);
    match model {
        Model::Cidr => {
            let len = rng.gen_range(bits / 4..=bits);
            prefix_to_range(rng.gen_range(0..=max), len, bits).expect("len <= bits")
        }
        Model::Uniform => {
            let (a, b) = (rng.gen_range(0..=max), rng.gen_range(0..=max));
            AddressRange::new(a.min(b), a.max(b))
        }
    }
}

pub fn generate(cfg: &GenConfig) -> RuleSet {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rules: Vec<Rule> = (0..cfg.n as u32)
        .map(|id| {
            let src = random_field(&mut rng, cfg.model, cfg.bits);
            let dst = random_field(&mut rng, cfg.model, cfg.bits);
            let action = if rng.gen_bool(0.5) { "permit" } else { "deny" };
            let p = if cfg.priority_levels == 0 { 0 } else { rng.gen_range(0..cfg.priority_levels) };
            Rule::new(id, p, src, dst, action)
        })
        .collect();
    if cfg.priority_levels == 0 {
        let mut perm: Vec<u64> = (0..cfg.n as u64).collect();
        perm.shuffle(&mut rng);
        for (r, p) in rules.iter_mut().zip(perm) {
            r.priority = p;
        }
    }
    RuleSet::new(cfg.bits, rules)
}
