//! Timing table over generated CIDR rule sets.

use std::fmt::Write as _;
use std::time::Instant;

use pktgeom::classifier::{build_classifier, BuildMode};
use pktgeom::conflict::detect_conflict;
use pktgeom::persistent::{path_length, MAX_K};
use pktgeom::{max_address, Packet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gen::{generate, GenConfig, Model};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchConfig {
    pub ns: Vec<usize>,
    pub ks: Vec<u32>,
    pub seed: u64,
    pub bits: u32,
    pub queries: usize,
}

/// Plain-text table, one row per configuration.
pub fn bench(cfg: &BenchConfig) -> String {
    let mut out = String::new();
    let mut prev_stripes: Option<u64> = None;
    for &n in &cfg.ns {
        let rs = generate(&GenConfig {
            n,
            seed: cfg.seed,
            model: Model::Cidr,
            bits: cfg.bits,
            priority_levels: 0,
        });
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
        let max = max_address(cfg.bits);
        let packets: Vec<Packet> = (0..cfg.queries)
            .map(|_| Packet::new(rng.gen_range(0..=max), rng.gen_range(0..=max)))
            .collect();
        for &k in &cfg.ks {
            let path = path_length(cfg.bits, k.max(1));
            if k == 0 || k > MAX_K {
                let _ = writeln!(out, "classify n={n} k={k} path={path} skipped (k outside 1..={MAX_K})");
                continue;
            }
            let t = Instant::now();
            let c = match build_classifier(&rs, k, BuildMode::Auto) {
                Ok(c) => c,
                Err(e) => {
                    let _ = writeln!(out, "classify n={n} k={k} path={path} skipped ({e})");
                    continue;
                }
            };
            let build = t.elapsed();
            let t = Instant::now();
            let mut matched = 0usize;
            for &p in &packets {
                matched += usize::from(c.classify(p).expect("packet in universe").is_some());
            }
            let secs = t.elapsed().as_secs_f64().max(1e-9);
            let stats = c.stats();
            let _ = writeln!(
                out,
                "classify n={n} k={k} path={path} build_ms={:.1} bytes={} qps={:.0} matched={matched}/{}",
                build.as_secs_f64() * 1e3,
                stats.bytes_estimate,
                packets.len() as f64 / secs,
                packets.len()
            );
        }
        let t = Instant::now();
        let report = detect_conflict(&rs).expect("generated sets are valid");
        let stripes = report.counters.stripes_processed;
        let ratio = prev_stripes.map_or("-".to_string(), |p| format!("{:.2}", stripes as f64 / p.max(1) as f64));
        let _ = writeln!(
            out,
            "conflicts n={n} ms={:.1} stripes={stripes} ratio={ratio} conflict={}",
            t.elapsed().as_secs_f64() * 1e3,
            report.witness.is_some()
        );
        prev_stripes = Some(stripes);
    }
    out
}
