//! Library side of the `pktgeom` command: file formats, the seeded rule
//! generator, oracle cross-checks and the benchmark table.

pub mod bench;
pub mod format;
pub mod gen;
pub mod verify;

use pktgeom::stripes::ConflictWitness;
use pktgeom::RuleSet;

/// `<i> match rule=<id> prio=<p> action=<token>` or `<i> nomatch`.
pub fn match_line(index: usize, rs: &RuleSet, m: Option<pktgeom::RuleId>) -> String {
    match m {
        Some(id) => {
            let r = rs.rule(id);
            format!("{index} match rule={id} prio={} action={}", r.priority, r.action)
        }
        None => format!("{index} nomatch"),
    }
}

pub fn conflict_line(w: Option<&ConflictWitness>) -> String {
    match w {
        Some(w) => format!("conflict point=({},{}) rules={},{} prio={}", w.x, w.y, w.rule_a, w.rule_b, w.priority),
        None => "no-conflict".to_string(),
    }
}
