//! Two-dimensional packet filtering over prioritized rectangles.
//!
//! * [`classifier`] answers "which highest-priority rule matches this
//!   packet?" with a plane sweep over a [`persistent`] interval store.
//! * [`conflict`] decides whether some packet has no unique highest-priority
//!   rule, in `O(n^1.5)` time, by running [`stripes`] detection on the leaves of
//!   a [`kdtree`] built over rule corners.
//! * [`oracle`] holds brute-force reference answers used by tests and the
//!   `verify` command.

pub mod model;
pub mod oracle;
pub mod classifier;
pub mod conflict;
pub mod envelope;
pub mod kdtree;
pub mod persistent;
pub mod stripes;

pub use model::{
    is_laminar, max_address, prefix_to_range, Address, AddressRange, Packet, Priority, Rect, Rule,
    RuleId, RuleSet,
};
