//! Zero-sum invariants of finite abelian groups.
//!
//! The crate computes `s_K(G)` (the least length forcing a zero-sum
//! subsequence with length in `K`), the Davenport constant `D(G)` and the
//! threshold `ℓ(G)` exactly at small scale, evaluates the known closed-form
//! bounds for p-groups with explicit hypothesis reports, machine-checks the
//! polynomial-method certificate behind the set-length bound, and turns the
//! constructive proofs into extraction procedures.
//!
//! Modules, bottom-up:
//! - [`group`]: cyclic-factor groups, elements, Olson's constant, `G/qG`.
//! - [`sequence`]: multisets over a group and their file format.
//! - [`engine`]: exact `(length, sum)` reachability and witness recovery.
//! - [`exact`]: exhaustive search for `s_K`, `D`, `ℓ` and extremal witnesses.
//! - [`bounds`]: closed-form bounds and the subadditive closure.
//! - [`poly`]: Lucas binomials and the Boolean-cube degree certificate.
//! - [`extract`]: proof-guided zero-sum extraction.

pub mod bounds;
pub mod engine;
pub mod error;
pub mod exact;
pub mod extract;
pub mod group;
pub mod poly;
pub mod sequence;

pub use error::{Error, Result};
pub use group::{parse_group, AbelianGroup, GroupElement, PGroupProfile};
pub use sequence::GSeq;
