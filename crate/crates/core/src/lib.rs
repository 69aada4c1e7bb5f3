//! Optimal approximation of single-qubit gates by sequences over a fixed
//! fault-tolerant alphabet: the 23 non-identity single-qubit Clifford
//! elements plus `T`.
//!
//! The search is exact: it returns the sequence of at most `l` gates that
//! minimises the phase-invariant distance to a target, skipping candidates
//! that contain a window known to be redundant.
//!
//! With the default `parallel` feature the per-length enumeration and the
//! random-target experiments run on rayon; without it everything runs on the
//! calling thread and produces the same results.

pub mod bench;
pub mod canondb;
pub mod error;
pub mod gateset;
pub mod search;
pub mod target;
pub mod unitary;

pub use canondb::{build_canon_db, load_db, save_db, CanonDb};
pub use error::{Error, Result};
pub use gateset::{evaluate, gate_matrix, GateId, GateSeq};
pub use search::{search_exhaustive, search_optimal, SearchOptions, SearchResult};
pub use target::parse_target;
pub use unitary::{distance, Distance, Unitary2};
