//! Bloomier filters: compact encodings of a function `f: S -> [0, 2^k)`
//! that answer stored keys exactly and report most other keys as absent.
//!
//! Two constructions are provided:
//!
//! * [`GraphFilter`] stores `ceil(c n)` residues modulo `m` indexed by the
//!   vertices of an acyclic random graph, with an optional mutable variant.
//! * [`SparseFilter`] stores a solution of a sparse linear system over a
//!   prime field and needs only `n(1 + eps)` table entries.
//!   [`BucketedFilter`] splits large inputs into small independent systems.
//!
//! [`codec`] converts any of them to and from a portable byte image.

pub mod bits;
pub mod bucketed_filter;
pub mod codec;
pub mod error;
pub mod field;
pub mod graph_filter;
pub mod hashing;
pub mod sparse_filter;

pub use bucketed_filter::{BucketParams, BucketedFilter};
pub use codec::Filter;
pub use error::{Error, Result};
pub use graph_filter::{GraphFilter, GraphParams, MutableGraphFilter};
pub use sparse_filter::{SparseFilter, SparseParams, VerifiedSparseFilter};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
struct ReadmeDoctests;
