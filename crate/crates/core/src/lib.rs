//! Quantum filtering on an atom-cat jump model.
//!
//! The crate is organised around a small dense complex linear-algebra layer
//! and builds up to a full counting-measurement filter:
//!
//! - [`linalg`]: dense complex matrices, projectors, Hermitian eigensolver,
//!   tensor products, partial trace/transpose, commutant computation.
//! - [`logic`]: Boolean lattices and their projector realisation, pair
//!   classification (disjoint / inconsistent / incompatible), distributivity
//!   witnesses.
//! - [`dilation`]: non-commutative conditional expectations, the law of total
//!   probability, the canonical purification of a pinched density, Kraus
//!   extraction from a unitary coupling, the projection postulate.
//! - [`cat`]: the concrete atom-cat model — the 6x6 interaction operator,
//!   its Kraus triple, the decay channel and free atomic dynamics.
//! - [`chain`]: exact (deterministic) computation on truncated chain space —
//!   marginal densities, class probabilities, counting moments, the Lindblad
//!   integrator and the sum-integral identity.
//! - [`filter`]: the stochastic side — jump trajectories, the filtering
//!   wave-function, the Belavkin jump update, filter estimates, and the
//!   output (Girsanov) distribution over observation records.
//!
//! All computation is `no_std`-compatible (`alloc` required); IO, CLI and
//! file formats live in the companion `catfilter-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod cat;
pub mod chain;
pub mod dilation;
mod error;
pub mod filter;
pub mod linalg;
pub mod logic;
pub mod randmat;

pub use error::{Error, Result};
pub use linalg::C64;
