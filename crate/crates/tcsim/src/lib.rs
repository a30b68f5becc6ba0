//! Simulator and analytic toolkit for a single cavity mode coupled to a
//! large collection of two-level atoms.
//!
//! The crate has three layers:
//!
//! * exact machinery on truncated product spaces ([`fock`], [`spin`],
//!   [`exact`]) used as the trusted reference at small system size;
//! * the bosonized large-N description ([`hp`]) with its systematic 1/N
//!   correction terms ([`perturbation`]);
//! * closed-form dynamics of coherent and cat states in the leading
//!   approximation ([`hp`], [`cat`]), cross-checked against both layers
//!   above.
//!
//! The [`runner`] module wires these into reproducible experiment runs; the
//! `tcsim` binary and the examples directory are thin shells over it.

pub mod cat;
pub mod error;
pub mod exact;
pub mod fock;
pub mod hp;
pub mod numeric;
pub mod perturbation;
pub mod runner;
pub mod series;
pub mod spin;

pub use error::{Error, Result};
