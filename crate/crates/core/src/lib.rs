//! Zero-energy ground-state functional of lattice gauge theories.
//!
//! The exponent of the candidate ground state is Hamilton's principal
//! functional `S(A)`: the minimal Euclidean action on the half-space with
//! the connection's tangential components prescribed at `t = 0`. The crate
//! computes it on a link lattice, checks the zero-energy Hamilton-Jacobi
//! identity and the functional derivative `δS/δA`, and provides the
//! abelian and one-dimensional closed forms used as oracles.

pub mod error;
pub mod hjqm;
pub mod invariance;
pub mod lattice;
pub mod lie;
pub mod maxwell;
pub mod minimizer;
pub mod par;

pub use error::{Error, FormatError, Result};
pub use par::Exec;
