//! Isotropic pseudodifferential operators in the Hermite basis.
//!
//! Symbols `a(x, xi)` are quantized to matrices `K_{m,n} = <A phi_n, phi_m>`
//! against the Hermite functions; the matrices are classified by their
//! diagonal growth and off-diagonal decay, composed, and tested through
//! iterated commutators with the harmonic oscillator and the ladder shift.

pub mod algebra;
pub mod error;
pub mod fit;
pub mod hermite;
pub mod matrix;
pub mod quantizer;
pub mod sequence;
pub mod symbols;

pub use error::{Error, Result};
pub use hermite::{HermiteBasis, QuadratureRule};
pub use matrix::{OperatorMatrix, OperatorMatrixNd, Provenance};
pub use sequence::HermiteSequence;
pub use symbols::{Expr, Symbol};
