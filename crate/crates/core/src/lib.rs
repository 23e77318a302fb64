//! Operator geometry for weighted inner products.
//!
//! Given a Hermitian positive definite weight `A` on complex n-space, the
//! A-inner product is `<f, g>_A = <Af, g>`. This crate provides the operator
//! calculus built on it: A-adjoints and symmetrizable operators, compatible
//! (A-orthogonal) projections, the Douglas range-inclusion test, cross
//! sections and conjugators on the A-isometry group, a norm-preserving
//! Hermitian extension of contractions constrained on a subspace, minimal
//! curves `t -> exp(itZ) T` with a competitor-race verification harness, and
//! an exact weighted-sequence backend for the phenomena that only exist in
//! infinite dimension (non-adjointable isometries, the Wold decomposition).

mod error;

pub mod a_space;
pub mod geodesics;
pub mod isometry;
pub mod krein;
pub mod numerics;
pub mod sampling;
pub mod sequences;
pub mod suite;

pub use a_space::{AForm, AProjection, DouglasReport, douglas};
pub use error::{Error, Result};
pub use isometry::{AIsometry, AUnitary, IsometryCheck, WoldSplit};
pub use krein::{ExtensionCheck, KreinInstance, KreinMethod, KreinReport};
pub use numerics::{C64, CMatrix};
