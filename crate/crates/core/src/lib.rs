//! Vinberg cones built from Nil-algebras of rank 2 and 3, their invariant
//! polynomials and duality, and invariant cubics with Hessian metrics on
//! their level hypersurfaces.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN.

pub mod clifford;
pub mod config;
pub mod cone;
pub mod cubics;
pub mod error;
pub mod exec;
pub mod metric;
pub mod nilalgebra;
pub mod polynomial;
pub mod sampling;
pub mod selftest;

pub use clifford::{CliffordDescriptor, CliffordModule};
pub use config::ConeSpec;
pub use cone::{Cone, GroupCoordinates};
pub use cubics::{HessianReport, InvariantCubic, Verdict};
pub use error::{Error, Result};
pub use exec::Execution;
pub use metric::{MetricSpace, Signature};
pub use nilalgebra::{HermMatrix, NilAlgebra, TriangularElement};
