//! Exact symbolic kernel for CR invariants of real hypersurfaces in complex space.
//!
//! Everything is computed over the Gaussian rationals with truncated multivariate
//! formal power series, so every rank decision, ideal membership and type value is
//! exact at the working jet order. The crate is `no_std` (with `alloc`); IO, the
//! defining-function parser and report formats live in the companion CLI crate.
//!
//! Module map:
//!
//! - [`scalar`], [`context`], [`series`]: the power series substrate
//! - [`linalg`]: exact linear algebra over the Gaussian rationals
//! - [`vecfield`]: formal vector fields, brackets, conjugation
//! - [`manifold`]: manifold ideals in graph form, parametrizations, tangency
//! - [`orbit`]: Lie-algebra orbits of formal vector fields
//! - [`cr`]: (1,0) tangent modules, the formal CR test, intrinsic complexification
//! - [`hypersurface`]: defining series, contact form, tangent frames, Levi tensor
//! - [`types`]: commutator/Levi/contact types and complex formal orbits
//! - [`tower`]: dual forms, tower search, the tower multitype
//! - [`structure`]: structure-property and pseudoconvexity audits
//! - [`reljet`]: relative jets, relative contact order, supertangent fields

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod context;
pub mod cr;
pub mod error;
pub mod hypersurface;
pub mod linalg;
pub mod manifold;
pub mod orbit;
pub mod reljet;
pub mod scalar;
pub mod series;
pub mod structure;
pub mod tower;
pub mod types;
pub mod vecfield;

pub use context::{VarKind, VariableContext};
pub use error::{CoreError, Result};
pub use scalar::{GaussianRational, Rational};
pub use series::{Order, TruncatedSeries};
