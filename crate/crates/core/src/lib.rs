//! Numerical toolkit for the two-copy distillability question of the 4⊗4
//! Werner state on the PPT boundary.
//!
//! The central object is the projector `Q = O⊗P₊ + P₊⊗O` on two pairs of
//! ququarts. The Werner state is two-copy undistillable exactly when every
//! state of Schmidt rank two across the `AA':BB'` cut has overlap at most 1/2
//! with `Q`. The modules build `Q` and its n-copy relatives, search that
//! overlap numerically, certify the bound for structured state classes and
//! reproduce the closed-form bounds and entanglement-measure arguments around
//! it.

pub mod bounds;
pub mod certs;
pub mod cli;
pub mod error;
pub mod fit;
pub mod io;
pub mod matrix_iso;
pub mod measures;
pub mod projectors;
pub mod rng;
pub mod sropt;
pub mod suite;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{ComplexMatrix, ComplexVector, Cut, PureState, C64};
