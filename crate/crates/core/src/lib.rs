//! Multi-scale entanglement renormalization ansatz (MERA) for periodic 1D
//! lattices.
//!
//! The crate is organized bottom-up:
//!
//! - [`tensor`] and [`density`]: dense complex tensors, density matrices,
//!   partial traces and entropies.
//! - [`mera`]: the layered network itself, its builders (selected by name
//!   through [`mera::BuildModeRegistry`]), constraint validation, parameter
//!   accounting and the JSON file format.
//! - [`cone`]: causal-cone geometry and the exact top-down contraction of
//!   reduced density matrices, expectation values and correlators.
//! - [`renorm`]: ascending operators through the network, effective
//!   Hamiltonians, the scaling superoperator of a scale-invariant network,
//!   correlation exponents and block entropies.
//! - [`oracle`]: brute-force state-vector ground truth at small sizes.
//! - [`evaluator`]: reduced-density-matrix backends (cone or oracle) behind a
//!   common trait, registered by name.
//! - [`bench`]: runtime sweeps over the lattice size.

pub mod bench;
pub mod cone;
pub mod density;
pub mod error;
pub mod evaluator;
pub mod mera;
pub mod operators;
pub mod oracle;
pub mod renorm;
pub mod tensor;

pub use density::{partial_trace, von_neumann_entropy, DensityMatrix};
pub use error::{MeraError, Result};
pub use mera::{BuildMode, BuildModeRegistry, Mera, MeraLayer};
pub use tensor::{contract, group_axes, permute_axes, random_isometry, Tensor, C64};

/// Numerical tolerances shared across modules.
pub mod tol {
    /// Max-abs entrywise deviation from hermiticity accepted for a density
    /// matrix.
    pub const HERMITIAN: f64 = 1e-10;
    /// Accepted deviation of a density matrix trace from one.
    pub const TRACE: f64 = 1e-10;
    /// Smallest eigenvalue accepted for a positive semidefinite matrix.
    pub const PSD: f64 = -1e-10;
    /// Max-abs violation of the isometric/unitary/normalization constraints.
    pub const CONSTRAINT: f64 = 1e-10;
    /// Constraint tolerance applied when loading documents.
    pub const LOAD_CONSTRAINT: f64 = 1e-8;
}
