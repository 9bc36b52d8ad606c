//! Simulation of a d-level PT-symmetric qudit, `H = -J Sx + iγ Sz`, across its
//! order-d exceptional point.
//!
//! Modules, bottom-up:
//!
//! - [`linalg`]: dense complex matrices, matrix exponential, eigensolvers.
//! - [`model`]: spin-j operators, the Hamiltonian family, symmetry checks.
//! - [`dynamics`]: non-unitary propagation of states and density matrices.
//! - [`information`]: entropies, partial traces, Bloch vectors and the
//!   eigenvector-expansion route to the occupation eigenvalues.
//! - [`spectral`]: exceptional-point order diagnostics (Puiseux scaling,
//!   polynomial and exponential growth fits, nilpotency).
//! - [`cli`]: scenario runner behind the `ptqudit` binary.

pub mod cli;
pub mod dynamics;
pub mod information;
pub mod linalg;
pub mod model;
pub mod spectral;

use thiserror::Error;

pub use linalg::{CMatrix, LinalgError, C64};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The computation itself failed (overflow, ill-conditioning, non-convergence).
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// True for failures of the computation rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Numerical(_) => true,
            Error::Linalg(e) => {
                matches!(e, LinalgError::NoConvergence { .. } | LinalgError::Singular)
            }
            Error::Domain(_) => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
