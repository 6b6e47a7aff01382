//! Principal eigenvalues of radial advection-diffusion operators
//!
//! ```text
//! -phi'' - (d-1)/r phi' - 2 s m'(r) phi' + c(r) phi = lambda phi,   phi'(0) = phi'(1) = 0
//! ```
//!
//! solved in the weighted self-adjoint form with weight `r^{d-1} e^{2 s m(r)}`,
//! together with the oscillating potential families whose eigenvalues fail to
//! converge as `s` grows.

pub mod asymptotics;
pub mod coefficients;
pub mod construction;
pub mod eigensolver;
pub mod error;
pub mod io;
pub mod mesh;
pub mod oracle;
pub mod quadrature;

pub use coefficients::{Family, OscillationSchedule, Potential, Profile, Reaction};
pub use eigensolver::{Bc, EigenResult, ProblemSpec, ReferenceEigenvalues};
pub use error::{Error, Result};
pub use mesh::{Mesh, MeshConfig};
