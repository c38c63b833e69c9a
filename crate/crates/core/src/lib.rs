//! Morse index and nullity of the critical catenoid, the free boundary
//! minimal annulus in the unit ball of R^3.
//!
//! The Jacobi operator with Robin boundary data separates into one ODE per
//! Fourier mode ([`mode_ode`]). Negative directions of the second variation
//! are located per mode by shooting on the boundary mismatch
//! `f(L) - L f'(L)` ([`spectrum`]) and checked against an independent
//! finite-difference pencil counted by Sturm sequences ([`fd_oracle`]).
//!
//! ```
//! use catenoid_core::{geometry, spectrum};
//!
//! let c = geometry::solve_balance_length(1e-12).unwrap();
//! let report = spectrum::morse_index(&c, &spectrum::SpectrumSettings::default()).unwrap();
//! assert_eq!(report.index, 4);
//! assert_eq!(report.nullity, 2);
//! ```

pub mod error;
pub mod fd_oracle;
pub mod geometry;
pub mod integrate;
pub mod mode_ode;
pub mod par;
pub mod spectrum;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::CatenoidConstants;
pub use mode_ode::{ModeProblem, Parity};
pub use par::Execution;
