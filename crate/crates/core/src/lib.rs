//! Two-mode Bose-Einstein condensate under high-frequency off-diagonal driving.
//!
//! * [`effective`]: drive parameters and the averaged couplings `γ′, c_Z, c_Y`.
//! * [`dynamics`]: lab-frame, rotating-frame and averaged mean-field integrators.
//! * [`phase_space`]: the classical Hamiltonian in `(s, φ)`, fixed points,
//!   separatrices and continuation in the bias.
//! * [`quantum`]: exact diagonalization of the N-boson Hamiltonian.
//! * [`experiments`]: Landau-Zener sweeps, trapping ensembles, averaging checks.
//! * [`cli`]: configuration, commands and CSV artifacts behind the `twomode` binary.

pub mod cli;
pub mod dynamics;
pub mod effective;
pub mod error;
pub mod experiments;
pub mod io;
pub mod phase_space;
pub mod quantum;

pub use dynamics::{AmplitudePair, IntegratorConfig, Schedule, Trajectory};
pub use effective::{bessel_j0, derive_effective, EffectiveParams, ModelParams};
pub use error::{Error, Result};
pub use phase_space::{Couplings, FixedPoint, PhasePoint, Stability};
