//! Simulation of controlled-phase gates built from parametrically modulated
//! longitudinal qubit–oscillator coupling.
//!
//! The crate is organised bottom-up:
//!
//! * [`algebra`]: dense operators on qubit ⊗ Fock spaces, matrix exponential,
//!   partial traces.
//! * [`model`]: system parameters, Hamiltonian builders in the lab, rotating
//!   and polaron frames, effective couplings and commensurate gate schedules.
//! * [`dynamics`]: Lindblad dissipators and an adaptive Dormand–Prince
//!   integrator, plus fast propagation paths for qubit-diagonal and periodic
//!   generators.
//! * [`fidelity`]: two-qubit channel reconstruction, Pauli transfer
//!   matrices and average gate fidelity.
//! * [`experiments`]: named parameter sweeps with CSV/JSON persistence.
//!
//! All frequencies and rates are angular (rad/s) and times are in seconds.

pub mod algebra;
pub mod dynamics;
pub mod experiments;
pub mod fidelity;
pub mod model;
pub mod selftest;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
