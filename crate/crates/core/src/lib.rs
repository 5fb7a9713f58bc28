//! Single-excitation dynamics of a spin chain (or quantum-dot array) driven
//! by a slowly moving parabolic potential.
//!
//! The crate is split by concern:
//!
//! * [`chain`] holds the chain configuration, the moving potential, initial
//!   states and the instantaneous tridiagonal Hamiltonian.
//! * [`disorder`] generates reproducible static and dynamic coupling noise.
//! * [`propagator`] integrates the amplitude equations with a norm-preserving
//!   Cayley scheme, and carries a dense reference propagator for checks.
//! * [`pendulum`] is the classical pendulum picture: separatrix geometry,
//!   orbits, the wavepacket-size bound and an adiabaticity diagnostic.
//! * [`dual`] is the two-sub-chain encoding with CNOT decoding.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod disorder;
pub mod dual;
pub mod pendulum;
pub mod propagator;

pub use chain::{
    ChainError, ChainSpec, HoppingSign, PotentialSchedule, PotentialWindow, Segment, StateVector,
    TridiagonalOperator, WindowMode,
};
pub use disorder::{DisorderModel, DynamicDisorder, StaticDisorder};
pub use num_complex::Complex64;
