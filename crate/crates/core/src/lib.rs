//! Spin-chain dynamics under continuous dynamical decoupling.
//!
//! The crate is organised bottom-up:
//!
//! * [`hilbert`]: dense states and operators on the `2^N` dimensional chain space.
//! * [`chain`]: the XYZ chain, bath coupling and every control/drive/gate field.
//! * [`effective`]: closed-form time-averaged Hamiltonians, numerical averaging,
//!   the decoupling residual and the second Magnus term.
//! * [`noise`]: Ornstein-Uhlenbeck bath trajectories.
//! * [`propagator`]: fixed-step RK4 and spectral propagation, ensemble densities.
//! * [`observables`]: fidelity, concurrence, purity.
//! * [`jw`] and [`pfaffian`]: the Jordan-Wigner free-fermion fast path.
//!
//! Basis convention: `σ_z|s⟩ = (-1)^s |s⟩`, site 1 is the leftmost tensor
//! factor (most significant bit of the basis index).

pub mod chain;
pub mod effective;
mod error;
pub mod hilbert;
pub mod jw;
pub mod noise;
pub mod observables;
pub mod pauli;
pub mod pfaffian;
pub mod propagator;
mod quadrature;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
