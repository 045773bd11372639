//! Adiabatic (STIRAP-like) single-excitation transfer between two endpoint
//! dots side-coupled to a tight-binding chain with one central diagonal defect.
//!
//! Units: `ħ = 1`. Energies are expressed in the same unit as the chain
//! hopping `J` (normally 1) and times in `1/J`.
//!
//! Basis ordering for every full-space object is `[A, 1, 2, …, N, B]`; the
//! three-level model uses `[A, λ₀, B]`.

pub mod dynamics;
pub mod effective;
mod error;
pub mod lattice;
pub mod metrics;
mod ode;
pub mod protocol;

pub use dynamics::{
    evolve_effective, evolve_effective_with, evolve_master, evolve_master_with, evolve_schrodinger,
    evolve_schrodinger_with, DensityMatrix, FinalState, ModelKind, StateVector, StepControl,
    Trajectory,
};
pub use effective::{
    adiabatic_time_scale, adiabatic_triple, adiabaticity, effective_hamiltonian, max_adiabaticity,
    AdiabaticTriple, EffectiveHamiltonian,
};
pub use error::{Error, Result};
pub use lattice::{
    bound_state, build_medium_hamiltonian, diagonalize_medium, energy_gap, solve_wavevectors,
    BoundState, ChainSpec, MediumSpectrum, Parity, Wavevector, WavevectorSet,
};
pub use metrics::{
    minimal_transfer_time, operator_fidelity, reduce_to_endpoints, transfer_fidelity_mixed,
    transfer_fidelity_pure, ReducedEndpointOperator, SearchBounds,
};
pub use protocol::{
    build_total_hamiltonian, mixing_angle, pulse_amplitudes, resonant_onsite_energy,
    sample_disorder, DisorderRealization, ProtocolSpec, SiteHamiltonian, TransferDirection,
};

pub use num_complex::Complex64;
