//! Finite Markov chains and their adiabatic evolution.
//!
//! Discrete chains: mixing times, spectral gaps, and the time needed for a
//! linearly interpolated chain sequence to track its final stationary law.
//! Continuous-time chains: uniformized transition semigroups, inhomogeneous
//! evolution, and the continuous analogue of the adiabatic time. Hamiltonians
//! with a positive ground state map to reversible chains and back.

pub mod battery;
pub mod chain;
pub mod continuous;
pub mod discrete;
pub mod error;
pub mod format;
pub mod generate;
pub mod hamiltonian;
pub mod ising;
pub mod mixing;
pub mod oracle;
pub mod spectral;

pub use chain::{
    is_irreducible_aperiodic, is_reversible, lazy, stationary_distribution, tv_distance,
    ProbabilityDistribution, StochasticMatrix,
};
pub use continuous::{
    adiabatic_time_continuous, continuous_bound, evolve_inhomogeneous, transition_matrix,
    uniformize, Generator,
};
pub use discrete::{
    adiabatic_error, adiabatic_evolve, adiabatic_time, discrete_bound, gap_bound, AdiabaticReport,
    AdiabaticSchedule,
};
pub use error::{Error, ErrorKind, Result};
pub use hamiltonian::{
    chain_to_hamiltonian, hamiltonian_to_chain, validate_hamiltonian, Hamiltonian,
};
pub use ising::{gibbs_distribution, glauber_generator, IsingModel};
pub use mixing::{mixing_curve, mixing_curve_continuous, mixing_time, mixing_time_continuous};
pub use spectral::{mixing_time_bounds, reversible_spectrum, spectral_gap};
