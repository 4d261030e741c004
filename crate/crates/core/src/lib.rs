//! Simulation library for metasurface-mediated two-qubit gates.
//!
//! The library propagates full qubit ⊗ bosonic-mode dynamics for two gate
//! schemes driven through an engineered coupling surface:
//!
//! - **iSWAP** via parametric exchange: two qubits exchange an excitation
//!   through an off-resonant surface mode, with effective coupling set by
//!   the transmission coefficients at the qubit positions.
//! - **Controlled-phase** via geometric phase: dressed qubits displace the
//!   mode conditionally on their joint Z-configuration; a closed loop in
//!   mode phase space leaves behind an entangling phase.
//!
//! Layers, bottom to top:
//!
//! - [`operator`]: dense complex operators, states, tensor embeddings,
//!   Hermitian eigendecomposition and matrix exponentials.
//! - [`metasurface`]: parametric transmission models, modulation envelopes,
//!   and position-dependent coupling coefficients.
//! - [`hamiltonian`]: builders for the interaction, dressed, exchange and
//!   dispersive Hamiltonians, plus the effective coupling scalars.
//! - [`dynamics`]: unitary and Lindblad time evolution, subspace extraction,
//!   fidelity and leakage metrics.
//! - [`protocols`]: gate scheduling (durations, closed-loop snapping) and
//!   end-to-end gate execution producing [`protocols::GateReport`]s.
//! - [`experiments`]: distance sweeps, exchange-oscillation experiments and
//!   the self-validation suite, with CSV output.
//! - [`config`]: file-based run configuration with unit-suffixed keys.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod hamiltonian;
pub mod metasurface;
pub mod operator;
pub mod protocols;
pub mod tolerances;

mod eigen;

pub use config::{parse_config, RunConfig};
pub use dynamics::{
    average_gate_fidelity, fidelity_after_local_z, qubit_subspace_gate, EvolutionSettings,
    Trajectory,
};
pub use error::{Error, Result};
pub use experiments::{SweepTable, ValidationReport};
pub use hamiltonian::{CouplingConvention, SystemLayout};
pub use metasurface::{
    MetasurfaceConfig, ModeSpec, ModulationEnvelope, QubitSpec, TransmissionModel, Vec3,
};
pub use operator::{DensityMatrix, HilbertOrdering, Operator, StateVector};
pub use protocols::{GatePair, GateReport, PhaseConditionMode};
