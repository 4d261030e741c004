//! Numerical tolerances used across the crate.
//!
//! Each bound is part of a contract (builder invariant, evolution guard or
//! validation check); keeping them in one place avoids ad-hoc magic numbers.

/// Relative Hermiticity bound for every generated Hamiltonian:
/// `max|A - A†| <= HERMITICITY_REL * max|A|`.
pub const HERMITICITY_REL: f64 = 1e-12;

/// Unitarity bound for every propagator: `max|U†U - I| <= UNITARITY_ABS`.
pub const UNITARITY_ABS: f64 = 1e-9;

/// State-vector norm drift allowed after ideal (non-dissipative) evolution.
pub const STATE_NORM_ABS: f64 = 1e-9;

/// Trace drift allowed over a trace-preserving Lindblad run.
pub const TRACE_DRIFT_ABS: f64 = 1e-8;

/// Most negative density-matrix eigenvalue tolerated at construction.
pub const DENSITY_MIN_EIG_CONSTRUCT: f64 = -1e-8;

/// Most negative density-matrix eigenvalue tolerated during evolution.
pub const DENSITY_MIN_EIG_EVOLVE: f64 = -1e-6;

/// Population change allowed when every Fock truncation is raised by two.
pub const TRUNCATION_POP_ABS: f64 = 1e-6;

/// Agreement between the conditional-phase closed form and the
/// four-configuration numeric oracle, in radians.
pub const CONDITIONAL_PHASE_ABS: f64 = 1e-5;

/// Partial-trace composition agreement (trace preservation, ordering).
pub const PARTIAL_TRACE_ABS: f64 = 1e-10;

/// Default Hilbert-space dimension cap; layouts above this are rejected.
pub const DEFAULT_MAX_HILBERT_DIM: usize = 4096;
