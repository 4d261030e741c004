//! Builders for the interaction, dressed, exchange and dispersive
//! Hamiltonians, plus the effective coupling scalars they imply.
//!
//! Two independent descriptions of the same physics coexist deliberately:
//! the full interaction model (qubits exchanging excitations with detuned
//! surface modes) and the effective two-qubit exchange model. Their
//! agreement is measured by the dynamics layer, never assumed.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::metasurface::{
    dressing_angle, spurious_amplitude, transmission_at, MetasurfaceConfig, ModeSpec, QubitSpec,
    Vec3,
};
use crate::operator::{
    embed_annihilator, embed_number, embed_pauli, HilbertOrdering, Operator, Pauli,
};
use crate::tolerances;

/// Normalization of the exchange-coupling formula.
///
/// As printed, the product of two bare couplings has units of rate squared;
/// a frequency must divide it to produce a rate. `DispersiveNormalized`
/// divides by the target-mode detuning magnitude, which is the reading
/// consistent with the long-range coupling sum and the quoted gate times.
/// `Literal` divides by a caller-chosen frequency (defaulting to the same
/// detuning) for sensitivity studies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CouplingConvention {
    DispersiveNormalized,
    Literal { omega_norm: Option<f64> },
}

impl CouplingConvention {
    pub fn label(&self) -> String {
        match self {
            CouplingConvention::DispersiveNormalized => "dispersive_normalized".into(),
            CouplingConvention::Literal { omega_norm: None } => "literal".into(),
            CouplingConvention::Literal {
                omega_norm: Some(w),
            } => format!("literal(omega_norm={w:.6e} rad/s)"),
        }
    }
}

/// Validated system description: qubits, surface and the derived
/// tensor-factor ordering. The single source of truth for a simulation.
#[derive(Clone, Debug)]
pub struct SystemLayout {
    qubits: Vec<QubitSpec>,
    metasurface: MetasurfaceConfig,
    ordering: HilbertOrdering,
}

impl SystemLayout {
    pub fn new(qubits: Vec<QubitSpec>, metasurface: MetasurfaceConfig) -> Result<Self> {
        Self::with_dimension_cap(qubits, metasurface, tolerances::DEFAULT_MAX_HILBERT_DIM)
    }

    pub fn with_dimension_cap(
        qubits: Vec<QubitSpec>,
        metasurface: MetasurfaceConfig,
        max_dim: usize,
    ) -> Result<Self> {
        if qubits.is_empty() {
            return Err(Error::InvalidInput("layout needs at least one qubit".into()));
        }
        for (pos, q) in qubits.iter().enumerate() {
            if q.index != pos + 1 {
                return Err(Error::InvalidInput(format!(
                    "qubit indices must be 1..=N in order; slot {} has index {}",
                    pos, q.index
                )));
            }
            if q.bare_coupling < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "qubit {} bare coupling must be >= 0",
                    q.index
                )));
            }
            if !(q.t1 > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "qubit {} t1 must be > 0",
                    q.index
                )));
            }
        }
        for (pos, m) in metasurface.modes.iter().enumerate() {
            if m.index != pos + 1 {
                return Err(Error::InvalidInput(format!(
                    "mode indices must be 1..=M in order; slot {} has index {}",
                    pos, m.index
                )));
            }
            if m.loss_rate < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "mode {} loss rate must be >= 0",
                    m.index
                )));
            }
        }
        if metasurface.isolation_db < 0.0 {
            return Err(Error::InvalidInput("isolation_db must be >= 0".into()));
        }
        metasurface.transmission.validate()?;
        metasurface.envelope.validate()?;
        let ordering = HilbertOrdering::new(
            qubits.len(),
            metasurface.modes.iter().map(|m| m.truncation).collect(),
        )?;
        if ordering.total_dim() > max_dim {
            return Err(Error::InvalidInput(format!(
                "total Hilbert dimension {} exceeds cap {}",
                ordering.total_dim(),
                max_dim
            )));
        }
        Ok(SystemLayout {
            qubits,
            metasurface,
            ordering,
        })
    }

    pub fn qubits(&self) -> &[QubitSpec] {
        &self.qubits
    }

    pub fn metasurface(&self) -> &MetasurfaceConfig {
        &self.metasurface
    }

    pub fn ordering(&self) -> &HilbertOrdering {
        &self.ordering
    }

    /// Qubit by 1-based index.
    pub fn qubit(&self, index: usize) -> Result<&QubitSpec> {
        self.qubits
            .get(index.wrapping_sub(1))
            .ok_or_else(|| Error::IndexOutOfRange(format!("qubit {index}")))
    }

    /// Mode by 1-based index.
    pub fn mode(&self, index: usize) -> Result<&ModeSpec> {
        self.metasurface
            .modes
            .get(index.wrapping_sub(1))
            .ok_or_else(|| Error::IndexOutOfRange(format!("mode {index}")))
    }

    /// The gate's target mode: the first listed mode.
    pub fn target_mode(&self) -> Result<&ModeSpec> {
        self.metasurface
            .modes
            .first()
            .ok_or_else(|| Error::InvalidInput("layout has no modes".into()))
    }

    /// Inter-qubit detuning `omega_i - omega_j`.
    pub fn detuning_pair(&self, i: usize, j: usize) -> Result<f64> {
        Ok(self.qubit(i)?.frequency - self.qubit(j)?.frequency)
    }

    /// Amplitude scale for a mode: 1 for the target, the isolation
    /// suppression factor for spectators.
    pub fn mode_amplitude_scale(&self, mode_index: usize) -> f64 {
        if mode_index == 1 {
            1.0
        } else {
            spurious_amplitude(self.metasurface.isolation_db)
        }
    }

    /// Coupling of qubit `i` to mode `mu` at the envelope plateau, including
    /// transmission, spatial phase and spectator suppression.
    pub fn plateau_coupling(&self, qubit_index: usize, mode_index: usize) -> Result<C64> {
        let q = self.qubit(qubit_index)?;
        let m = self.mode(mode_index)?;
        let trans = transmission_at(&self.metasurface.transmission, &m.wavevector, &q.position)?;
        let phase = C64::from_polar(1.0, m.wavevector.dot(&q.position));
        let scale = self.mode_amplitude_scale(mode_index);
        Ok(trans * phase * q.bare_coupling * self.metasurface.envelope.plateau() * scale)
    }

    /// Copy of the layout with the two pair qubits placed symmetrically at
    /// z = ±separation/2 (used by distance sweeps).
    pub fn with_symmetric_separation(
        &self,
        q1: usize,
        q2: usize,
        separation: f64,
    ) -> Result<SystemLayout> {
        let mut layout = self.clone();
        layout
            .qubits
            .get_mut(q1.wrapping_sub(1))
            .ok_or_else(|| Error::IndexOutOfRange(format!("qubit {q1}")))?
            .position = Vec3([0.0, 0.0, -separation / 2.0]);
        layout
            .qubits
            .get_mut(q2.wrapping_sub(1))
            .ok_or_else(|| Error::IndexOutOfRange(format!("qubit {q2}")))?
            .position = Vec3([0.0, 0.0, separation / 2.0]);
        Ok(layout)
    }

    /// Copy of the layout with every Fock truncation increased by `extra`
    /// (used by the truncation-convergence guard).
    pub fn with_truncations_increased(&self, extra: usize) -> Result<SystemLayout> {
        let mut metasurface = self.metasurface.clone();
        for m in &mut metasurface.modes {
            m.truncation += extra;
        }
        SystemLayout::new(self.qubits.clone(), metasurface)
    }

    /// Copy with the envelope replaced.
    pub fn with_envelope(&self, envelope: crate::metasurface::ModulationEnvelope) -> SystemLayout {
        let mut layout = self.clone();
        layout.metasurface.envelope = envelope;
        layout
    }
}

/// Precomputed operator pieces of the full interaction Hamiltonian
///
///   H(t) = sum_mu eps_mu b†b + sum_{i,mu} g_{i,mu}(t) sigma_i^+ b_mu
///          e^{i(omega_i - nu_mu)t} + h.c.
///
/// so repeated evaluation at many times costs only scalar phases.
pub struct InteractionModel {
    dim: usize,
    mode_number_part: Operator,
    couplers: Vec<Coupler>,
    envelope: crate::metasurface::ModulationEnvelope,
    drive_reference: f64,
    qubit_frequencies: Vec<f64>,
    mode_frequencies: Vec<f64>,
    mode_detunings: Vec<f64>,
    ordering: HilbertOrdering,
}

struct Coupler {
    /// sigma_i^+ b_mu, embedded.
    raise_annihilate: Operator,
    /// Static coefficient: g0 T e^{i k·r} (spectator-scaled), before the
    /// envelope and the rotating phase.
    coefficient: C64,
    /// Rotating-frame frequency omega_i - nu_mu.
    rotation: f64,
}

impl InteractionModel {
    pub fn new(layout: &SystemLayout) -> Result<Self> {
        let ordering = layout.ordering().clone();
        let dim = ordering.total_dim();
        let mut mode_number_part = Operator::zeros(dim);
        for m in &layout.metasurface().modes {
            let n_op = embed_number(m.index, &ordering)?;
            mode_number_part.add_scaled(&n_op, C64::new(layout.metasurface().mode_detuning(m), 0.0));
        }
        let mut couplers = Vec::new();
        for q in layout.qubits() {
            let raise = embed_pauli(Pauli::Plus, q.index, &ordering)?;
            for m in &layout.metasurface().modes {
                let annihilate = embed_annihilator(m.index, &ordering)?;
                let trans =
                    transmission_at(&layout.metasurface().transmission, &m.wavevector, &q.position)?;
                let phase = C64::from_polar(1.0, m.wavevector.dot(&q.position));
                let coefficient =
                    trans * phase * q.bare_coupling * layout.mode_amplitude_scale(m.index);
                if coefficient.norm() == 0.0 {
                    continue;
                }
                couplers.push(Coupler {
                    raise_annihilate: raise.matmul(&annihilate),
                    coefficient,
                    rotation: q.frequency - m.frequency,
                });
            }
        }
        Ok(InteractionModel {
            dim,
            mode_number_part,
            couplers,
            envelope: layout.metasurface().envelope.clone(),
            drive_reference: layout.metasurface().drive_reference,
            qubit_frequencies: layout.qubits().iter().map(|q| q.frequency).collect(),
            mode_frequencies: layout
                .metasurface()
                .modes
                .iter()
                .map(|m| m.frequency)
                .collect(),
            mode_detunings: layout
                .metasurface()
                .modes
                .iter()
                .map(|m| layout.metasurface().mode_detuning(m))
                .collect(),
            ordering,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ordering(&self) -> &HilbertOrdering {
        &self.ordering
    }

    pub fn envelope_duration(&self) -> f64 {
        self.envelope.duration
    }

    /// The Hamiltonian at time `t`; Hermitian by construction.
    pub fn at(&self, t: f64) -> Operator {
        let mut h = self.mode_number_part.clone();
        let envelope = self.envelope.value_at(t);
        if envelope != 0.0 {
            for c in &self.couplers {
                let coeff = c.coefficient * envelope * C64::from_polar(1.0, c.rotation * t);
                h.add_scaled(&c.raise_annihilate, coeff);
                h.add_scaled(&c.raise_annihilate.dagger(), coeff.conj());
            }
        }
        h
    }

    /// Exact factorization of the square-envelope propagator.
    ///
    /// In the frame generated by the diagonal `H0` (each qubit counted at
    /// `omega_d - omega_i`, each mode at `omega_d - nu_mu`) the Hamiltonian
    /// becomes time independent, so
    ///
    ///   U(t0 -> t1) = e^{-i H0 t1} e^{-i H_static (t1 - t0)} e^{+i H0 t0}.
    ///
    /// Only valid while the envelope sits on its plateau, i.e. for windows
    /// inside `[0, duration]` with a square envelope.
    pub fn drive_frame(&self) -> Option<DriveFrame> {
        if self.envelope.shape != crate::metasurface::EnvelopeShape::Square {
            return None;
        }
        let plateau = self.envelope.plateau();
        let mut h_static = Operator::zeros(self.dim);
        for (mu, &eps) in self.mode_detunings.iter().enumerate() {
            let n_op = embed_number(mu + 1, &self.ordering).expect("mode in range");
            h_static.add_scaled(&n_op, C64::new(2.0 * eps, 0.0));
        }
        for (i, &omega) in self.qubit_frequencies.iter().enumerate() {
            let num_q = embed_pauli(Pauli::Plus, i + 1, &self.ordering)
                .expect("qubit in range")
                .matmul(&embed_pauli(Pauli::Minus, i + 1, &self.ordering).expect("qubit in range"));
            h_static.add_scaled(&num_q, C64::new(omega - self.drive_reference, 0.0));
        }
        for c in &self.couplers {
            let coeff = c.coefficient * plateau;
            h_static.add_scaled(&c.raise_annihilate, coeff);
            h_static.add_scaled(&c.raise_annihilate.dagger(), coeff.conj());
        }
        let mut frame_energies = vec![0.0f64; self.dim];
        for (idx, energy) in frame_energies.iter_mut().enumerate() {
            let mut e = 0.0;
            for (i, &omega) in self.qubit_frequencies.iter().enumerate() {
                e += (self.drive_reference - omega) * self.ordering.occupation_of(idx, i) as f64;
            }
            for (mu, &nu) in self.mode_frequencies.iter().enumerate() {
                let f = self.qubit_frequencies.len() + mu;
                e += (self.drive_reference - nu) * self.ordering.occupation_of(idx, f) as f64;
            }
            *energy = e;
        }
        Some(DriveFrame {
            frame_energies,
            h_static,
        })
    }
}

/// Static pieces of the exactly-factorized square-envelope propagator.
pub struct DriveFrame {
    /// Diagonal frame generator H0, as per-basis-state energies.
    pub frame_energies: Vec<f64>,
    /// Time-independent Hamiltonian in the rotated frame.
    pub h_static: Operator,
}

/// Full interaction Hamiltonian at time `t` (convenience one-shot form).
pub fn interaction_hamiltonian(layout: &SystemLayout, t: f64) -> Result<Operator> {
    let model = InteractionModel::new(layout)?;
    let h = model.at(t);
    h.check_hermitian(tolerances::HERMITICITY_REL)?;
    Ok(h)
}

/// One dressed qubit-mode coupling entry: coefficient of
/// `Z_i (b e^{i phase} + b† e^{-i phase})`.
#[derive(Clone, Copy, Debug)]
pub struct DressedCoupling {
    pub qubit_index: usize,
    pub mode_index: usize,
    /// `|g_{i,mu}| sin(theta_i) / 2`, in rad/s; non-negative.
    pub lambda: f64,
    /// Quadrature angle `arg g_{i,mu}`.
    pub phase: f64,
}

/// All dressed couplings of the layout. Errors on singular dressing
/// (zero drive detuning with nonzero amplitude).
pub fn dressed_couplings(layout: &SystemLayout) -> Result<Vec<DressedCoupling>> {
    let mut out = Vec::new();
    for q in layout.qubits() {
        let d = dressing_angle(q);
        if d.singular {
            return Err(Error::SingularDressing);
        }
        for m in &layout.metasurface().modes {
            let g = layout.plateau_coupling(q.index, m.index)?;
            let lambda = g.norm() * d.theta.sin() / 2.0;
            out.push(DressedCoupling {
                qubit_index: q.index,
                mode_index: m.index,
                lambda: lambda.abs(),
                phase: if lambda < 0.0 {
                    g.arg() + std::f64::consts::PI
                } else {
                    g.arg()
                },
            });
        }
    }
    Ok(out)
}

/// Dressed-basis effective Hamiltonian:
///
///   H = sum_mu eps_mu b†b + sum_{i,mu} lambda_{i,mu} Z_i
///       (b e^{i phi} + b† e^{-i phi}).
///
/// Complex couplings are handled by the quadrature rotation `phi`, keeping
/// the output Hermitian.
pub fn dressed_hamiltonian(layout: &SystemLayout) -> Result<Operator> {
    let ordering = layout.ordering();
    let dim = ordering.total_dim();
    let mut h = Operator::zeros(dim);
    for m in &layout.metasurface().modes {
        let n_op = embed_number(m.index, ordering)?;
        h.add_scaled(&n_op, C64::new(layout.metasurface().mode_detuning(m), 0.0));
    }
    for c in dressed_couplings(layout)? {
        if c.lambda == 0.0 {
            continue;
        }
        let z = embed_pauli(Pauli::Z, c.qubit_index, ordering)?;
        let b = embed_annihilator(c.mode_index, ordering)?;
        let mut quad = b.scale(C64::from_polar(1.0, c.phase));
        quad.add_scaled(&b.dagger(), C64::from_polar(1.0, -c.phase));
        h.add_scaled(&z.matmul(&quad), C64::new(c.lambda, 0.0));
    }
    h.check_hermitian(tolerances::HERMITICITY_REL)?;
    Ok(h)
}

/// Dispersive shift rates `f_{i,mu} = |g_{i,mu}|^2 / Delta_i`, transmission
/// factors included; indexed `[qubit][mode]` (0-based storage).
pub fn dispersive_shifts(layout: &SystemLayout) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(layout.qubits().len());
    for q in layout.qubits() {
        if q.drive_detuning == 0.0 {
            return Err(Error::SingularDressing);
        }
        let mut row = Vec::with_capacity(layout.metasurface().modes.len());
        for m in &layout.metasurface().modes {
            let g = layout.plateau_coupling(q.index, m.index)?;
            row.push(g.norm_sqr() / q.drive_detuning);
        }
        out.push(row);
    }
    Ok(out)
}

/// The dispersive operator `sum_{i,mu} f_{i,mu} Z_i b†b`.
pub fn dispersive_hamiltonian(layout: &SystemLayout) -> Result<Operator> {
    let shifts = dispersive_shifts(layout)?;
    let ordering = layout.ordering();
    let mut h = Operator::zeros(ordering.total_dim());
    for (qi, row) in shifts.iter().enumerate() {
        let z = embed_pauli(Pauli::Z, qi + 1, ordering)?;
        for (mi, &f) in row.iter().enumerate() {
            if f == 0.0 {
                continue;
            }
            let n_op = embed_number(mi + 1, ordering)?;
            h.add_scaled(&z.matmul(&n_op), C64::new(f, 0.0));
        }
    }
    Ok(h)
}

/// Effective exchange coupling through one mode:
///
///   J = g1 g2 |T(r1)| |T(r2)| cos(k_m (z1 - z2)) / (2 norm)
///
/// with the normalization frequency chosen by the [`CouplingConvention`].
/// The sign of the cosine is retained. The envelope plateau scales both
/// couplings, matching the drive actually applied during a gate.
pub fn j_eff(
    q1: &QubitSpec,
    q2: &QubitSpec,
    mode: &ModeSpec,
    cfg: &MetasurfaceConfig,
    convention: CouplingConvention,
) -> Result<f64> {
    let eps = cfg.mode_detuning(mode);
    let norm = match convention {
        CouplingConvention::DispersiveNormalized => {
            if eps == 0.0 {
                return Err(Error::InvalidInput(
                    "dispersive normalization requires nonzero mode detuning".into(),
                ));
            }
            eps.abs()
        }
        CouplingConvention::Literal { omega_norm } => match omega_norm {
            Some(w) if w > 0.0 => w,
            Some(_) => {
                return Err(Error::InvalidInput("omega_norm must be > 0".into()));
            }
            None => {
                if eps == 0.0 {
                    return Err(Error::InvalidInput(
                        "default omega_norm is |eps| which is zero here".into(),
                    ));
                }
                eps.abs()
            }
        },
    };
    let t1 = transmission_at(&cfg.transmission, &mode.wavevector, &q1.position)?.norm();
    let t2 = transmission_at(&cfg.transmission, &mode.wavevector, &q2.position)?.norm();
    let amp = cfg.envelope.plateau();
    let phase_match =
        (cfg.envelope.modulation_wavevector * (q1.position.z() - q2.position.z())).cos();
    Ok(q1.bare_coupling * amp * q2.bare_coupling * amp * t1 * t2 * phase_match / (2.0 * norm))
}

/// Long-range interaction magnitude summed over modes:
///
///   |J_ij| = sum_mu |g_i g_j T(r_i) T(r_j)| / (4 |eps_mu|),
///
/// with spectator modes entering at their suppressed coupling.
pub fn j_ij(qi: &QubitSpec, qj: &QubitSpec, layout: &SystemLayout) -> Result<f64> {
    let cfg = layout.metasurface();
    let mut total = 0.0;
    for m in &cfg.modes {
        let eps = cfg.mode_detuning(m);
        if eps == 0.0 {
            return Err(Error::InvalidInput(format!(
                "mode {} detuning is zero; the dispersive sum diverges",
                m.index
            )));
        }
        let gi = layout.plateau_coupling(qi.index, m.index)?;
        let gj = layout.plateau_coupling(qj.index, m.index)?;
        total += (gi.norm() * gj.norm()) / (4.0 * eps.abs());
    }
    Ok(total)
}

/// Two-qubit exchange Hamiltonian on the 4-dimensional qubit factor space:
///
///   H = (J/2)(X1 X2 + Y1 Y2) - (Delta/2)(Z1 - Z2)
///
/// In the basis {|00>, |01>, |10>, |11>} (first qubit most significant,
/// `Z|0> = +|0>`), the nonzero entries are `<01|H|10> = J`,
/// `<01|H|01> = -Delta`, `<10|H|10> = +Delta`.
pub fn iswap_hamiltonian(j: f64, delta: f64, ordering: &HilbertOrdering) -> Result<Operator> {
    if ordering.qubit_count() < 2 {
        return Err(Error::InvalidInput(
            "exchange Hamiltonian needs at least two qubits".into(),
        ));
    }
    let two_q = HilbertOrdering::new(2, vec![])?;
    let x1 = embed_pauli(Pauli::X, 1, &two_q)?;
    let x2 = embed_pauli(Pauli::X, 2, &two_q)?;
    let y1 = embed_pauli(Pauli::Y, 1, &two_q)?;
    let y2 = embed_pauli(Pauli::Y, 2, &two_q)?;
    let z1 = embed_pauli(Pauli::Z, 1, &two_q)?;
    let z2 = embed_pauli(Pauli::Z, 2, &two_q)?;
    let mut h = Operator::zeros(4);
    h.add_scaled(&x1.matmul(&x2), C64::new(j / 2.0, 0.0));
    h.add_scaled(&y1.matmul(&y2), C64::new(j / 2.0, 0.0));
    h.add_scaled(&(&z1 - &z2), C64::new(-delta / 2.0, 0.0));
    Ok(h)
}

/// Pure exchange limit: [`iswap_hamiltonian`] with zero detuning.
pub fn effective_exchange(j: f64, ordering: &HilbertOrdering) -> Result<Operator> {
    iswap_hamiltonian(j, 0.0, ordering)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metasurface::{EnvelopeShape, ModulationEnvelope, TransmissionModel};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    const TWO_PI: f64 = std::f64::consts::TAU;

    fn qubit(index: usize, freq_hz: f64, g_hz: f64, z: f64) -> QubitSpec {
        QubitSpec {
            index,
            frequency: TWO_PI * freq_hz,
            position: Vec3([0.0, 0.0, z]),
            bare_coupling: TWO_PI * g_hz,
            drive_amplitude: 0.0,
            drive_detuning: TWO_PI * 1.0e9,
            t1: f64::INFINITY,
        }
    }

    fn mode(index: usize, freq_hz: f64, trunc: usize) -> ModeSpec {
        ModeSpec {
            index,
            frequency: TWO_PI * freq_hz,
            wavevector: Vec3([100.0, 0.0, 0.0]),
            loss_rate: 0.0,
            truncation: trunc,
        }
    }

    fn surface(modes: Vec<ModeSpec>, t0: f64) -> MetasurfaceConfig {
        MetasurfaceConfig {
            modes,
            transmission: TransmissionModel::Uniform {
                t0: C64::new(t0, 0.0),
            },
            envelope: ModulationEnvelope {
                shape: EnvelopeShape::Square,
                amplitude: 1.0,
                duration: 1e-6,
                modulation_wavevector: 0.0,
            },
            drive_reference: TWO_PI * 5.0e9,
            isolation_db: 23.0,
        }
    }

    fn two_qubit_layout(g_hz: f64, t0: f64) -> SystemLayout {
        SystemLayout::new(
            vec![qubit(1, 5.0e9, g_hz, 0.0), qubit(2, 5.0e9, g_hz, 0.0)],
            surface(vec![mode(1, 5.2e9, 4)], t0),
        )
        .unwrap()
    }

    #[test]
    fn interaction_with_no_coupling_is_mode_diagonal() {
        let layout = two_qubit_layout(0.0, 1.0);
        let h = interaction_hamiltonian(&layout, 3.7e-9).unwrap();
        let eps = TWO_PI * 0.2e9;
        for idx in 0..layout.ordering().total_dim() {
            let n = layout.ordering().occupation_of(idx, 2);
            assert!((h[(idx, idx)] - C64::new(eps * n as f64, 0.0)).norm() < 1e-3);
        }
        let off: f64 = (0..h.dim())
            .flat_map(|i| (0..h.dim()).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j)
            .map(|(i, j)| h[(i, j)].norm())
            .sum();
        assert_eq!(off, 0.0);
    }

    #[test]
    fn interaction_resonant_single_qubit_is_jaynes_cummings() {
        // 1 qubit resonant with the mode at t = 0: coupling block g between
        // |1,0> and |0,1>.
        let g_hz = 20.0e6;
        let layout = SystemLayout::new(
            vec![qubit(1, 5.2e9, g_hz, 0.0)],
            surface(vec![mode(1, 5.2e9, 2)], 1.0),
        )
        .unwrap();
        let h = interaction_hamiltonian(&layout, 0.0).unwrap();
        let ord = layout.ordering();
        let e10 = ord.basis_index(&[1, 0]).unwrap();
        let e01 = ord.basis_index(&[0, 1]).unwrap();
        assert!((h[(e10, e01)] - C64::new(TWO_PI * g_hz, 0.0)).norm() < 1e-3);
        assert!((h[(e01, e10)] - C64::new(TWO_PI * g_hz, 0.0)).norm() < 1e-3);
        assert!(h[(e10, e10)].norm() < 1e-9);
    }

    #[test]
    fn interaction_hermitian_at_random_times() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let layout = SystemLayout::new(
            vec![
                qubit(1, 5.0e9, 28.3e6, -0.01),
                qubit(2, 5.03e9, 25.0e6, 0.01),
            ],
            surface(vec![mode(1, 5.2e9, 3), mode(2, 5.45e9, 3)], 0.8),
        )
        .unwrap();
        let model = InteractionModel::new(&layout).unwrap();
        for _ in 0..100 {
            let t = rng.gen_range(0.0..1e-6);
            let h = model.at(t);
            assert!(h.hermiticity_defect() <= 1e-12 * h.max_abs() + f64::EPSILON);
        }
    }

    #[test]
    fn interaction_at_zero_coupling_commutes_with_mode_numbers() {
        let layout = SystemLayout::new(
            vec![qubit(1, 5.0e9, 0.0, 0.0)],
            surface(vec![mode(1, 5.2e9, 3), mode(2, 5.4e9, 3)], 1.0),
        )
        .unwrap();
        let h = interaction_hamiltonian(&layout, 1e-9).unwrap();
        for mu in 1..=2 {
            let n_op = embed_number(mu, layout.ordering()).unwrap();
            let comm = &h.matmul(&n_op) - &n_op.matmul(&h);
            assert!(comm.max_abs() < 1e-9);
        }
    }

    #[test]
    fn dressed_reduces_to_mode_hamiltonian_without_drive() {
        // theta = 0 for all qubits: sin(theta) = 0 kills every coupling.
        let layout = two_qubit_layout(28.3e6, 1.0);
        let h = dressed_hamiltonian(&layout).unwrap();
        let eps = TWO_PI * 0.2e9;
        let n_op = embed_number(1, layout.ordering()).unwrap();
        let expect = n_op.scale(C64::new(eps, 0.0));
        assert!((&h - &expect).max_abs() < 1e-3);
    }

    #[test]
    fn dressed_commutes_with_z() {
        let mut q1 = qubit(1, 5.0e9, 28.3e6, -0.01);
        q1.drive_amplitude = TWO_PI * 2.0e9;
        let mut q2 = qubit(2, 5.0e9, 28.3e6, 0.013);
        q2.drive_amplitude = TWO_PI * 1.5e9;
        let layout =
            SystemLayout::new(vec![q1, q2], surface(vec![mode(1, 5.2e9, 5)], 0.9)).unwrap();
        let h = dressed_hamiltonian(&layout).unwrap();
        for qi in 1..=2 {
            let z = embed_pauli(Pauli::Z, qi, layout.ordering()).unwrap();
            let comm = &h.matmul(&z) - &z.matmul(&h);
            assert!(comm.max_abs() < 1e-6 * h.max_abs());
        }
    }

    #[test]
    fn dressed_single_qubit_spectrum_is_displaced_oscillator() {
        // One qubit, one mode, real lambda: each qubit branch is a displaced
        // oscillator with eigenvalues eps*n - lambda^2/eps.
        let mut q = qubit(1, 5.0e9, 20.0e6, 0.0);
        q.drive_amplitude = TWO_PI * 1.0e9;
        q.drive_detuning = TWO_PI * 1.0e9; // theta = pi/4
        let layout = SystemLayout::new(vec![q], {
            let mut s = surface(vec![mode(1, 5.2e9, 20)], 1.0);
            s.modes[0].wavevector = Vec3::ZERO;
            s
        })
        .unwrap();
        let h = dressed_hamiltonian(&layout).unwrap();
        let (vals, _) = h.hermitian_eigen().unwrap();
        let eps = TWO_PI * 0.2e9;
        let lambda = TWO_PI * 20.0e6 * (std::f64::consts::FRAC_PI_4).sin() / 2.0;
        let shift = lambda * lambda / eps;
        // Both qubit branches are displaced by the same amount, so the
        // spectrum is doubly degenerate: eps*n - shift.
        for n in 0..5 {
            let expect = eps * n as f64 - shift;
            let a = vals[2 * n];
            let b = vals[2 * n + 1];
            assert!((a - expect).abs() < 1e-4 * eps, "n={n}: {a} vs {expect}");
            assert!((b - expect).abs() < 1e-4 * eps);
        }
    }

    #[test]
    fn j_eff_dispersive_matches_quoted_arithmetic() {
        // g/2pi = 28.3 MHz both, |T| = 1, eps/2pi = 200 MHz
        // -> J/2pi = 28.3^2 / (2*200) MHz = 2.00223 MHz.
        let layout = two_qubit_layout(28.3e6, 1.0);
        let j = j_eff(
            layout.qubit(1).unwrap(),
            layout.qubit(2).unwrap(),
            layout.target_mode().unwrap(),
            layout.metasurface(),
            CouplingConvention::DispersiveNormalized,
        )
        .unwrap();
        let expect = TWO_PI * 28.3e6 * 28.3e6 / (2.0 * 200.0e6);
        assert!((j - expect).abs() < 1e-6 * expect);
        assert!((j / TWO_PI / 1e6 - 2.00223).abs() < 1e-4);
    }

    #[test]
    fn j_eff_zero_transmission_and_quarter_wave_mismatch() {
        let layout = two_qubit_layout(28.3e6, 0.0);
        let j = j_eff(
            layout.qubit(1).unwrap(),
            layout.qubit(2).unwrap(),
            layout.target_mode().unwrap(),
            layout.metasurface(),
            CouplingConvention::DispersiveNormalized,
        )
        .unwrap();
        assert_eq!(j, 0.0);

        // cos(k_m dz) = 0 kills the coupling regardless of transmission.
        let mut layout = two_qubit_layout(28.3e6, 1.0);
        layout = layout.with_symmetric_separation(1, 2, 0.02).unwrap();
        let mut env = layout.metasurface().envelope.clone();
        env.modulation_wavevector = std::f64::consts::FRAC_PI_2 / 0.02;
        let layout = layout.with_envelope(env);
        let j = j_eff(
            layout.qubit(1).unwrap(),
            layout.qubit(2).unwrap(),
            layout.target_mode().unwrap(),
            layout.metasurface(),
            CouplingConvention::DispersiveNormalized,
        )
        .unwrap();
        assert!(j.abs() < 1e-16 * TWO_PI * 28.3e6);
    }

    #[test]
    fn j_eff_symmetric_under_qubit_swap() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..20 {
            let layout = SystemLayout::new(
                vec![
                    qubit(1, 5.0e9, rng.gen_range(1.0e6..40.0e6), rng.gen_range(-0.03..0.03)),
                    qubit(2, 5.0e9, rng.gen_range(1.0e6..40.0e6), rng.gen_range(-0.03..0.03)),
                ],
                surface(vec![mode(1, 5.2e9, 3)], rng.gen_range(0.1..1.0)),
            )
            .unwrap();
            let a = j_eff(
                layout.qubit(1).unwrap(),
                layout.qubit(2).unwrap(),
                layout.target_mode().unwrap(),
                layout.metasurface(),
                CouplingConvention::DispersiveNormalized,
            )
            .unwrap();
            let b = j_eff(
                layout.qubit(2).unwrap(),
                layout.qubit(1).unwrap(),
                layout.target_mode().unwrap(),
                layout.metasurface(),
                CouplingConvention::DispersiveNormalized,
            )
            .unwrap();
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn j_ij_matches_quoted_arithmetic_and_sums_modes() {
        // |T| = 0.7071 both, g/2pi = 28.3 MHz, |eps|/2pi = 200 MHz
        // -> |J_ij|/2pi = 28.3^2 * 0.5 / (4 * 200) MHz = 0.50056 MHz.
        let layout = two_qubit_layout(28.3e6, std::f64::consts::FRAC_1_SQRT_2);
        let j = j_ij(layout.qubit(1).unwrap(), layout.qubit(2).unwrap(), &layout).unwrap();
        assert!((j / TWO_PI / 1e6 - 0.50056).abs() < 1e-4);

        // Two identical modes at zero isolation double the sum exactly.
        let mut srf = surface(
            vec![mode(1, 5.2e9, 3), mode(2, 5.2e9, 3)],
            std::f64::consts::FRAC_1_SQRT_2,
        );
        srf.isolation_db = 0.0;
        let layout2 = SystemLayout::new(
            vec![qubit(1, 5.0e9, 28.3e6, 0.0), qubit(2, 5.0e9, 28.3e6, 0.0)],
            srf,
        )
        .unwrap();
        let j2 = j_ij(layout2.qubit(1).unwrap(), layout2.qubit(2).unwrap(), &layout2).unwrap();
        assert!((j2 - 2.0 * j).abs() < 1e-9 * j);

        let zero = two_qubit_layout(28.3e6, 0.0);
        assert_eq!(
            j_ij(zero.qubit(1).unwrap(), zero.qubit(2).unwrap(), &zero).unwrap(),
            0.0
        );
    }

    #[test]
    fn j_eff_and_j_ij_pin_each_other() {
        // At z1 = z2 with |cos| = 1, the dispersive-normalized exchange
        // equals twice the single-mode long-range term.
        let layout = two_qubit_layout(28.3e6, 0.777);
        let je = j_eff(
            layout.qubit(1).unwrap(),
            layout.qubit(2).unwrap(),
            layout.target_mode().unwrap(),
            layout.metasurface(),
            CouplingConvention::DispersiveNormalized,
        )
        .unwrap();
        let jij = j_ij(layout.qubit(1).unwrap(), layout.qubit(2).unwrap(), &layout).unwrap();
        assert!((je.abs() - 2.0 * jij).abs() < 1e-9 * je.abs());
    }

    #[test]
    fn dispersive_shift_arithmetic_and_scaling() {
        // |g|/2pi = 20 MHz, Delta/2pi = 400 MHz -> f/2pi = 1 MHz.
        let mut q1 = qubit(1, 5.0e9, 20.0e6, 0.0);
        q1.drive_detuning = TWO_PI * 400.0e6;
        let mut q2 = qubit(2, 5.0e9, 0.0, 0.0);
        q2.drive_detuning = TWO_PI * 400.0e6;
        let layout =
            SystemLayout::new(vec![q1, q2], surface(vec![mode(1, 5.2e9, 3)], 1.0)).unwrap();
        let f = dispersive_shifts(&layout).unwrap();
        assert!((f[0][0] / TWO_PI / 1e6 - 1.0).abs() < 1e-9);
        assert_eq!(f[1][0], 0.0);

        // Scaling g by alpha scales f by alpha^2.
        let mut q1b = qubit(1, 5.0e9, 20.0e6 * 3.0, 0.0);
        q1b.drive_detuning = TWO_PI * 400.0e6;
        let mut q2b = qubit(2, 5.0e9, 0.0, 0.0);
        q2b.drive_detuning = TWO_PI * 400.0e6;
        let layout_b =
            SystemLayout::new(vec![q1b, q2b], surface(vec![mode(1, 5.2e9, 3)], 1.0)).unwrap();
        let fb = dispersive_shifts(&layout_b).unwrap();
        assert!((fb[0][0] - 9.0 * f[0][0]).abs() < 1e-6 * fb[0][0]);

        // Sign follows the drive detuning.
        let mut q1c = qubit(1, 5.0e9, 20.0e6, 0.0);
        q1c.drive_detuning = -TWO_PI * 400.0e6;
        let mut q2c = qubit(2, 5.0e9, 0.0, 0.0);
        q2c.drive_detuning = TWO_PI * 400.0e6;
        let layout_c =
            SystemLayout::new(vec![q1c, q2c], surface(vec![mode(1, 5.2e9, 3)], 1.0)).unwrap();
        let fc = dispersive_shifts(&layout_c).unwrap();
        assert!(fc[0][0] < 0.0);
    }

    #[test]
    fn iswap_hamiltonian_block_structure() {
        let ord = HilbertOrdering::new(2, vec![]).unwrap();
        let zero = iswap_hamiltonian(0.0, 0.0, &ord).unwrap();
        assert_eq!(zero.max_abs(), 0.0);

        let j = TWO_PI * 1.0e6;
        let delta = TWO_PI * 0.3e6;
        let h = iswap_hamiltonian(j, delta, &ord).unwrap();
        assert!((h[(1, 2)] - C64::new(j, 0.0)).norm() < 1e-9);
        assert!((h[(2, 1)] - C64::new(j, 0.0)).norm() < 1e-9);
        assert!(h[(0, 0)].norm() < 1e-12);
        assert!(h[(3, 3)].norm() < 1e-12);
        assert!((h[(1, 1)] - C64::new(-delta, 0.0)).norm() < 1e-9);
        assert!((h[(2, 2)] - C64::new(delta, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn effective_exchange_eigenvalues() {
        let ord = HilbertOrdering::new(2, vec![]).unwrap();
        let j = TWO_PI * 0.7e6;
        let h = effective_exchange(j, &ord).unwrap();
        let (vals, _) = h.hermitian_eigen().unwrap();
        assert!((vals[0] + j).abs() < 1e-6);
        assert!(vals[1].abs() < 1e-6);
        assert!(vals[2].abs() < 1e-6);
        assert!((vals[3] - j).abs() < 1e-6);
    }

    #[test]
    fn layout_rejects_bad_specs() {
        // Wrong qubit index order.
        let r = SystemLayout::new(
            vec![qubit(2, 5.0e9, 1e6, 0.0)],
            surface(vec![mode(1, 5.2e9, 3)], 1.0),
        );
        assert!(r.is_err());
        // Dimension cap.
        let r = SystemLayout::with_dimension_cap(
            vec![qubit(1, 5.0e9, 1e6, 0.0)],
            surface(vec![mode(1, 5.2e9, 64)], 1.0),
            100,
        );
        assert!(r.is_err());
    }
}
