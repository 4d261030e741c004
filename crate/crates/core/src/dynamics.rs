//! Time evolution and gate metrics.
//!
//! Unitary propagation uses midpoint-exponential stepping (a product of
//! exponentials of Hermitian midpoint samples), which is unitary by
//! construction; the adaptive loop halves the step until the propagator
//! stops moving. Square-envelope interaction models additionally admit an
//! exact rotating-frame factorization ([`drive_frame_propagator`]) used as
//! both a fast path and an independent cross-check.
//!
//! Dissipative evolution integrates the Lindblad master equation with
//! classical fourth-order stepping and the same step-halving convergence.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hamiltonian::{iswap_hamiltonian, DriveFrame, InteractionModel, SystemLayout};
use crate::operator::{expm_hermitian, DensityMatrix, Operator, StateVector};
use crate::protocols::GatePair;
use crate::tolerances;

/// Step-size and convergence policy for the evolution routines.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolutionSettings {
    /// Starting step (s).
    pub dt_initial: f64,
    /// Convergence tolerance on the max-norm change under step halving.
    pub tolerance: f64,
    /// Halvings allowed before giving up.
    pub max_step_halvings: usize,
    /// When set, full-model gate runs are repeated with every Fock
    /// truncation raised by two and must agree on populations.
    pub truncation_check: bool,
}

impl Default for EvolutionSettings {
    fn default() -> Self {
        EvolutionSettings {
            dt_initial: 1e-10,
            tolerance: 1e-8,
            max_step_halvings: 12,
            truncation_check: false,
        }
    }
}

impl EvolutionSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_initial > 0.0) {
            return Err(Error::InvalidInput("dt_initial must be > 0".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidInput("tolerance must be > 0".into()));
        }
        Ok(())
    }
}

/// A Hamiltonian over a time window: either constant or sampled.
pub enum HamiltonianSource<'a> {
    Constant(&'a Operator),
    TimeDependent {
        dim: usize,
        f: &'a (dyn Fn(f64) -> Operator + Sync),
    },
}

impl<'a> HamiltonianSource<'a> {
    pub fn dim(&self) -> usize {
        match self {
            HamiltonianSource::Constant(h) => h.dim(),
            HamiltonianSource::TimeDependent { dim, .. } => *dim,
        }
    }

    pub fn at(&self, t: f64) -> Operator {
        match self {
            HamiltonianSource::Constant(h) => (*h).clone(),
            HamiltonianSource::TimeDependent { f, .. } => f(t),
        }
    }

    fn is_constant(&self) -> bool {
        matches!(self, HamiltonianSource::Constant(_))
    }
}

/// Recorded evolution: times, one state per time, and named scalar series.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: StateSeries,
    pub observables: Vec<(String, Vec<f64>)>,
}

#[derive(Clone, Debug)]
pub enum StateSeries {
    Pure(Vec<StateVector>),
    Mixed(Vec<DensityMatrix>),
}

impl Trajectory {
    pub fn observable(&self, name: &str) -> Option<&[f64]> {
        self.observables
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }
}

fn approx_unitary(u: &Operator) -> Result<()> {
    let defect = u.unitarity_defect();
    if defect > tolerances::UNITARITY_ABS {
        return Err(Error::Convergence(format!(
            "propagator unitarity defect {defect:.3e} exceeds {:.1e}",
            tolerances::UNITARITY_ABS
        )));
    }
    Ok(())
}

fn midpoint_product(source: &HamiltonianSource, t0: f64, t1: f64, n_steps: usize) -> Result<Operator> {
    let dim = source.dim();
    let dt = (t1 - t0) / n_steps as f64;
    let mut u = Operator::identity(dim);
    for k in 0..n_steps {
        let t_mid = t0 + (k as f64 + 0.5) * dt;
        let h = source.at(t_mid);
        let step = expm_hermitian(&h, C64::new(0.0, -dt))?;
        u = step.matmul(&u);
    }
    Ok(u)
}

/// Time-ordered propagator `U(t0 -> t1)`.
///
/// Constant sources are exponentiated directly. Time-dependent sources use
/// midpoint-exponential stepping; the step is halved until the propagator
/// changes by less than `settings.tolerance` in max-norm. The result is
/// checked unitary to within the crate bound.
pub fn propagate_unitary(
    source: &HamiltonianSource,
    t0: f64,
    t1: f64,
    settings: &EvolutionSettings,
) -> Result<Operator> {
    settings.validate()?;
    if !(t1 > t0) {
        return Err(Error::InvalidInput("t1 must exceed t0".into()));
    }
    if source.is_constant() {
        let h = source.at(t0);
        let u = expm_hermitian(&h, C64::new(0.0, -(t1 - t0)))?;
        approx_unitary(&u)?;
        return Ok(u);
    }
    let span = t1 - t0;
    let mut n_steps = (span / settings.dt_initial).ceil().max(1.0) as usize;
    let mut u_prev = midpoint_product(source, t0, t1, n_steps)?;
    for _ in 0..settings.max_step_halvings {
        n_steps *= 2;
        let u = midpoint_product(source, t0, t1, n_steps)?;
        let diff = (&u - &u_prev).max_abs();
        if diff < settings.tolerance {
            approx_unitary(&u)?;
            return Ok(u);
        }
        u_prev = u;
    }
    Err(Error::Convergence(format!(
        "midpoint stepping did not converge below {:.1e} within {} halvings",
        settings.tolerance, settings.max_step_halvings
    )))
}

/// Exact propagator for a square-envelope interaction window:
/// `U = e^{-i H0 t1} e^{-i H_static (t1-t0)} e^{+i H0 t0}`.
pub fn drive_frame_propagator(frame: &DriveFrame, t0: f64, t1: f64) -> Result<Operator> {
    let rotated = expm_hermitian(&frame.h_static, C64::new(0.0, -(t1 - t0)))?;
    let dim = rotated.dim();
    let mut u = Operator::zeros(dim);
    for i in 0..dim {
        let left = C64::from_polar(1.0, -frame.frame_energies[i] * t1);
        for j in 0..dim {
            let right = C64::from_polar(1.0, frame.frame_energies[j] * t0);
            u[(i, j)] = left * rotated[(i, j)] * right;
        }
    }
    approx_unitary(&u)?;
    Ok(u)
}

/// Propagator for a full interaction model over `[t0, t1]`, taking the
/// exact rotating-frame route when the envelope is square and falling back
/// to midpoint stepping otherwise.
pub fn interaction_propagator(
    model: &InteractionModel,
    t0: f64,
    t1: f64,
    settings: &EvolutionSettings,
) -> Result<Operator> {
    if t0 >= 0.0 && t1 <= model.envelope_duration() + 1e-18 {
        if let Some(frame) = model.drive_frame() {
            return drive_frame_propagator(&frame, t0, t1);
        }
    }
    let f = |t: f64| model.at(t);
    let source = HamiltonianSource::TimeDependent {
        dim: model.dim(),
        f: &f,
    };
    propagate_unitary(&source, t0, t1, settings)
}

fn lindblad_rhs(
    h: &Operator,
    collapse: &[(Operator, f64)],
    precomputed_ldl: &[Operator],
    rho: &Operator,
) -> Operator {
    // -i[H, rho] + sum_k gamma_k (L rho L† - 1/2 {L†L, rho})
    let h_rho = h.matmul(rho);
    let rho_h = rho.matmul(h);
    let mut out = (&h_rho - &rho_h).scale(C64::new(0.0, -1.0));
    for ((l, rate), ldl) in collapse.iter().zip(precomputed_ldl) {
        if *rate == 0.0 {
            continue;
        }
        let l_rho = l.matmul(rho);
        let jump = l_rho.matmul(&l.dagger());
        let ldl_rho = ldl.matmul(rho);
        let rho_ldl = rho.matmul(ldl);
        out.add_scaled(&jump, C64::new(*rate, 0.0));
        out.add_scaled(&ldl_rho, C64::new(-0.5 * rate, 0.0));
        out.add_scaled(&rho_ldl, C64::new(-0.5 * rate, 0.0));
    }
    out
}

fn hermitize(m: &mut Operator) {
    let dim = m.dim();
    for i in 0..dim {
        for j in i..dim {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

/// One fixed-step RK4 Lindblad run, recording every `record_every` steps.
/// Also usable on non-state matrices (the equation is linear); callers that
/// need density-matrix guarantees apply them on top.
pub(crate) fn lindblad_map_fixed(
    source: &HamiltonianSource,
    collapse: &[(Operator, f64)],
    t_span: (f64, f64),
    n_steps: usize,
    record_every: Option<usize>,
    m0: &Operator,
    keep_hermitian: bool,
) -> Result<Vec<(f64, Operator)>> {
    let (t0, t1) = t_span;
    let dt = (t1 - t0) / n_steps as f64;
    let ldl: Vec<Operator> = collapse.iter().map(|(l, _)| l.dagger().matmul(l)).collect();
    let mut rho = m0.clone();
    let mut records = Vec::new();
    if record_every.is_some() {
        records.push((t0, rho.clone()));
    }
    let constant_h = if source.is_constant() {
        Some(source.at(t0))
    } else {
        None
    };
    for k in 0..n_steps {
        let t = t0 + k as f64 * dt;
        let (h0, h_half, h1);
        match &constant_h {
            Some(h) => {
                h0 = h.clone();
                h_half = h.clone();
                h1 = h.clone();
            }
            None => {
                h0 = source.at(t);
                h_half = source.at(t + dt / 2.0);
                h1 = source.at(t + dt);
            }
        }
        let k1 = lindblad_rhs(&h0, collapse, &ldl, &rho);
        let mut s2 = rho.clone();
        s2.add_scaled(&k1, C64::new(dt / 2.0, 0.0));
        let k2 = lindblad_rhs(&h_half, collapse, &ldl, &s2);
        let mut s3 = rho.clone();
        s3.add_scaled(&k2, C64::new(dt / 2.0, 0.0));
        let k3 = lindblad_rhs(&h_half, collapse, &ldl, &s3);
        let mut s4 = rho.clone();
        s4.add_scaled(&k3, C64::new(dt, 0.0));
        let k4 = lindblad_rhs(&h1, collapse, &ldl, &s4);
        rho.add_scaled(&k1, C64::new(dt / 6.0, 0.0));
        rho.add_scaled(&k2, C64::new(dt / 3.0, 0.0));
        rho.add_scaled(&k3, C64::new(dt / 3.0, 0.0));
        rho.add_scaled(&k4, C64::new(dt / 6.0, 0.0));
        if keep_hermitian {
            hermitize(&mut rho);
        }
        if let Some(every) = record_every {
            if (k + 1) % every == 0 {
                records.push((t0 + (k + 1) as f64 * dt, rho.clone()));
            }
        }
    }
    if record_every.is_none() {
        records.push((t1, rho));
    }
    Ok(records)
}

/// Converged Lindblad map applied to an arbitrary matrix: the step count is
/// doubled until the final matrix moves less than `tolerance`.
pub(crate) fn lindblad_map(
    source: &HamiltonianSource,
    collapse: &[(Operator, f64)],
    t_span: (f64, f64),
    settings: &EvolutionSettings,
    m0: &Operator,
) -> Result<Operator> {
    let span = t_span.1 - t_span.0;
    let mut n_steps = (span / settings.dt_initial).ceil().max(1.0) as usize;
    let run = |n: usize| -> Result<Operator> {
        Ok(lindblad_map_fixed(source, collapse, t_span, n, None, m0, false)?
            .pop()
            .expect("final state recorded")
            .1)
    };
    let mut prev = run(n_steps)?;
    for _ in 0..settings.max_step_halvings {
        n_steps *= 2;
        let cur = run(n_steps)?;
        if (&cur - &prev).max_abs() < settings.tolerance {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Convergence(
        "Lindblad stepping did not converge under step halving".into(),
    ))
}

/// Integrate the Lindblad master equation
///
///   d rho/dt = -i[H, rho] + sum_k gamma_k (L rho L† - 1/2 {L†L, rho})
///
/// recording `record_points` equally spaced states. Convergence is judged on
/// the final state under step halving; trace drift beyond the crate bound is
/// an error, as is a significantly negative eigenvalue at any recorded time.
pub fn evolve_lindblad(
    rho0: &DensityMatrix,
    source: &HamiltonianSource,
    collapse: &[(Operator, f64)],
    t_span: (f64, f64),
    record_points: usize,
    settings: &EvolutionSettings,
) -> Result<Trajectory> {
    settings.validate()?;
    if collapse.iter().any(|(_, rate)| *rate < 0.0) {
        return Err(Error::InvalidInput("collapse rates must be >= 0".into()));
    }
    if record_points < 2 {
        return Err(Error::InvalidInput("record_points must be >= 2".into()));
    }
    if !(t_span.1 > t_span.0) {
        return Err(Error::InvalidInput("t_span must be increasing".into()));
    }
    let segments = record_points - 1;
    let span = t_span.1 - t_span.0;
    let mut per_segment = ((span / segments as f64) / settings.dt_initial)
        .ceil()
        .max(1.0) as usize;

    let run = |per_seg: usize| -> Result<Vec<(f64, Operator)>> {
        lindblad_map_fixed(
            source,
            collapse,
            t_span,
            per_seg * segments,
            Some(per_seg),
            &rho0.matrix,
            true,
        )
    };

    let mut prev = run(per_segment)?;
    let mut converged = None;
    for _ in 0..settings.max_step_halvings {
        per_segment *= 2;
        let cur = run(per_segment)?;
        let diff = (&cur.last().unwrap().1 - &prev.last().unwrap().1).max_abs();
        if diff < settings.tolerance {
            converged = Some(cur);
            break;
        }
        prev = cur;
    }
    let records =
        converged.ok_or_else(|| Error::Convergence("Lindblad step halving exhausted".into()))?;

    let tr0 = rho0.matrix.trace().re;
    let mut times = Vec::with_capacity(records.len());
    let mut states = Vec::with_capacity(records.len());
    let mut traces = Vec::with_capacity(records.len());
    let mut min_eigs = Vec::with_capacity(records.len());
    for (t, m) in records {
        let drift = (m.trace().re - tr0).abs();
        if drift > tolerances::TRACE_DRIFT_ABS {
            return Err(Error::Convergence(format!(
                "trace drift {drift:.3e} exceeds {:.1e} at t = {t:.3e}",
                tolerances::TRACE_DRIFT_ABS
            )));
        }
        let dm = DensityMatrix::from_operator(m);
        let min_eig = dm.min_eigenvalue()?;
        if min_eig < tolerances::DENSITY_MIN_EIG_EVOLVE {
            return Err(Error::Convergence(format!(
                "negative density eigenvalue {min_eig:.3e} at t = {t:.3e}"
            )));
        }
        times.push(t);
        traces.push(dm.trace().re);
        min_eigs.push(min_eig);
        states.push(dm);
    }
    Ok(Trajectory {
        times,
        states: StateSeries::Mixed(states),
        observables: vec![
            ("trace".into(), traces),
            ("min_eigenvalue".into(), min_eigs),
        ],
    })
}

/// Collapse operators implied by a layout: `sigma_i^-` at rate `1/T1_i` per
/// qubit with finite `T1`, and `b_mu` at rate `kappa_mu` per lossy mode.
pub fn layout_collapse_ops(layout: &SystemLayout) -> Result<Vec<(Operator, f64)>> {
    use crate::operator::{embed_annihilator, embed_pauli, Pauli};
    let mut out = Vec::new();
    for q in layout.qubits() {
        if q.t1.is_finite() {
            out.push((
                embed_pauli(Pauli::Minus, q.index, layout.ordering())?,
                1.0 / q.t1,
            ));
        }
    }
    for m in &layout.metasurface().modes {
        if m.loss_rate > 0.0 {
            out.push((
                embed_annihilator(m.index, layout.ordering())?,
                m.loss_rate,
            ));
        }
    }
    Ok(out)
}

/// Basis indices of the four computational states `|q1 q2>` with all
/// spectator qubits in `|0>` and all modes in vacuum, ordered
/// `|00>, |01>, |10>, |11>` (pair's first qubit most significant).
pub fn computational_indices(layout: &SystemLayout, pair: GatePair) -> Result<[usize; 4]> {
    let ordering = layout.ordering();
    let nq = ordering.qubit_count();
    if pair.q1 == pair.q2 || pair.q1 == 0 || pair.q2 == 0 || pair.q1 > nq || pair.q2 > nq {
        return Err(Error::InvalidInput(format!(
            "invalid gate pair ({}, {}) for {} qubits",
            pair.q1, pair.q2, nq
        )));
    }
    let mut out = [0usize; 4];
    for (slot, (a, b)) in [(0, 0), (0, 1), (1, 0), (1, 1)].iter().enumerate() {
        let mut occ = vec![0usize; ordering.factor_count()];
        occ[pair.q1 - 1] = *a;
        occ[pair.q2 - 1] = *b;
        out[slot] = ordering.basis_index(&occ)?;
    }
    Ok(out)
}

/// Restrict a full-space propagator to the computational subspace.
///
/// Modes are assumed to start in vacuum. Returns the (unnormalized) 4x4
/// block and the leakage `1 - min_c sum_r |G[r,c]|^2`, the worst-case
/// probability of leaving the subspace over the four basis inputs.
pub fn qubit_subspace_gate(
    u_full: &Operator,
    layout: &SystemLayout,
    pair: GatePair,
) -> Result<(Operator, f64)> {
    let idx = computational_indices(layout, pair)?;
    let mut block = Operator::zeros(4);
    for (r, &ir) in idx.iter().enumerate() {
        for (c, &ic) in idx.iter().enumerate() {
            block[(r, c)] = u_full[(ir, ic)];
        }
    }
    let mut min_col_norm = f64::INFINITY;
    for c in 0..4 {
        let col_norm: f64 = (0..4).map(|r| block[(r, c)].norm_sqr()).sum();
        min_col_norm = min_col_norm.min(col_norm);
    }
    Ok((block, (1.0 - min_col_norm).max(0.0)))
}

/// The ideal iSWAP target `[[1,0,0,0],[0,0,i,0],[0,i,0,0],[0,0,0,1]]`.
pub fn ideal_iswap() -> Operator {
    let mut u = Operator::zeros(4);
    u[(0, 0)] = C64::new(1.0, 0.0);
    u[(1, 2)] = C64::new(0.0, 1.0);
    u[(2, 1)] = C64::new(0.0, 1.0);
    u[(3, 3)] = C64::new(1.0, 0.0);
    u
}

/// The ideal controlled-phase target `diag(1, 1, 1, -1)`.
pub fn ideal_cz() -> Operator {
    Operator::from_diag(&[
        C64::new(1.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(1.0, 0.0),
        C64::new(-1.0, 0.0),
    ])
}

/// Average gate fidelity `F = (|Tr(ideal† actual)|^2 + d) / (d(d+1))` with
/// `d = 4`. Valid for near-unitary `actual`; leakage is reported separately.
pub fn average_gate_fidelity(actual: &Operator, ideal: &Operator) -> f64 {
    debug_assert_eq!(actual.dim(), 4);
    debug_assert_eq!(ideal.dim(), 4);
    let tr = ideal.dagger().matmul(actual).trace();
    (tr.norm_sqr() + 4.0) / 20.0
}

/// Scan + refine maximization of `|w0 + w1 e^{i p2} + w2 e^{i p1} +
/// w3 e^{i (p1+p2)}|` over the local-Z torus. Returns (best value squared,
/// phi1, phi2).
fn maximize_local_z(w: [C64; 4]) -> (f64, f64, f64) {
    let objective = |p1: f64, p2: f64| -> f64 {
        let s = w[0]
            + w[1] * C64::from_polar(1.0, p2)
            + w[2] * C64::from_polar(1.0, p1)
            + w[3] * C64::from_polar(1.0, p1 + p2);
        s.norm_sqr()
    };
    let tau = std::f64::consts::TAU;
    let coarse = 64usize;
    let mut best = (objective(0.0, 0.0), 0.0f64, 0.0f64);
    for i in 0..coarse {
        for j in 0..coarse {
            let p1 = tau * i as f64 / coarse as f64;
            let p2 = tau * j as f64 / coarse as f64;
            let v = objective(p1, p2);
            if v > best.0 {
                best = (v, p1, p2);
            }
        }
    }
    let mut step = tau / coarse as f64;
    for _ in 0..8 {
        let (_, c1, c2) = best;
        for i in -8i32..=8 {
            for j in -8i32..=8 {
                let p1 = c1 + step * i as f64 / 8.0;
                let p2 = c2 + step * j as f64 / 8.0;
                let v = objective(p1, p2);
                if v > best.0 {
                    best = (v, p1, p2);
                }
            }
        }
        step /= 8.0;
    }
    best
}

/// Average gate fidelity maximized over single-qubit Z frames applied after
/// the gate: `max_{p1,p2} F(Z(p1)⊗Z(p2) · actual, ideal)`. Never below the
/// uncorrected fidelity.
pub fn fidelity_after_local_z(actual: &Operator, ideal: &Operator) -> f64 {
    let m = actual.matmul(&ideal.dagger());
    // Tr(ideal† D actual) = sum_r D_rr (actual ideal†)_rr with
    // D = diag(1, e^{i p2}, e^{i p1}, e^{i(p1+p2)}).
    let w = [m[(0, 0)], m[(1, 1)], m[(2, 2)], m[(3, 3)]];
    let (best, _, _) = maximize_local_z(w);
    ((best + 4.0) / 20.0).min(1.0)
}

/// The two-qubit Pauli basis (16 Hermitian operators, identity first).
pub(crate) fn two_qubit_pauli_basis() -> Vec<Operator> {
    use crate::operator::{kron, pauli_matrix, Pauli};
    let singles = [
        Operator::identity(2),
        pauli_matrix(Pauli::X),
        pauli_matrix(Pauli::Y),
        pauli_matrix(Pauli::Z),
    ];
    let mut out = Vec::with_capacity(16);
    for a in &singles {
        for b in &singles {
            out.push(kron(a, b));
        }
    }
    out
}

/// A two-qubit channel represented by its images of the Pauli basis.
///
/// For a unitary conjugation this reproduces the closed-form fidelity
/// expressions exactly; for dissipative runs the images come from Lindblad
/// evolution around the gate propagator.
pub struct GateChannel {
    /// `E(P_k)` for the 16 Pauli basis elements, 4x4 each.
    pub images: Vec<Operator>,
}

impl GateChannel {
    pub fn from_unitary(g: &Operator) -> Self {
        let images = two_qubit_pauli_basis()
            .iter()
            .map(|p| g.matmul(p).matmul(&g.dagger()))
            .collect();
        GateChannel { images }
    }

    /// Process fidelity `(1/d^3) sum_k Tr[U P_k U† E(P_k)]`, `d = 4`.
    pub fn process_fidelity(&self, ideal: &Operator) -> f64 {
        let basis = two_qubit_pauli_basis();
        let mut acc = 0.0;
        for (p, image) in basis.iter().zip(&self.images) {
            let target = ideal.matmul(p).matmul(&ideal.dagger());
            acc += target.matmul(image).trace().re;
        }
        acc / 64.0
    }

    /// Average gate fidelity `(d F_pro + 1) / (d + 1)`.
    pub fn average_fidelity(&self, ideal: &Operator) -> f64 {
        (4.0 * self.process_fidelity(ideal) + 1.0) / 5.0
    }

    /// Average fidelity maximized over post-gate local Z frames.
    pub fn fidelity_after_local_z(&self, ideal: &Operator) -> f64 {
        let basis = two_qubit_pauli_basis();
        // f(p1, p2) = sum_k Tr[M_k Z E(P_k) Z†] with M_k = U P_k U†;
        // (Z T Z†)[r,c] = e^{i(theta_r - theta_c)} T[r,c], so collecting
        // coefficients by (r, c) gives a 4x4 table S with
        // f = sum_{r,c} S[r,c] e^{i(theta_r - theta_c)}.
        let mut s = Operator::zeros(4);
        for (p, image) in basis.iter().zip(&self.images) {
            let m = ideal.matmul(p).matmul(&ideal.dagger());
            for r in 0..4 {
                for c in 0..4 {
                    s[(r, c)] += m[(c, r)] * image[(r, c)];
                }
            }
        }
        let theta = |p1: f64, p2: f64| [0.0, p2, p1, p1 + p2];
        let objective = |p1: f64, p2: f64| -> f64 {
            let th = theta(p1, p2);
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..4 {
                for c in 0..4 {
                    acc += s[(r, c)] * C64::from_polar(1.0, th[r] - th[c]);
                }
            }
            acc.re
        };
        let tau = std::f64::consts::TAU;
        let coarse = 64usize;
        let mut best = (objective(0.0, 0.0), 0.0f64, 0.0f64);
        for i in 0..coarse {
            for j in 0..coarse {
                let p1 = tau * i as f64 / coarse as f64;
                let p2 = tau * j as f64 / coarse as f64;
                let v = objective(p1, p2);
                if v > best.0 {
                    best = (v, p1, p2);
                }
            }
        }
        let mut step = tau / coarse as f64;
        for _ in 0..8 {
            let (_, c1, c2) = best;
            for i in -8i32..=8 {
                for j in -8i32..=8 {
                    let p1 = c1 + step * i as f64 / 8.0;
                    let p2 = c2 + step * j as f64 / 8.0;
                    let v = objective(p1, p2);
                    if v > best.0 {
                        best = (v, p1, p2);
                    }
                }
            }
            step /= 8.0;
        }
        ((4.0 * best.0 / 64.0 + 1.0) / 5.0).min(1.0)
    }
}

/// Populations of the exchange oscillation between `|01>` and `|10>`,
/// evolved under the effective two-qubit exchange model AND under the full
/// interaction model when the layout carries modes.
///
/// Observables: `p01_eff`, `p10_eff`, `p01_full`, `p10_full`, `leakage`
/// (population outside the all-modes-vacuum manifold in the full model).
pub fn exchange_population_series(
    layout: &SystemLayout,
    pair: GatePair,
    j: f64,
    delta: f64,
    t_max: f64,
    points: usize,
    settings: &EvolutionSettings,
) -> Result<Trajectory> {
    if points < 2 {
        return Err(Error::InvalidInput("points must be >= 2".into()));
    }
    if !(t_max > 0.0) {
        return Err(Error::InvalidInput("t_max must be > 0".into()));
    }
    let times: Vec<f64> = (0..points)
        .map(|k| t_max * k as f64 / (points - 1) as f64)
        .collect();

    // Effective model: |01> under the 4x4 exchange Hamiltonian.
    let h_eff = iswap_hamiltonian(j, delta, layout.ordering())?;
    let (vals, vecs) = h_eff.hermitian_eigen()?;
    let psi0 = StateVector::basis(4, 1)?;
    let coeffs = vecs.dagger().mul_vec(psi0.amplitudes());
    let eff_state_at = |t: f64| -> Vec<C64> {
        let rotated: Vec<C64> = coeffs
            .iter()
            .zip(&vals)
            .map(|(c, &e)| c * C64::from_polar(1.0, -e * t))
            .collect();
        vecs.mul_vec(&rotated)
    };
    let mut p01_eff = Vec::with_capacity(points);
    let mut p10_eff = Vec::with_capacity(points);
    for &t in &times {
        let amps = eff_state_at(t);
        p01_eff.push(amps[1].norm_sqr());
        p10_eff.push(amps[2].norm_sqr());
    }

    // Full model, when modes are present.
    let mut p01_full = vec![f64::NAN; points];
    let mut p10_full = vec![f64::NAN; points];
    let mut leakage = vec![f64::NAN; points];
    let mut states = Vec::new();
    if layout.ordering().mode_count() > 0 {
        // Keep the envelope on for the whole observation window.
        let env = layout.metasurface().envelope.with_duration(t_max);
        let layout_on = layout.with_envelope(env);
        let model = InteractionModel::new(&layout_on)?;
        let ordering = layout_on.ordering();
        let idx = computational_indices(&layout_on, pair)?;
        let psi0_full = StateVector::basis(ordering.total_dim(), idx[1])?;

        let vacuum_indices: Vec<usize> = (0..ordering.total_dim())
            .filter(|&i| {
                (layout_on.qubits().len()..ordering.factor_count())
                    .all(|f| ordering.occupation_of(i, f) == 0)
            })
            .collect();

        let mut record = |k: usize, psi: &StateVector| {
            p01_full[k] = psi.population(idx[1]);
            p10_full[k] = psi.population(idx[2]);
            let in_vacuum: f64 = vacuum_indices.iter().map(|&i| psi.population(i)).sum();
            leakage[k] = (1.0 - in_vacuum).max(0.0);
        };

        if let Some(frame) = model.drive_frame() {
            let (fvals, fvecs) = frame.h_static.hermitian_eigen()?;
            let coeffs_full = fvecs.dagger().mul_vec(psi0_full.amplitudes());
            for (k, &t) in times.iter().enumerate() {
                let rotated: Vec<C64> = coeffs_full
                    .iter()
                    .zip(&fvals)
                    .map(|(c, &e)| c * C64::from_polar(1.0, -e * t))
                    .collect();
                let mut amps = fvecs.mul_vec(&rotated);
                for (i, amp) in amps.iter_mut().enumerate() {
                    *amp *= C64::from_polar(1.0, -frame.frame_energies[i] * t);
                }
                let psi = StateVector::from_amplitudes(amps);
                record(k, &psi);
                states.push(psi);
            }
        } else {
            let f = |t: f64| model.at(t);
            let source = HamiltonianSource::TimeDependent {
                dim: model.dim(),
                f: &f,
            };
            let mut psi = psi0_full.clone();
            record(0, &psi);
            states.push(psi.clone());
            for k in 1..points {
                let u = propagate_unitary(&source, times[k - 1], times[k], settings)?;
                psi = psi.apply(&u);
                record(k, &psi);
                states.push(psi.clone());
            }
        }
    } else {
        for (k, &t) in times.iter().enumerate() {
            let amps = eff_state_at(t);
            states.push(StateVector::from_amplitudes(amps));
            p01_full[k] = p01_eff[k];
            p10_full[k] = p10_eff[k];
            leakage[k] = 0.0;
        }
    }

    Ok(Trajectory {
        times,
        states: StateSeries::Pure(states),
        observables: vec![
            ("p01_eff".into(), p01_eff),
            ("p10_eff".into(), p10_eff),
            ("p01_full".into(), p01_full),
            ("p10_full".into(), p10_full),
            ("leakage".into(), leakage),
        ],
    })
}
