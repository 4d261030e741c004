//! Dense complex-matrix algebra over composite qubit ⊗ mode Hilbert spaces.
//!
//! Everything here is plain row-major dense storage. The scenarios this crate
//! targets are two qubits and a handful of truncated bosonic modes, so the
//! total dimension stays far below the point where sparse or structured
//! representations would pay off.
//!
//! Tensor-factor convention: factors are ordered qubit 1, qubit 2, ...,
//! then mode 1, mode 2, ...; the FIRST factor is the most significant
//! (slowest-varying) index. All index arithmetic goes through
//! [`HilbertOrdering`]; nothing else in the crate computes tensor indices by
//! hand.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

use crate::eigen;
use crate::error::{Error, Result};
use crate::tolerances;

/// Dense square complex matrix with dimension metadata.
///
/// Houses Hamiltonians, propagators and observables. Storage is row-major:
/// entry `(i, j)` lives at `i * dim + j`.
#[derive(Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    data: Vec<C64>,
}

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        Operator {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut op = Self::zeros(dim);
        for i in 0..dim {
            op[(i, i)] = C64::new(1.0, 0.0);
        }
        op
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut op = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                op[(i, j)] = f(i, j);
            }
        }
        op
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut op = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            op[(i, i)] = d;
        }
        op
    }

    /// Build from row-major rows; every row must have length `rows.len()`.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch(
                "from_rows requires a square row-major layout".into(),
            ));
        }
        Ok(Operator {
            dim,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        Operator::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, c: C64) -> Self {
        Operator {
            dim: self.dim,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &Operator, c: C64) {
        assert_eq!(self.dim, other.dim, "add_scaled dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += b * c;
        }
    }

    /// `max |A - A†|`, the Hermiticity defect.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Check the builder contract `max|A - A†| <= rel_tol * max|A|`.
    pub fn check_hermitian(&self, rel_tol: f64) -> Result<()> {
        let defect = self.hermiticity_defect();
        let tol = rel_tol * self.max_abs() + f64::EPSILON;
        if defect > tol {
            Err(Error::NotHermitian { defect, tol })
        } else {
            Ok(())
        }
    }

    /// `max |U†U - I|`, the unitarity defect.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = self.dagger().matmul(self);
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod[(i, j)] - expect).norm());
            }
        }
        worst
    }

    pub fn matmul(&self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = Operator::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.data[i * n + k];
                if aik.re == 0.0 && aik.im == 0.0 {
                    continue;
                }
                let row_b = &rhs.data[k * n..(k + 1) * n];
                let row_o = &mut out.data[i * n..(i + 1) * n];
                for j in 0..n {
                    row_o[j] += aik * row_b[j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.dim, v.len(), "mul_vec dimension mismatch");
        let n = self.dim;
        let mut out = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// Eigendecomposition of a Hermitian operator: ascending eigenvalues and
    /// the unitary of eigenvector columns.
    pub fn hermitian_eigen(&self) -> Result<(Vec<f64>, Operator)> {
        self.check_hermitian(tolerances::HERMITICITY_REL)?;
        let sym = symmetrize(self);
        Ok(eigen::eigh(&sym))
    }
}

fn symmetrize(op: &Operator) -> Operator {
    Operator::from_fn(op.dim(), |i, j| (op[(i, j)] + op[(j, i)].conj()) * 0.5)
}

impl Index<(usize, usize)> for Operator {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for Operator {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim);
        Operator {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(rhs.data.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim);
        Operator {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(rhs.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.matmul(rhs)
    }
}

impl Mul<C64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: C64) -> Operator {
        self.scale(rhs)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Operator(dim={})", self.dim)?;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, " {:+.4}{:+.4}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Pure state over the composite space.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    dim: usize,
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Self {
        let dim = amplitudes.len();
        StateVector { dim, amplitudes }
    }

    /// Basis state `|index>` in a `dim`-dimensional space.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::IndexOutOfRange(format!(
                "basis index {index} in dimension {dim}"
            )));
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(StateVector { dim, amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn population(&self, index: usize) -> f64 {
        self.amplitudes[index].norm_sqr()
    }

    /// Inner product `<self|other>`.
    pub fn dot(&self, other: &StateVector) -> C64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn apply(&self, op: &Operator) -> StateVector {
        StateVector::from_amplitudes(op.mul_vec(&self.amplitudes))
    }

    pub fn outer(&self) -> DensityMatrix {
        let m = Operator::from_fn(self.dim, |i, j| {
            self.amplitudes[i] * self.amplitudes[j].conj()
        });
        DensityMatrix { matrix: m }
    }
}

/// Mixed state; carrier for dissipative dynamics.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    pub matrix: Operator,
}

impl DensityMatrix {
    pub fn from_pure(psi: &StateVector) -> Self {
        psi.outer()
    }

    pub fn from_operator(matrix: Operator) -> Self {
        DensityMatrix { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let (vals, _) = self.matrix.hermitian_eigen()?;
        Ok(vals.first().copied().unwrap_or(0.0))
    }

    /// Construction-time sanity: Hermitian, unit trace, near-positive.
    pub fn validate(&self) -> Result<()> {
        let defect = self.matrix.hermiticity_defect();
        if defect > 1e-10 {
            return Err(Error::NotHermitian {
                defect,
                tol: 1e-10,
            });
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
            return Err(Error::InvalidInput(format!(
                "density matrix trace {tr} deviates from 1"
            )));
        }
        let min = self.min_eigenvalue()?;
        if min < tolerances::DENSITY_MIN_EIG_CONSTRUCT {
            return Err(Error::InvalidInput(format!(
                "density matrix minimum eigenvalue {min:.3e} is negative"
            )));
        }
        Ok(())
    }
}

/// Tensor-factor layout of the composite space.
///
/// Factors are qubit 1..q, then mode 1..m; the first factor is the most
/// significant index. Factor indices in the public API are 1-based to match
/// the qubit/mode labels used throughout.
#[derive(Clone, Debug, PartialEq)]
pub struct HilbertOrdering {
    qubit_count: usize,
    mode_truncations: Vec<usize>,
}

impl HilbertOrdering {
    pub fn new(qubit_count: usize, mode_truncations: Vec<usize>) -> Result<Self> {
        if mode_truncations.iter().any(|&n| n < 2) {
            return Err(Error::InvalidInput(
                "every mode truncation must be at least 2".into(),
            ));
        }
        Ok(HilbertOrdering {
            qubit_count,
            mode_truncations,
        })
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn mode_count(&self) -> usize {
        self.mode_truncations.len()
    }

    pub fn mode_truncations(&self) -> &[usize] {
        &self.mode_truncations
    }

    pub fn factor_count(&self) -> usize {
        self.qubit_count + self.mode_truncations.len()
    }

    /// Dimensions of all factors, in tensor order.
    pub fn factor_dims(&self) -> Vec<usize> {
        let mut dims = vec![2usize; self.qubit_count];
        dims.extend_from_slice(&self.mode_truncations);
        dims
    }

    pub fn total_dim(&self) -> usize {
        self.factor_dims().iter().product()
    }

    /// Strides for the most-significant-factor-first convention.
    fn strides(&self) -> Vec<usize> {
        let dims = self.factor_dims();
        let mut strides = vec![1usize; dims.len()];
        for f in (0..dims.len().saturating_sub(1)).rev() {
            strides[f] = strides[f + 1] * dims[f + 1];
        }
        strides
    }

    /// Flat index of the basis state with one occupation per factor.
    pub fn basis_index(&self, occupations: &[usize]) -> Result<usize> {
        let dims = self.factor_dims();
        if occupations.len() != dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} factor occupations, got {}",
                dims.len(),
                occupations.len()
            )));
        }
        let strides = self.strides();
        let mut idx = 0usize;
        for (f, (&occ, &d)) in occupations.iter().zip(dims.iter()).enumerate() {
            if occ >= d {
                return Err(Error::IndexOutOfRange(format!(
                    "occupation {occ} exceeds factor {f} dimension {d}"
                )));
            }
            idx += occ * strides[f];
        }
        Ok(idx)
    }

    /// Occupation of factor `f` (0-based) in flat basis index `idx`.
    pub fn occupation_of(&self, idx: usize, factor: usize) -> usize {
        let dims = self.factor_dims();
        let strides = self.strides();
        (idx / strides[factor]) % dims[factor]
    }

    /// Embed a single-factor operator at 0-based factor position `factor`.
    pub fn embed(&self, local: &Operator, factor: usize) -> Result<Operator> {
        let dims = self.factor_dims();
        if factor >= dims.len() {
            return Err(Error::IndexOutOfRange(format!(
                "factor {factor} of {}",
                dims.len()
            )));
        }
        let d = dims[factor];
        if local.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "embedding a dim-{} operator at a dim-{} factor",
                local.dim(),
                d
            )));
        }
        let pre: usize = dims[..factor].iter().product();
        let post: usize = dims[factor + 1..].iter().product();
        let total = pre * d * post;
        let mut out = Operator::zeros(total);
        for p in 0..pre {
            for a in 0..d {
                for b in 0..d {
                    let v = local[(a, b)];
                    if v.re == 0.0 && v.im == 0.0 {
                        continue;
                    }
                    for s in 0..post {
                        let row = (p * d + a) * post + s;
                        let col = (p * d + b) * post + s;
                        out[(row, col)] = v;
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Single-qubit operator labels accepted by [`embed_pauli`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

/// The 2x2 matrix for a [`Pauli`] label. Conventions: `Z|0> = +|0>`,
/// `sigma+ = |1><0|`.
pub fn pauli_matrix(which: Pauli) -> Operator {
    let z = |re: f64, im: f64| C64::new(re, im);
    let rows = match which {
        Pauli::X => vec![vec![z(0., 0.), z(1., 0.)], vec![z(1., 0.), z(0., 0.)]],
        Pauli::Y => vec![vec![z(0., 0.), z(0., -1.)], vec![z(0., 1.), z(0., 0.)]],
        Pauli::Z => vec![vec![z(1., 0.), z(0., 0.)], vec![z(0., 0.), z(-1., 0.)]],
        Pauli::Plus => vec![vec![z(0., 0.), z(0., 0.)], vec![z(1., 0.), z(0., 0.)]],
        Pauli::Minus => vec![vec![z(0., 0.), z(1., 0.)], vec![z(0., 0.), z(0., 0.)]],
    };
    Operator::from_rows(&rows).expect("2x2 layout")
}

/// Kronecker product: `(a ⊗ b)[(i*b.dim + k), (j*b.dim + l)] = a[i,j] b[k,l]`.
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    let (da, db) = (a.dim(), b.dim());
    let mut out = Operator::zeros(da * db);
    for i in 0..da {
        for j in 0..da {
            let aij = a[(i, j)];
            if aij.re == 0.0 && aij.im == 0.0 {
                continue;
            }
            for k in 0..db {
                for l in 0..db {
                    out[(i * db + k, j * db + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Single-qubit operator tensored with identities on all other factors.
/// `qubit_index` is 1-based.
pub fn embed_pauli(which: Pauli, qubit_index: usize, ordering: &HilbertOrdering) -> Result<Operator> {
    if qubit_index == 0 || qubit_index > ordering.qubit_count() {
        return Err(Error::IndexOutOfRange(format!(
            "qubit index {qubit_index} of {}",
            ordering.qubit_count()
        )));
    }
    ordering.embed(&pauli_matrix(which), qubit_index - 1)
}

/// Truncated annihilator of mode `mode_index` (1-based), embedded:
/// `b|n> = sqrt(n) |n-1>` for `n < N`, `b|0> = 0`.
pub fn embed_annihilator(mode_index: usize, ordering: &HilbertOrdering) -> Result<Operator> {
    if mode_index == 0 || mode_index > ordering.mode_count() {
        return Err(Error::IndexOutOfRange(format!(
            "mode index {mode_index} of {}",
            ordering.mode_count()
        )));
    }
    let n = ordering.mode_truncations()[mode_index - 1];
    let mut local = Operator::zeros(n);
    for k in 1..n {
        local[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    ordering.embed(&local, ordering.qubit_count() + mode_index - 1)
}

/// Number operator `b†b` of mode `mode_index` (1-based), embedded.
pub fn embed_number(mode_index: usize, ordering: &HilbertOrdering) -> Result<Operator> {
    if mode_index == 0 || mode_index > ordering.mode_count() {
        return Err(Error::IndexOutOfRange(format!(
            "mode index {mode_index} of {}",
            ordering.mode_count()
        )));
    }
    let n = ordering.mode_truncations()[mode_index - 1];
    let local = Operator::from_fn(n, |i, j| {
        if i == j {
            C64::new(i as f64, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    ordering.embed(&local, ordering.qubit_count() + mode_index - 1)
}

/// `exp(scale * h)` for Hermitian `h`, via eigendecomposition.
///
/// With `scale = -i t` (real `t`) the result is unitary to machine precision.
pub fn expm_hermitian(h: &Operator, scale: C64) -> Result<Operator> {
    h.check_hermitian(tolerances::HERMITICITY_REL)?;
    let sym = symmetrize(h);
    let (vals, vecs) = eigen::eigh(&sym);
    let n = h.dim();
    let phases: Vec<C64> = vals.iter().map(|&l| (scale * l).exp()).collect();
    // V diag(e^{scale L}) V†
    let mut out = Operator::zeros(n);
    for i in 0..n {
        for k in 0..n {
            let vik = vecs[(i, k)] * phases[k];
            if vik.re == 0.0 && vik.im == 0.0 {
                continue;
            }
            for j in 0..n {
                out[(i, j)] += vik * vecs[(j, k)].conj();
            }
        }
    }
    Ok(out)
}

/// Partial trace over all factors NOT listed in `keep` (1-based factor
/// indices; factor order is qubits then modes). Kept factors appear in
/// ascending factor order in the result.
pub fn partial_trace(
    rho: &DensityMatrix,
    keep: &[usize],
    ordering: &HilbertOrdering,
) -> Result<DensityMatrix> {
    let nf = ordering.factor_count();
    if keep.is_empty() {
        return Err(Error::InvalidInput("keep set must be non-empty".into()));
    }
    let mut keep_sorted: Vec<usize> = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    if keep_sorted.len() != keep.len() {
        return Err(Error::InvalidInput("keep set has duplicates".into()));
    }
    if keep_sorted.iter().any(|&f| f == 0 || f > nf) {
        return Err(Error::IndexOutOfRange(format!(
            "keep factors {keep_sorted:?} of {nf}"
        )));
    }
    if rho.dim() != ordering.total_dim() {
        return Err(Error::DimensionMismatch(format!(
            "density matrix dim {} vs ordering dim {}",
            rho.dim(),
            ordering.total_dim()
        )));
    }

    let dims = ordering.factor_dims();
    let strides = ordering.strides();
    let kept: Vec<usize> = keep_sorted.iter().map(|&f| f - 1).collect();
    let traced: Vec<usize> = (0..nf).filter(|f| !kept.contains(f)).collect();

    let flat_offsets = |factors: &[usize]| -> Vec<usize> {
        let mut offsets = vec![0usize];
        for &f in factors {
            let mut next = Vec::with_capacity(offsets.len() * dims[f]);
            for &base in &offsets {
                for occ in 0..dims[f] {
                    next.push(base + occ * strides[f]);
                }
            }
            offsets = next;
        }
        offsets
    };
    let kept_offsets = flat_offsets(&kept);
    let traced_offsets = flat_offsets(&traced);

    let kdim = kept_offsets.len();
    let mut out = Operator::zeros(kdim);
    for (i, &ri) in kept_offsets.iter().enumerate() {
        for (j, &rj) in kept_offsets.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for &rt in &traced_offsets {
                acc += rho.matrix[(ri + rt, rj + rt)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(DensityMatrix { matrix: out })
}
