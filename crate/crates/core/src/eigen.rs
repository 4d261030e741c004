//! Hermitian eigendecomposition via cyclic Jacobi rotations.
//!
//! All Hamiltonians in this crate are Hermitian and small (dimension at most
//! a few hundred), where Jacobi converges quadratically and delivers
//! machine-precision eigenpairs with fully deterministic output. This keeps
//! the crate free of external BLAS/LAPACK linkage.

use num_complex::Complex64 as C64;

use crate::operator::Operator;

/// Eigendecomposition of a Hermitian matrix.
///
/// Returns eigenvalues in ascending order and the unitary matrix whose
/// columns are the corresponding eigenvectors. The input is assumed
/// Hermitian; only callers that have already checked (or symmetrized) use
/// this directly.
pub(crate) fn eigh(op: &Operator) -> (Vec<f64>, Operator) {
    let n = op.dim();
    let mut a = op.clone();
    let mut v = Operator::identity(n);
    if n <= 1 {
        let vals = (0..n).map(|i| a[(i, i)].re).collect();
        return (vals, v);
    }

    let frob: f64 = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| a[(i, j)].norm_sqr())
        .sum::<f64>()
        .sqrt();
    let stop = (frob * 1e-15).max(f64::MIN_POSITIVE);

    const MAX_SWEEPS: usize = 64;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j)
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= stop {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= stop / (n as f64) {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let phase = apq / mag; // e^{i phi}
                let tau = (app - aqq) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                rotate(&mut a, &mut v, p, q, c, s, phase);
            }
        }
    }

    // Sort ascending; permute eigenvector columns to match.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let vals: Vec<f64> = order.iter().map(|&k| a[(k, k)].re).collect();
    let mut vecs = Operator::zeros(n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            vecs[(row, new_col)] = v[(row, old_col)];
        }
    }
    (vals, vecs)
}

/// Apply the plane rotation `A <- U† A U`, `V <- V U` on the (p, q) plane,
/// where `U[p,p] = U[q,q] = c`, `U[q,p] = s e^{-i phi}`, `U[p,q] = -s e^{i phi}`.
fn rotate(a: &mut Operator, v: &mut Operator, p: usize, q: usize, c: f64, s: f64, phase: C64) {
    let n = a.dim();
    let sp = phase * s; // s e^{i phi}
    let spc = phase.conj() * s; // s e^{-i phi}

    // A <- A U (columns p, q)
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c + akq * spc;
        a[(k, q)] = -akp * sp + akq * c;
    }
    // A <- U† A (rows p, q)
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c + aqk * sp;
        a[(q, k)] = -apk * spc + aqk * c;
    }
    // Clean the rotated pivot: exactly zero by construction.
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c + vkq * spc;
        v[(k, q)] = -vkp * sp + vkq * c;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, rng: &mut impl Rng) -> Operator {
        let mut h = Operator::zeros(n);
        for i in 0..n {
            h[(i, i)] = C64::new(rng.gen_range(-1.0..1.0), 0.0);
            for j in i + 1..n {
                let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                h[(i, j)] = z;
                h[(j, i)] = z.conj();
            }
        }
        h
    }

    #[test]
    fn reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &n in &[1usize, 2, 3, 8, 24, 40] {
            let h = random_hermitian(n, &mut rng);
            let (vals, vecs) = eigh(&h);
            // V diag(vals) V† == H
            let mut recon = Operator::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    let mut acc = C64::new(0.0, 0.0);
                    for k in 0..n {
                        acc += vecs[(i, k)] * vals[k] * vecs[(j, k)].conj();
                    }
                    recon[(i, j)] = acc;
                }
            }
            let defect = (&recon - &h).max_abs();
            assert!(defect < 1e-12 * (n as f64), "defect {defect} at n={n}");
            // V unitary
            let udag_u = &vecs.dagger() * &vecs;
            let unit = (&udag_u - &Operator::identity(n)).max_abs();
            assert!(unit < 1e-12, "unitarity defect {unit} at n={n}");
            // ascending
            assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn diagonal_and_degenerate_inputs() {
        let mut d = Operator::zeros(3);
        d[(0, 0)] = C64::new(2.0, 0.0);
        d[(1, 1)] = C64::new(-1.0, 0.0);
        d[(2, 2)] = C64::new(-1.0, 0.0);
        let (vals, vecs) = eigh(&d);
        assert_eq!(vals, vec![-1.0, -1.0, 2.0]);
        let unit = (&(&vecs.dagger() * &vecs) - &Operator::identity(3)).max_abs();
        assert!(unit < 1e-14);
    }
}
