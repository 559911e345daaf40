//! Dense complex linear algebra shared by the rest of the crate.
//!
//! Matrices are `nalgebra` dense matrices over `Complex64`. Everything here
//! is a pure function; the Hermitian eigensolver is nalgebra's
//! `symmetric_eigen`, applied to the Hermitian part of the input after the
//! deviation check.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type Ket = DVector<Complex64>;

/// Max entrywise |A_ij − conj(A_ji)| accepted as Hermitian.
pub const HERM_TOL: f64 = 1e-10;
/// Accepted |⟨ψ|ψ⟩ − 1| for normalized kets.
pub const NORM_TOL: f64 = 1e-10;
/// Default lower eigenvalue slack for PSD checks.
pub const PSD_TOL: f64 = 1e-9;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

pub fn zeros(d: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(d, d)
}

/// |v⟩⟨v|
pub fn projector(v: &Ket) -> ComplexMatrix {
    v * v.adjoint()
}

/// Computational basis ket |i⟩ in dimension d.
pub fn basis_ket(d: usize, i: usize) -> Ket {
    let mut v = Ket::zeros(d);
    v[i] = c(1.0, 0.0);
    v
}

pub fn is_normalized(v: &Ket) -> bool {
    (v.norm_squared() - 1.0).abs() <= NORM_TOL
}

/// Tensor product a ⊗ b.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn kron_ket(a: &Ket, b: &Ket) -> Ket {
    a.kronecker(b)
}

/// tr_A of an operator on C^{dA} ⊗ C^{dB}.
pub fn partial_trace_a(m: &ComplexMatrix, da: usize, db: usize) -> Result<ComplexMatrix> {
    let dim = da * db;
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "partial trace expects {dim}x{dim}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(ComplexMatrix::from_fn(db, db, |j, l| {
        (0..da).map(|i| m[(i * db + j, i * db + l)]).sum()
    }))
}

/// tr_B of an operator on C^{dA} ⊗ C^{dB}.
pub fn partial_trace_b(m: &ComplexMatrix, da: usize, db: usize) -> Result<ComplexMatrix> {
    let dim = da * db;
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "partial trace expects {dim}x{dim}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(ComplexMatrix::from_fn(da, da, |i, k| {
        (0..db).map(|j| m[(i * db + j, k * db + j)]).sum()
    }))
}

/// Transpose in the computational basis (no conjugation).
pub fn transpose(m: &ComplexMatrix) -> ComplexMatrix {
    m.transpose()
}

pub fn trace(m: &ComplexMatrix) -> Complex64 {
    m.trace()
}

/// max_ij |A_ij − conj(A_ji)|; `f64::INFINITY` for non-square input.
pub fn hermitian_deviation(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

fn hermitian_part(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let dev = hermitian_deviation(m);
    if dev > HERM_TOL {
        return Err(Error::NotHermitian(dev));
    }
    Ok((m + m.adjoint()).scale(0.5))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigenvalues_hermitian(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let h = hermitian_part(m)?;
    let mut vals: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Largest eigenvalue and a unit eigenvector for it.
pub fn top_eigenpair(m: &ComplexMatrix) -> Result<(f64, Ket)> {
    let h = hermitian_part(m)?;
    let eig = h.symmetric_eigen();
    let (idx, &val) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::DimensionMismatch("empty matrix".into()))?;
    let v: Ket = eig.eigenvectors.column(idx).into_owned();
    let norm = v.norm();
    Ok((val, v.unscale(norm)))
}

/// Operator norm (largest |eigenvalue|) of a Hermitian matrix.
pub fn op_norm_hermitian(m: &ComplexMatrix) -> Result<f64> {
    let vals = eigenvalues_hermitian(m)?;
    Ok(vals.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())))
}

pub fn is_psd(m: &ComplexMatrix, tol: f64) -> Result<bool> {
    let vals = eigenvalues_hermitian(m)?;
    Ok(vals.first().is_none_or(|&min| min >= -tol))
}

/// Entrywise max |a_ij − b_ij|; infinite on shape mismatch.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}

/// tr(AB) without forming the product.
pub fn trace_pairing(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    // tr(AB) = Σ_ij A_ij B_ji
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, d: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(d, d, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> Ket {
        let v = Ket::from_fn(d, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let n = v.norm();
        v.unscale(n)
    }

    #[test]
    fn kron_identities() {
        assert_eq!(kron(&identity(2), &identity(2)), identity(4));
        let p0 = projector(&basis_ket(2, 0));
        let p1 = projector(&basis_ket(2, 1));
        let k = kron(&p0, &p1);
        // |01⟩ is index 1
        assert_eq!(k, projector(&basis_ket(4, 1)));
    }

    #[test]
    fn kron_trace_is_product_of_traces() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 3);
        let b = random_matrix(&mut rng, 3);
        let k = kron(&a, &b);
        // entrywise oracle for the trace: Σ_i Σ_j a_ii b_jj
        let mut oracle = c(0.0, 0.0);
        for i in 0..3 {
            for j in 0..3 {
                oracle += a[(i, i)] * b[(j, j)];
            }
        }
        assert!((trace(&k) - oracle).norm() < 1e-13);
    }

    #[test]
    fn kron_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_matrix(&mut rng, 2);
        let b = random_matrix(&mut rng, 3);
        let cc = random_matrix(&mut rng, 2);
        let lhs = kron(&kron(&a, &b), &cc);
        let rhs = kron(&a, &kron(&b, &cc));
        assert!(max_abs_diff(&lhs, &rhs) < 1e-13);
    }

    #[test]
    fn partial_trace_of_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rho = random_matrix(&mut rng, 2);
        let sigma = random_matrix(&mut rng, 3);
        let pt = partial_trace_a(&kron(&rho, &sigma), 2, 3).unwrap();
        let expected = sigma.scale(1.0) * trace(&rho);
        assert!(max_abs_diff(&pt, &expected) < 1e-13);
        let ptb = partial_trace_b(&kron(&rho, &sigma), 2, 3).unwrap();
        assert!(max_abs_diff(&ptb, &(rho.clone() * trace(&sigma))) < 1e-13);
    }

    fn phi_plus(d: usize) -> Ket {
        let mut v = Ket::zeros(d * d);
        for i in 0..d {
            v[i * d + i] = c(1.0 / (d as f64).sqrt(), 0.0);
        }
        v
    }

    #[test]
    fn partial_trace_of_max_entangled_is_maximally_mixed() {
        for d in 2..5 {
            let pt = partial_trace_a(&projector(&phi_plus(d)), d, d).unwrap();
            assert!(max_abs_diff(&pt, &identity(d).unscale(d as f64)) < 1e-14);
        }
    }

    #[test]
    fn partial_trace_projector_on_phi_plus_gives_transpose() {
        let d = 3;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let u = random_unit(&mut rng, d);
        let pi = projector(&u);
        let big = kron(&pi, &identity(d)) * projector(&phi_plus(d));
        let pt = partial_trace_a(&big, d, d).unwrap();
        // entry-wise oracle: (Π ⊗ 1)|φ+⟩⟨φ+| has entries Σ_k Π_ik δ.. ; sum directly
        let mut oracle = zeros(d);
        for j in 0..d {
            for l in 0..d {
                let mut s = c(0.0, 0.0);
                for i in 0..d {
                    // ⟨i j|(Π⊗1)|φ+⟩⟨φ+|i l⟩ = Π_{i j} · (1/d) · δ_{i l}
                    if i == l {
                        s += pi[(i, j)] / d as f64;
                    }
                }
                oracle[(j, l)] = s;
            }
        }
        assert!(max_abs_diff(&pt, &oracle) < 1e-13);
        assert!(max_abs_diff(&pt, &transpose(&pi).unscale(d as f64)) < 1e-13);
    }

    #[test]
    fn partial_trace_rejects_bad_shape() {
        assert!(partial_trace_a(&identity(5), 2, 3).is_err());
    }

    #[test]
    fn partial_trace_preserves_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let m = random_matrix(&mut rng, 6);
            let pt = partial_trace_a(&m, 2, 3).unwrap();
            assert!((trace(&pt) - trace(&m)).norm() <= 1e-12);
        }
    }

    #[test]
    fn op_norm_examples() {
        assert!((op_norm_hermitian(&identity(4)).unwrap() - 1.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let u = random_unit(&mut rng, 4);
        assert!((op_norm_hermitian(&projector(&u)).unwrap() - 1.0).abs() < 1e-12);
        let v = random_unit(&mut rng, 4);
        let overlap = u.dotc(&v).norm();
        // restricted to span{u, v}: eigenvalues 1 ± |⟨u|v⟩|
        let sum = projector(&u) + projector(&v);
        assert!((op_norm_hermitian(&sum).unwrap() - (1.0 + overlap)).abs() < 1e-10);
        let neg = -identity(3).scale(2.0);
        assert!((op_norm_hermitian(&neg).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn op_norm_rejects_non_hermitian() {
        let mut m = identity(2);
        m[(0, 1)] = c(1.0, 0.0);
        assert!(matches!(op_norm_hermitian(&m), Err(Error::NotHermitian(_))));
        assert!(is_psd(&m, PSD_TOL).is_err());
    }

    #[test]
    fn op_norm_dominates_rayleigh_quotients() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10 {
            let a = random_matrix(&mut rng, 5);
            let h = (&a + a.adjoint()).scale(0.5);
            let norm = op_norm_hermitian(&h).unwrap();
            for _ in 0..200 {
                let v = random_unit(&mut rng, 5);
                let rq = v.dotc(&(&h * &v)).re.abs();
                assert!(rq <= norm + 1e-9);
            }
        }
    }

    #[test]
    fn transpose_laws() {
        assert_eq!(transpose(&identity(3)), identity(3));
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let m = random_matrix(&mut rng, 3);
        assert_eq!(transpose(&transpose(&m)), m);
        // no conjugation
        assert_eq!(transpose(&m)[(0, 1)], m[(1, 0)]);
    }

    #[test]
    fn transpose_pairing_matches_phi_plus_expectation() {
        let d = 3;
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let a = random_matrix(&mut rng, d);
        let b = random_matrix(&mut rng, d);
        let lhs = trace(&(&a * transpose(&b)));
        let rhs = trace(&(kron(&a, &b) * projector(&phi_plus(d)))) * d as f64;
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn psd_checks() {
        assert!(is_psd(&identity(3), PSD_TOL).unwrap());
        assert!(!is_psd(&(-identity(3)), PSD_TOL).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..20 {
            let a = random_matrix(&mut rng, 4);
            let w = a.adjoint() * &a;
            assert!(is_psd(&w, PSD_TOL).unwrap());
        }
    }

    #[test]
    fn top_eigenpair_is_eigenvector() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let a = random_matrix(&mut rng, 4);
        let h = a.adjoint() * &a;
        let (val, v) = top_eigenpair(&h).unwrap();
        assert!(((&h * &v) - v.scale(val)).norm() < 1e-10);
        assert!((v.norm() - 1.0).abs() < 1e-12);
        assert!((val - op_norm_hermitian(&h).unwrap()).abs() < 1e-10);
    }
}
