//! Small dense Hermitian matrices, a cyclic Jacobi eigensolver, and the
//! spectral calculus that lifts derivatives of a symmetric function f(λ) to
//! derivatives of F(A) = f(λ(A)).
//!
//! Gradient convention: for Hermitian `M = ∂F/∂A` and a Hermitian
//! perturbation `dA`, `dF = tr(M · dA) = Σ_ij M_ij conj(dA_ij)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{HmixError, Result};
use crate::symfun::Spectrum;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Row-major n×n Hermitian matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermitianMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl HermitianMatrix {
    /// Validates Hermitian symmetry to 1e-12 relative and then symmetrizes
    /// exactly (diagonal imaginary parts set to zero).
    pub fn new(n: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != n * n || n == 0 {
            return Err(HmixError::Argument(format!(
                "hermitian matrix of order {n} needs {} entries, got {}",
                n * n,
                data.len()
            )));
        }
        let scale = data.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        let tol = 1e-12 * (1.0 + scale);
        for i in 0..n {
            for j in i..n {
                let d = data[i * n + j] - data[j * n + i].conj();
                if !(d.norm() <= tol) {
                    return Err(HmixError::Argument(format!(
                        "matrix is not Hermitian at ({i},{j}): mismatch {:e}",
                        d.norm()
                    )));
                }
            }
        }
        Ok(Self::from_raw_symmetrized(n, data))
    }

    /// Averages with the conjugate transpose without checking.
    pub fn from_raw_symmetrized(n: usize, mut data: Vec<Complex64>) -> Self {
        for i in 0..n {
            data[i * n + i].im = 0.0;
            for j in i + 1..n {
                let avg = 0.5 * (data[i * n + j] + data[j * n + i].conj());
                data[i * n + j] = avg;
                data[j * n + i] = avg.conj();
            }
        }
        HermitianMatrix { n, data }
    }

    pub fn from_real(n: usize, rows: &[f64]) -> Result<Self> {
        Self::new(n, rows.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix { n, data: vec![ZERO; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        Self::diagonal(&vec![c; n])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = Complex64::new(d, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.data[i * self.n + i].re).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn add(&self, other: &HermitianMatrix) -> HermitianMatrix {
        assert_eq!(self.n, other.n);
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        HermitianMatrix { n: self.n, data }
    }

    pub fn scale(&self, c: f64) -> HermitianMatrix {
        HermitianMatrix { n: self.n, data: self.data.iter().map(|z| z * c).collect() }
    }

    /// self + t·other
    pub fn axpy(&self, t: f64, other: &HermitianMatrix) -> HermitianMatrix {
        assert_eq!(self.n, other.n);
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b * t).collect();
        HermitianMatrix { n: self.n, data }
    }

    /// Real part of tr(self · other); exact trace pairing for Hermitian arguments.
    pub fn trace_product(&self, other: &HermitianMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    /// Leading (n−1)×(n−1) principal submatrix.
    pub fn leading_minor(&self) -> HermitianMatrix {
        let m = self.n - 1;
        let mut data = Vec::with_capacity(m * m);
        for i in 0..m {
            data.extend_from_slice(&self.data[i * self.n..i * self.n + m]);
        }
        HermitianMatrix { n: m, data }
    }

    /// Cholesky attempt; true when strictly positive definite.
    pub fn is_positive_definite(&self) -> bool {
        let n = self.n;
        let mut l = vec![ZERO; n * n];
        for j in 0..n {
            let mut d = self.data[j * n + j].re;
            for p in 0..j {
                d -= l[j * n + p].norm_sqr();
            }
            if !(d > 0.0) {
                return false;
            }
            let djj = d.sqrt();
            l[j * n + j] = Complex64::new(djj, 0.0);
            for i in j + 1..n {
                let mut s = self.data[i * n + j];
                for p in 0..j {
                    s -= l[i * n + p] * l[j * n + p].conj();
                }
                l[i * n + j] = s / djj;
            }
        }
        true
    }
}

/// Ascending eigenvalues with the unitary matrix of column eigenvectors.
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub lambda: Spectrum,
    /// Row-major; column `j` is the eigenvector of `lambda.values()[j]`.
    pub basis: Vec<Complex64>,
}

impl EigenPair {
    pub fn dim(&self) -> usize {
        self.lambda.dim()
    }

    pub fn vector(&self, j: usize) -> Vec<Complex64> {
        let n = self.dim();
        (0..n).map(|i| self.basis[i * n + j]).collect()
    }

    /// basis · diag(d) · basis*
    pub fn compose(&self, d: &[f64]) -> HermitianMatrix {
        let n = self.dim();
        let u = &self.basis;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            for j in i..n {
                let mut acc = ZERO;
                for p in 0..n {
                    acc += u[i * n + p] * u[j * n + p].conj() * d[p];
                }
                out[i * n + j] = acc;
                out[j * n + i] = acc.conj();
            }
        }
        HermitianMatrix::from_raw_symmetrized(n, out)
    }

    /// basis* · B · basis
    pub fn rotate_into(&self, b: &HermitianMatrix) -> Vec<Complex64> {
        let n = self.dim();
        let u = &self.basis;
        let mut tmp = vec![ZERO; n * n];
        for i in 0..n {
            for q in 0..n {
                let mut acc = ZERO;
                for j in 0..n {
                    acc += b.get(i, j) * u[j * n + q];
                }
                tmp[i * n + q] = acc;
            }
        }
        let mut out = vec![ZERO; n * n];
        for p in 0..n {
            for q in 0..n {
                let mut acc = ZERO;
                for i in 0..n {
                    acc += u[i * n + p].conj() * tmp[i * n + q];
                }
                out[p * n + q] = acc;
            }
        }
        out
    }
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// Each (p, q) rotation first removes the phase of a_pq with a diagonal
/// unitary and then applies a real Givens rotation. Sweeps run in fixed
/// row-cyclic order until the off-diagonal Frobenius norm drops below
/// 1e-14·‖A‖_F.
pub fn eig_hermitian(a: &HermitianMatrix) -> Result<EigenPair> {
    let n = a.dim();
    if n < 2 {
        return Err(HmixError::Argument("eig_hermitian needs n >= 2".into()));
    }
    let mut m = a.data.clone();
    let mut u = vec![ZERO; n * n];
    for i in 0..n {
        u[i * n + i] = ONE;
    }
    let norm = a.frobenius();
    let target = 1e-14 * norm;
    let off = |m: &[Complex64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i * n + j].norm_sqr();
                }
            }
        }
        s.sqrt()
    };
    const MAX_SWEEPS: usize = 64;
    let mut sweeps = 0;
    while off(&m) > target {
        if sweeps == MAX_SWEEPS {
            return Err(HmixError::Domain(format!(
                "jacobi did not converge in {MAX_SWEEPS} sweeps (off = {:e})",
                off(&m)
            )));
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let b = m[p * n + q];
                let babs = b.norm();
                if babs <= f64::MIN_POSITIVE || babs <= 1e-300 {
                    continue;
                }
                let phase = b / babs;
                let app = m[p * n + p].re;
                let aqq = m[q * n + q].re;
                let tau = (aqq - app) / (2.0 * babs);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // V restricted to (p, q): [[c, s], [-s·ē, c·ē]] with e = phase
                let vpp = Complex64::new(c, 0.0);
                let vpq = Complex64::new(s, 0.0);
                let vqp = -phase.conj() * s;
                let vqq = phase.conj() * c;
                // M ← M V
                for i in 0..n {
                    let mip = m[i * n + p];
                    let miq = m[i * n + q];
                    m[i * n + p] = mip * vpp + miq * vqp;
                    m[i * n + q] = mip * vpq + miq * vqq;
                }
                // M ← V* M
                for j in 0..n {
                    let mpj = m[p * n + j];
                    let mqj = m[q * n + j];
                    m[p * n + j] = vpp.conj() * mpj + vqp.conj() * mqj;
                    m[q * n + j] = vpq.conj() * mpj + vqq.conj() * mqj;
                }
                m[p * n + q] = ZERO;
                m[q * n + p] = ZERO;
                m[p * n + p].im = 0.0;
                m[q * n + q].im = 0.0;
                for i in 0..n {
                    let uip = u[i * n + p];
                    let uiq = u[i * n + q];
                    u[i * n + p] = uip * vpp + uiq * vqp;
                    u[i * n + q] = uip * vpq + uiq * vqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[x * n + x].re.partial_cmp(&m[y * n + y].re).unwrap());
    let values: Vec<f64> = order.iter().map(|&j| m[j * n + j].re).collect();
    let mut basis = vec![ZERO; n * n];
    for (col, &src) in order.iter().enumerate() {
        // first component of non-negligible size made real positive
        let lead = (0..n)
            .map(|i| u[i * n + src])
            .find(|z| z.norm() > 1e-12)
            .unwrap_or(ONE);
        let fix = lead.conj() / lead.norm();
        for i in 0..n {
            basis[i * n + col] = u[i * n + src] * fix;
        }
    }
    Ok(EigenPair { lambda: Spectrum::new(values)?, basis })
}

/// ∂F/∂A = basis · diag(f') · basis* for F(A) = f(λ(A)).
pub fn matrix_gradient(fprime: &[f64], e: &EigenPair) -> Result<HermitianMatrix> {
    if fprime.len() != e.dim() {
        return Err(HmixError::Argument(format!(
            "matrix_gradient: {} derivatives for a {}-dimensional spectrum",
            fprime.len(),
            e.dim()
        )));
    }
    Ok(e.compose(fprime))
}

/// The second variation d²F[B, B] of F(A) = f(λ(A)):
/// Σ_pq f_pq b̃_pp b̃_qq + 2 Σ_{p<q} (f_p − f_q)/(λ_p − λ_q) |b̃_pq|², b̃ = U* B U.
///
/// Nearly equal eigenvalues (|λ_p − λ_q| < 1e-9·(1 + |λ_p|)) replace the
/// divided difference by its symmetric limit f_pp − f_pq.
pub fn second_derivative_form(
    f_hess: &[f64],
    fprime: &[f64],
    e: &EigenPair,
    b: &HermitianMatrix,
) -> Result<f64> {
    let n = e.dim();
    if f_hess.len() != n * n || fprime.len() != n || b.dim() != n {
        return Err(HmixError::Argument("second_derivative_form: dimension mismatch".into()));
    }
    let bt = e.rotate_into(b);
    let lam = e.lambda.values();
    let mut total = 0.0;
    for p in 0..n {
        for q in 0..n {
            total += f_hess[p * n + q] * bt[p * n + p].re * bt[q * n + q].re;
        }
    }
    for p in 0..n {
        for q in p + 1..n {
            let gap = lam[p] - lam[q];
            let dd = if gap.abs() < 1e-9 * (1.0 + lam[p].abs()) {
                f_hess[p * n + p] - f_hess[p * n + q]
            } else {
                (fprime[p] - fprime[q]) / gap
            };
            total += 2.0 * dd * bt[p * n + q].norm_sqr();
        }
    }
    Ok(total)
}

/// Cauchy interlacing between A and its leading (n−1)×(n−1) principal
/// submatrix: λ_j(A) ≤ λ_j(A') ≤ λ_{j+1}(A), tolerance 1e-10·‖A‖_F.
pub fn interlacing_check(a: &HermitianMatrix) -> Result<bool> {
    let n = a.dim();
    if n < 2 {
        return Err(HmixError::Argument("interlacing_check needs n >= 2".into()));
    }
    let full = eig_hermitian(a)?;
    let lam = full.lambda.values();
    let minor = a.leading_minor();
    let mu: Vec<f64> = if n == 2 {
        vec![minor.get(0, 0).re]
    } else {
        eig_hermitian(&minor)?.lambda.values().to_vec()
    };
    let tol = 1e-10 * a.frobenius();
    Ok((0..n - 1).all(|j| lam[j] - tol <= mu[j] && mu[j] <= lam[j + 1] + tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symfun::sigma;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_non_hermitian() {
        let bad = vec![c(1.0, 0.0), c(2.0, 1.0), c(2.0, 1.0), c(3.0, 0.0)];
        assert!(matches!(HermitianMatrix::new(2, bad), Err(HmixError::Argument(_))));
        let bad_diag = vec![c(1.0, 0.5), c(0.0, 0.0), c(0.0, 0.0), c(3.0, 0.0)];
        assert!(HermitianMatrix::new(2, bad_diag).is_err());
    }

    #[test]
    fn eig_identity() {
        let e = eig_hermitian(&HermitianMatrix::identity(3)).unwrap();
        assert_eq!(e.lambda.values(), &[1.0, 1.0, 1.0]);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((e.basis[i * 3 + j] - c(want, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn eig_sorted_diagonal() {
        let e = eig_hermitian(&HermitianMatrix::diagonal(&[3.0, 1.0])).unwrap();
        assert_eq!(e.lambda.values(), &[1.0, 3.0]);
        // column-permuted identity
        assert!((e.basis[0 * 2 + 1] - ONE).norm() < 1e-15);
        assert!((e.basis[1 * 2 + 0] - ONE).norm() < 1e-15);
        assert!(e.basis[0].norm() < 1e-15 && e.basis[3].norm() < 1e-15);
    }

    #[test]
    fn eig_two_by_two() {
        let a = HermitianMatrix::from_real(2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let e = eig_hermitian(&a).unwrap();
        // roots of (2 − x)² − 1
        assert!((e.lambda.values()[0] - 1.0).abs() < 1e-14);
        assert!((e.lambda.values()[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn eig_complex_reconstructs() {
        let a = HermitianMatrix::new(
            3,
            vec![
                c(2.0, 0.0), c(1.0, -1.0), c(0.0, 0.5),
                c(1.0, 1.0), c(-1.0, 0.0), c(0.3, 0.0),
                c(0.0, -0.5), c(0.3, 0.0), c(4.0, 0.0),
            ],
        )
        .unwrap();
        let e = eig_hermitian(&a).unwrap();
        let back = e.compose(e.lambda.values());
        for (x, y) in back.as_slice().iter().zip(a.as_slice()) {
            assert!((x - y).norm() < 1e-13);
        }
        // phase convention
        for j in 0..3 {
            let v = e.vector(j);
            let lead = v.iter().find(|z| z.norm() > 1e-12).unwrap();
            assert!(lead.im.abs() < 1e-15 && lead.re > 0.0);
        }
    }

    #[test]
    fn gradient_of_trace_is_identity() {
        let a = HermitianMatrix::from_real(2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let e = eig_hermitian(&a).unwrap();
        let g = matrix_gradient(&[1.0, 1.0], &e).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g.get(i, j) - c(want, 0.0)).norm() < 1e-14);
            }
        }
        assert!(matrix_gradient(&[1.0], &e).is_err());
    }

    #[test]
    fn gradient_of_diagonal_is_diagonal() {
        let e = eig_hermitian(&HermitianMatrix::diagonal(&[2.0, 5.0, 1.0])).unwrap();
        let fp = [0.3, 0.2, 0.1];
        let g = matrix_gradient(&fp, &e).unwrap();
        // eigenvalues sorted (1, 2, 5) come from diagonal slots (2, 0, 1)
        assert!((g.get(2, 2).re - 0.3).abs() < 1e-15);
        assert!((g.get(0, 0).re - 0.2).abs() < 1e-15);
        assert!((g.get(1, 1).re - 0.1).abs() < 1e-15);
        assert!(g.get(0, 1).norm() < 1e-15);
    }

    #[test]
    fn gradient_of_sigma2_matches_finite_differences() {
        let a = HermitianMatrix::from_real(2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let e = eig_hermitian(&a).unwrap();
        let lam = e.lambda.values();
        // f_i = σ_1(λ|i)
        let fp = [lam[1], lam[0]];
        let g = matrix_gradient(&fp, &e).unwrap();
        let expect = [2.0, -1.0, -1.0, 2.0];
        for (z, &w) in g.as_slice().iter().zip(&expect) {
            assert!((z - c(w, 0.0)).norm() < 1e-13);
        }
        // σ_2(λ(A)) = det A; central differences along the real symmetric (0,1) direction
        let h = 1e-5;
        let f = |t: f64| {
            let m = HermitianMatrix::from_real(2, &[2.0, 1.0 + t, 1.0 + t, 2.0]).unwrap();
            sigma(2, eig_hermitian(&m).unwrap().lambda.values()).unwrap()
        };
        let fd = (f(h) - f(-h)) / (2.0 * h);
        assert!((fd - 2.0 * g.get(0, 1).re).abs() < 1e-8);
    }

    #[test]
    fn second_form_linear_vanishes() {
        let a = HermitianMatrix::from_real(2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let e = eig_hermitian(&a).unwrap();
        let b = HermitianMatrix::new(2, vec![c(1.0, 0.0), c(0.5, 0.2), c(0.5, -0.2), c(-1.0, 0.0)])
            .unwrap();
        let v = second_derivative_form(&[0.0; 4], &[1.0, 1.0], &e, &b).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn second_form_sigma2_diagonal_direction() {
        let a = HermitianMatrix::diagonal(&[1.0, 3.0]);
        let e = eig_hermitian(&a).unwrap();
        let lam = e.lambda.values();
        let fp = [lam[1], lam[0]];
        let hess = [0.0, 1.0, 1.0, 0.0];
        let b = HermitianMatrix::diagonal(&[1.0, 0.0]);
        let v = second_derivative_form(&hess, &fp, &e, &b).unwrap();
        let f = |t: f64| {
            let m = a.axpy(t, &b);
            sigma(2, eig_hermitian(&m).unwrap().lambda.values()).unwrap()
        };
        let h = 1e-4;
        let fd = (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
        assert!(v.abs() < 1e-15);
        assert!(fd.abs() < 1e-6);
    }

    #[test]
    fn second_form_degenerate_uses_limit() {
        // f = Σ λ_i² has f_pp = 2, f_pq = 0, divided difference (2λ_p − 2λ_q)/(λ_p − λ_q) = 2
        let e = eig_hermitian(&HermitianMatrix::identity(2)).unwrap();
        let b = HermitianMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let v = second_derivative_form(&[2.0, 0.0, 0.0, 2.0], &[2.0, 2.0], &e, &b).unwrap();
        // ‖B‖_F² · 2 = 4 for F = tr(A²)
        assert!((v - 4.0).abs() < 1e-14);
    }

    #[test]
    fn interlacing_examples() {
        let a = HermitianMatrix::from_real(2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        assert!(interlacing_check(&a).unwrap());
        assert!(interlacing_check(&HermitianMatrix::diagonal(&[4.0, -1.0, 2.0, 0.5])).unwrap());
    }

    #[test]
    fn positive_definite() {
        assert!(HermitianMatrix::identity(3).is_positive_definite());
        assert!(!HermitianMatrix::diagonal(&[1.0, -1.0]).is_positive_definite());
        let a = HermitianMatrix::from_real(2, &[1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(!a.is_positive_definite());
    }
}
