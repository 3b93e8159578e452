//! Sparse linear algebra for the Newton systems: CSR storage, banded LU for
//! small systems, and restarted GMRES with an ILU(0) right preconditioner.

use serde::{Deserialize, Serialize};

use crate::error::{HmixError, Result};

/// Systems with at most this many unknowns are factored directly.
pub const DIRECT_THRESHOLD: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl CsrMatrix {
    /// Rows must have strictly increasing column indices.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let nnz = rows.iter().map(|r| r.len()).sum();
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::with_capacity(nnz);
        let mut data = Vec::with_capacity(nnz);
        indptr.push(0);
        for row in rows {
            debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
            for (c, v) in row {
                indices.push(c);
                data.push(v);
            }
            indptr.push(indices.len());
        }
        CsrMatrix { ncols, indptr, indices, data }
    }

    pub fn nrows(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (s, e) = (self.indptr[i], self.indptr[i + 1]);
        self.indices[s..e].iter().copied().zip(self.data[s..e].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (s, e) = (self.indptr[i], self.indptr[i + 1]);
        match self.indices[s..e].binary_search(&j) {
            Ok(p) => self.data[s + p],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows()];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let (s, e) = (self.indptr[i], self.indptr[i + 1]);
            let mut acc = 0.0;
            for p in s..e {
                acc += self.data[p] * x[self.indices[p]];
            }
            *yi = acc;
        }
    }

    /// max |a_ij − a_ji| (square matrices).
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.nrows() {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    fn bandwidths(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for i in 0..self.nrows() {
            for (j, _) in self.row(i) {
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        (kl, ku)
    }
}

/// LU with partial pivoting in band storage; each row keeps columns
/// [i − kl, i + kl + ku] so that row swaps never leave the band.
pub struct BandedLu {
    n: usize,
    kl: usize,
    width: usize,
    band: Vec<f64>,
    piv: Vec<usize>,
    ku_eff: usize,
}

impl BandedLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(HmixError::Argument("banded LU needs a square matrix".into()));
        }
        let (kl, ku) = a.bandwidths();
        let ku_eff = kl + ku;
        let width = kl + ku_eff + 1;
        let mut lu = BandedLu { n, kl, width, band: vec![0.0; n * width], piv: vec![0; n], ku_eff };
        for i in 0..n {
            for (j, v) in a.row(i) {
                *lu.at_mut(i, j) = v;
            }
        }
        for c in 0..n {
            let last_row = (c + kl).min(n - 1);
            let last_col = (c + ku_eff).min(n - 1);
            let mut p = c;
            let mut best = lu.at(c, c).abs();
            for r in c + 1..=last_row {
                let v = lu.at(r, c).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > 0.0) {
                return Err(HmixError::LinearFailure { iterations: 0, relative_residual: f64::INFINITY });
            }
            lu.piv[c] = p;
            if p != c {
                for j in c..=last_col {
                    let t = lu.at(c, j);
                    *lu.at_mut(c, j) = lu.at(p, j);
                    *lu.at_mut(p, j) = t;
                }
            }
            let d = lu.at(c, c);
            for r in c + 1..=last_row {
                let m = lu.at(r, c) / d;
                if m == 0.0 {
                    continue;
                }
                *lu.at_mut(r, c) = m;
                for j in c + 1..=last_col {
                    let u = lu.at(c, j);
                    *lu.at_mut(r, j) -= m * u;
                }
            }
        }
        Ok(lu)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.band[i * self.width + (j + self.kl - i)]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.band[i * self.width + (j + self.kl - i)]
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = b.to_vec();
        for c in 0..n {
            let p = self.piv[c];
            if p != c {
                x.swap(c, p);
            }
            let xc = x[c];
            for r in c + 1..=(c + self.kl).min(n - 1) {
                x[r] -= self.at(r, c) * xc;
            }
        }
        for c in (0..n).rev() {
            let mut acc = x[c];
            for j in c + 1..=(c + self.ku_eff).min(n - 1) {
                acc -= self.at(c, j) * x[j];
            }
            x[c] = acc / self.at(c, c);
        }
        x
    }
}

/// Incomplete LU with the sparsity pattern of A.
pub struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        let mut lu = a.clone();
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            let (s, e) = (lu.indptr[i], lu.indptr[i + 1]);
            if let Ok(p) = lu.indices[s..e].binary_search(&i) {
                diag[i] = s + p;
            } else {
                return Err(HmixError::LinearFailure { iterations: 0, relative_residual: f64::INFINITY });
            }
        }
        let mut pos = vec![usize::MAX; a.ncols()];
        for i in 0..n {
            let (s, e) = (lu.indptr[i], lu.indptr[i + 1]);
            for p in s..e {
                pos[lu.indices[p]] = p;
            }
            for kk in s..diag[i] {
                let k = lu.indices[kk];
                let m = lu.data[kk] / lu.data[diag[k]];
                lu.data[kk] = m;
                for q in diag[k] + 1..lu.indptr[k + 1] {
                    let j = lu.indices[q];
                    let target = pos[j];
                    if target != usize::MAX {
                        lu.data[target] -= m * lu.data[q];
                    }
                }
            }
            for p in s..e {
                pos[lu.indices[p]] = usize::MAX;
            }
            if !(lu.data[diag[i]].abs() > 0.0) {
                return Err(HmixError::LinearFailure { iterations: 0, relative_residual: f64::INFINITY });
            }
        }
        Ok(Ilu0 { lu, diag })
    }

    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = self.diag.len();
        let lu = &self.lu;
        for i in 0..n {
            let mut acc = r[i];
            for p in lu.indptr[i]..self.diag[i] {
                acc -= lu.data[p] * z[lu.indices[p]];
            }
            z[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = z[i];
            for p in self.diag[i] + 1..lu.indptr[i + 1] {
                acc -= lu.data[p] * z[lu.indices[p]];
            }
            z[i] = acc / lu.data[self.diag[i]];
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum LinearMethod {
    BandedLu,
    GmresIlu0,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LinearInfo {
    pub method: LinearMethod,
    pub iterations: usize,
    pub relative_residual: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Right-preconditioned restarted GMRES; stops when ‖b − Ax‖ ≤ tol·‖b‖.
pub fn gmres(
    a: &CsrMatrix,
    b: &[f64],
    precond: &Ilu0,
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<(Vec<f64>, LinearInfo)> {
    let n = a.nrows();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    let info = |iterations, relative_residual| LinearInfo {
        method: LinearMethod::GmresIlu0,
        iterations,
        relative_residual,
    };
    if bnorm == 0.0 {
        return Ok((x, info(0, 0.0)));
    }
    let m = restart.max(1);
    let mut total = 0;
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    let mut w = vec![0.0; n];
    while total < max_iter {
        let beta = norm(&r);
        let rel = beta / bnorm;
        if rel <= tol {
            return Ok((x, info(total, rel)));
        }
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|ri| ri / beta).collect());
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut used = 0;
        for j in 0..m {
            precond.apply(&v[j], &mut z);
            a.matvec_into(&z, &mut w);
            for i in 0..=j {
                let hij = dot(&w, &v[i]);
                h[i][j] = hij;
                for (wk, vk) in w.iter_mut().zip(&v[i]) {
                    *wk -= hij * vk;
                }
            }
            let hn = norm(&w);
            h[j + 1][j] = hn;
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let denom = (h[j][j] * h[j][j] + h[j + 1][j] * h[j + 1][j]).sqrt();
            if denom == 0.0 {
                break;
            }
            cs[j] = h[j][j] / denom;
            sn[j] = h[j + 1][j] / denom;
            h[j][j] = denom;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            used = j + 1;
            total += 1;
            if g[j + 1].abs() / bnorm <= tol * 0.5 || hn == 0.0 || total >= max_iter {
                break;
            }
            v.push(w.iter().map(|wi| wi / hn).collect());
        }
        // back substitution for the Krylov coefficients
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let mut acc = g[i];
            for k in i + 1..used {
                acc -= h[i][k] * y[k];
            }
            y[i] = acc / h[i][i];
        }
        let mut dx = vec![0.0; n];
        for (k, yk) in y.iter().enumerate() {
            for (d, vk) in dx.iter_mut().zip(&v[k]) {
                *d += yk * vk;
            }
        }
        precond.apply(&dx, &mut z);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
        a.matvec_into(&x, &mut w);
        for i in 0..n {
            r[i] = b[i] - w[i];
        }
        if used == 0 {
            break;
        }
    }
    let rel = norm(&r) / bnorm;
    if rel <= tol {
        Ok((x, info(total, rel)))
    } else {
        Err(HmixError::LinearFailure { iterations: total, relative_residual: rel })
    }
}

/// Solves A x = b to relative residual `tol`, choosing banded LU for small
/// systems and GMRES(50)+ILU(0) otherwise.
pub fn solve(a: &CsrMatrix, b: &[f64], tol: f64) -> Result<(Vec<f64>, LinearInfo)> {
    let n = a.nrows();
    if n <= DIRECT_THRESHOLD {
        let lu = BandedLu::factor(a)?;
        let x = lu.solve(b);
        let r = a.matvec(&x);
        let bn = norm(b);
        let res: Vec<f64> = b.iter().zip(&r).map(|(bi, ri)| bi - ri).collect();
        let rel = if bn == 0.0 { norm(&res) } else { norm(&res) / bn };
        if !(rel <= tol.max(1e-13)) {
            return Err(HmixError::LinearFailure { iterations: 1, relative_residual: rel });
        }
        return Ok((x, LinearInfo { method: LinearMethod::BandedLu, iterations: 1, relative_residual: rel }));
    }
    let ilu = Ilu0::new(a)?;
    gmres(a, b, &ilu, tol, 50, 5000)
}
