//! Uniform grids on boxes in C^n ≅ R^{2n}, grid functions, Hermitian fields,
//! and the finite-difference complex Hessian with its linearization.
//!
//! Real axes are ordered x_1..x_n, y_1..y_n and the linear index is
//! row-major (last axis fastest).

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HmixError, Result};
use crate::linalg::CsrMatrix;
use crate::spectral::HermitianMatrix;

#[derive(Deserialize)]
struct GridSpecRaw {
    n: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    shape: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "GridSpecRaw")]
pub struct GridSpec {
    pub n: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub shape: Vec<usize>,
    pub h: Vec<f64>,
    #[serde(skip)]
    strides: Vec<usize>,
    #[serde(skip)]
    interior: Vec<usize>,
    /// position of a linear index in `interior`, usize::MAX on the boundary
    #[serde(skip)]
    interior_pos: Vec<usize>,
}

impl TryFrom<GridSpecRaw> for GridSpec {
    type Error = HmixError;
    fn try_from(r: GridSpecRaw) -> Result<Self> {
        GridSpec::new(r.n, r.lo, r.hi, r.shape)
    }
}

impl PartialEq for GridSpec {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.lo == other.lo && self.hi == other.hi && self.shape == other.shape
    }
}

impl GridSpec {
    pub fn new(n: usize, lo: Vec<f64>, hi: Vec<f64>, shape: Vec<usize>) -> Result<Self> {
        let d = 2 * n;
        if n == 0 || lo.len() != d || hi.len() != d || shape.len() != d {
            return Err(HmixError::Argument(format!(
                "grid for complex dimension {n} needs {d} bounds and point counts"
            )));
        }
        if let Some(a) = (0..d).find(|&a| shape[a] < 5) {
            return Err(HmixError::Argument(format!(
                "axis {a} has {} points; at least 5 are required",
                shape[a]
            )));
        }
        if let Some(a) = (0..d).find(|&a| !(hi[a] > lo[a]) || !lo[a].is_finite() || !hi[a].is_finite()) {
            return Err(HmixError::Argument(format!("axis {a}: need lo < hi")));
        }
        let h: Vec<f64> = (0..d).map(|a| (hi[a] - lo[a]) / (shape[a] - 1) as f64).collect();
        let mut strides = vec![1; d];
        for a in (0..d - 1).rev() {
            strides[a] = strides[a + 1] * shape[a + 1];
        }
        let len = strides[0] * shape[0];
        let mut interior = Vec::new();
        let mut interior_pos = vec![usize::MAX; len];
        let mut multi = vec![0usize; d];
        for idx in 0..len {
            let mut r = idx;
            for a in 0..d {
                multi[a] = r / strides[a];
                r %= strides[a];
            }
            if (0..d).all(|a| multi[a] > 0 && multi[a] + 1 < shape[a]) {
                interior_pos[idx] = interior.len();
                interior.push(idx);
            }
        }
        Ok(GridSpec { n, lo, hi, shape, h, strides, interior, interior_pos })
    }

    /// Box [lo, hi]^{2n} with `points` per axis.
    pub fn cube(n: usize, lo: f64, hi: f64, points: usize) -> Result<Self> {
        Self::new(n, vec![lo; 2 * n], vec![hi; 2 * n], vec![points; 2 * n])
    }

    /// Refinement keeping the box: (shape − 1)·factor + 1 points per axis.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let shape = self.shape.iter().map(|&s| (s - 1) * factor.max(1) + 1).collect();
        Self::new(self.n, self.lo.clone(), self.hi.clone(), shape)
    }

    pub fn real_dim(&self) -> usize {
        2 * self.n
    }

    pub fn len(&self) -> usize {
        self.strides[0] * self.shape[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn h_max(&self) -> f64 {
        self.h.iter().cloned().fold(0.0, f64::max)
    }

    pub fn multi_index(&self, idx: usize) -> Vec<usize> {
        let mut r = idx;
        self.strides
            .iter()
            .map(|&s| {
                let m = r / s;
                r %= s;
                m
            })
            .collect()
    }

    pub fn linear_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(m, s)| m * s).sum()
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx)
            .iter()
            .enumerate()
            .map(|(a, &m)| self.lo[a] + m as f64 * self.h[a])
            .collect()
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        self.interior_pos[idx] == usize::MAX
    }

    /// Linear indices of interior points, ascending.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn interior_position(&self, idx: usize) -> Option<usize> {
        let p = self.interior_pos[idx];
        (p != usize::MAX).then_some(p)
    }

    pub fn boundary(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.is_boundary(i))
    }
}

/// Real samples on every grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub grid: Arc<GridSpec>,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<GridSpec>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(HmixError::Argument(format!(
                "grid has {} points, got {} values",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(HmixError::Domain("grid function has non-finite values".into()));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn zeros(grid: Arc<GridSpec>) -> Self {
        let len = grid.len();
        GridFunction { grid, values: vec![0.0; len] }
    }

    pub fn sample(grid: Arc<GridSpec>, f: impl Fn(&[f64]) -> f64 + Sync) -> Self {
        let values = (0..grid.len()).into_par_iter().map(|i| f(&grid.point(i))).collect();
        GridFunction { grid, values }
    }

    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn interior_values(&self) -> Vec<f64> {
        self.grid.interior().iter().map(|&i| self.values[i]).collect()
    }
}

/// One Hermitian matrix per interior grid point, in interior order.
#[derive(Clone, Debug)]
pub struct HermitianField {
    pub grid: Arc<GridSpec>,
    pub mats: Vec<HermitianMatrix>,
}

impl HermitianField {
    pub fn new(grid: Arc<GridSpec>, mats: Vec<HermitianMatrix>) -> Result<Self> {
        if mats.len() != grid.interior().len() || mats.iter().any(|m| m.dim() != grid.n) {
            return Err(HmixError::Argument("hermitian field does not match grid".into()));
        }
        Ok(HermitianField { grid, mats })
    }

    pub fn constant(grid: Arc<GridSpec>, m: &HermitianMatrix) -> Result<Self> {
        let mats = vec![m.clone(); grid.interior().len()];
        Self::new(grid, mats)
    }

    pub fn add(&self, other: &HermitianField) -> Result<HermitianField> {
        if *self.grid != *other.grid {
            return Err(HmixError::Argument("hermitian fields live on different grids".into()));
        }
        let mats = self.mats.iter().zip(&other.mats).map(|(a, b)| a.add(b)).collect();
        Ok(HermitianField { grid: self.grid.clone(), mats })
    }
}

/// χ_ij = ¼[(H_{x_i x_j} + H_{y_i y_j}) + i(H_{x_i y_j} − H_{y_i x_j})] from
/// a row-major 2n×2n real Hessian.
pub fn complex_from_real_hessian(n: usize, hess: &[f64]) -> HermitianMatrix {
    let d = 2 * n;
    let mut data = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            let re = hess[i * d + j] + hess[(n + i) * d + n + j];
            let im = hess[i * d + n + j] - hess[(n + i) * d + j];
            data[i * n + j] = Complex64::new(0.25 * re, 0.25 * im);
        }
    }
    HermitianMatrix::from_raw_symmetrized(n, data)
}

/// Second-order central-difference real Hessian at an interior point.
pub fn real_hessian_at(grid: &GridSpec, values: &[f64], idx: usize) -> Vec<f64> {
    let d = grid.real_dim();
    let st = grid.strides();
    let u0 = values[idx];
    let mut hess = vec![0.0; d * d];
    for a in 0..d {
        let ha = grid.h[a];
        hess[a * d + a] = (values[idx + st[a]] - 2.0 * u0 + values[idx - st[a]]) / (ha * ha);
        for b in a + 1..d {
            let (sa, sb) = (st[a], st[b]);
            let v = (values[idx + sa + sb] - values[idx + sa - sb] - values[idx - sa + sb]
                + values[idx - sa - sb])
                / (4.0 * ha * grid.h[b]);
            hess[a * d + b] = v;
            hess[b * d + a] = v;
        }
    }
    hess
}

/// Discrete u_{ij̄} at every interior point.
pub fn complex_hessian(u: &GridFunction) -> Result<HermitianField> {
    let grid = &u.grid;
    if grid.interior().is_empty() {
        return Err(HmixError::Argument("grid has no interior points".into()));
    }
    let mats = grid
        .interior()
        .par_iter()
        .map(|&idx| complex_from_real_hessian(grid.n, &real_hessian_at(grid, &u.values, idx)))
        .collect();
    Ok(HermitianField { grid: grid.clone(), mats })
}

/// χ_u = χ_0 + (u_{ij̄}).
pub fn chi_u(u: &GridFunction, chi0: &HermitianField) -> Result<HermitianField> {
    if *u.grid != *chi0.grid {
        return Err(HmixError::Argument("chi0 is defined on a different grid".into()));
    }
    chi0.add(&complex_hessian(u)?)
}

/// max over interior points of |∇u| (central differences, Euclidean in R^{2n}).
pub fn gradient_sup(u: &GridFunction) -> f64 {
    let grid = &u.grid;
    let st = grid.strides();
    grid.interior()
        .iter()
        .map(|&idx| {
            (0..grid.real_dim())
                .map(|a| {
                    let g = (u.values[idx + st[a]] - u.values[idx - st[a]]) / (2.0 * grid.h[a]);
                    g * g
                })
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

/// Real 2n×2n weights C with Σ_ab C_ab v_ab = tr(M · (v_{ij̄})) for real v.
pub fn real_coefficients(m: &HermitianMatrix) -> Vec<f64> {
    let n = m.dim();
    let d = 2 * n;
    let mut c = vec![0.0; d * d];
    for i in 0..n {
        for j in 0..n {
            let z = m.get(i, j);
            c[i * d + j] = 0.25 * z.re;
            c[(n + i) * d + n + j] = 0.25 * z.re;
            c[i * d + n + j] = 0.25 * z.im;
            c[(n + i) * d + j] = -0.25 * z.im;
        }
    }
    c
}

/// Sparse row of the linear map v ↦ tr(M · (v_{ij̄})) at an interior point, with
/// the same stencils as [`complex_hessian`]; (column, weight) sorted by column.
pub fn stencil_row(grid: &GridSpec, idx: usize, m: &HermitianMatrix) -> Result<Vec<(usize, f64)>> {
    let d = grid.real_dim();
    let st = grid.strides();
    let c = real_coefficients(m);
    let mut row: Vec<(usize, f64)> = Vec::with_capacity(1 + 2 * d + 2 * d * (d - 1));
    let mut center = 0.0;
    for a in 0..d {
        let caa = c[a * d + a];
        if !(caa > 0.0) {
            return Err(HmixError::Domain(format!(
                "pure second-derivative weight {caa:e} on axis {a} is not positive"
            )));
        }
        let w = caa / (grid.h[a] * grid.h[a]);
        row.push((idx + st[a], w));
        row.push((idx - st[a], w));
        center -= 2.0 * w;
        for b in a + 1..d {
            let cab = c[a * d + b] + c[b * d + a];
            if cab == 0.0 {
                continue;
            }
            let w = cab / (4.0 * grid.h[a] * grid.h[b]);
            let (sa, sb) = (st[a], st[b]);
            row.push((idx + sa + sb, w));
            row.push((idx + sa - sb, -w));
            row.push((idx - sa + sb, -w));
            row.push((idx - sa - sb, w));
        }
    }
    row.push((idx, center));
    row.sort_by_key(|e| e.0);
    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
    for (col, w) in row {
        match merged.last_mut() {
            Some(last) if last.0 == col => last.1 += w,
            _ => merged.push((col, w)),
        }
    }
    Ok(merged)
}

fn check_coefficients(coeff: &HermitianField) -> Result<()> {
    if let Some(p) = coeff.mats.iter().position(|m| !m.is_positive_definite()) {
        return Err(HmixError::Domain(format!(
            "coefficient at interior point {} is not positive definite",
            coeff.grid.interior()[p]
        )));
    }
    Ok(())
}

/// Linearized operator on the full grid: interior rows carry the stencil,
/// boundary rows are identity.
pub fn linearized_stencil(coeff: &HermitianField) -> Result<CsrMatrix> {
    check_coefficients(coeff)?;
    let grid = &coeff.grid;
    let interior_rows: Vec<Vec<(usize, f64)>> = grid
        .interior()
        .par_iter()
        .zip(coeff.mats.par_iter())
        .map(|(&idx, m)| stencil_row(grid, idx, m))
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(grid.len());
    let mut it = interior_rows.into_iter();
    for idx in 0..grid.len() {
        if grid.is_boundary(idx) {
            rows.push(vec![(idx, 1.0)]);
        } else {
            rows.push(it.next().unwrap());
        }
    }
    Ok(CsrMatrix::from_rows(grid.len(), rows))
}

/// The interior block of the linearized operator (unknowns in interior order)
/// and, per interior row, the weights on boundary neighbours.
pub fn linearized_interior(coeff: &HermitianField) -> Result<(CsrMatrix, Vec<Vec<(usize, f64)>>)> {
    check_coefficients(coeff)?;
    let grid = &coeff.grid;
    let split: Vec<(Vec<(usize, f64)>, Vec<(usize, f64)>)> = grid
        .interior()
        .par_iter()
        .zip(coeff.mats.par_iter())
        .map(|(&idx, m)| {
            let row = stencil_row(grid, idx, m)?;
            let mut inner = Vec::with_capacity(row.len());
            let mut outer = Vec::new();
            for (col, w) in row {
                match grid.interior_position(col) {
                    Some(p) => inner.push((p, w)),
                    None => outer.push((col, w)),
                }
            }
            Ok((inner, outer))
        })
        .collect::<Result<_>>()?;
    let (inner, outer): (Vec<_>, Vec<_>) = split.into_iter().unzip();
    Ok((CsrMatrix::from_rows(grid.interior().len(), inner), outer))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, pts: usize) -> Arc<GridSpec> {
        Arc::new(GridSpec::cube(n, -1.0, 1.0, pts).unwrap())
    }

    fn norm2(p: &[f64]) -> f64 {
        p.iter().map(|x| x * x).sum()
    }

    #[test]
    fn gridspec_validation() {
        assert!(GridSpec::cube(2, -1.0, 1.0, 4).is_err());
        assert!(GridSpec::new(1, vec![0.0, 0.0], vec![1.0, 0.0], vec![5, 5]).is_err());
        let g = GridSpec::cube(2, -1.0, 1.0, 5).unwrap();
        assert_eq!(g.len(), 625);
        assert_eq!(g.interior().len(), 81);
        assert_eq!(g.strides(), &[125, 25, 5, 1]);
        let idx = g.linear_index(&[1, 2, 3, 4]);
        assert_eq!(g.multi_index(idx), vec![1, 2, 3, 4]);
        assert!(g.is_boundary(idx));
        assert!(!g.is_boundary(g.linear_index(&[1, 2, 3, 3])));
        let json = serde_json::to_string(&g).unwrap();
        let back: GridSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.interior().len(), 81);
    }

    #[test]
    fn hessian_of_norm_squared_is_identity() {
        let g = grid(2, 5);
        let u = GridFunction::sample(g, norm2);
        let h = complex_hessian(&u).unwrap();
        for m in &h.mats {
            for i in 0..2 {
                for j in 0..2 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((m.get(i, j) - Complex64::new(want, 0.0)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn hessian_of_pluriharmonic_vanishes() {
        let g = grid(2, 5);
        // Re z_1² = x_1² − y_1²
        let u = GridFunction::sample(g, |p| p[0] * p[0] - p[2] * p[2]);
        for m in &complex_hessian(&u).unwrap().mats {
            assert!(m.frobenius() < 1e-12);
        }
    }

    #[test]
    fn complex_quadratic_exactness() {
        // u = Re(a z_1 z̄_2) + 3|z_2|² with a = 1 + 2i gives u_{12̄} = a/2·… computed analytically
        let g = grid(2, 5);
        // u = x1 x2 + y1 y2 (= Re z_1 z̄_2): u_{12̄} = ½, u_{11̄} = u_{22̄} = 0
        let u = GridFunction::sample(g.clone(), |p| p[0] * p[1] + p[2] * p[3] + 3.0 * (p[1] * p[1] + p[3] * p[3]));
        for m in &complex_hessian(&u).unwrap().mats {
            assert!((m.get(0, 1) - Complex64::new(0.5, 0.0)).norm() < 1e-12);
            assert!((m.get(1, 1).re - 3.0).abs() < 1e-12);
            assert!(m.get(0, 0).norm() < 1e-12);
        }
        // u = x1 y2 − y1 x2 (= Im(z̄_1 z_2)): u_{12̄} = ¼(i·1 − i·(−1)) = i/2
        let u = GridFunction::sample(g, |p| p[0] * p[3] - p[2] * p[1]);
        for m in &complex_hessian(&u).unwrap().mats {
            assert!((m.get(0, 1) - Complex64::new(0.0, 0.5)).norm() < 1e-12);
            assert!((m.get(1, 0) - Complex64::new(0.0, -0.5)).norm() < 1e-12);
        }
    }

    #[test]
    fn quartic_has_second_order_error() {
        // ∂∂̄|z_1|⁴ = 4|z_1|² exactly; the 3-point stencil adds (h²/12)·u'''' per axis
        let err_at = |pts: usize| {
            let g = grid(1, pts);
            let u = GridFunction::sample(g.clone(), |p| norm2(p).powi(2));
            let h = complex_hessian(&u).unwrap();
            g.interior()
                .iter()
                .zip(&h.mats)
                .map(|(&idx, m)| (m.get(0, 0).re - 4.0 * norm2(&g.point(idx))).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err_at(9), err_at(17));
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.8, "ratio {ratio}");
    }

    #[test]
    fn chi_u_is_linear() {
        let g = grid(2, 5);
        let zero = GridFunction::zeros(g.clone());
        let c = HermitianField::constant(g.clone(), &HermitianMatrix::scaled_identity(2, 0.5)).unwrap();
        let f = chi_u(&zero, &c).unwrap();
        assert!(f.mats.iter().all(|m| (m.get(0, 0).re - 0.5).abs() < 1e-15));
        let q = GridFunction::sample(g.clone(), norm2);
        let f = chi_u(&q, &c).unwrap();
        assert!(f.mats.iter().all(|m| (m.get(1, 1).re - 1.5).abs() < 1e-12));
        let other = HermitianField::constant(grid(2, 6), &HermitianMatrix::identity(2)).unwrap();
        assert!(chi_u(&q, &other).is_err());
    }

    #[test]
    fn gradient_sup_examples() {
        let g = grid(2, 9);
        assert_eq!(gradient_sup(&GridFunction::sample(g.clone(), |_| 3.0)), 0.0);
        let lin = gradient_sup(&GridFunction::sample(g.clone(), |p| p[0]));
        assert!((lin - 1.0).abs() < 1e-12);
        // ∇|z|² = 2·position, largest at the corner-adjacent interior point
        let q = gradient_sup(&GridFunction::sample(g.clone(), norm2));
        let h = g.h[0];
        let want = 2.0 * (4.0f64).sqrt() * (1.0 - h);
        assert!((q - want).abs() < 1e-12, "{q} vs {want}");
    }

    #[test]
    fn identity_stencil_is_quarter_laplacian() {
        let g = grid(2, 6);
        let coeff = HermitianField::constant(g.clone(), &HermitianMatrix::identity(2)).unwrap();
        let l = linearized_stencil(&coeff).unwrap();
        let idx = g.interior()[7];
        let row = l.row(idx);
        let h2 = g.h[0] * g.h[0];
        for (col, w) in row {
            if col == idx {
                assert!((w + 2.0 * 4.0 * 0.25 / h2).abs() < 1e-12);
            } else {
                assert!((w - 0.25 / h2).abs() < 1e-12);
            }
        }
        assert_eq!(l.row(idx).count(), 9);
        // symmetric as a real matrix on the interior block
        let (a, _) = linearized_interior(&coeff).unwrap();
        assert!(a.asymmetry() < 1e-12);
        // boundary rows identity
        let b = g.boundary().next().unwrap();
        assert_eq!(l.row(b).collect::<Vec<_>>(), vec![(b, 1.0)]);
    }

    #[test]
    fn weighted_diagonal_stencil() {
        let g = grid(2, 6);
        let coeff = HermitianField::constant(g.clone(), &HermitianMatrix::diagonal(&[2.0, 3.0])).unwrap();
        let l = linearized_stencil(&coeff).unwrap();
        let idx = g.interior()[11];
        let st = g.strides();
        let h2 = g.h[0] * g.h[0];
        let w: std::collections::HashMap<usize, f64> = l.row(idx).collect();
        // axes 0, 2 are x_1, y_1; axes 1, 3 are x_2, y_2
        assert!((w[&(idx + st[0])] - 0.5 / h2).abs() < 1e-12);
        assert!((w[&(idx + st[2])] - 0.5 / h2).abs() < 1e-12);
        assert!((w[&(idx + st[1])] - 0.75 / h2).abs() < 1e-12);
        assert!((w[&(idx - st[3])] - 0.75 / h2).abs() < 1e-12);
    }

    #[test]
    fn stencil_on_quadratic_gives_trace() {
        let g = grid(2, 6);
        let mats: Vec<HermitianMatrix> = g
            .interior()
            .iter()
            .map(|&idx| {
                let p = g.point(idx);
                HermitianMatrix::new(
                    2,
                    vec![
                        Complex64::new(2.0 + p[0], 0.0),
                        Complex64::new(0.3, p[1] * 0.2),
                        Complex64::new(0.3, -p[1] * 0.2),
                        Complex64::new(1.5, 0.0),
                    ],
                )
                .unwrap()
            })
            .collect();
        let coeff = HermitianField::new(g.clone(), mats.clone()).unwrap();
        let l = linearized_stencil(&coeff).unwrap();
        let v = GridFunction::sample(g.clone(), norm2);
        let out = l.matvec(&v.values);
        for (p, &idx) in g.interior().iter().enumerate() {
            assert!((out[idx] - mats[p].trace()).abs() < 1e-11);
        }
    }

    #[test]
    fn stencil_rejects_indefinite() {
        let g = grid(2, 5);
        let coeff = HermitianField::constant(g, &HermitianMatrix::diagonal(&[1.0, -1.0])).unwrap();
        assert!(matches!(linearized_stencil(&coeff), Err(HmixError::Domain(_))));
    }

    #[test]
    fn stencil_is_derivative_of_trace_pairing() {
        // tr(M · χ(v)) must equal the stencil applied to v for a non-diagonal M
        let g = grid(2, 6);
        let m = HermitianMatrix::new(
            2,
            vec![
                Complex64::new(1.2, 0.0),
                Complex64::new(0.3, -0.4),
                Complex64::new(0.3, 0.4),
                Complex64::new(0.9, 0.0),
            ],
        )
        .unwrap();
        let coeff = HermitianField::constant(g.clone(), &m).unwrap();
        let l = linearized_stencil(&coeff).unwrap();
        let v = GridFunction::sample(g.clone(), |p| (p[0] * 1.3).sin() * (p[3] + 0.2 * p[1]).cos() + p[2] * p[1]);
        let chi = complex_hessian(&v).unwrap();
        let out = l.matvec(&v.values);
        for (p, &idx) in g.interior().iter().enumerate() {
            assert!((out[idx] - m.trace_product(&chi.mats[p])).abs() < 1e-10);
        }
    }
}
