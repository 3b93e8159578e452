//! Dirichlet problem data on a grid: coefficient fields, boundary data and an
//! admissible subsolution, plus manufactured solutions, subsolution
//! deflation, the linear supersolution and the C⁰ sandwich audit.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HmixError, Result};
use crate::geometry::{complex_from_real_hessian, linearized_interior, GridFunction, GridSpec, HermitianField};
use crate::linalg;
use crate::operator::{evaluate, normalize_coefficients, Coefficients};
use crate::spectral::{eig_hermitian, HermitianMatrix};
use crate::symfun::binomial;

/// Allowed shortfall in G(χ_ū) ≥ β.
pub const SUBSOLUTION_SLACK: f64 = 1e-10;

/// Value, gradient and Hessian of an analytic function on R^{2n}.
#[derive(Clone, Debug)]
pub struct Jet {
    pub value: f64,
    pub grad: Vec<f64>,
    /// row-major 2n×2n
    pub hess: Vec<f64>,
}

impl Jet {
    fn zero(d: usize) -> Self {
        Jet { value: 0.0, grad: vec![0.0; d], hess: vec![0.0; d * d] }
    }

    fn add_scaled(&mut self, c: f64, other: &Jet) {
        self.value += c * other.value;
        for (a, b) in self.grad.iter_mut().zip(&other.grad) {
            *a += c * b;
        }
        for (a, b) in self.hess.iter_mut().zip(&other.hess) {
            *a += c * b;
        }
    }
}

/// Named analytic forms on real coordinates t = (x_1..x_n, y_1..y_n).
/// Complex indices and real axes are zero-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Descriptor {
    Constant { value: f64 },
    /// coef·|z|²
    NormSquared { coef: f64 },
    /// coef·|z_index|²
    AbsSquared { coef: f64, index: usize },
    /// coef·|z_index|⁴
    AbsFourth { coef: f64, index: usize },
    /// coef·t_axis
    Linear { coef: f64, axis: usize },
    /// coef·exp(rate·t_axis)
    Exp { coef: f64, rate: f64, axis: usize },
    /// coef·Π_a sin(π(t_a − lo_a)/(hi_a − lo_a)); vanishes on the box boundary
    SineBump {
        #[serde(default = "one")]
        coef: f64,
    },
    Scaled { factor: f64, of: Box<Descriptor> },
    Sum { terms: Vec<Descriptor> },
}

fn one() -> f64 {
    1.0
}

impl Descriptor {
    pub fn scaled(&self, factor: f64) -> Descriptor {
        Descriptor::Scaled { factor, of: Box::new(self.clone()) }
    }

    /// Checks indices against complex dimension `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |what: &str| Err(HmixError::Config(format!("descriptor {what} out of range for n = {n}")));
        match self {
            Descriptor::AbsSquared { index, .. } | Descriptor::AbsFourth { index, .. } if *index >= n => {
                bad("index")
            }
            Descriptor::Linear { axis, .. } | Descriptor::Exp { axis, .. } if *axis >= 2 * n => bad("axis"),
            Descriptor::Scaled { of, .. } => of.validate(n),
            Descriptor::Sum { terms } => terms.iter().try_for_each(|t| t.validate(n)),
            _ => Ok(()),
        }
    }

    pub fn value(&self, p: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
        self.jet(p, lo, hi).value
    }

    pub fn jet(&self, p: &[f64], lo: &[f64], hi: &[f64]) -> Jet {
        let d = p.len();
        let n = d / 2;
        let mut j = Jet::zero(d);
        match self {
            Descriptor::Constant { value } => j.value = *value,
            Descriptor::NormSquared { coef } => {
                j.value = coef * p.iter().map(|x| x * x).sum::<f64>();
                for a in 0..d {
                    j.grad[a] = 2.0 * coef * p[a];
                    j.hess[a * d + a] = 2.0 * coef;
                }
            }
            Descriptor::AbsSquared { coef, index } => {
                let (x, y) = (*index, n + index);
                j.value = coef * (p[x] * p[x] + p[y] * p[y]);
                j.grad[x] = 2.0 * coef * p[x];
                j.grad[y] = 2.0 * coef * p[y];
                j.hess[x * d + x] = 2.0 * coef;
                j.hess[y * d + y] = 2.0 * coef;
            }
            Descriptor::AbsFourth { coef, index } => {
                let (x, y) = (*index, n + index);
                let r2 = p[x] * p[x] + p[y] * p[y];
                j.value = coef * r2 * r2;
                j.grad[x] = 4.0 * coef * r2 * p[x];
                j.grad[y] = 4.0 * coef * r2 * p[y];
                j.hess[x * d + x] = coef * (4.0 * r2 + 8.0 * p[x] * p[x]);
                j.hess[y * d + y] = coef * (4.0 * r2 + 8.0 * p[y] * p[y]);
                j.hess[x * d + y] = coef * 8.0 * p[x] * p[y];
                j.hess[y * d + x] = coef * 8.0 * p[x] * p[y];
            }
            Descriptor::Linear { coef, axis } => {
                j.value = coef * p[*axis];
                j.grad[*axis] = *coef;
            }
            Descriptor::Exp { coef, rate, axis } => {
                let e = coef * (rate * p[*axis]).exp();
                j.value = e;
                j.grad[*axis] = rate * e;
                j.hess[axis * d + axis] = rate * rate * e;
            }
            Descriptor::SineBump { coef } => {
                let k: Vec<f64> = (0..d).map(|a| PI / (hi[a] - lo[a])).collect();
                let s: Vec<f64> = (0..d).map(|a| (k[a] * (p[a] - lo[a])).sin()).collect();
                let c: Vec<f64> = (0..d).map(|a| k[a] * (k[a] * (p[a] - lo[a])).cos()).collect();
                let prod_except = |skip: &[usize]| -> f64 {
                    (0..d).filter(|a| !skip.contains(a)).map(|a| s[a]).product()
                };
                j.value = coef * prod_except(&[]);
                for a in 0..d {
                    j.grad[a] = coef * c[a] * prod_except(&[a]);
                    j.hess[a * d + a] = -coef * k[a] * k[a] * prod_except(&[]);
                    for b in a + 1..d {
                        let v = coef * c[a] * c[b] * prod_except(&[a, b]);
                        j.hess[a * d + b] = v;
                        j.hess[b * d + a] = v;
                    }
                }
            }
            Descriptor::Scaled { factor, of } => {
                j.add_scaled(*factor, &of.jet(p, lo, hi));
            }
            Descriptor::Sum { terms } => {
                for t in terms {
                    j.add_scaled(1.0, &t.jet(p, lo, hi));
                }
            }
        }
        j
    }

    pub fn sample(&self, grid: &Arc<GridSpec>) -> GridFunction {
        let (lo, hi) = (grid.lo.clone(), grid.hi.clone());
        GridFunction::sample(grid.clone(), move |p| self.value(p, &lo, &hi))
    }
}

/// Flat background form χ_0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Chi0Spec {
    ScaledIdentity { c: f64 },
    ConstantMatrix {
        re: Vec<Vec<f64>>,
        #[serde(default)]
        im: Option<Vec<Vec<f64>>>,
    },
}

impl Chi0Spec {
    pub fn matrix(&self, n: usize) -> Result<HermitianMatrix> {
        match self {
            Chi0Spec::ScaledIdentity { c } => Ok(HermitianMatrix::scaled_identity(n, *c)),
            Chi0Spec::ConstantMatrix { re, im } => {
                if re.len() != n || re.iter().any(|r| r.len() != n) {
                    return Err(HmixError::Config(format!("chi0 matrix must be {n}×{n}")));
                }
                let mut data = Vec::with_capacity(n * n);
                for i in 0..n {
                    for j in 0..n {
                        let imv = match im {
                            Some(m) => *m
                                .get(i)
                                .and_then(|r| r.get(j))
                                .ok_or_else(|| HmixError::Config(format!("chi0 imaginary part must be {n}×{n}")))?,
                            None => 0.0,
                        };
                        data.push(Complex64::new(re[i][j], imv));
                    }
                }
                HermitianMatrix::new(n, data).map_err(|e| HmixError::Config(format!("chi0: {e}")))
            }
        }
    }
}

/// Normalized coefficients β_l (k−1 per interior point) and right-hand side β.
#[derive(Clone, Debug)]
pub struct CoefficientField {
    pub n: usize,
    pub k: usize,
    pub beta_l: Vec<f64>,
    pub beta: Vec<f64>,
}

impl CoefficientField {
    pub fn at(&self, p: usize) -> Coefficients {
        let m = self.k - 1;
        Coefficients {
            n: self.n,
            k: self.k,
            beta_l: self.beta_l[p * m..(p + 1) * m].to_vec(),
            beta: self.beta[p],
        }
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }
}

/// Margins recorded when a problem is verified.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SubsolutionCheck {
    /// min over interior points of σ_j(λ(χ_ū)), j = 1..k−1
    pub min_cone_sigma: f64,
    /// min over interior points of G(χ_ū) − β
    pub min_subsolution_margin: f64,
    /// max |ū − φ| on the boundary
    pub boundary_mismatch: f64,
}

/// A Dirichlet problem on a grid together with its subsolution.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub grid: Arc<GridSpec>,
    pub k: usize,
    pub chi0: HermitianField,
    pub coeffs: CoefficientField,
    /// Boundary data; interior entries are ignored.
    pub phi: GridFunction,
    pub usub: GridFunction,
}

impl ProblemSpec {
    /// Builds and verifies: β_l > 0, λ(χ_ū) ∈ Γ_{k−1}, G(χ_ū) ≥ β − slack, ū = φ on ∂.
    pub fn new(
        grid: Arc<GridSpec>,
        k: usize,
        chi0: HermitianField,
        coeffs: CoefficientField,
        phi: GridFunction,
        usub: GridFunction,
    ) -> Result<Self> {
        let spec = ProblemSpec { grid, k, chi0, coeffs, phi, usub };
        spec.verify()?;
        Ok(spec)
    }

    pub fn n(&self) -> usize {
        self.grid.n
    }

    pub fn h_max(&self) -> f64 {
        self.grid.h_max()
    }

    pub fn coefficients(&self, p: usize) -> Coefficients {
        self.coeffs.at(p)
    }

    /// Structural checks plus the admissibility and subsolution inequalities.
    pub fn verify(&self) -> Result<SubsolutionCheck> {
        let n = self.n();
        if self.k < 2 || self.k > n {
            return Err(HmixError::Argument(format!("need 2 <= k <= n, got k = {}, n = {n}", self.k)));
        }
        let m = self.grid.interior().len();
        if self.coeffs.n != n || self.coeffs.k != self.k || self.coeffs.len() != m
            || self.coeffs.beta_l.len() != m * (self.k - 1)
        {
            return Err(HmixError::Argument("coefficient field does not match the grid".into()));
        }
        if *self.chi0.grid != *self.grid || *self.phi.grid != *self.grid || *self.usub.grid != *self.grid {
            return Err(HmixError::Argument("problem fields live on different grids".into()));
        }
        let bad: Vec<usize> = (0..m)
            .filter(|&p| self.coeffs.beta_l[p * (self.k - 1)..(p + 1) * (self.k - 1)].iter().any(|b| !(*b > 0.0)))
            .collect();
        if !bad.is_empty() {
            return Err(HmixError::Construction {
                message: "coefficient positivity violated".into(),
                points: bad.iter().map(|&p| self.grid.interior()[p]).collect(),
                worst: 0.0,
            });
        }
        let boundary_mismatch = self
            .grid
            .boundary()
            .map(|i| (self.usub.values[i] - self.phi.values[i]).abs())
            .fold(0.0, f64::max);
        if boundary_mismatch > 0.0 {
            return Err(HmixError::Construction {
                message: format!("subsolution differs from boundary data by {boundary_mismatch:e}"),
                points: self
                    .grid
                    .boundary()
                    .filter(|&i| self.usub.values[i] != self.phi.values[i])
                    .collect(),
                worst: boundary_mismatch,
            });
        }
        let chi = crate::geometry::chi_u(&self.usub, &self.chi0)?;
        let per_point: Vec<(f64, Option<f64>)> = chi
            .mats
            .par_iter()
            .enumerate()
            .map(|(p, a)| {
                let c = self.coeffs.at(p);
                match eig_hermitian(a) {
                    Ok(e) => {
                        let s = e.lambda.sigmas();
                        let cone = (1..self.k).map(|j| s[j]).fold(f64::INFINITY, f64::min);
                        let g = evaluate(e.lambda.values(), &c).ok().map(|g| g - c.beta);
                        (cone, g)
                    }
                    Err(_) => (f64::NEG_INFINITY, None),
                }
            })
            .collect();
        let min_cone_sigma = per_point.iter().map(|x| x.0).fold(f64::INFINITY, f64::min);
        let outside: Vec<usize> = per_point
            .iter()
            .enumerate()
            .filter(|(_, x)| !(x.0 > 0.0) || x.1.is_none())
            .map(|(p, _)| self.grid.interior()[p])
            .collect();
        if !outside.is_empty() {
            return Err(HmixError::Construction {
                message: format!("subsolution is not (k−1)-admissible (min σ = {min_cone_sigma:e})"),
                points: outside,
                worst: min_cone_sigma,
            });
        }
        let min_subsolution_margin = per_point.iter().map(|x| x.1.unwrap()).fold(f64::INFINITY, f64::min);
        let below: Vec<usize> = per_point
            .iter()
            .enumerate()
            .filter(|(_, x)| x.1.unwrap() < -SUBSOLUTION_SLACK)
            .map(|(p, _)| self.grid.interior()[p])
            .collect();
        if !below.is_empty() {
            return Err(HmixError::Construction {
                message: format!("subsolution inequality fails (worst G − β = {min_subsolution_margin:e})"),
                points: below,
                worst: min_subsolution_margin,
            });
        }
        Ok(SubsolutionCheck { min_cone_sigma, min_subsolution_margin, boundary_mismatch })
    }

    /// Same problem with β replaced by β + delta; re-verified.
    pub fn with_rhs_shift(&self, delta: f64) -> Result<ProblemSpec> {
        let mut out = self.clone();
        out.coeffs.beta.iter_mut().for_each(|b| *b += delta);
        out.verify()?;
        Ok(out)
    }

    /// Replaces the subsolution; re-verified.
    pub fn with_subsolution(&self, usub: GridFunction) -> Result<ProblemSpec> {
        let mut out = self.clone();
        out.usub = usub;
        out.verify()?;
        Ok(out)
    }
}

/// A problem whose exact solution is known.
#[derive(Clone, Debug)]
pub struct ManufacturedProblem {
    pub spec: ProblemSpec,
    pub ustar: GridFunction,
    pub ustar_descriptor: Descriptor,
    /// β(z) = G(χ_{u*}(z)) at each interior point (analytic Hessian).
    pub beta_field: Vec<f64>,
}

fn sample_interior(desc: &Descriptor, grid: &GridSpec) -> Vec<f64> {
    grid.interior().iter().map(|&i| desc.value(&grid.point(i), &grid.lo, &grid.hi)).collect()
}

/// Manufactures β from an analytic u*: β := G(χ_0 + ∂∂̄u*), φ := u*, ū := u*.
pub fn manufacture(
    grid: Arc<GridSpec>,
    k: usize,
    chi0: &HermitianMatrix,
    beta_l: &[Descriptor],
    ustar: &Descriptor,
) -> Result<ManufacturedProblem> {
    let n = grid.n;
    if k < 2 || k > n {
        return Err(HmixError::Argument(format!("need 2 <= k <= n, got k = {k}, n = {n}")));
    }
    if beta_l.len() != k - 1 {
        return Err(HmixError::Argument(format!("expected {} coefficient fields, got {}", k - 1, beta_l.len())));
    }
    ustar.validate(n)?;
    beta_l.iter().try_for_each(|d| d.validate(n))?;
    if chi0.dim() != n {
        return Err(HmixError::Argument("chi0 has the wrong order".into()));
    }
    let m = grid.interior().len();
    let sampled: Vec<Vec<f64>> = beta_l.iter().map(|d| sample_interior(d, &grid)).collect();
    let mut flat = vec![0.0; m * (k - 1)];
    for p in 0..m {
        for l in 0..k - 1 {
            flat[p * (k - 1) + l] = sampled[l][p];
        }
    }
    let results: Vec<std::result::Result<f64, ()>> = grid
        .interior()
        .par_iter()
        .enumerate()
        .map(|(p, &idx)| {
            let jet = ustar.jet(&grid.point(idx), &grid.lo, &grid.hi);
            let chi = chi0.add(&complex_from_real_hessian(n, &jet.hess));
            let c = Coefficients { n, k, beta_l: flat[p * (k - 1)..(p + 1) * (k - 1)].to_vec(), beta: 0.0 };
            let e = eig_hermitian(&chi).map_err(|_| ())?;
            evaluate(e.lambda.values(), &c).map_err(|_| ())
        })
        .collect();
    let bad: Vec<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, r)| r.is_err())
        .map(|(p, _)| grid.interior()[p])
        .collect();
    if !bad.is_empty() {
        return Err(HmixError::Construction {
            message: "u* is not (k−1)-admissible on the box".into(),
            points: bad,
            worst: f64::NAN,
        });
    }
    let beta_field: Vec<f64> = results.into_iter().map(|r| r.unwrap()).collect();
    let ustar_grid = ustar.sample(&grid);
    let chi0_field = HermitianField::constant(grid.clone(), chi0)?;
    let coeffs = CoefficientField { n, k, beta_l: flat, beta: beta_field.clone() };
    let spec = ProblemSpec::new(grid, k, chi0_field, coeffs, ustar_grid.clone(), ustar_grid.clone())?;
    Ok(ManufacturedProblem { spec, ustar: ustar_grid, ustar_descriptor: ustar.clone(), beta_field })
}

/// ū := u* − c·η, verified as an admissible subsolution.
pub fn deflate_subsolution(mp: &ManufacturedProblem, c: f64, bump: &Descriptor) -> Result<ProblemSpec> {
    if !(c >= 0.0) {
        return Err(HmixError::Argument(format!("deflation constant must be nonnegative, got {c}")));
    }
    let grid = &mp.spec.grid;
    bump.validate(grid.n)?;
    let eta = bump.sample(grid);
    let on_boundary = grid.boundary().map(|i| eta.values[i].abs()).fold(0.0, f64::max);
    if on_boundary > 1e-12 {
        return Err(HmixError::Argument(format!("bump does not vanish on the boundary (max {on_boundary:e})")));
    }
    if let Some(i) = (0..grid.len()).find(|&i| eta.values[i] < -1e-12) {
        return Err(HmixError::Argument(format!("bump is negative at point {i}")));
    }
    let mut usub = mp.ustar.clone();
    for i in grid.interior() {
        usub.values[*i] -= c * eta.values[*i];
    }
    mp.spec.with_subsolution(usub)
}

/// Solves Δ_C v = −tr χ_0 with v = φ on the boundary.
pub fn supersolution(spec: &ProblemSpec) -> Result<GridFunction> {
    supersolution_with_tol(spec, 1e-13)
}

pub fn supersolution_with_tol(spec: &ProblemSpec, tol: f64) -> Result<GridFunction> {
    let grid = &spec.grid;
    let identity = HermitianField::constant(grid.clone(), &HermitianMatrix::identity(grid.n))?;
    let (a, outer) = linearized_interior(&identity)?;
    let rhs: Vec<f64> = spec
        .chi0
        .mats
        .iter()
        .zip(&outer)
        .map(|(m, row)| -m.trace() - row.iter().map(|(col, w)| w * spec.phi.values[*col]).sum::<f64>())
        .collect();
    let (x, _) = linalg::solve(&a, &rhs, tol)?;
    let mut v = spec.phi.clone();
    for (p, &idx) in grid.interior().iter().enumerate() {
        v.values[idx] = x[p];
    }
    Ok(v)
}

/// Outcome of ū − tol ≤ u ≤ v + tol.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SandwichReport {
    pub ok: bool,
    /// most negative of (u − ū + tol) and (v + tol − u)
    pub worst: f64,
    pub lower_margin: f64,
    pub upper_margin: f64,
    pub tol: f64,
    pub violations: usize,
}

pub fn sandwich_tolerance(grid: &GridSpec) -> f64 {
    1e-8 + 10.0 * grid.h_max() * grid.h_max()
}

pub fn c0_sandwich_check(u: &GridFunction, spec: &ProblemSpec) -> Result<SandwichReport> {
    let v = supersolution(spec)?;
    Ok(c0_sandwich_check_with(u, spec, &v))
}

pub fn c0_sandwich_check_with(u: &GridFunction, spec: &ProblemSpec, v: &GridFunction) -> SandwichReport {
    let tol = sandwich_tolerance(&spec.grid);
    let mut lower_margin = f64::INFINITY;
    let mut upper_margin = f64::INFINITY;
    let mut violations = 0;
    for i in 0..u.values.len() {
        let lo = u.values[i] - spec.usub.values[i];
        let hi = v.values[i] - u.values[i];
        lower_margin = lower_margin.min(lo);
        upper_margin = upper_margin.min(hi);
        if lo < -tol || hi < -tol {
            violations += 1;
        }
    }
    let worst = lower_margin.min(upper_margin);
    SandwichReport { ok: violations == 0, worst, lower_margin, upper_margin, tol, violations }
}

/// Invariants of a problem before solving.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckReport {
    pub subsolution: SubsolutionCheck,
    /// max |Δ_C v + tr χ_0| over interior points
    pub supersolution_residual: f64,
    /// min (v − ū)
    pub supersolution_gap: f64,
    /// Euler identity and trace lower bound at χ_ū with β := G(χ_ū)
    pub cone_bounds_ok: bool,
    pub worst_euler_error: f64,
    pub min_trace_margin: f64,
}

impl CheckReport {
    pub fn ok(&self) -> bool {
        self.cone_bounds_ok && self.supersolution_residual <= 1e-10 && self.supersolution_gap >= 0.0
    }
}

pub fn check_problem(spec: &ProblemSpec) -> Result<CheckReport> {
    let subsolution = spec.verify()?;
    let v = supersolution(spec)?;
    let hv = crate::geometry::complex_hessian(&v)?;
    let supersolution_residual = hv
        .mats
        .iter()
        .zip(&spec.chi0.mats)
        .map(|(h, c)| (h.trace() + c.trace()).abs())
        .fold(0.0, f64::max);
    let supersolution_gap = v.values.iter().zip(&spec.usub.values).map(|(a, b)| a - b).fold(f64::INFINITY, f64::min);
    let chi = crate::geometry::chi_u(&spec.usub, &spec.chi0)?;
    let mut cone_bounds_ok = true;
    let mut worst_euler_error = 0.0_f64;
    let mut min_trace_margin = f64::INFINITY;
    for (p, a) in chi.mats.iter().enumerate() {
        let e = eig_hermitian(a)?;
        let lam = e.lambda.values();
        let c0 = spec.coefficients(p);
        let c = c0.with_beta(evaluate(lam, &c0)?);
        let r = crate::operator::cone_bounds_report(lam, &c)?;
        cone_bounds_ok &= r.trace_ok && r.euler_ok;
        worst_euler_error = worst_euler_error.max((r.euler_lhs - r.euler_rhs).abs());
        min_trace_margin = min_trace_margin.min(r.trace - r.trace_lower_bound);
    }
    Ok(CheckReport {
        subsolution,
        supersolution_residual,
        supersolution_gap,
        cone_bounds_ok,
        worst_euler_error,
        min_trace_margin,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Deflation {
    pub c: f64,
    #[serde(default = "default_bump")]
    pub bump: Descriptor,
}

fn default_bump() -> Descriptor {
    Descriptor::SineBump { coef: 1.0 }
}

/// Problem configuration file.
///
/// `alpha` lists α_0..α_{k−1}. With `ustar` present the right-hand side is
/// manufactured from u* (α_{k−1} may be omitted and is ignored), the boundary
/// data is u* and `phi` is ignored; otherwise `phi` and an explicit
/// subsolution `usub` are required.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub n: usize,
    pub k: usize,
    #[serde(rename = "box")]
    pub bbox: BoxSpec,
    pub shape: Vec<usize>,
    pub chi0: Chi0Spec,
    pub alpha: Vec<Descriptor>,
    #[serde(default)]
    pub ustar: Option<Descriptor>,
    #[serde(default)]
    pub phi: Option<Descriptor>,
    #[serde(default)]
    pub usub: Option<Descriptor>,
    #[serde(default)]
    pub deflation: Option<Deflation>,
    #[serde(default)]
    pub solver: Option<crate::solver::SolverConfig>,
}

/// A configuration turned into grid data.
#[derive(Clone, Debug)]
pub struct BuiltProblem {
    pub spec: ProblemSpec,
    pub manufactured: Option<ManufacturedProblem>,
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| HmixError::Config(format!("invalid problem config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn grid(&self, grid_scale: usize) -> Result<GridSpec> {
        let g = GridSpec::new(self.n, self.bbox.lo.clone(), self.bbox.hi.clone(), self.shape.clone())
            .map_err(|e| HmixError::Config(e.to_string()))?;
        if grid_scale > 1 {
            g.refined(grid_scale)
        } else {
            Ok(g)
        }
    }

    /// Hypothesis gate: k range, α_l > 0 for l ≤ k−2 at every interior point.
    fn beta_descriptors(&self, grid: &GridSpec) -> Result<Vec<Descriptor>> {
        let (n, k) = (self.n, self.k);
        if k < 2 || k > n {
            return Err(HmixError::Config(format!("need 2 <= k <= n, got k = {k}, n = {n}")));
        }
        let need = if self.ustar.is_some() { k - 1 } else { k };
        if self.alpha.len() < need || self.alpha.len() > k {
            return Err(HmixError::Config(format!(
                "alpha needs {need}..={k} descriptors, got {}",
                self.alpha.len()
            )));
        }
        self.alpha.iter().try_for_each(|d| d.validate(n))?;
        for (l, d) in self.alpha.iter().take(k - 1).enumerate() {
            let v = sample_interior(d, grid);
            if let Some(bad) = v.iter().find(|x| !(**x > 0.0)) {
                return Err(HmixError::Domain(format!("coefficient positivity violated: alpha_{l} = {bad}")));
            }
        }
        let ck = binomial(n, k);
        Ok((0..k - 1).map(|l| self.alpha[l].scaled(ck / binomial(n, l))).collect())
    }

    pub fn build(&self, grid_scale: usize) -> Result<BuiltProblem> {
        let grid = Arc::new(self.grid(grid_scale)?);
        let n = self.n;
        let k = self.k;
        let beta_l = self.beta_descriptors(&grid)?;
        let chi0 = self.chi0.matrix(n)?;
        if let Some(ustar) = &self.ustar {
            let mp = manufacture(grid, k, &chi0, &beta_l, ustar)?;
            let spec = match &self.deflation {
                Some(d) => deflate_subsolution(&mp, d.c, &d.bump)?,
                None => mp.spec.clone(),
            };
            return Ok(BuiltProblem { spec, manufactured: Some(mp) });
        }
        let phi = self
            .phi
            .as_ref()
            .ok_or_else(|| HmixError::Config("phi is required when ustar is null".into()))?;
        let usub = self
            .usub
            .as_ref()
            .ok_or_else(|| HmixError::Config("usub is required when ustar is null".into()))?;
        phi.validate(n)?;
        usub.validate(n)?;
        let m = grid.interior().len();
        let mut flat = vec![0.0; m * (k - 1)];
        for (l, d) in beta_l.iter().enumerate() {
            for (p, v) in sample_interior(d, &grid).into_iter().enumerate() {
                flat[p * (k - 1) + l] = v;
            }
        }
        let ratio = binomial(n, k) / binomial(n, k - 1);
        let beta: Vec<f64> = sample_interior(&self.alpha[k - 1], &grid).into_iter().map(|a| ratio * a).collect();
        // spot-check the pointwise normalization against the operator module
        if let Some(&idx) = grid.interior().first() {
            let p = grid.point(idx);
            let alpha_pt: Vec<f64> = self.alpha.iter().map(|d| d.value(&p, &grid.lo, &grid.hi)).collect();
            let c = normalize_coefficients(&alpha_pt, n, k)?;
            debug_assert!((c.beta - beta[0]).abs() <= 1e-12 * (1.0 + c.beta.abs()));
        }
        let phi_g = phi.sample(&grid);
        let mut usub_g = usub.sample(&grid);
        for i in grid.boundary().collect::<Vec<_>>() {
            usub_g.values[i] = phi_g.values[i];
        }
        let spec = ProblemSpec::new(
            grid.clone(),
            k,
            HermitianField::constant(grid, &chi0)?,
            CoefficientField { n, k, beta_l: flat, beta },
            phi_g,
            usub_g,
        )?;
        Ok(BuiltProblem { spec, manufactured: None })
    }
}

/// Named configurations used by the CLI and the test suites.
pub mod presets {
    use super::*;

    fn cube(n: usize, pts: usize) -> (BoxSpec, Vec<usize>) {
        (BoxSpec { lo: vec![-1.0; 2 * n], hi: vec![1.0; 2 * n] }, vec![pts; 2 * n])
    }

    /// u* = |z|² + 0.1|z_1|⁴, n = 2, k = 2, α_0 = ½, strict deflated subsolution.
    pub fn ci(points: usize) -> ProblemConfig {
        let (bbox, shape) = cube(2, points);
        ProblemConfig {
            n: 2,
            k: 2,
            bbox,
            shape,
            chi0: Chi0Spec::ScaledIdentity { c: 0.0 },
            alpha: vec![Descriptor::Constant { value: 0.5 }],
            ustar: Some(quartic_ustar()),
            phi: None,
            usub: None,
            deflation: Some(Deflation { c: 0.02, bump: default_bump() }),
            solver: None,
        }
    }

    pub fn quartic_ustar() -> Descriptor {
        Descriptor::Sum {
            terms: vec![
                Descriptor::NormSquared { coef: 1.0 },
                Descriptor::AbsFourth { coef: 0.1, index: 0 },
            ],
        }
    }

    /// u* = |z|², n = 2, k = 2, α_0 = ½, equality subsolution.
    pub fn quadratic(points: usize) -> ProblemConfig {
        let (bbox, shape) = cube(2, points);
        ProblemConfig {
            n: 2,
            k: 2,
            bbox,
            shape,
            chi0: Chi0Spec::ScaledIdentity { c: 0.0 },
            alpha: vec![Descriptor::Constant { value: 0.5 }],
            ustar: Some(Descriptor::NormSquared { coef: 1.0 }),
            phi: None,
            usub: None,
            deflation: None,
            solver: None,
        }
    }

    /// n = 3 with the full range of lower-order terms.
    pub fn three(k: usize, points: usize) -> ProblemConfig {
        let (bbox, shape) = cube(3, points);
        ProblemConfig {
            n: 3,
            k,
            bbox,
            shape,
            chi0: Chi0Spec::ScaledIdentity { c: 0.2 },
            alpha: (0..k - 1).map(|l| Descriptor::Constant { value: 0.3 + 0.1 * l as f64 }).collect(),
            ustar: Some(quartic_ustar()),
            phi: None,
            usub: None,
            deflation: Some(Deflation { c: 0.02, bump: default_bump() }),
            solver: None,
        }
    }

    pub fn by_name(name: &str, points: Option<usize>) -> Option<ProblemConfig> {
        match name {
            "ci" => Some(ci(points.unwrap_or(9))),
            "quadratic" => Some(quadratic(points.unwrap_or(9))),
            "n3k2" => Some(three(2, points.unwrap_or(5))),
            "n3k3" => Some(three(3, points.unwrap_or(5))),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::complex_hessian;

    fn grid(n: usize, pts: usize) -> Arc<GridSpec> {
        Arc::new(GridSpec::cube(n, -1.0, 1.0, pts).unwrap())
    }

    #[test]
    fn jets_match_finite_differences() {
        let d = Descriptor::Sum {
            terms: vec![
                Descriptor::NormSquared { coef: 0.7 },
                Descriptor::AbsFourth { coef: 0.1, index: 1 },
                Descriptor::Exp { coef: 0.3, rate: 0.8, axis: 2 },
                Descriptor::SineBump { coef: 1.0 }.scaled(0.5),
                Descriptor::Linear { coef: -1.0, axis: 3 },
            ],
        };
        let lo = vec![-1.0; 4];
        let hi = vec![1.0; 4];
        let p = [0.3, -0.2, 0.5, 0.1];
        let jet = d.jet(&p, &lo, &hi);
        let h = 1e-4;
        for a in 0..4 {
            for b in 0..4 {
                let f = |da: f64, db: f64| {
                    let mut q = p;
                    q[a] += da;
                    q[b] += db;
                    d.value(&q, &lo, &hi)
                };
                let fd = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
                assert!((fd - jet.hess[a * 4 + b]).abs() < 1e-6, "({a},{b})");
            }
            let mut up = p;
            let mut dn = p;
            up[a] += h;
            dn[a] -= h;
            let g = (d.value(&up, &lo, &hi) - d.value(&dn, &lo, &hi)) / (2.0 * h);
            assert!((g - jet.grad[a]).abs() < 1e-7);
        }
    }

    #[test]
    fn manufacture_quadratic_constant_beta() {
        let g = grid(2, 5);
        let mp = manufacture(
            g,
            2,
            &HermitianMatrix::zeros(2),
            &[Descriptor::Constant { value: 0.5 }],
            &Descriptor::NormSquared { coef: 1.0 },
        )
        .unwrap();
        assert!(mp.beta_field.iter().all(|b| (b - 0.25).abs() < 1e-14));
        assert_eq!(mp.spec.usub, mp.ustar);
    }

    #[test]
    fn manufacture_scaled_identity_closed_form() {
        // λ = (1 + c)·1 with n = 2, k = 2: β = ((1+c)² − β_0)/(2(1+c))
        let g = grid(2, 5);
        let c = 0.3;
        let mp = manufacture(
            g,
            2,
            &HermitianMatrix::scaled_identity(2, c),
            &[Descriptor::Constant { value: 0.5 }],
            &Descriptor::NormSquared { coef: 1.0 },
        )
        .unwrap();
        let want = ((1.0 + c) * (1.0 + c) - 0.5) / (2.0 * (1.0 + c));
        assert!(mp.beta_field.iter().all(|b| (b - want).abs() < 1e-14));
    }

    #[test]
    fn manufacture_quartic_spot_value_at_origin() {
        let g = grid(2, 5);
        let mp = manufacture(
            g.clone(),
            2,
            &HermitianMatrix::zeros(2),
            &[Descriptor::Constant { value: 0.5 }],
            &presets::quartic_ustar(),
        )
        .unwrap();
        let origin = g.linear_index(&[2, 2, 2, 2]);
        let p = g.interior_position(origin).unwrap();
        assert!((mp.beta_field[p] - 0.25).abs() < 1e-14);
        let varies = mp.beta_field.iter().any(|b| (b - 0.25).abs() > 1e-3);
        assert!(varies);
    }

    #[test]
    fn manufacture_rejects_inadmissible() {
        let g = grid(2, 5);
        let err = manufacture(
            g,
            2,
            &HermitianMatrix::zeros(2),
            &[Descriptor::Constant { value: 0.5 }],
            &Descriptor::NormSquared { coef: -1.0 },
        )
        .unwrap_err();
        match err {
            HmixError::Construction { points, .. } => assert!(!points.is_empty()),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn deflation_examples() {
        let g = grid(2, 7);
        let mp = manufacture(
            g.clone(),
            2,
            &HermitianMatrix::zeros(2),
            &[Descriptor::Constant { value: 0.5 }],
            &presets::quartic_ustar(),
        )
        .unwrap();
        let bump = Descriptor::SineBump { coef: 1.0 };
        let same = deflate_subsolution(&mp, 0.0, &bump).unwrap();
        assert_eq!(same.usub, mp.ustar);
        for c in [1e-3, 1e-2, 5e-2] {
            let s = deflate_subsolution(&mp, c, &bump).unwrap();
            let check = s.verify().unwrap();
            assert!(check.min_subsolution_margin >= -SUBSOLUTION_SLACK);
        }
        assert!(deflate_subsolution(&mp, 50.0, &bump).is_err());
        assert!(deflate_subsolution(&mp, -1.0, &bump).is_err());
        // a bump that does not vanish on the boundary
        assert!(deflate_subsolution(&mp, 0.1, &Descriptor::Constant { value: 1.0 }).is_err());
    }

    #[test]
    fn supersolution_reproduces_linear_data() {
        let g = grid(2, 7);
        let cfg = ProblemConfig {
            n: 2,
            k: 2,
            bbox: BoxSpec { lo: vec![-1.0; 4], hi: vec![1.0; 4] },
            shape: vec![7; 4],
            chi0: Chi0Spec::ScaledIdentity { c: 0.0 },
            alpha: vec![Descriptor::Constant { value: 0.5 }, Descriptor::Constant { value: 0.1 }],
            ustar: None,
            phi: Some(Descriptor::Linear { coef: 1.0, axis: 0 }),
            usub: Some(Descriptor::Sum {
                terms: vec![
                    Descriptor::Linear { coef: 1.0, axis: 0 },
                    Descriptor::NormSquared { coef: 1.0 },
                    Descriptor::Constant { value: -4.0 },
                ],
            }),
            deflation: None,
            solver: None,
        };
        let built = cfg.build(1).unwrap();
        let v = supersolution(&built.spec).unwrap();
        let want = GridFunction::sample(g, |p| p[0]);
        assert!(v.max_abs_diff(&want) < 1e-11);
    }

    #[test]
    fn supersolution_residual_with_background() {
        let mut cfg = presets::quadratic(7);
        cfg.chi0 = Chi0Spec::ScaledIdentity { c: 1.0 };
        let built = cfg.build(1).unwrap();
        let v = supersolution(&built.spec).unwrap();
        let h = complex_hessian(&v).unwrap();
        for (m, c0) in h.mats.iter().zip(&built.spec.chi0.mats) {
            assert!((m.trace() + c0.trace()).abs() < 1e-10);
        }
    }

    #[test]
    fn sandwich_examples() {
        let built = presets::quadratic(7).build(1).unwrap();
        let spec = &built.spec;
        let r = c0_sandwich_check(&spec.usub, spec).unwrap();
        assert!(r.ok);
        assert_eq!(r.lower_margin, 0.0);
        let v = supersolution(spec).unwrap();
        let mut above = v.clone();
        // the tolerance 1e-8 + 10h² is about 1.1 on this grid
        above.values.iter_mut().for_each(|x| *x += 2.0);
        let r = c0_sandwich_check_with(&above, spec, &v);
        assert!(!r.ok);
        assert!((r.worst + 2.0).abs() < 1e-12);
    }

    #[test]
    fn check_passes_on_presets() {
        for cfg in [presets::quadratic(7), presets::ci(7), presets::three(3, 5)] {
            let spec = cfg.build(1).unwrap().spec;
            let r = check_problem(&spec).unwrap();
            assert!(r.ok(), "{r:?}");
            assert!(r.subsolution.min_subsolution_margin >= -SUBSOLUTION_SLACK);
        }
    }

    #[test]
    fn config_gate_rejects_zero_alpha() {
        let mut cfg = presets::ci(7);
        cfg.alpha = vec![Descriptor::Constant { value: 0.0 }];
        let err = cfg.build(1).unwrap_err();
        assert!(err.to_string().contains("coefficient positivity violated"));
    }

    #[test]
    fn config_json_roundtrip() {
        let cfg = presets::ci(9);
        let back = ProblemConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert!(ProblemConfig::from_json("{\"n\": 2}").is_err());
    }

    #[test]
    fn three_dimensional_presets_build() {
        for k in [2, 3] {
            let built = presets::three(k, 5).build(1).unwrap();
            assert_eq!(built.spec.k, k);
        }
    }
}
