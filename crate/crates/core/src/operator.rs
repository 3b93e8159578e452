//! The mixed Hessian quotient
//!
//! G(λ) = σ_k/σ_{k−1} − Σ_{l=0}^{k−2} β_l σ_l/σ_{k−1},
//!
//! defined on Γ_{k−1}, with analytic first and second λ-derivatives, its
//! matrix gradient, and runtime checks of the structural inequalities the
//! quotient satisfies (concavity support, trace bounds, Euler identity,
//! and the subsolution dichotomy).

use serde::{Deserialize, Serialize};

use crate::error::{HmixError, Result};
use crate::spectral::{eig_hermitian, matrix_gradient, HermitianMatrix};
use crate::symfun::{binomial, sigma_all, sigma_excl2_all, sigma_excl_all_with, Spectrum};

/// Quotients σ_l/σ_{k−1} larger than this are reported as unbounded.
pub const QUOTIENT_CAP: f64 = 1e8;

/// Normalized coefficients of the local form.
///
/// `beta_l` holds β_0..β_{k−2}; `beta` is the right-hand side. The
/// constructor accepts β_l ≥ 0 (the concavity and Euler statements hold
/// there); problem construction additionally demands β_l > 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub n: usize,
    pub k: usize,
    pub beta_l: Vec<f64>,
    pub beta: f64,
}

impl Coefficients {
    pub fn new(n: usize, k: usize, beta_l: Vec<f64>, beta: f64) -> Result<Self> {
        if k < 2 || k > n {
            return Err(HmixError::Argument(format!("need 2 <= k <= n, got k = {k}, n = {n}")));
        }
        if beta_l.len() != k - 1 {
            return Err(HmixError::Argument(format!(
                "expected {} lower-order coefficients, got {}",
                k - 1,
                beta_l.len()
            )));
        }
        if let Some((l, b)) = beta_l.iter().enumerate().find(|(_, b)| !(**b >= 0.0 && b.is_finite())) {
            return Err(HmixError::Domain(format!("coefficient beta_{l} = {b} must be nonnegative")));
        }
        if !beta.is_finite() {
            return Err(HmixError::Domain("right-hand side is not finite".into()));
        }
        Ok(Coefficients { n, k, beta_l, beta })
    }

    /// All β_l strictly positive.
    pub fn is_strict(&self) -> bool {
        self.beta_l.iter().all(|&b| b > 0.0)
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        Coefficients { beta, ..self.clone() }
    }
}

/// β_l = (C_n^k/C_n^l)·α_l for l ≤ k−2 and β = (C_n^k/C_n^{k−1})·α_{k−1}.
pub fn normalize_coefficients(alpha: &[f64], n: usize, k: usize) -> Result<Coefficients> {
    if k < 2 || k > n {
        return Err(HmixError::Argument(format!("need 2 <= k <= n, got k = {k}, n = {n}")));
    }
    if alpha.len() != k {
        return Err(HmixError::Argument(format!(
            "expected {k} coefficients alpha_0..alpha_{}, got {}",
            k - 1,
            alpha.len()
        )));
    }
    if let Some((l, a)) = alpha[..k - 1].iter().enumerate().find(|(_, a)| !(**a > 0.0)) {
        return Err(HmixError::Domain(format!(
            "coefficient positivity violated: alpha_{l} = {a}"
        )));
    }
    let ck = binomial(n, k);
    let beta_l = (0..k - 1).map(|l| ck / binomial(n, l) * alpha[l]).collect();
    let beta = ck / binomial(n, k - 1) * alpha[k - 1];
    Coefficients::new(n, k, beta_l, beta)
}

fn check_dims(lambda: &[f64], c: &Coefficients) -> Result<()> {
    if lambda.len() != c.n {
        return Err(HmixError::Argument(format!(
            "eigenvalue vector has length {}, coefficients are for n = {}",
            lambda.len(),
            c.n
        )));
    }
    Ok(())
}

fn check_cone(sig: &[f64], k: usize) -> Result<()> {
    if let Some(j) = (1..k).find(|&j| !(sig[j] > 0.0)) {
        return Err(HmixError::Domain(format!(
            "λ outside Γ_{}: σ_{j} = {:e}",
            k - 1,
            sig[j]
        )));
    }
    Ok(())
}

/// Numerator σ_k − Σ β_l σ_l for an arbitrary σ vector (missing orders are 0).
fn numerator(s: &[f64], c: &Coefficients, shift: usize) -> f64 {
    let at = |j: usize| -> f64 {
        if j < shift {
            0.0
        } else {
            s.get(j - shift).copied().unwrap_or(0.0)
        }
    };
    c.beta_l
        .iter()
        .enumerate()
        .fold(at(c.k), |acc, (l, b)| acc - b * at(l))
}

fn sig_at(s: &[f64], j: usize, shift: usize) -> f64 {
    if j < shift {
        0.0
    } else {
        s.get(j - shift).copied().unwrap_or(0.0)
    }
}

/// G(λ). Errors with a domain error when λ ∉ Γ_{k−1}.
pub fn evaluate(lambda: &[f64], c: &Coefficients) -> Result<f64> {
    check_dims(lambda, c)?;
    let s = sigma_all(lambda);
    check_cone(&s, c.k)?;
    Ok(numerator(&s, c, 0) / s[c.k - 1])
}

/// G and ∂G/∂λ_i at a sorted spectrum.
pub fn value_and_gradient(spec: &Spectrum, c: &Coefficients) -> Result<(f64, Vec<f64>)> {
    check_dims(spec.values(), c)?;
    let s = spec.sigmas();
    check_cone(s, c.k)?;
    let k = c.k;
    let num = numerator(s, c, 0);
    let den = s[k - 1];
    let grad = (0..c.n)
        .map(|i| {
            // ∂σ_j/∂λ_i = σ_{j−1}(λ|i)
            let ex = spec.excl(i);
            let num_i = numerator(&ex, c, 1);
            let den_i = sig_at(&ex, k - 1, 1);
            (num_i * den - num * den_i) / (den * den)
        })
        .collect();
    Ok((num / den, grad))
}

/// ∂²G/∂λ_p∂λ_q (row-major n×n) at a sorted spectrum.
pub fn lambda_hessian(spec: &Spectrum, c: &Coefficients) -> Result<Vec<f64>> {
    check_dims(spec.values(), c)?;
    let s = spec.sigmas();
    check_cone(s, c.k)?;
    let (n, k) = (c.n, c.k);
    let lam = spec.values();
    let num = numerator(s, c, 0);
    let den = s[k - 1];
    let ex: Vec<Vec<f64>> = (0..n).map(|i| spec.excl(i)).collect();
    let num_d: Vec<f64> = ex.iter().map(|e| numerator(e, c, 1)).collect();
    let den_d: Vec<f64> = ex.iter().map(|e| sig_at(e, k - 1, 1)).collect();
    let mut h = vec![0.0; n * n];
    for p in 0..n {
        for q in 0..n {
            let (num_pq, den_pq) = if p == q {
                (0.0, 0.0)
            } else {
                let e2 = sigma_excl2_all(lam, p, q);
                (numerator(&e2, c, 2), sig_at(&e2, k - 1, 2))
            };
            h[p * n + q] = num_pq / den
                - (num_d[p] * den_d[q] + num_d[q] * den_d[p]) / (den * den)
                - num * den_pq / (den * den)
                + 2.0 * num * den_d[p] * den_d[q] / (den * den * den);
        }
    }
    Ok(h)
}

/// Value, λ-gradient, matrix gradient and σ-quotients of G at a matrix.
#[derive(Clone, Debug)]
pub struct OperatorEval {
    pub value: f64,
    /// f_i, aligned with the ascending eigenvalues in `spectrum`.
    pub grad_lambda: Vec<f64>,
    /// G^{ij̄} in the trace-pairing convention of [`crate::spectral`].
    pub grad_matrix: HermitianMatrix,
    /// σ_l/σ_{k−1} for l = 0..=k.
    pub quotients: Vec<f64>,
    pub spectrum: Spectrum,
}

pub fn evaluate_full(a: &HermitianMatrix, c: &Coefficients) -> Result<OperatorEval> {
    if a.dim() != c.n {
        return Err(HmixError::Argument(format!(
            "matrix of order {} with coefficients for n = {}",
            a.dim(),
            c.n
        )));
    }
    let eig = eig_hermitian(a)?;
    let (value, grad_lambda) = value_and_gradient(&eig.lambda, c)?;
    let grad_matrix = matrix_gradient(&grad_lambda, &eig)?;
    let s = eig.lambda.sigmas();
    let quotients = (0..=c.k).map(|l| s[l] / s[c.k - 1]).collect();
    Ok(OperatorEval { value, grad_lambda, grad_matrix, quotients, spectrum: eig.lambda })
}

/// Concavity support inequality at λ tested against μ:
/// Σ f_i(λ) μ_i ≥ G(μ) + Σ_{l≤k−2} (k−l) β_l σ_l(λ)/σ_{k−1}(λ).
pub fn concavity_inequality_check(lambda: &[f64], mu: &[f64], c: &Coefficients) -> Result<bool> {
    let (lhs, rhs) = concavity_sides(lambda, mu, c)?;
    Ok(lhs >= rhs - 1e-10 * (1.0 + lhs.abs().max(rhs.abs())))
}

/// Both sides of [`concavity_inequality_check`]; the spectra are aligned by
/// sorting both vectors ascending.
pub fn concavity_sides(lambda: &[f64], mu: &[f64], c: &Coefficients) -> Result<(f64, f64)> {
    check_dims(mu, c)?;
    let spec = Spectrum::new(lambda.to_vec())?;
    let (_, grad) = value_and_gradient(&spec, c)?;
    // f_i(λ) pairs with μ_i in the same coordinate slot: sort μ by the permutation that sorted λ
    let mut idx: Vec<usize> = (0..lambda.len()).collect();
    idx.sort_by(|&a, &b| lambda[a].partial_cmp(&lambda[b]).unwrap());
    let lhs: f64 = idx.iter().zip(&grad).map(|(&i, g)| g * mu[i]).sum();
    let f_mu = evaluate(mu, c)?;
    let s = spec.sigmas();
    let euler_extra: f64 = c
        .beta_l
        .iter()
        .enumerate()
        .map(|(l, b)| (c.k - l) as f64 * b * s[l] / s[c.k - 1])
        .sum();
    Ok((lhs, f_mu + euler_extra))
}

/// Runtime checks of the a priori algebraic bounds at an equation point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConeBoundsReport {
    /// σ_l/σ_{k−1} for l = 0..=k−2.
    pub lower_quotients: Vec<f64>,
    /// All lower quotients positive, finite and below [`QUOTIENT_CAP`].
    pub lower_quotients_ok: bool,
    /// σ_k/σ_{k−1}.
    pub top_quotient: f64,
    /// −|β| < σ_k/σ_{k−1} < QUOTIENT_CAP.
    pub top_quotient_ok: bool,
    /// Σ_i G^{iī}.
    pub trace: f64,
    /// (n−k+1)/k.
    pub trace_lower_bound: f64,
    /// n−k−1 + (n−k+2)·β·σ_{k−2}/σ_{k−1}, recorded only.
    pub trace_upper_expression: f64,
    pub trace_ok: bool,
    /// Σ_i G^{iī} λ_i.
    pub euler_lhs: f64,
    /// β + Σ (k−l) β_l σ_l/σ_{k−1}.
    pub euler_rhs: f64,
    pub euler_ok: bool,
}

impl ConeBoundsReport {
    pub fn all_ok(&self) -> bool {
        self.lower_quotients_ok && self.top_quotient_ok && self.trace_ok && self.euler_ok
    }
}

pub fn cone_bounds_report(lambda: &[f64], c: &Coefficients) -> Result<ConeBoundsReport> {
    let spec = Spectrum::new(lambda.to_vec())?;
    let (value, grad) = value_and_gradient(&spec, c)?;
    if !((value - c.beta).abs() <= 1e-8 * (1.0 + c.beta.abs())) {
        return Err(HmixError::Precondition(format!(
            "equation residual {:e} too large for bound checks",
            value - c.beta
        )));
    }
    let (n, k) = (c.n, c.k);
    let s = spec.sigmas();
    let lower_quotients: Vec<f64> = (0..=k - 2).map(|l| s[l] / s[k - 1]).collect();
    let lower_quotients_ok = lower_quotients.iter().all(|&q| q > 0.0 && q.is_finite() && q < QUOTIENT_CAP);
    let top_quotient = s[k] / s[k - 1];
    let top_quotient_ok = top_quotient > -c.beta.abs() - 1e-12 * (1.0 + c.beta.abs())
        && top_quotient.is_finite()
        && top_quotient < QUOTIENT_CAP;
    let trace: f64 = grad.iter().sum();
    let trace_lower_bound = (n - k + 1) as f64 / k as f64;
    let trace_upper_expression =
        n as f64 - k as f64 - 1.0 + (n - k + 2) as f64 * lower_quotients[k - 2] * c.beta;
    let trace_ok = trace.is_finite() && trace >= trace_lower_bound * (1.0 - 1e-12);
    let euler_lhs: f64 = grad.iter().zip(spec.values()).map(|(g, l)| g * l).sum();
    let euler_rhs = c.beta
        + c.beta_l
            .iter()
            .enumerate()
            .map(|(l, b)| (k - l) as f64 * b * lower_quotients[l])
            .sum::<f64>();
    let euler_ok = euler_lhs.is_finite()
        && (euler_lhs - euler_rhs).abs() <= 1e-10 * (1.0 + euler_rhs.abs().max(euler_lhs.abs()));
    Ok(ConeBoundsReport {
        lower_quotients,
        lower_quotients_ok,
        top_quotient,
        top_quotient_ok,
        trace,
        trace_lower_bound,
        trace_upper_expression,
        trace_ok,
        euler_lhs,
        euler_rhs,
        euler_ok,
    })
}

/// Outcome of the subsolution dichotomy at one point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dichotomy {
    /// Σ f_i(λ)(μ_i − λ_i) ≥ θ + θ Σ f_i(λ).
    FirstBranch,
    /// f_max · λ_max ≥ θ.
    SecondBranch,
    /// λ_max < N, the dichotomy makes no claim.
    NotApplicable,
    /// Neither branch at this (θ, N): a calibration failure, not a panic.
    Neither,
}

/// Strict subsolution condition on μ at every restricted slot i:
/// σ_{k−1}(μ|i)/σ_{k−2}(μ|i) − Σ_{l=1}^{k−2} β_l σ_{l−1}(μ|i)/σ_{k−2}(μ|i) > β.
pub fn strict_subsolution_margin(mu: &[f64], c: &Coefficients) -> Result<f64> {
    check_dims(mu, c)?;
    let s = sigma_all(mu);
    check_cone(&s, c.k)?;
    let k = c.k;
    let mut worst = f64::INFINITY;
    for i in 0..c.n {
        let ex = sigma_excl_all_with(mu, &s, i);
        let den = ex[k - 2];
        if !(den > 0.0) {
            return Err(HmixError::Domain(format!("σ_{}(μ|{i}) is not positive", k - 2)));
        }
        let mut val = ex[k - 1] / den;
        for l in 1..=k - 2 {
            val -= c.beta_l[l] * ex[l - 1] / den;
        }
        worst = worst.min(val - c.beta);
    }
    Ok(worst)
}

pub fn subsolution_dichotomy_check(
    lambda: &[f64],
    mu: &[f64],
    c: &Coefficients,
    theta: f64,
    big_n: f64,
) -> Result<Dichotomy> {
    if !(strict_subsolution_margin(mu, c)? > 0.0) {
        return Err(HmixError::Argument("μ violates the strict subsolution condition".into()));
    }
    let value = evaluate(lambda, c)?;
    if !((value - c.beta).abs() <= 1e-8 * (1.0 + c.beta.abs())) {
        return Err(HmixError::Argument(format!(
            "λ does not solve the equation (residual {:e})",
            value - c.beta
        )));
    }
    let spec = Spectrum::new(lambda.to_vec())?;
    if spec.max() < big_n {
        return Ok(Dichotomy::NotApplicable);
    }
    let (_, grad) = value_and_gradient(&spec, c)?;
    let mut idx: Vec<usize> = (0..lambda.len()).collect();
    idx.sort_by(|&a, &b| lambda[a].partial_cmp(&lambda[b]).unwrap());
    let lam = spec.values();
    let pair: f64 = idx
        .iter()
        .enumerate()
        .map(|(j, &i)| grad[j] * (mu[i] - lam[j]))
        .sum();
    let gsum: f64 = grad.iter().sum();
    if pair >= theta + theta * gsum {
        return Ok(Dichotomy::FirstBranch);
    }
    let n = lam.len();
    if grad[n - 1] * lam[n - 1] >= theta {
        return Ok(Dichotomy::SecondBranch);
    }
    Ok(Dichotomy::Neither)
}
