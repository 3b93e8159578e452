//! Damped Newton for the discrete equation at fixed homotopy parameter,
//! driven by the continuity method
//!
//! G(χ_{u_t}) = tβ + (1−t)G(χ_ū),  t: 0 → 1,
//!
//! with an admissibility-preserving backtracking line search and adaptive
//! t-steps.

use log::{debug, info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HmixError, Result};
use crate::geometry::{chi_u, linearized_interior, GridFunction, HermitianField};
use crate::linalg::{self, LinearMethod};
use crate::operator::{evaluate_full, OperatorEval};
use crate::problems::{c0_sandwich_check, ProblemSpec, SandwichReport};
use crate::spectral::eig_hermitian;
use crate::symfun::{binomial, Spectrum};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// residual sup-norm for Newton convergence
    pub newton_tol: f64,
    pub max_newton: usize,
    /// backtracking factor
    pub damping: f64,
    pub min_step: f64,
    pub t_step0: f64,
    pub t_min_step: f64,
    /// relative residual of each linear solve
    pub linear_tol: f64,
    pub cone_margin: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            newton_tol: 1e-10,
            max_newton: 30,
            damping: 0.5,
            min_step: 1e-6,
            t_step0: 0.25,
            t_min_step: 1e-4,
            linear_tol: 1e-12,
            cone_margin: 1e-10,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("newton_tol", self.newton_tol),
            ("min_step", self.min_step),
            ("t_step0", self.t_step0),
            ("t_min_step", self.t_min_step),
            ("linear_tol", self.linear_tol),
            ("cone_margin", self.cone_margin),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(HmixError::Config(format!("solver setting {name} = {v} must be positive")));
        }
        if self.max_newton == 0 {
            return Err(HmixError::Config("max_newton must be positive".into()));
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(HmixError::Config(format!("damping = {} must lie in (0, 1)", self.damping)));
        }
        if self.t_step0 > 1.0 || self.t_min_step > self.t_step0 {
            return Err(HmixError::Config("need t_min_step <= t_step0 <= 1".into()));
        }
        if self.linear_tol >= self.newton_tol {
            return Err(HmixError::Config("linear_tol must be smaller than newton_tol".into()));
        }
        Ok(())
    }
}

/// One attempted t-step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub dt: f64,
    pub accepted: bool,
    pub iterations: usize,
    /// residual sup-norm before the first and after every Newton update
    pub residuals: Vec<f64>,
    /// accepted line-search step per Newton update
    pub line_steps: Vec<f64>,
    pub linear_iterations: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl StepRecord {
    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(f64::NAN)
    }
}

#[derive(Clone, Debug)]
pub struct HomotopyState {
    pub t: f64,
    pub u: GridFunction,
    pub residual_inf: f64,
    pub newton_iters: usize,
    pub step_history: Vec<StepRecord>,
}

/// min_{1≤j≤k−1} σ_j(λ)/(C(n,j) s^j) with s = max(1, max|λ|).
pub fn cone_margin(spec: &Spectrum, k: usize) -> f64 {
    let n = spec.dim();
    let s = spec.values().iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    (1..k)
        .map(|j| spec.sigma(j) / (binomial(n, j) * s.powi(j as i32)))
        .fold(f64::INFINITY, f64::min)
}

/// Pointwise G(χ_u) with its matrix gradient, checked against the cone margin.
struct Evaluation {
    evals: Vec<OperatorEval>,
    min_margin: f64,
}

fn evaluate_field(u: &GridFunction, spec: &ProblemSpec, eps: f64) -> Result<Evaluation> {
    let chi = chi_u(u, &spec.chi0)?;
    let results: Vec<Result<(OperatorEval, f64)>> = chi
        .mats
        .par_iter()
        .enumerate()
        .map(|(p, a)| {
            let c = spec.coefficients(p);
            let ev = evaluate_full(a, &c)?;
            let m = cone_margin(&ev.spectrum, spec.k);
            Ok((ev, m))
        })
        .collect();
    let mut evals = Vec::with_capacity(results.len());
    let mut bad = Vec::new();
    let mut min_margin = f64::INFINITY;
    for (p, r) in results.into_iter().enumerate() {
        match r {
            Ok((ev, m)) => {
                min_margin = min_margin.min(m);
                if !(m > eps) {
                    bad.push(spec.grid.interior()[p]);
                }
                evals.push(ev);
            }
            Err(_) => {
                min_margin = f64::NEG_INFINITY;
                bad.push(spec.grid.interior()[p]);
            }
        }
    }
    if !bad.is_empty() {
        return Err(HmixError::ConeViolation { points: bad, worst: min_margin });
    }
    Ok(Evaluation { evals, min_margin })
}

/// Fixed data of a homotopy: G(χ_ū) at each interior point.
#[derive(Clone, Debug)]
pub struct Homotopy<'a> {
    pub spec: &'a ProblemSpec,
    pub g_sub: Vec<f64>,
    pub config: SolverConfig,
}

impl<'a> Homotopy<'a> {
    pub fn new(spec: &'a ProblemSpec, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        spec.verify()?;
        let ev = evaluate_field(&spec.usub, spec, config.cone_margin).map_err(|e| match e {
            HmixError::ConeViolation { points, worst } => HmixError::Precondition(format!(
                "subsolution violates the cone margin at {} points (worst {worst:e})",
                points.len()
            )),
            other => other,
        })?;
        let g_sub = ev.evals.iter().map(|e| e.value).collect();
        Ok(Homotopy { spec, g_sub, config })
    }

    /// tβ + (1−t)G(χ_ū) at interior point p.
    pub fn target(&self, p: usize, t: f64) -> f64 {
        t * self.spec.coeffs.beta[p] + (1.0 - t) * self.g_sub[p]
    }

    fn residual_from(&self, ev: &Evaluation, t: f64) -> Vec<f64> {
        ev.evals.iter().enumerate().map(|(p, e)| e.value - self.target(p, t)).collect()
    }

    /// Residual on the full grid; boundary entries are u − φ.
    pub fn residual(&self, u: &GridFunction, t: f64) -> Result<GridFunction> {
        let ev = evaluate_field(u, self.spec, self.config.cone_margin)?;
        let r = self.residual_from(&ev, t);
        let mut out = u.clone();
        for i in self.spec.grid.boundary() {
            out.values[i] = u.values[i] - self.spec.phi.values[i];
        }
        for (p, &idx) in self.spec.grid.interior().iter().enumerate() {
            out.values[idx] = r[p];
        }
        Ok(out)
    }

    /// Damped Newton iteration at fixed t, starting from `u`.
    pub fn newton(&self, u: &GridFunction, t: f64) -> (Result<GridFunction>, StepRecord) {
        let mut rec = StepRecord {
            t,
            dt: 0.0,
            accepted: false,
            iterations: 0,
            residuals: Vec::new(),
            line_steps: Vec::new(),
            linear_iterations: Vec::new(),
            failure: None,
        };
        let out = self.newton_inner(u, t, &mut rec);
        if let Err(e) = &out {
            rec.failure = Some(e.to_string());
        }
        (out, rec)
    }

    fn newton_inner(&self, u0: &GridFunction, t: f64, rec: &mut StepRecord) -> Result<GridFunction> {
        let cfg = &self.config;
        let grid = &self.spec.grid;
        let mut u = u0.clone();
        let mut ev = evaluate_field(&u, self.spec, cfg.cone_margin)?;
        let mut r = self.residual_from(&ev, t);
        let mut rnorm = sup(&r);
        rec.residuals.push(rnorm);
        while rnorm > cfg.newton_tol {
            if rec.iterations >= cfg.max_newton {
                return Err(HmixError::NewtonStall { t, residual: rnorm, iterations: rec.iterations });
            }
            let coeff = HermitianField::new(
                grid.clone(),
                ev.evals.iter().map(|e| e.grad_matrix.clone()).collect(),
            )?;
            let (jac, _) = linearized_interior(&coeff)?;
            let rhs: Vec<f64> = r.iter().map(|x| -x).collect();
            let (delta, info) = linalg::solve(&jac, &rhs, cfg.linear_tol)?;
            if info.method == LinearMethod::GmresIlu0 {
                debug!("gmres: {} iterations, rel {:.2e}", info.iterations, info.relative_residual);
            }
            rec.linear_iterations.push(info.iterations);
            rec.iterations += 1;

            let mut s = 1.0;
            let accepted = loop {
                if s < cfg.min_step {
                    break None;
                }
                let mut trial = u.clone();
                for (p, &idx) in grid.interior().iter().enumerate() {
                    trial.values[idx] += s * delta[p];
                }
                if let Ok(tev) = evaluate_field(&trial, self.spec, cfg.cone_margin) {
                    let tr = self.residual_from(&tev, t);
                    let tn = sup(&tr);
                    if tn <= (1.0 - s / 4.0) * rnorm {
                        break Some((trial, tev, tr, tn));
                    }
                }
                s *= cfg.damping;
            };
            match accepted {
                Some((nu, nev, nr, nn)) => {
                    debug!("t = {t:.4}: newton {} residual {nn:.3e} (s = {s})", rec.iterations);
                    u = nu;
                    ev = nev;
                    r = nr;
                    rnorm = nn;
                    rec.residuals.push(rnorm);
                    rec.line_steps.push(s);
                }
                None => {
                    return Err(HmixError::NewtonStall { t, residual: rnorm, iterations: rec.iterations });
                }
            }
        }
        Ok(u)
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Residual of the homotopy equation at (u, t), full grid.
pub fn residual(u: &GridFunction, spec: &ProblemSpec, t: f64) -> Result<GridFunction> {
    Homotopy::new(spec, SolverConfig::default())?.residual(u, t)
}

/// Newton solve at fixed t from the state's u; the state is updated in place.
pub fn newton_step(state: &mut HomotopyState, spec: &ProblemSpec, t: f64, config: &SolverConfig) -> Result<()> {
    let h = Homotopy::new(spec, config.clone())?;
    let (out, rec) = h.newton(&state.u, t);
    state.newton_iters += rec.iterations;
    let residual = rec.final_residual();
    state.step_history.push(rec);
    let u = out?;
    state.u = u;
    state.t = t;
    state.residual_inf = residual;
    Ok(())
}

/// Audits recorded over a continuity solve.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub t_final: f64,
    pub total_newton_iterations: usize,
    pub final_residual: f64,
    pub steps: Vec<StepRecord>,
    /// smallest normalized cone margin over every accepted state
    pub min_cone_margin: f64,
    /// residuals never increased within an accepted Newton sequence
    pub residual_monotone: bool,
    /// min over accepted states of (u − ū)
    pub min_above_subsolution: f64,
    pub subsolution_below_ok: bool,
    pub sandwich: SandwichReport,
    pub max_linear_iterations: usize,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub u: GridFunction,
    pub report: SolveReport,
}

/// Continuity method from t = 0, u = ū to t = 1.
pub fn continuity_solve(spec: &ProblemSpec, config: &SolverConfig) -> Result<Solution> {
    let h = Homotopy::new(spec, config.clone())?;
    let tol_below = crate::problems::sandwich_tolerance(&spec.grid);
    let mut state = HomotopyState {
        t: 0.0,
        u: spec.usub.clone(),
        residual_inf: 0.0,
        newton_iters: 0,
        step_history: Vec::new(),
    };
    let mut min_cone = evaluate_field(&state.u, spec, config.cone_margin)?.min_margin;
    let mut min_above = 0.0_f64;
    let mut below_ok = true;
    let mut dt = config.t_step0;
    while state.t < 1.0 {
        let t_try = if state.t + dt >= 1.0 - 1e-14 { 1.0 } else { state.t + dt };
        let (out, mut rec) = h.newton(&state.u, t_try);
        rec.dt = t_try - state.t;
        state.newton_iters += rec.iterations;
        match out {
            Ok(u) => {
                rec.accepted = true;
                let ev = evaluate_field(&u, spec, config.cone_margin)?;
                min_cone = min_cone.min(ev.min_margin);
                let above = u
                    .values
                    .iter()
                    .zip(&spec.usub.values)
                    .map(|(a, b)| a - b)
                    .fold(f64::INFINITY, f64::min);
                min_above = min_above.min(above);
                if above < -tol_below {
                    below_ok = false;
                    warn!("t = {t_try}: iterate dips below the subsolution by {:.3e}", -above);
                }
                info!("t = {t_try:.4} accepted after {} newton iterations", rec.iterations);
                state.residual_inf = rec.final_residual();
                state.t = t_try;
                state.u = u;
                state.step_history.push(rec);
                dt = (2.0 * dt).min(config.t_step0);
            }
            Err(e) => {
                warn!("t = {t_try:.4} rejected: {e}");
                state.step_history.push(rec);
                dt *= 0.5;
                if dt < config.t_min_step {
                    return Err(HmixError::HomotopyFailure { t: state.t, trace: state.step_history });
                }
            }
        }
    }
    let residual_monotone = state
        .step_history
        .iter()
        .filter(|r| r.accepted)
        .all(|r| r.residuals.windows(2).all(|w| w[1] <= w[0]));
    let sandwich = c0_sandwich_check(&state.u, spec)?;
    let max_linear_iterations = state
        .step_history
        .iter()
        .flat_map(|r| r.linear_iterations.iter().copied())
        .max()
        .unwrap_or(0);
    let report = SolveReport {
        t_final: state.t,
        total_newton_iterations: state.newton_iters,
        final_residual: state.residual_inf,
        steps: state.step_history,
        min_cone_margin: min_cone,
        residual_monotone,
        min_above_subsolution: min_above,
        subsolution_below_ok: below_ok,
        sandwich,
        max_linear_iterations,
    };
    Ok(Solution { u: state.u, report })
}

/// Larger right-hand side pushes the solution down: u1 ≤ u2 + tol everywhere.
pub fn monotonicity_audit(u1: &GridFunction, u2: &GridFunction, tol: f64) -> bool {
    monotonicity_excess(u1, u2) <= tol
}

/// max(u1 − u2); nonpositive when the ordering holds exactly.
pub fn monotonicity_excess(u1: &GridFunction, u2: &GridFunction) -> f64 {
    u1.values
        .iter()
        .zip(&u2.values)
        .map(|(a, b)| a - b)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Eigenvalues of χ_u at every interior point (for diagnostics).
pub fn spectra(u: &GridFunction, spec: &ProblemSpec) -> Result<Vec<Spectrum>> {
    let chi = chi_u(u, &spec.chi0)?;
    chi.mats.par_iter().map(|a| eig_hermitian(a).map(|e| e.lambda)).collect()
}
