//! Brute-force references that share only data types with the production
//! numerics: subset-enumeration σ_k, principal-minor σ_k(A), finite-difference
//! matrix gradients, a dense finite-difference Newton solve on tiny grids, and
//! the seeded property suites built on them.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HmixError, Result};
use crate::geometry::GridFunction;
use crate::operator::{self, Coefficients};
use crate::problems::ProblemSpec;
use crate::spectral::{self, HermitianMatrix};
use crate::symfun;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct OracleReport {
    pub suite: String,
    pub seed: u64,
    pub cases: usize,
    pub max_abs_err: f64,
    pub max_rel_err: f64,
    pub failures: Vec<String>,
    /// suite-specific measurements
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub details: serde_json::Map<String, serde_json::Value>,
}

impl OracleReport {
    pub fn new(suite: &str, seed: u64) -> Self {
        OracleReport { suite: suite.into(), seed, ..Default::default() }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn record(&mut self, abs: f64, rel: f64) {
        self.cases += 1;
        self.max_abs_err = self.max_abs_err.max(abs);
        self.max_rel_err = self.max_rel_err.max(rel);
    }

    fn fail(&mut self, what: String) {
        // keep reports bounded
        if self.failures.len() < 50 {
            self.failures.push(what);
        }
    }

    fn detail(&mut self, key: &str, v: impl Serialize) {
        self.details.insert(key.into(), serde_json::to_value(v).expect("serializable"));
    }

    fn merge(&mut self, other: OracleReport) {
        self.cases += other.cases;
        self.max_abs_err = self.max_abs_err.max(other.max_abs_err);
        self.max_rel_err = self.max_rel_err.max(other.max_rel_err);
        for f in other.failures {
            self.fail(f);
        }
        self.details.extend(other.details);
    }
}

/// σ_k by summing the products of all k-subsets.
pub fn sigma_bruteforce(k: usize, lambda: &[f64]) -> Result<f64> {
    let n = lambda.len();
    if n > 12 {
        return Err(HmixError::Argument(format!("sigma_bruteforce supports n <= 12, got {n}")));
    }
    if k > n {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize == k {
            total += (0..n).filter(|i| mask >> i & 1 == 1).map(|i| lambda[i]).product::<f64>();
        }
    }
    Ok(total)
}

fn det_complex(mut m: Vec<Complex64>, n: usize) -> Complex64 {
    let mut det = Complex64::new(1.0, 0.0);
    for c in 0..n {
        let p = (c..n).max_by(|&a, &b| m[a * n + c].norm().partial_cmp(&m[b * n + c].norm()).unwrap()).unwrap();
        if m[p * n + c].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if p != c {
            for j in 0..n {
                m.swap(c * n + j, p * n + j);
            }
            det = -det;
        }
        let piv = m[c * n + c];
        det *= piv;
        for r in c + 1..n {
            let f = m[r * n + c] / piv;
            for j in c..n {
                let v = m[c * n + j];
                m[r * n + j] -= f * v;
            }
        }
    }
    det
}

/// σ_0..σ_n of the eigenvalues of A as sums of principal minors.
pub fn sigma_of_matrix(a: &HermitianMatrix) -> Vec<f64> {
    let n = a.dim();
    let mut s = vec![0.0; n + 1];
    s[0] = 1.0;
    for mask in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let m = idx.len();
        let sub: Vec<Complex64> = idx.iter().flat_map(|&i| idx.iter().map(move |&j| (i, j))).map(|(i, j)| a.get(i, j)).collect();
        s[m] += det_complex(sub, m).re;
    }
    s
}

/// G(A) from principal minors; None outside Γ_{k−1}.
pub fn operator_from_minors(a: &HermitianMatrix, c: &Coefficients) -> Option<f64> {
    let s = sigma_of_matrix(a);
    if (1..c.k).any(|j| !(s[j] > 0.0)) {
        return None;
    }
    let mut num = s[c.k];
    for (l, b) in c.beta_l.iter().enumerate() {
        num -= b * s[l];
    }
    Some(num / s[c.k - 1])
}

/// Extrapolated central differences of G along the n² real Hermitian basis directions,
/// assembled into M with dG = Re Σ M_ij conj(E_ij).
pub fn fd_matrix_gradient(c: &Coefficients, a: &HermitianMatrix, step: f64) -> Result<HermitianMatrix> {
    let n = a.dim();
    let mut m = vec![Complex64::new(0.0, 0.0); n * n];
    let eval = |e: &[Complex64], t: f64| -> Result<f64> {
        let data: Vec<Complex64> = a.as_slice().iter().zip(e).map(|(x, y)| x + y * t).collect();
        let b = HermitianMatrix::from_raw_symmetrized(n, data);
        operator_from_minors(&b, c).ok_or_else(|| HmixError::Domain("admissibility lost under perturbation".into()))
    };
    let central = |e: &[Complex64], h: f64| -> Result<f64> { Ok((eval(e, h)? - eval(e, -h)?) / (2.0 * h)) };
    // Richardson combination of steps h and h/2: O(h⁴)
    let diff = |e: &[Complex64]| -> Result<f64> {
        let coarse = central(e, step)?;
        let fine = central(e, 0.5 * step)?;
        Ok((4.0 * fine - coarse) / 3.0)
    };
    for i in 0..n {
        for j in i..n {
            let mut e = vec![Complex64::new(0.0, 0.0); n * n];
            if i == j {
                e[i * n + i] = Complex64::new(1.0, 0.0);
                m[i * n + i] = Complex64::new(diff(&e)?, 0.0);
                continue;
            }
            e[i * n + j] = Complex64::new(1.0, 0.0);
            e[j * n + i] = Complex64::new(1.0, 0.0);
            let d_re = diff(&e)?;
            e[i * n + j] = Complex64::new(0.0, 1.0);
            e[j * n + i] = Complex64::new(0.0, -1.0);
            let d_im = diff(&e)?;
            m[i * n + j] = Complex64::new(d_re / 2.0, d_im / 2.0);
            m[j * n + i] = m[i * n + j].conj();
        }
    }
    Ok(HermitianMatrix::from_raw_symmetrized(n, m))
}

/// Complex Hessian at an interior point straight from the grid values.
fn oracle_complex_hessian(u: &GridFunction, idx: usize) -> Vec<Complex64> {
    let g = &u.grid;
    let n = g.n;
    let d = 2 * n;
    let mut stride = vec![1usize; d];
    for a in (0..d - 1).rev() {
        stride[a] = stride[a + 1] * g.shape[a + 1];
    }
    let v = |off: isize| u.values[(idx as isize + off) as usize];
    let second = |a: usize, b: usize| -> f64 {
        let (sa, sb) = (stride[a] as isize, stride[b] as isize);
        if a == b {
            (v(sa) - 2.0 * v(0) + v(-sa)) / (g.h[a] * g.h[a])
        } else {
            (v(sa + sb) - v(sa - sb) - v(-sa + sb) + v(-sa - sb)) / (4.0 * g.h[a] * g.h[b])
        }
    };
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            let re = second(i, j) + second(n + i, n + j);
            let im = second(i, n + j) - second(n + i, j);
            out[i * n + j] = Complex64::new(re, im) / 4.0;
        }
    }
    out
}

fn oracle_residual(u: &GridFunction, spec: &ProblemSpec) -> Option<Vec<f64>> {
    let n = spec.grid.n;
    spec.grid
        .interior()
        .iter()
        .enumerate()
        .map(|(p, &idx)| {
            let h = oracle_complex_hessian(u, idx);
            let data: Vec<Complex64> = spec.chi0.mats[p].as_slice().iter().zip(&h).map(|(a, b)| a + b).collect();
            let a = HermitianMatrix::from_raw_symmetrized(n, data);
            let c = spec.coefficients(p);
            operator_from_minors(&a, &c).map(|g| g - c.beta)
        })
        .collect()
}

fn dense_solve(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| a[x * n + c].abs().partial_cmp(&a[y * n + c].abs()).unwrap())?;
        if a[p * n + c] == 0.0 {
            return None;
        }
        if p != c {
            for j in 0..n {
                a.swap(c * n + j, p * n + j);
            }
            b.swap(c, p);
        }
        for r in c + 1..n {
            let f = a[r * n + c] / a[c * n + c];
            if f != 0.0 {
                for j in c..n {
                    a[r * n + j] -= f * a[c * n + j];
                }
                b[r] -= f * b[c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|j| a[r * n + j] * x[j]).sum();
        x[r] = (b[r] - s) / a[r * n + r];
    }
    Some(x)
}

/// Solves G(χ_u) = β at t = 1 directly by Newton with a dense
/// finite-difference Jacobian, starting from the subsolution.
pub fn tiny_solve_bruteforce(spec: &ProblemSpec, tol: f64) -> Result<GridFunction> {
    let interior = spec.grid.interior().to_vec();
    let m = interior.len();
    if m > 1000 {
        return Err(HmixError::Argument(format!("tiny_solve_bruteforce supports <= 1000 unknowns, got {m}")));
    }
    let mut u = spec.usub.clone();
    let inadmissible = || HmixError::Domain("oracle iterate left the admissible cone".into());
    let mut r = oracle_residual(&u, spec).ok_or_else(inadmissible)?;
    // G(χ_ū) ≥ β, checked independently of the problem module
    if let Some(p) = r.iter().position(|x| *x < -1e-10) {
        return Err(HmixError::Precondition(format!(
            "start is not a subsolution at interior point {p} (G − β = {:e})",
            r[p]
        )));
    }
    let norm = |v: &[f64]| v.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    let step = 1e-6 * spec.grid.h_max();
    for iter in 0..500 {
        let rn = norm(&r);
        if rn <= tol {
            return Ok(u);
        }
        let mut jac = vec![0.0; m * m];
        for (col, &idx) in interior.iter().enumerate() {
            let mut up = u.clone();
            let mut dn = u.clone();
            up.values[idx] += step;
            dn.values[idx] -= step;
            let rp = oracle_residual(&up, spec).ok_or_else(inadmissible)?;
            let rm = oracle_residual(&dn, spec).ok_or_else(inadmissible)?;
            for row in 0..m {
                jac[row * m + col] = (rp[row] - rm[row]) / (2.0 * step);
            }
        }
        let delta = dense_solve(jac, r.iter().map(|x| -x).collect(), m)
            .ok_or_else(|| HmixError::Domain("singular finite-difference Jacobian".into()))?;
        let mut s = 1.0;
        loop {
            let mut trial = u.clone();
            for (p, &idx) in interior.iter().enumerate() {
                trial.values[idx] += s * delta[p];
            }
            if let Some(tr) = oracle_residual(&trial, spec) {
                if norm(&tr) < rn {
                    u = trial;
                    r = tr;
                    break;
                }
            }
            s *= 0.5;
            if s < 1e-8 {
                return Err(HmixError::NewtonStall { t: 1.0, residual: rn, iterations: iter });
            }
        }
    }
    Err(HmixError::NewtonStall { t: 1.0, residual: norm(&r), iterations: 500 })
}

/// Fixed-seed generator used by every suite.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()
}

/// Rejection sample from Γ_k: positive shift plus noise.
pub fn sample_cone(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<f64> {
    loop {
        let shift = rng.random_range(0.0..1.5);
        let v: Vec<f64> = (0..n).map(|_| shift + rng.random_range(-1.0..1.0)).collect();
        if symfun::cone_membership(&v).contains(k) {
            return v;
        }
    }
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> HermitianMatrix {
    let mut data = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        data[i * n + i] = Complex64::new(scale * rng.random_range(-1.0..1.0), 0.0);
        for j in i + 1..n {
            let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale;
            data[i * n + j] = z;
            data[j * n + i] = z.conj();
        }
    }
    HermitianMatrix::from_raw_symmetrized(n, data)
}

fn random_coefficients(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Coefficients {
    let beta_l = (0..k - 1).map(|_| rng.random_range(0.05..1.5)).collect();
    Coefficients { n, k, beta_l, beta: 0.0 }
}

/// Admissible matrix with eigenvalue gaps ≥ `min_gap`, built as U diag(λ) U*
/// from a random unitary obtained by eigendecomposing a random Hermitian.
fn random_admissible_matrix(rng: &mut ChaCha8Rng, n: usize, k: usize, min_gap: f64) -> HermitianMatrix {
    loop {
        let lam = sample_cone(rng, n, k - 1);
        let mut sorted = lam.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if sorted.windows(2).any(|w| w[1] - w[0] < min_gap) {
            continue;
        }
        let q = random_hermitian(rng, n, 1.0);
        let e = spectral::eig_hermitian(&q).expect("random Hermitian");
        return e.compose(&lam);
    }
}

/// Symmetric functions against subset enumeration, n = 2..8.
///
/// Positive vectors are held to plain relative error. Mixed-sign vectors can
/// cancel to values far below the rounding of either summation order, so
/// their error is measured against σ_k(|λ|).
pub fn suite_symfun(seed: u64, samples: usize) -> OracleReport {
    let mut rep = OracleReport::new("symfun", seed);
    let mut g = rng(seed);
    let mut worst_plain_positive = 0.0_f64;
    let mut worst_plain_mixed = 0.0_f64;
    for n in 2..=8 {
        for positive in [true, false] {
            for _ in 0..samples {
                let v: Vec<f64> = if positive {
                    (0..n).map(|_| g.random_range(0.0..2.0)).collect()
                } else {
                    random_vector(&mut g, n)
                };
                let fast = symfun::sigma_all(&v);
                let abs_v: Vec<f64> = v.iter().map(|x| x.abs()).collect();
                for k in 0..=n {
                    let slow = sigma_bruteforce(k, &v).unwrap();
                    let abs = (fast[k] - slow).abs();
                    let plain = abs / slow.abs().max(f64::MIN_POSITIVE);
                    let rel = if positive {
                        worst_plain_positive = worst_plain_positive.max(plain);
                        plain
                    } else {
                        worst_plain_mixed = worst_plain_mixed.max(plain);
                        abs / sigma_bruteforce(k, &abs_v).unwrap().max(f64::MIN_POSITIVE)
                    };
                    rep.record(abs, rel);
                    if rel > 1e-12 {
                        rep.fail(format!("sigma_{k}({v:?}) = {} vs {slow}", fast[k]));
                    }
                }
            }
        }
    }
    rep.detail("max_plain_rel_err_positive", worst_plain_positive);
    rep.detail("max_plain_rel_err_mixed", worst_plain_mixed);
    rep
}

/// Newton–MacLaurin on Γ_k samples for every admissible tuple, n ≤ 6.
pub fn suite_newton_maclaurin(seed: u64, samples: usize) -> OracleReport {
    let mut rep = OracleReport::new("newton_maclaurin", seed);
    let mut g = rng(seed);
    let mut worst_slack = f64::INFINITY;
    for n in 2..=6 {
        for (k, l, r, s) in symfun::newton_maclaurin_tuples(n) {
            for _ in 0..samples {
                let v = sample_cone(&mut g, n, k);
                let nm = symfun::newton_maclaurin(&v, k, l, r, s).unwrap();
                let slack = (nm.rhs - nm.lhs) / nm.rhs.abs().max(1.0);
                worst_slack = worst_slack.min(slack);
                rep.cases += 1;
                if slack < -1e-12 {
                    rep.fail(format!("({k},{l},{r},{s}) at {v:?}: {} > {}", nm.lhs, nm.rhs));
                }
            }
        }
    }
    rep.detail("worst_slack", worst_slack);
    rep
}

/// Eigen reconstruction and Cauchy interlacing on random Hermitian matrices.
pub fn suite_spectral(seed: u64, samples: usize) -> OracleReport {
    let mut rep = OracleReport::new("spectral", seed);
    let mut g = rng(seed);
    for i in 0..samples {
        let n = 2 + i % 5;
        let scale = 10f64.powf(g.random_range(-2.0..2.0));
        let a = random_hermitian(&mut g, n, scale);
        match spectral::eig_hermitian(&a) {
            Ok(e) => {
                let back = e.compose(e.lambda.values());
                let err = a
                    .as_slice()
                    .iter()
                    .zip(back.as_slice())
                    .map(|(x, y)| (x - y).norm())
                    .fold(0.0, f64::max);
                let rel = err / a.frobenius();
                rep.record(err, rel);
                if rel > 1e-12 {
                    rep.fail(format!("reconstruction error {rel:e} at n = {n}"));
                }
                // σ_j of the spectrum against principal minors
                let sm = sigma_of_matrix(&a);
                for j in 1..=n {
                    let d = (sm[j] - e.lambda.sigma(j)).abs();
                    let sc = symfun::sigma(j, &e.lambda.values().iter().map(|x| x.abs()).collect::<Vec<_>>()).unwrap();
                    if d > 1e-10 * sc.max(f64::MIN_POSITIVE) {
                        rep.fail(format!("σ_{j} of eigenvalues differs from minors by {d:e}"));
                    }
                }
            }
            Err(e) => rep.fail(format!("eig failed: {e}")),
        }
        match spectral::interlacing_check(&a) {
            Ok(true) => {}
            Ok(false) => rep.fail(format!("interlacing violated at n = {n}")),
            Err(e) => rep.fail(format!("interlacing check failed: {e}")),
        }
    }
    rep
}

/// Interlacing only, n ≤ 6.
pub fn suite_interlacing(seed: u64, samples: usize) -> OracleReport {
    let mut rep = OracleReport::new("interlacing", seed);
    let mut g = rng(seed);
    for i in 0..samples {
        let n = 2 + i % 5;
        let scale = 10f64.powf(g.random_range(-2.0..2.0));
        let a = random_hermitian(&mut g, n, scale);
        rep.cases += 1;
        if !spectral::interlacing_check(&a).unwrap_or(false) {
            rep.fail(format!("interlacing violated for {a:?}"));
        }
    }
    rep
}

/// Matrix gradient against finite differences of the principal-minor form.
pub fn suite_linearization(seed: u64, samples: usize) -> OracleReport {
    let mut rep = OracleReport::new("linearization", seed);
    let mut g = rng(seed);
    let mut done = 0;
    while done < samples {
        let n = 2 + done % 4;
        let k = g.random_range(2..=n);
        let c = random_coefficients(&mut g, n, k);
        let a = random_admissible_matrix(&mut g, n, k, 1e-3);
        let s = sigma_of_matrix(&a);
        if (1..k).any(|j| s[j] < 1e-3) {
            continue;
        }
        done += 1;
        let prod = operator::evaluate_full(&a, &c);
        let fd = fd_matrix_gradient(&c, &a, 1e-5);
        match (prod, fd) {
            (Ok(p), Ok(f)) => {
                let diff = p
                    .grad_matrix
                    .as_slice()
                    .iter()
                    .zip(f.as_slice())
                    .map(|(x, y)| (x - y).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                let rel = diff / f.frobenius().max(1e-300);
                rep.record(diff, rel);
                if rel > 1e-6 {
                    rep.fail(format!("n = {n}, k = {k}: relative gradient error {rel:e}"));
                }
            }
            (Err(e), _) | (_, Err(e)) => rep.fail(format!("evaluation failed: {e}")),
        }
    }
    rep
}

/// Midpoint concavity and f_i > 0 per (n, k).
pub fn suite_concavity(seed: u64, samples: usize) -> OracleReport {
    let mut rep = OracleReport::new("concavity", seed);
    let mut g = rng(seed);
    for (n, k) in [(2, 2), (3, 2), (3, 3), (4, 3)] {
        let mut violations = 0;
        for _ in 0..samples {
            let c = random_coefficients(&mut g, n, k);
            let x = sample_cone(&mut g, n, k - 1);
            let y = sample_cone(&mut g, n, k - 1);
            let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
            let (fx, fy, fm) = (
                operator::evaluate(&x, &c).unwrap(),
                operator::evaluate(&y, &c).unwrap(),
                operator::evaluate(&mid, &c).unwrap(),
            );
            let gap = 0.5 * (fx + fy) - fm;
            let scale = 1.0 + fx.abs().max(fy.abs());
            rep.cases += 1;
            if gap > 1e-12 * scale {
                violations += 1;
                rep.fail(format!("(n,k) = ({n},{k}): midpoint concavity fails by {gap:e}"));
            }
            let spec = symfun::Spectrum::new(x.clone()).unwrap();
            let (_, grad) = operator::value_and_gradient(&spec, &c).unwrap();
            if grad.iter().any(|f| !(*f > 0.0)) {
                violations += 1;
                rep.fail(format!("(n,k) = ({n},{k}): nonpositive f_i {grad:?} at {x:?}"));
            }
        }
        rep.detail(&format!("violations_n{n}_k{k}"), violations);
    }
    rep
}

/// Euler identity and the trace lower bound (n−k+1)/k with β := G(λ).
pub fn suite_cone_bounds(seed: u64, samples: usize) -> OracleReport {
    let mut rep = OracleReport::new("cone_bounds", seed);
    let mut g = rng(seed);
    for i in 0..samples {
        let n = 2 + i % 4;
        let k = g.random_range(2..=n);
        let c0 = random_coefficients(&mut g, n, k);
        let lam = sample_cone(&mut g, n, k - 1);
        let beta = operator::evaluate(&lam, &c0).unwrap();
        let c = c0.with_beta(beta);
        match operator::cone_bounds_report(&lam, &c) {
            Ok(r) => {
                let abs = (r.euler_lhs - r.euler_rhs).abs();
                rep.record(abs, abs / r.euler_rhs.abs().max(1.0));
                if abs > 1e-10 * r.euler_rhs.abs().max(1.0) {
                    rep.fail(format!("Euler identity off by {abs:e} at {lam:?}"));
                }
                if !r.trace_ok {
                    rep.fail(format!("trace {} below {} at {lam:?}", r.trace, r.trace_lower_bound));
                }
            }
            Err(e) => rep.fail(format!("cone_bounds_report failed: {e}")),
        }
    }
    rep
}

pub fn suite_operator(seed: u64, samples: usize) -> OracleReport {
    let mut rep = OracleReport::new("operator", seed);
    rep.merge(suite_linearization(seed, samples.min(500)));
    rep.merge(suite_concavity(seed.wrapping_add(1), samples));
    rep.merge(suite_cone_bounds(seed.wrapping_add(2), samples));
    rep
}

/// Observed order of max|u − u*| under refinement of the quartic
/// manufactured problem with a deflated subsolution.
pub fn suite_convergence(points: &[usize]) -> OracleReport {
    let mut rep = OracleReport::new("convergence", 0);
    let mut errors = Vec::new();
    let mut hs = Vec::new();
    for &pts in points {
        let cfg = crate::problems::presets::ci(pts);
        let solved = cfg.build(1).and_then(|b| {
            let mp = b.manufactured.expect("manufactured preset");
            crate::solver::continuity_solve(&b.spec, &Default::default()).map(|s| (s, mp))
        });
        match solved {
            Ok((sol, mp)) => {
                let err = sol.u.max_abs_diff(&mp.ustar);
                rep.cases += 1;
                rep.max_abs_err = rep.max_abs_err.max(err);
                if !sol.report.sandwich.ok {
                    rep.fail(format!("{pts} points: sandwich violated"));
                }
                hs.push(sol.u.grid.h_max());
                errors.push(err);
            }
            Err(e) => rep.fail(format!("{pts} points: {e}")),
        }
    }
    let orders: Vec<f64> = (1..errors.len())
        .map(|i| (errors[i - 1] / errors[i]).ln() / (hs[i - 1] / hs[i]).ln())
        .collect();
    if errors.len() == points.len() && points.len() >= 2 {
        let first = errors.len() - 1;
        let overall = (errors[0] / errors[first]).ln() / (hs[0] / hs[first]).ln();
        if !(1.8..=2.2).contains(&overall) {
            rep.fail(format!("observed order {overall:.3} outside [1.8, 2.2]"));
        }
        rep.detail("observed_order", overall);
    }
    rep.detail("points", points);
    rep.detail("h", &hs);
    rep.detail("errors", &errors);
    rep.detail("pairwise_orders", &orders);
    rep
}

pub const SUITES: [&str; 4] = ["symfun", "spectral", "operator", "convergence"];

/// Runs a named suite with fixed seed.
pub fn run_suite(name: &str, seed: u64) -> Result<OracleReport> {
    match name {
        "symfun" => {
            let mut rep = suite_symfun(seed, 1000);
            rep.merge(suite_newton_maclaurin(seed.wrapping_add(1), 200));
            rep.suite = "symfun".into();
            Ok(rep)
        }
        "spectral" => Ok(suite_spectral(seed, 1000)),
        "operator" => Ok(suite_operator(seed, 1000)),
        "convergence" => Ok(suite_convergence(&[9, 13, 17])),
        other => Err(HmixError::Argument(format!(
            "unknown suite '{other}' (expected one of {})",
            SUITES.join(", ")
        ))),
    }
}
