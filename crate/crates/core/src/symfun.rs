//! Elementary symmetric functions σ_k, their one-entry restrictions σ_k(λ|i),
//! Gårding cone membership and the generalized Newton–MacLaurin inequality.
//!
//! Eigenvalue vectors are kept in ascending order throughout the crate. Where
//! a statement is usually written for λ_1 ≥ … ≥ λ_n, read index `i` here as
//! index `n − 1 − i` there.

use serde::{Deserialize, Serialize};

use crate::error::{HmixError, Result};

/// Binomial coefficient C(n, k) as a float; zero when k > n.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc.round()
}

/// All of σ_0..σ_n via the incremental recurrence
/// σ_j(λ_1..λ_m) = σ_j(λ_1..λ_{m−1}) + λ_m σ_{j−1}(λ_1..λ_{m−1}).
pub fn sigma_all(lambda: &[f64]) -> Vec<f64> {
    let n = lambda.len();
    let mut s = vec![0.0; n + 1];
    s[0] = 1.0;
    for (m, &x) in lambda.iter().enumerate() {
        for j in (1..=m + 1).rev() {
            s[j] += x * s[j - 1];
        }
    }
    s
}

/// σ_k(λ), computed by the truncated recurrence in O(n·k).
pub fn sigma(k: usize, lambda: &[f64]) -> Result<f64> {
    let n = lambda.len();
    if k > n {
        return Err(HmixError::Argument(format!("sigma: k = {k} exceeds n = {n}")));
    }
    let mut s = vec![0.0; k + 1];
    s[0] = 1.0;
    for (m, &x) in lambda.iter().enumerate() {
        for j in (1..=(m + 1).min(k)).rev() {
            s[j] += x * s[j - 1];
        }
    }
    Ok(s[k])
}

fn sigma_all_without(lambda: &[f64], skip: usize) -> Vec<f64> {
    let n = lambda.len();
    let mut s = vec![0.0; n];
    s[0] = 1.0;
    let mut m = 0;
    for (idx, &x) in lambda.iter().enumerate() {
        if idx == skip {
            continue;
        }
        for j in (1..=m + 1).rev() {
            s[j] += x * s[j - 1];
        }
        m += 1;
    }
    s
}

/// σ_0(λ|i)..σ_{n−1}(λ|i) given the full cache `sigmas` = σ_0(λ)..σ_n(λ).
///
/// Uses the downdate σ_j(λ|i) = σ_j(λ) − λ_i σ_{j−1}(λ|i). The downdate
/// amplifies rounding by |λ_i| per step, so when λ_i is the entry of largest
/// magnitude and a step cancels more than three digits the restricted vector
/// is recomputed directly.
pub fn sigma_excl_all_with(lambda: &[f64], sigmas: &[f64], i: usize) -> Vec<f64> {
    let n = lambda.len();
    debug_assert_eq!(sigmas.len(), n + 1);
    let xi = lambda[i];
    let mut out = vec![0.0; n];
    out[0] = 1.0;
    let mut cancelled = false;
    for j in 1..n {
        let carry = xi * out[j - 1];
        let d = sigmas[j] - carry;
        let scale = sigmas[j].abs().max(carry.abs());
        if scale > 0.0 && d.abs() < 1e-3 * scale {
            cancelled = true;
        }
        out[j] = d;
    }
    if cancelled {
        let amax = lambda.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if xi.abs() >= amax {
            return sigma_all_without(lambda, i);
        }
    }
    out
}

/// σ_0(λ|i)..σ_{n−1}(λ|i).
pub fn sigma_excl_all(lambda: &[f64], i: usize) -> Result<Vec<f64>> {
    if i >= lambda.len() {
        return Err(HmixError::Argument(format!(
            "sigma_excl: index {i} out of range for n = {}",
            lambda.len()
        )));
    }
    Ok(sigma_excl_all_with(lambda, &sigma_all(lambda), i))
}

/// σ_k(λ|i): σ_k of λ with entry `i` set to zero.
pub fn sigma_excl(k: usize, lambda: &[f64], i: usize) -> Result<f64> {
    let n = lambda.len();
    if k >= n {
        return Err(HmixError::Argument(format!(
            "sigma_excl: k = {k} must be below n = {n}"
        )));
    }
    Ok(sigma_excl_all(lambda, i)?[k])
}

/// σ_0..σ_{n−2} of λ with entries `p` and `q` removed (p ≠ q).
pub fn sigma_excl2_all(lambda: &[f64], p: usize, q: usize) -> Vec<f64> {
    let n = lambda.len();
    let mut s = vec![0.0; n.saturating_sub(1)];
    s[0] = 1.0;
    let mut m = 0;
    for (idx, &x) in lambda.iter().enumerate() {
        if idx == p || idx == q {
            continue;
        }
        for j in (1..=m + 1).rev() {
            s[j] += x * s[j - 1];
        }
        m += 1;
    }
    s
}

/// Sorted eigenvalue vector with its σ cache.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    values: Vec<f64>,
    sigmas: Vec<f64>,
}

impl Spectrum {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(HmixError::Argument(format!(
                "spectrum needs n >= 2, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(HmixError::Argument("spectrum has non-finite entries".into()));
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let sigmas = sigma_all(&values);
        Ok(Spectrum { values, sigmas })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// σ_0..σ_n.
    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn sigma(&self, k: usize) -> f64 {
        self.sigmas[k]
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// σ_0(λ|i)..σ_{n−1}(λ|i).
    pub fn excl(&self, i: usize) -> Vec<f64> {
        sigma_excl_all_with(&self.values, &self.sigmas, i)
    }

    pub fn cone(&self) -> ConeReport {
        ConeReport::from_sigmas(&self.sigmas)
    }
}

/// Largest k with λ ∈ Γ_k, plus σ_1..σ_n.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeReport {
    pub max_k: usize,
    pub margins: Vec<f64>,
}

impl ConeReport {
    fn from_sigmas(sigmas: &[f64]) -> Self {
        let margins = sigmas[1..].to_vec();
        let max_k = margins.iter().take_while(|&&s| s > 0.0).count();
        ConeReport { max_k, margins }
    }

    pub fn contains(&self, k: usize) -> bool {
        self.max_k >= k
    }
}

pub fn cone_membership(lambda: &[f64]) -> ConeReport {
    ConeReport::from_sigmas(&sigma_all(lambda))
}

/// Both sides of the generalized Newton–MacLaurin inequality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonMaclaurin {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// [(σ_k/C_n^k)/(σ_l/C_n^l)]^{1/(k−l)} ≤ [(σ_r/C_n^r)/(σ_s/C_n^s)]^{1/(r−s)}
/// for λ ∈ Γ_k, n ≥ k > l ≥ 0, r > s ≥ 0, k ≥ r, l ≥ s.
pub fn newton_maclaurin(
    lambda: &[f64],
    k: usize,
    l: usize,
    r: usize,
    s: usize,
) -> Result<NewtonMaclaurin> {
    let n = lambda.len();
    if !(n >= k && k > l && r > s && k >= r && l >= s) {
        return Err(HmixError::Argument(format!(
            "newton_maclaurin: indices (k,l,r,s) = ({k},{l},{r},{s}) invalid for n = {n}"
        )));
    }
    let sig = sigma_all(lambda);
    if !ConeReport::from_sigmas(&sig).contains(k) {
        return Err(HmixError::Domain(format!("newton_maclaurin: λ not in Γ_{k}")));
    }
    let ratio = |a: usize, b: usize| {
        let q = (sig[a] / binomial(n, a)) / (sig[b] / binomial(n, b));
        q.powf(1.0 / (a - b) as f64)
    };
    let lhs = ratio(k, l);
    let rhs = ratio(r, s);
    Ok(NewtonMaclaurin { lhs, rhs, holds: lhs <= rhs + 1e-12 * rhs.abs() })
}

/// Every admissible (k, l, r, s) for dimension `n`.
pub fn newton_maclaurin_tuples(n: usize) -> Vec<(usize, usize, usize, usize)> {
    let mut out = Vec::new();
    for k in 1..=n {
        for l in 0..k {
            for r in 1..=k {
                for s in 0..r.min(l + 1) {
                    out.push((k, l, r, s));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::sigma_bruteforce;

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma(0, &[4.0, -2.0, 7.0]).unwrap(), 1.0);
        assert_eq!(sigma(2, &[1.0, 1.0, 1.0]).unwrap(), 3.0);
        let oracle = sigma_bruteforce(2, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(oracle, 11.0);
        assert_eq!(sigma(2, &[1.0, 2.0, 3.0]).unwrap(), oracle);
        assert!(matches!(sigma(4, &[1.0, 2.0, 3.0]), Err(HmixError::Argument(_))));
    }

    #[test]
    fn sigma_all_examples() {
        assert_eq!(sigma_all(&[1.0, 1.0]), vec![1.0, 2.0, 1.0]);
        assert_eq!(sigma_all(&[1.0, 2.0, 3.0]), vec![1.0, 6.0, 11.0, 6.0]);
        assert_eq!(sigma_all(&[0.0, 0.0, 0.0]), vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn sigma_excl_examples() {
        // entry i = 3 in one-based numbering
        assert_eq!(sigma_excl(1, &[1.0, 2.0, 3.0], 2).unwrap(), 3.0);
        assert_eq!(sigma_excl(0, &[5.0, -1.0, 2.0], 1).unwrap(), 1.0);
        assert_eq!(sigma_excl(2, &[1.0, 1.0, 1.0], 0).unwrap(), 1.0);
        assert!(sigma_excl(3, &[1.0, 1.0, 1.0], 0).is_err());
        assert!(sigma_excl(1, &[1.0, 1.0, 1.0], 3).is_err());
    }

    #[test]
    fn sigma_excl_falls_back_on_dominant_entry() {
        // downdate through a huge entry would lose every digit of the small ones
        let lambda = [1e-6, 2e-6, 1e9];
        let excl = sigma_excl_all(&lambda, 2).unwrap();
        assert!((excl[1] - 3e-6).abs() < 1e-18);
        assert!((excl[2] - 2e-12).abs() < 1e-24);
    }

    #[test]
    fn cone_examples() {
        assert_eq!(cone_membership(&[1.0, 1.0, 1.0]).max_k, 3);
        let r = cone_membership(&[3.0, 3.0, -1.0]);
        assert_eq!(r.max_k, 2);
        assert_eq!(r.margins, vec![5.0, 3.0, -9.0]);
        assert_eq!(cone_membership(&[-1.0, -1.0]).max_k, 0);
    }

    #[test]
    fn newton_maclaurin_examples() {
        let one = [1.0, 1.0, 1.0];
        for (k, l, r, s) in newton_maclaurin_tuples(3) {
            let nm = newton_maclaurin(&one, k, l, r, s).unwrap();
            assert!((nm.lhs - 1.0).abs() < 1e-14 && (nm.rhs - 1.0).abs() < 1e-14 && nm.holds);
        }
        let lam = [1.0, 2.0, 3.0];
        let nm = newton_maclaurin(&lam, 2, 1, 1, 0).unwrap();
        // (11/3)/(6/3) = 11/6 on the left, 6/3 = 2 on the right
        assert!((nm.lhs - 11.0 / 6.0).abs() < 1e-14);
        assert!((nm.rhs - 2.0).abs() < 1e-14);
        assert!(nm.holds);
        let nm = newton_maclaurin(&lam, 3, 0, 1, 0).unwrap();
        assert!((nm.lhs - 6f64.powf(1.0 / 3.0)).abs() < 1e-14);
        assert!((nm.rhs - 2.0).abs() < 1e-14);
        assert!(nm.holds);
    }

    #[test]
    fn newton_maclaurin_rejects() {
        assert!(matches!(
            newton_maclaurin(&[1.0, 2.0, 3.0], 2, 2, 1, 0),
            Err(HmixError::Argument(_))
        ));
        assert!(matches!(
            newton_maclaurin(&[3.0, 3.0, -1.0], 3, 0, 1, 0),
            Err(HmixError::Domain(_))
        ));
    }

    #[test]
    fn spectrum_sorts_and_caches() {
        let s = Spectrum::new(vec![3.0, 1.0, 2.0]).unwrap();
        assert_eq!(s.values(), &[1.0, 2.0, 3.0]);
        assert_eq!(s.sigmas(), &[1.0, 6.0, 11.0, 6.0]);
        assert!(Spectrum::new(vec![1.0]).is_err());
        assert!(Spectrum::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(3, 2), 3.0);
        assert_eq!(binomial(8, 4), 70.0);
        assert_eq!(binomial(2, 3), 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn vec_n() -> impl Strategy<Value = Vec<f64>> {
            (2usize..=8).prop_flat_map(|n| proptest::collection::vec(-3.0f64..3.0, n))
        }

        proptest! {
            #[test]
            fn downdate_identity(lambda in vec_n()) {
                let n = lambda.len();
                let full = sigma_all(&lambda);
                let scale: f64 = 1.0 + lambda.iter().map(|v| v.abs()).sum::<f64>();
                for i in 0..n {
                    let ex = sigma_excl_all(&lambda, i).unwrap();
                    for k in 1..n {
                        let rebuilt = ex[k] + lambda[i] * ex[k - 1];
                        prop_assert!((rebuilt - full[k]).abs() <= 1e-12 * scale.powi(k as i32));
                    }
                }
            }

            #[test]
            fn cone_nesting(lambda in vec_n()) {
                let r = cone_membership(&lambda);
                for m in 1..=r.max_k {
                    prop_assert!(r.margins[m - 1] > 0.0);
                }
                if r.max_k < lambda.len() {
                    prop_assert!(r.margins[r.max_k] <= 0.0);
                }
            }
        }
    }
}
