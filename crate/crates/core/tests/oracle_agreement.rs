use hmix_core::oracle::tiny_solve_bruteforce;
use hmix_core::problems::presets;
use hmix_core::solver::{continuity_solve, SolverConfig};
use hmix_core::HmixError;

#[test]
fn dense_newton_matches_continuity_solve_on_ci_problem() {
    let spec = presets::ci(7).build(1).unwrap().spec;
    let fast = continuity_solve(&spec, &SolverConfig::default()).unwrap();
    let slow = tiny_solve_bruteforce(&spec, 1e-11).unwrap();
    let diff = fast.u.max_abs_diff(&slow);
    assert!(diff <= 1e-7, "sup-norm difference {diff:e}");
}

#[test]
fn dense_newton_recovers_quadratic_solution() {
    let built = presets::quadratic(5).build(1).unwrap();
    let mp = built.manufactured.unwrap();
    let deflated =
        hmix_core::problems::deflate_subsolution(&mp, 0.02, &hmix_core::Descriptor::SineBump { coef: 1.0 }).unwrap();
    let u = tiny_solve_bruteforce(&deflated, 1e-12).unwrap();
    assert!(u.max_abs_diff(&mp.ustar) < 1e-10);
}

#[test]
fn infeasible_start_fails_on_both_paths() {
    let spec = presets::ci(5).build(1).unwrap().spec;
    // bypass construction checks: raise β above G(χ_ū)
    let mut bad = spec.clone();
    bad.coeffs.beta.iter_mut().for_each(|b| *b += 1.0);
    let fast = continuity_solve(&bad, &SolverConfig::default());
    let slow = tiny_solve_bruteforce(&bad, 1e-11);
    assert!(matches!(fast, Err(HmixError::Construction { .. })));
    assert!(matches!(slow, Err(HmixError::Precondition(_))));
}

#[test]
fn oversized_problem_is_rejected() {
    let spec = presets::ci(9).build(1).unwrap().spec;
    assert!(matches!(tiny_solve_bruteforce(&spec, 1e-11), Err(HmixError::Argument(_))));
}
