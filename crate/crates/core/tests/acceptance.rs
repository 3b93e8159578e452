//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs sequentially so the timing limits are measured unshared.

use std::time::Instant;

use hmix_core::io::write_field;
use hmix_core::operator::{cone_bounds_report, Coefficients};
use hmix_core::oracle;
use hmix_core::problems::{c0_sandwich_check, deflate_subsolution, presets, Descriptor};
use hmix_core::solver::{continuity_solve, monotonicity_audit, monotonicity_excess, Solution, SolverConfig};
use hmix_core::ProblemSpec;

const SEED: u64 = 20240601;

struct Outcome {
    ok: bool,
    detail: String,
}

fn check(ok: bool, detail: String) -> Outcome {
    Outcome { ok, detail }
}

fn solve(spec: &ProblemSpec) -> Solution {
    continuity_solve(spec, &SolverConfig::default()).expect("continuity solve")
}

fn suite_outcome(rep: &oracle::OracleReport, secs: f64, limit: f64) -> Outcome {
    let mut detail = format!("{} cases, max rel err {:.2e}, {} failures, {secs:.2}s", rep.cases, rep.max_rel_err, rep.failures.len());
    if limit.is_finite() {
        detail.push_str(&format!(" (limit {limit}s)"));
    }
    if let Some(f) = rep.failures.first() {
        detail.push_str(&format!("; first: {f}"));
    }
    check(rep.passed() && secs < limit, detail)
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t0 = Instant::now();
    let out = f();
    (out, t0.elapsed().as_secs_f64())
}

fn c1() -> Outcome {
    let (rep, secs) = timed(|| oracle::suite_symfun(SEED, 1000));
    let mut out = suite_outcome(&rep, secs, 5.0);
    out.detail.push_str(&format!(
        ", plain rel err positive {:.2e}, mixed-sign {:.2e}",
        rep.details["max_plain_rel_err_positive"].as_f64().unwrap(),
        rep.details["max_plain_rel_err_mixed"].as_f64().unwrap()
    ));
    out
}

fn c2() -> Outcome {
    let (rep, secs) = timed(|| oracle::suite_newton_maclaurin(SEED + 1, 1000));
    let mut out = suite_outcome(&rep, secs, 10.0);
    out.detail.push_str(&format!(", worst slack {}", rep.details["worst_slack"]));
    out
}

fn c3() -> Outcome {
    let (rep, secs) = timed(|| oracle::suite_linearization(SEED + 2, 500));
    suite_outcome(&rep, secs, 30.0)
}

fn c4() -> Outcome {
    let (rep, secs) = timed(|| oracle::suite_concavity(SEED + 3, 1000));
    suite_outcome(&rep, secs, f64::INFINITY)
}

fn c5() -> Outcome {
    let (rep, secs) = timed(|| oracle::suite_cone_bounds(SEED + 4, 1000));
    let c = Coefficients::new(3, 2, vec![1.0], 2.0 / 3.0).unwrap();
    let spot = cone_bounds_report(&[1.0, 1.0, 1.0], &c).unwrap();
    let spot_ok = (spot.trace - 4.0 / 3.0).abs() < 1e-12 && (spot.euler_lhs - 4.0 / 3.0).abs() < 1e-12;
    let mut out = suite_outcome(&rep, secs, f64::INFINITY);
    out.detail.push_str(&format!(", spot trace {:.15} euler {:.15}", spot.trace, spot.euler_lhs));
    out.ok &= spot_ok;
    out
}

fn c6() -> Outcome {
    let (rep, secs) = timed(|| oracle::suite_interlacing(SEED + 5, 1000));
    suite_outcome(&rep, secs, f64::INFINITY)
}

fn c7() -> Outcome {
    let (res, secs) = timed(|| {
        let built = presets::quadratic(9).build(1).unwrap();
        let mp = built.manufactured.unwrap();
        let eq = solve(&mp.spec).u.max_abs_diff(&mp.ustar);
        let deflated = deflate_subsolution(&mp, 0.02, &Descriptor::SineBump { coef: 1.0 }).unwrap();
        let sol = solve(&deflated);
        (eq, sol.u.max_abs_diff(&mp.ustar), sol.report.total_newton_iterations)
    });
    let (eq, df, iters) = res;
    check(
        eq <= 1e-9 && df <= 1e-9 && secs < 60.0,
        format!("equality start err {eq:.2e}, deflated start err {df:.2e} ({iters} newton), {secs:.2}s"),
    )
}

fn c8() -> Outcome {
    let (rep, secs) = timed(|| oracle::suite_convergence(&[9, 13, 17]));
    let order = rep.details.get("observed_order").and_then(|v| v.as_f64()).unwrap_or(f64::NAN);
    check(
        rep.passed() && (1.8..=2.2).contains(&order) && secs < 900.0,
        format!(
            "errors {} pairwise orders {} observed order {order:.3}, {secs:.1}s",
            rep.details["errors"], rep.details["pairwise_orders"]
        ),
    )
}

fn c9() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let cases = [
        ("ci 7", presets::ci(7)),
        ("ci 9", presets::ci(9)),
        ("quadratic 9", presets::quadratic(9)),
        ("n3k2 5", presets::three(2, 5)),
        ("n3k3 5", presets::three(3, 5)),
    ];
    for (name, cfg) in cases {
        let spec = cfg.build(1).unwrap().spec;
        let sol = solve(&spec);
        let rep = c0_sandwich_check(&sol.u, &spec).unwrap();
        ok &= rep.ok && rep.violations == 0;
        lines.push(format!("{name}: {} violations (lower {:.1e}, upper {:.1e})", rep.violations, rep.lower_margin, rep.upper_margin));
    }
    check(ok, lines.join("; "))
}

fn c10() -> Outcome {
    let spec = presets::ci(9).build(1).unwrap().spec;
    let a = solve(&spec);
    let b = solve(&spec);
    let dir = tempfile::tempdir().unwrap();
    write_field(&dir.path().join("a"), &a.u).unwrap();
    write_field(&dir.path().join("b"), &b.u).unwrap();
    let same = std::fs::read(dir.path().join("a.bin")).unwrap() == std::fs::read(dir.path().join("b.bin")).unwrap();
    let r = &a.report;
    check(
        r.t_final == 1.0 && r.total_newton_iterations <= 12 && r.final_residual <= 1e-10 && same,
        format!(
            "t = {}, {} newton iterations, final residual {:.2e}, bitwise identical dumps: {same}",
            r.t_final, r.total_newton_iterations, r.final_residual
        ),
    )
}

fn c11() -> Outcome {
    let big = presets::ci(9).build(1).unwrap().spec;
    let small = big.with_rhs_shift(-0.1).unwrap();
    let u_big = solve(&big).u;
    let u_small = solve(&small).u;
    let tol = 2.0 * SolverConfig::default().newton_tol;
    let ok = monotonicity_audit(&u_big, &u_small, tol);
    let reversed = monotonicity_audit(&u_small, &u_big, tol);
    check(
        ok && !reversed,
        format!(
            "max(u[β] − u[β−0.1]) = {:.3e}, reversed audit {reversed}",
            monotonicity_excess(&u_big, &u_small)
        ),
    )
}

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("1 symmetric functions vs subset enumeration", c1),
        ("2 Newton-MacLaurin", c2),
        ("3 linearization vs finite differences", c3),
        ("4 concavity and ellipticity", c4),
        ("5 Euler identity and trace bound", c5),
        ("6 interlacing", c6),
        ("7 quadratic exactness", c7),
        ("8 convergence order", c8),
        ("9 C0 sandwich", c9),
        ("10 homotopy robustness and determinism", c10),
        ("11 comparison audit", c11),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|s| name.contains(s.as_str())) {
            continue;
        }
        let out = f();
        println!("criterion {name}: {} ({})", if out.ok { "PASS" } else { "FAIL" }, out.detail);
        if !out.ok {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
