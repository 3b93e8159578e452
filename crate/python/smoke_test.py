"""Smoke test for the hmix extension module."""

import math
import tempfile
from pathlib import Path

import hmix


def main():
    lam = [3.0, 2.0, 1.5]
    assert math.isclose(hmix.sigma(2, lam), 3 * 2 + 3 * 1.5 + 2 * 1.5)
    assert hmix.sigma_all(lam)[0] == 1.0
    assert hmix.cone_order([1.0, 1.0, -0.4]) == 2

    beta_l, beta = hmix.normalize_coefficients([1.0, 1.0], 3, 2)
    # (σ_2 − β_0) / σ_1 at λ = (2, 2, 2)
    g = hmix.evaluate([2.0, 2.0, 2.0], 2, beta_l)
    assert math.isclose(g, (12.0 - beta_l[0]) / 6.0), g
    value, grad = hmix.gradient([1.0, 2.0, 3.0], 2, beta_l)
    assert all(x > 0.0 for x in grad), grad

    eig = hmix.eigvalsh([[2.0, 0.0], [0.0, 1.0]], [[0.0, 1.0], [-1.0, 0.0]])
    assert math.isclose(eig[0], 1.5 - math.sqrt(1.25), abs_tol=1e-12)

    rep = hmix.run_suite("symfun", seed=3)
    assert rep["failures"] == [], rep["failures"]

    problem = hmix.Problem.preset("ci", 7)
    assert problem.check()["ok"]
    sol = problem.solve()
    assert sol.final_residual <= 1e-10
    assert sol.error < 1e-2
    assert len(sol.values) == math.prod(sol.shape)
    assert sol.report()["t_final"] == 1.0

    with tempfile.TemporaryDirectory() as d:
        sol.write(str(Path(d) / "u"))
        assert (Path(d) / "u.bin").stat().st_size == 8 * len(sol.values)

    try:
        hmix.Problem.preset("ci", 7).solve(max_newton=1, t_min_step=0.2)
    except hmix.HmixError as e:
        assert "homotopy" in str(e).lower(), e
    else:
        raise AssertionError("starved solve should fail")

    bad = hmix.Problem.preset("ci", 5).to_json().replace('"value": 0.5', '"value": 0.0')
    try:
        hmix.Problem.from_json(bad)
    except hmix.HmixError as e:
        assert "positivity" in str(e)
    else:
        raise AssertionError("zero coefficient should be rejected")

    print(f"ok: ci 7^4 residual {sol.final_residual:.2e}, error {sol.error:.3e}, "
          f"{sol.newton_iterations} newton iterations")


if __name__ == "__main__":
    main()
