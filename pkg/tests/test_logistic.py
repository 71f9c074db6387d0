import math

import numpy as np
import pytest
from scipy.optimize import brentq

from badmm.core import IterateState
from badmm.logistic import (
    LogisticProblem,
    composite_objective,
    linearized_x_update,
    lipschitz_constant,
    load_logistic_csv,
    logistic_value_grad,
    make_synthetic,
    soft_threshold,
    soft_threshold_z_update,
    solve_logistic,
)


def _proximal_gradient(problem, steps):
    L = lipschitz_constant(problem)
    x = np.zeros(problem.n_features)
    for _ in range(steps):
        _, g = logistic_value_grad(problem, x)
        x = soft_threshold(x - g / L, problem.lam / L)
    return x


def test_value_and_gradient_at_origin():
    P = make_synthetic(20, 4, seed=1)
    value, grad = logistic_value_grad(P, np.zeros(4))
    assert value == pytest.approx(math.log(2), rel=1e-15)
    expected = -(P.features.T @ P.labels) / (2 * P.n_samples)
    np.testing.assert_allclose(grad, expected, rtol=1e-14)


def test_gradient_matches_central_differences():
    P = make_synthetic(30, 6, seed=2)
    rng = np.random.default_rng(0)
    h = 1e-6
    for _ in range(5):
        x = rng.standard_normal(6)
        _, grad = logistic_value_grad(P, x)
        fd = np.array([
            (logistic_value_grad(P, x + h * e)[0] - logistic_value_grad(P, x - h * e)[0]) / (2 * h)
            for e in np.eye(6)
        ])
        np.testing.assert_allclose(grad, fd, atol=1e-6)


def test_saturated_margins_are_stable():
    P = LogisticProblem([[1.0]], [1.0])
    value, grad = logistic_value_grad(P, np.array([800.0]))
    assert value == pytest.approx(0.0, abs=1e-300) and abs(grad[0]) < 1e-300
    value, grad = logistic_value_grad(P, np.array([-800.0]))
    assert value == pytest.approx(800.0) and grad[0] == pytest.approx(-1.0)


def test_problem_validation():
    with pytest.raises(ValueError, match="-1 or \\+1"):
        LogisticProblem([[1.0], [2.0]], [1.0, 0.0])
    with pytest.raises(ValueError):
        LogisticProblem([[1.0], [2.0]], [1.0])
    with pytest.raises(ValueError):
        LogisticProblem([[1.0]], [1.0], lam=-0.1)


def test_x_update_special_cases():
    P = make_synthetic(10, 3, seed=3)
    z, y = np.array([0.5, -0.2, 0.1]), np.array([0.3, 0.0, -0.6])
    # two mirrored samples give a zero gradient at the origin
    Q = LogisticProblem([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]], [1.0, 1.0])
    assert not np.any(logistic_value_grad(Q, np.zeros(3))[1])
    x = linearized_x_update(Q, IterateState(np.zeros(3), z, y), rho=2.0, rho_x=0.0)
    np.testing.assert_allclose(x, z - y / 2.0, rtol=1e-15)
    x_t = np.array([1.0, 2.0, 3.0])
    x = linearized_x_update(P, IterateState(x_t, z, y), rho=2.0, rho_x=1e8)
    np.testing.assert_allclose(x, x_t, atol=1e-7)
    with pytest.raises(ValueError):
        linearized_x_update(P, IterateState(x_t, z, y), rho=1.0, rho_x=-1.0)


def test_x_update_matches_direct_quadratic_solve():
    P = make_synthetic(25, 5, seed=4)
    rng = np.random.default_rng(4)
    x_t, z, y = rng.standard_normal((3, 5))
    rho, rho_x = 0.7, 0.3
    _, g = logistic_value_grad(P, x_t)

    def grad_q(x):
        return g + y + rho * (x - z) + rho_x * (x - x_t)

    # the stated quadratic has an affine gradient: recover it column by column and solve
    b = grad_q(np.zeros(5))
    H = np.column_stack([grad_q(e) - b for e in np.eye(5)])
    direct = np.linalg.solve(H, -b)
    x = linearized_x_update(P, IterateState(x_t, z, y), rho, rho_x)
    np.testing.assert_allclose(x, direct, atol=1e-9)


def test_soft_threshold_examples():
    x, y = np.array([0.4, -1.0]), np.array([0.2, 0.5])
    z = soft_threshold_z_update(IterateState(x, np.zeros(2), y), rho=2.0, lam=0.0)
    np.testing.assert_allclose(z, x + y / 2.0)
    assert soft_threshold(np.array([0.5]), 0.2)[0] == pytest.approx(0.3)
    assert soft_threshold(np.array([-0.5]), 0.2)[0] == pytest.approx(-0.3)
    assert soft_threshold(np.array([0.1]), 0.2)[0] == 0.0


def test_soft_threshold_matches_scalar_minimization():
    rng = np.random.default_rng(6)
    x, y = rng.standard_normal((2, 40))
    rho, lam = 1.3, 0.4
    z = soft_threshold_z_update(IterateState(x, np.zeros(40), y), rho, lam)
    for i in range(40):
        def obj(s):
            return lam * abs(s) - y[i] * s + rho / 2 * (x[i] - s) ** 2

        # smooth on each side of the kink at 0: root-find the one-sided
        # derivative where it changes sign, otherwise the minimum sits at the kink
        cands = [0.0]
        for sign, lo, hi in ((-1.0, -10.0, 0.0), (1.0, 0.0, 10.0)):
            def slope(s, sign=sign):
                return sign * lam - y[i] + rho * (s - x[i])

            if slope(lo) < 0 < slope(hi):
                cands.append(brentq(slope, lo, hi, xtol=1e-15))
        best = min(cands, key=obj)
        assert z[i] == pytest.approx(best, abs=1e-10)


def test_soft_threshold_z_update_with_proximal_term():
    x, zt, y = np.array([1.0]), np.array([3.0]), np.array([0.0])
    z = soft_threshold_z_update(IterateState(x, zt, y), rho=1.0, lam=0.5, rho_z=1.0)
    # minimize 0.5 |s| + 0.5 (s - 1)^2 + 0.5 (s - 3)^2 -> s = 2 - 0.25
    assert z[0] == pytest.approx(1.75)


def test_lipschitz_constant_bounds_curvature():
    P = make_synthetic(40, 8, seed=8)
    exact = np.linalg.eigvalsh(P.features.T @ P.features).max() / (4 * P.n_samples)
    assert lipschitz_constant(P) == pytest.approx(exact, rel=1e-6)


def test_solver_converges_to_proximal_gradient_reference():
    P = make_synthetic(50, 10, seed=0, lam=0.1)
    reference = composite_objective(P, _proximal_gradient(P, 20_000))
    result = solve_logistic(P)
    assert result.reason == "converged"
    assert result.consensus_gap <= 1e-4
    assert abs(composite_objective(P, result.z) - reference) <= 1e-6 * reference


def test_objective_monotone_after_consensus():
    P = make_synthetic(50, 10, seed=1)
    result = solve_logistic(P, tol=0.0, max_iters=600)
    objs = result.trace.column("objective")
    primal = result.trace.column("primal_residual")
    assert np.all(primal[-100:] <= 1e-6)
    assert np.all(np.diff(objs[-100:]) <= 1e-8)


def test_zero_lambda_has_zero_penalty():
    P = make_synthetic(50, 10, seed=0, lam=0.0)
    result = solve_logistic(P, max_iters=200)
    assert P.lam * np.sum(np.abs(result.z)) == 0.0


def test_synthetic_is_deterministic():
    a, b = make_synthetic(seed=3), make_synthetic(seed=3)
    np.testing.assert_array_equal(a.features, b.features)
    np.testing.assert_array_equal(a.labels, b.labels)
    assert set(np.unique(a.labels)) <= {-1.0, 1.0}


def test_csv_loader(tmp_path):
    good = tmp_path / "d.csv"
    good.write_text("1.0,2.0,1\n-1.0,0.5,-1\n")
    P = load_logistic_csv(good, lam=0.2)
    assert P.features.shape == (2, 2) and P.lam == 0.2
    np.testing.assert_array_equal(P.labels, [1.0, -1.0])
    for text in ["1.0,abc,1\n", "1.0,2.0,1\n1.0,-1\n", "1.0,2.0,3\n", "", "1\n"]:
        bad = tmp_path / "bad.csv"
        bad.write_text(text)
        with pytest.raises(ValueError):
            load_logistic_csv(bad)
