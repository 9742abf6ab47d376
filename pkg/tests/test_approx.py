import numpy as np
import pytest

from superopt.approx import (
    best_approx,
    check_sv_identity,
    scalar_aak_best,
    superoptimal_approx,
)
from superopt.factory import example_symbol
from superopt.hankel import hankel_norm
from superopt.laurent import MatrixLaurentPoly, eval_on_grid

from conftest import Z, ZBAR, diag_symbol, scalar


def test_best_zbar_plus_one():
    R = best_approx(scalar({-1: 1, 0: 1}), 2)
    assert R.value == pytest.approx(1.0, abs=1e-6)
    assert R.F.allclose(scalar({0: 1.0}), atol=1e-4)


def test_best_analytic_symbol_is_itself():
    R = best_approx(Z, 1)
    assert R.value == pytest.approx(0.0, abs=1e-6)


def test_best_example3_matches_hankel_norm():
    phi = example_symbol("ex3")
    R = best_approx(phi, 6)
    hn = hankel_norm(phi).norm
    assert R.value >= hn - 1e-9
    assert abs(R.value - hn) <= 1e-3 and R.value < 1
    assert R.converged


def test_trace_is_monotone():
    R = best_approx(example_symbol("ex3"), 4)
    vals = [v for _, label, v in R.trace if label != "start"]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


def test_weak_duality_random(rng):
    for _ in range(3):
        phi = MatrixLaurentPoly({k: rng.standard_normal((2, 2)) for k in range(-2, 2)})
        R = best_approx(phi, 3)
        assert R.value >= hankel_norm(phi).norm - 1e-9


def test_negative_degree_rejected():
    with pytest.raises(ValueError):
        best_approx(ZBAR, -1)


@pytest.mark.parametrize("coeffs", [{-1: 1.0, -2: 1.0}, {-1: 0.5, -3: 0.4j, 2: 1.0}, {-2: 1.0, -1: -0.3}])
def test_scalar_aak_agrees_with_oracle(coeffs):
    phi = scalar(coeffs)
    aak = scalar_aak_best(phi)
    R = best_approx(phi, 48, 1024)
    assert abs(R.value - aak.norm) <= 1e-4
    assert aak.modulus_deviation <= 1e-6


def test_aak_scalar_examples():
    a = scalar_aak_best(ZBAR)
    assert a.norm == pytest.approx(1.0) and a.approximant.allclose(MatrixLaurentPoly.zeros(1, 1), atol=1e-10)
    g = scalar_aak_best(scalar({-1: 1, -2: 1}))
    assert g.norm == pytest.approx((1 + np.sqrt(5)) / 2, abs=1e-12)
    c = scalar_aak_best(scalar({0: 2, -1: 1}))
    assert c.modulus_deviation < 1e-10
    assert c.approximant.allclose(scalar({0: 2.0}), atol=1e-8)
    with pytest.raises(ValueError):
        scalar_aak_best(MatrixLaurentPoly.identity(2))


def test_aak_error_has_constant_modulus():
    err = scalar_aak_best(scalar({-1: 1, -2: 1})).error
    assert np.max(np.abs(np.abs(err) - (1 + np.sqrt(5)) / 2)) < 1e-10


def test_superoptimal_diag():
    phi = diag_symbol({-1: 1}, {-3: 0.5})
    R = superoptimal_approx(phi, 4)
    assert np.allclose(R.profile, (1.0, 0.5), atol=2e-2)
    assert R.sup_norm_F() <= 5e-3


def test_superoptimal_nonunique_archetype():
    phi = diag_symbol({-1: 1}, {0: 0.3, 1: 0.2})
    R = superoptimal_approx(phi, 3)
    assert R.profile[0] == pytest.approx(1.0, abs=2e-2)
    assert R.profile[1] <= 2e-2
    F = R.F
    assert np.abs(eval_on_grid(F.submatrix([0], [0])).values).max() < 2e-2


def test_superoptimal_ex3_shifted_and_sv_identity():
    phi = example_symbol("ex3_shifted")
    R = superoptimal_approx(phi)
    assert np.allclose(R.profile, (1.0, 0.5), atol=2e-2)
    rep = check_sv_identity(phi, R)
    assert rep["passed"] and rep["deviation"] <= 5e-2


def test_sv_identity_scalar_zbar():
    R = superoptimal_approx(ZBAR, 2)
    assert check_sv_identity(ZBAR, R)["deviation"] <= 1e-6


def test_sv_identity_report_for_ex3():
    phi = example_symbol("ex3")
    rep = check_sv_identity(phi, superoptimal_approx(phi, 6))
    assert set(rep) >= {"deviation", "per_index", "t", "passed"}
    assert len(rep["per_index"]) == 2


def test_superoptimal_limits():
    with pytest.raises(ValueError):
        superoptimal_approx(MatrixLaurentPoly.identity(4), 1)
    with pytest.raises(ValueError):
        superoptimal_approx(ZBAR, 9)


def test_superoptimal_recovers_recipe_levels():
    from superopt.factory import compose_canonical, perturb, random_recipe

    r = random_recipe(1, shape=(2, 2), max_band=4)
    phi = perturb(compose_canonical(r), 0.05, 1)
    R = superoptimal_approx(phi)
    # the analytic perturbation is removable, so t = levels of the recipe
    assert np.allclose(R.profile, r.levels, atol=2e-3)
    assert R.converged


def test_kyfan_sdp_matches_direct_sum():
    from superopt.approx import _GridProblem, _kyfan_sdp

    phi = diag_symbol({-1: 1}, {-2: 0.5})
    prob = _GridProblem(phi, 2, 64)
    x = _kyfan_sdp(prob, 2)
    s = np.linalg.svd(prob.residual(x), compute_uv=False)
    # F = 0 is optimal, so the max of s_0 + s_1 stays 1.5
    assert s.sum(axis=1).max() == pytest.approx(1.5, abs=1e-6)


def test_smoothed_gradient_matches_finite_differences(rng):
    from superopt.approx import _GridProblem, _lp_objective

    phi = example_symbol("ex3")
    prob = _GridProblem(phi, 2, 64)
    f = _lp_objective(prob, 0, 4)
    x = 0.1 * rng.standard_normal(2 * prob.size)
    _, g = f(x)
    h = 1e-6
    fd = np.array([(f(x + h * e)[0] - f(x - h * e)[0]) / (2 * h) for e in np.eye(x.size)])
    assert np.allclose(g, fd, atol=1e-6)
