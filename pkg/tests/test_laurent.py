import json

import numpy as np
import pytest

from superopt.laurent import (
    GridError,
    MatrixLaurentPoly,
    SymbolFormatError,
    WindingUndefined,
    circle_points,
    default_grid_size,
    eval_on_grid,
    fit,
    load_symbol,
    save_symbol,
    singular_profile,
    winding_number,
)
from superopt.factory import example_symbol, thematic_2x2, ThematicPair

from conftest import Z, ZBAR, diag_symbol, direct_values, scalar


def random_poly(rng, K, m, n):
    return MatrixLaurentPoly({k: rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
                              for k in range(-K, K + 1)})


def test_scalar_zbar_values_are_conjugate_points():
    G = eval_on_grid(ZBAR, 8)
    assert np.allclose(G.values[:, 0, 0], np.conj(circle_points(8)), atol=1e-14)


def test_identity_has_unit_singular_values():
    G = eval_on_grid(MatrixLaurentPoly.identity(2), 4)
    assert np.allclose(G.values, np.eye(2)[None])
    assert np.allclose(G.s, 1.0)


def test_diagonal_unimodular_singular_values():
    G = eval_on_grid(diag_symbol({-1: 1}, {-3: 0.5}), 16)
    assert np.allclose(G.s[:, 0], 1.0, atol=1e-14)
    assert np.allclose(G.s[:, 1], 0.5, atol=1e-14)


def test_grid_matches_direct_evaluation(rng):
    phi = random_poly(rng, 3, 2, 3)
    G = eval_on_grid(phi, 32)
    assert np.allclose(G.values, direct_values(phi, G.points), atol=1e-12)


def test_svd_reconstructs_values(rng):
    phi = random_poly(rng, 2, 3, 2)
    G = eval_on_grid(phi, 16)
    rec = np.einsum("jap,jp,jbp->jab", G.U, G.s, G.V.conj())
    assert np.allclose(rec, G.values, atol=1e-12)
    first = np.argmax(np.abs(G.V) > 1e-12, axis=1)
    lead = np.take_along_axis(G.V, first[:, None, :], axis=1)[:, 0, :]
    assert np.all(np.abs(lead.imag) < 1e-12) and np.all(lead.real > 0)


def test_fit_round_trip(rng):
    phi = random_poly(rng, 4, 2, 2)
    back = fit(eval_on_grid(phi, 16).values, band=4)
    assert np.max(np.abs(back.coeffs - phi.coeffs)) <= 1e-12


def test_grid_errors():
    phi = scalar({-3: 1.0})
    with pytest.raises(GridError):
        eval_on_grid(phi, 4)
    with pytest.raises(GridError):
        eval_on_grid(phi, 12)
    assert default_grid_size(3) == 256
    assert default_grid_size(40) == 512


def test_multiply_zbar_by_z_is_identity():
    I2 = MatrixLaurentPoly.identity(2)
    prod = (ZBAR * I2) @ (Z * I2)
    assert prod.allclose(I2)
    assert prod.band == 0


def test_adjoint_reflects_coefficients():
    phi = scalar({-1: 1.0, 1: 2.0})
    assert phi.adjoint().allclose(scalar({1: 1.0, -1: 2.0}))


def test_adjoint_conjugate_transposes_blocks(rng):
    phi = random_poly(rng, 2, 2, 3)
    G = eval_on_grid(phi, 16)
    Ga = eval_on_grid(phi.adjoint(), 16)
    assert np.allclose(Ga.values, np.conj(np.swapaxes(G.values, 1, 2)), atol=1e-12)
    assert np.allclose(Ga.s, G.s, atol=1e-12)


def test_product_matches_pointwise_product(rng):
    A, B = random_poly(rng, 2, 2, 3), random_poly(rng, 1, 3, 2)
    P = A @ B
    assert P.band == 3
    pts = circle_points(16)
    assert np.allclose(direct_values(P, pts), direct_values(A, pts) @ direct_values(B, pts), atol=1e-11)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        MatrixLaurentPoly.identity(2) @ MatrixLaurentPoly.identity(3)
    with pytest.raises(ValueError):
        MatrixLaurentPoly.identity(2) + MatrixLaurentPoly.identity(3)


def explicit_example3():
    r = 1 / np.sqrt(2)
    left = diag_symbol({0: 1}, {-2: 0.5})
    right = MatrixLaurentPoly.block([[scalar({-1: r}), scalar({0: r})], [scalar({0: -r}), scalar({1: r})]])
    return left @ right


def test_example3_matches_explicit_factors():
    phi = example_symbol("ex3")
    assert phi.allclose(explicit_example3(), atol=1e-15)
    assert phi.band == 2
    assert example_symbol("ex3_shifted").allclose(ZBAR * explicit_example3(), atol=1e-15)
    assert example_symbol("ex3_shifted").band == 3


def test_example3_product_has_profile_one_half():
    phi = example_symbol("ex3")
    prof = singular_profile(eval_on_grid(phi))
    assert np.allclose(prof.levels, (1.0, 0.5), atol=1e-12)
    assert prof.multiplicities == (1, 1) and all(prof.flat)


def test_profile_diagonal():
    prof = singular_profile(eval_on_grid(diag_symbol({-1: 1}, {-1: 0.5})))
    assert np.allclose(prof.levels, (1.0, 0.5))
    assert prof.multiplicities == (1, 1) and prof.all_flat


def test_profile_nonflat():
    phi = diag_symbol({0: 1, 1: 1}, {0: 0})
    prof = singular_profile(eval_on_grid(phi))
    assert not prof.index_flat[0]


def test_profile_zero_symbol():
    prof = singular_profile(eval_on_grid(MatrixLaurentPoly.zeros(2, 2)))
    assert prof.n_levels == 0


def test_profile_merges_equal_levels():
    prof = singular_profile(eval_on_grid(diag_symbol({-1: 1}, {-2: 1})))
    assert prof.levels == pytest.approx((1.0,)) and prof.multiplicities == (2,)


@pytest.mark.parametrize("k", [-3, -1, 0, 1, 3])
def test_winding_of_monomials(k):
    assert winding_number(MatrixLaurentPoly.monomial(k)) == k


def test_winding_of_thematic_determinant_is_zero():
    V = thematic_2x2(ThematicPair(Z / np.sqrt(2), scalar({0: 1 / np.sqrt(2)})))
    det = V.det()
    assert np.allclose(np.abs(eval_on_grid(det).values), 1.0)
    assert winding_number(det) == 0


def test_winding_is_additive():
    a, b = scalar({0: 0.3, -2: 1.0}), scalar({0: 2.0, 1: 0.5})
    assert winding_number(a * b) == winding_number(a) + winding_number(b)


def test_winding_errors():
    with pytest.raises(WindingUndefined):
        winding_number(scalar({0: 1.0, 1: 1.0}))
    with pytest.raises(GridError):
        winding_number(MatrixLaurentPoly.monomial(-7), eval_on_grid(MatrixLaurentPoly.monomial(-7), 16))
    with pytest.raises(ValueError):
        winding_number(MatrixLaurentPoly.identity(2))


def test_json_round_trip(tmp_path, rng):
    phi = random_poly(rng, 2, 2, 3)
    path = tmp_path / "s.json"
    save_symbol(phi, path)
    assert load_symbol(path).allclose(phi, atol=0)


@pytest.mark.parametrize("doc, msg", [
    ([], "JSON object"),
    ({"m": 1, "n": 1}, "coeffs"),
    ({"m": 0, "n": 1, "coeffs": []}, "positive"),
    ({"m": 1, "n": 1, "coeffs": [{"k": 0.5, "re": [[1]]}]}, "integer"),
    ({"m": 1, "n": 1, "coeffs": [{"k": 0, "re": [[1, 2]]}]}, "1x1"),
    ({"m": 1, "n": 1, "coeffs": [{"k": 0, "re": [["a"]]}]}, "non-numeric"),
    ({"m": 1, "n": 1, "coeffs": [{"k": 0, "re": [[1]]}, {"k": 0, "re": [[2]]}]}, "duplicate"),
])
def test_bad_documents(doc, msg):
    with pytest.raises(SymbolFormatError, match=msg):
        MatrixLaurentPoly.from_json_dict(doc)


def test_malformed_json_reports_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"m": 1,\n "n": }')
    with pytest.raises(SymbolFormatError, match="line 2 column"):
        load_symbol(path)
