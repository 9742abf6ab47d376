import numpy as np
import pytest

from superopt.laurent import MatrixLaurentPoly

Z = MatrixLaurentPoly.monomial(1)
ZBAR = MatrixLaurentPoly.monomial(-1)


def scalar(coeffs):
    return MatrixLaurentPoly.scalar(coeffs)


def direct_values(phi, points):
    """Evaluate ``sum_k C_k zeta^k`` pointwise without FFT."""
    out = np.zeros((len(points), phi.m, phi.n), dtype=complex)
    for k, C in phi.items():
        out += points[:, None, None] ** k * C[None]
    return out


def diag_symbol(*entries):
    return MatrixLaurentPoly.diag(*[e if isinstance(e, MatrixLaurentPoly) else scalar(e) for e in entries])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_RESULTS: dict = {}


def record_acceptance(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS[number] = (ok, detail)
    print(f"ACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} | {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'} | {detail}")
