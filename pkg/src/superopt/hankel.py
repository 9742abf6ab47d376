"""Finite sections of Hankel and Toeplitz operators with Laurent-polynomial symbols.

Vector polynomials ``f(z) = sum_{t<=d} a_t z**t`` (``a_t`` in C^n) are
flattened as ``x[t*n + i] = a_t[i]``; the coefficient l2 norm of ``x`` is
the H^2 norm of ``f``.

For a symbol of band ``K`` the Hankel operator ``f -> P_-(Phi f)`` only
sees the first ``K`` coefficients of ``f`` and lands in the span of
``zbar, ..., zbar**K``, so every realization here is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.linalg import subspace_angles

from .laurent import MatrixLaurentPoly, circle_points

DEFAULT_EPS = 1e-6
DEFAULT_DMAX = 64
TOP_CLUSTER_RTOL = 1e-8


class KernelStabilizationError(RuntimeError):
    """No degree up to the budget gave a stable approximate kernel."""

    def __init__(self, msg, report):
        super().__init__(msg)
        self.report = report


@dataclass(frozen=True)
class PolySubspaceBasis:
    """A finite family of vector polynomials of degree ``<= degree`` in H^2(C^n).

    ``coeffs[r, t]`` is the coefficient of ``z**t`` of the ``r``-th function.
    ``residuals[r]`` is the value of the defining constraint for that
    function (e.g. ``||P_+(Phi f)|| / ||f||``) and is expected to be at most
    ``tol``.
    """

    n: int
    degree: int
    coeffs: np.ndarray
    residuals: np.ndarray
    tol: float
    orthonormal: bool = True
    meta: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_vectors(cls, X, n, residuals=None, tol=0.0, orthonormal=True, **meta):
        """Build from flattened coefficient vectors given as the columns of ``X``."""
        X = np.asarray(X, dtype=complex)
        if X.ndim == 1:
            X = X[:, None]
        r = X.shape[1]
        degree = X.shape[0] // n - 1
        coeffs = X.T.reshape(r, degree + 1, n)
        if residuals is None:
            residuals = np.zeros(r)
        return cls(n=n, degree=degree, coeffs=coeffs, residuals=np.asarray(residuals, dtype=float),
                   tol=float(tol), orthonormal=orthonormal, meta=dict(meta))

    def __len__(self):
        return self.coeffs.shape[0]

    @property
    def dim(self) -> int:
        return len(self)

    def vectors(self) -> np.ndarray:
        """Flattened coefficient vectors as columns, shape ``((degree+1) n, r)``."""
        return self.coeffs.reshape(len(self), -1).T

    def padded(self, degree: int) -> np.ndarray:
        """Columns zero-padded to a larger degree."""
        X = np.zeros((len(self), degree + 1, self.n), dtype=complex)
        X[:, : self.degree + 1] = self.coeffs
        return X.reshape(len(self), -1).T

    def evaluate(self, points) -> np.ndarray:
        """Values at ``points``; shape ``(len(points), n, r)``."""
        points = np.asarray(points, dtype=complex)
        pw = points[:, None] ** np.arange(self.degree + 1)
        return np.einsum("jt,rti->jir", pw, self.coeffs)

    def evaluate_grid(self, N: int) -> np.ndarray:
        return self.evaluate(circle_points(N))

    def gram(self) -> np.ndarray:
        X = self.vectors()
        return X.conj().T @ X

    def polys(self) -> list[MatrixLaurentPoly]:
        """Each basis function as an ``n x 1`` symbol."""
        return [MatrixLaurentPoly({t: c[:, None] for t, c in enumerate(cs)}, shape=(self.n, 1))
                for cs in self.coeffs]

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "degree": self.degree,
            "tol": self.tol,
            "orthonormal": self.orthonormal,
            "residuals": [float(r) for r in self.residuals],
            "functions": [
                {"re": c.real.tolist(), "im": c.imag.tolist()} for c in self.coeffs
            ],
        }

    @classmethod
    def from_json_dict(cls, doc) -> "PolySubspaceBasis":
        coeffs = np.array([np.array(f["re"]) + 1j * np.array(f["im"]) for f in doc["functions"]],
                          dtype=complex).reshape(len(doc["functions"]), doc["degree"] + 1, doc["n"])
        return cls(n=doc["n"], degree=doc["degree"], coeffs=coeffs,
                   residuals=np.array(doc["residuals"], dtype=float), tol=doc["tol"],
                   orthonormal=doc["orthonormal"])


def empty_basis(n: int, degree: int, tol: float = 0.0) -> PolySubspaceBasis:
    return PolySubspaceBasis(n=n, degree=degree, coeffs=np.zeros((0, degree + 1, n), dtype=complex),
                             residuals=np.zeros(0), tol=tol)


# -- Hankel ------------------------------------------------------------------------


@dataclass(frozen=True)
class HankelRealization:
    """Matrix of ``f -> P_-(Phi f)`` on analytic polynomials of degree ``<= degree``.

    Row block ``i`` holds the coefficient of ``zbar**(i+1)``.
    """

    symbol: MatrixLaurentPoly
    degree: int
    matrix: np.ndarray
    singular_values: np.ndarray
    right_vectors: np.ndarray

    @property
    def norm(self) -> float:
        return float(self.singular_values[0]) if self.singular_values.size else 0.0

    def maximizers(self, rtol: float = TOP_CLUSTER_RTOL) -> PolySubspaceBasis:
        n = self.symbol.n
        if self.norm == 0.0:
            return empty_basis(n, self.degree)
        top = self.singular_values >= self.norm * (1 - rtol)
        X = self.right_vectors[:, : len(self.singular_values)][:, top]
        res = np.abs(self.singular_values[top] - self.norm)
        return PolySubspaceBasis.from_vectors(X, n, residuals=res, tol=rtol * self.norm)

    def apply(self, x) -> np.ndarray:
        return self.matrix @ np.asarray(x, dtype=complex)


def hankel_matrix(phi: MatrixLaurentPoly, d: int) -> HankelRealization:
    """Exact block matrix of the Hankel operator on polynomials of degree ``<= d``.

    Block ``(i, t)`` is ``C_{-(i+t+1)}`` for ``i < K`` and ``t <= d``.
    """
    if d < 0:
        raise ValueError("degree must be nonnegative")
    m, n = phi.shape
    K = max(phi.band, 1)
    H = np.zeros((K * m, (d + 1) * n), dtype=complex)
    for i in range(K):
        for t in range(min(d + 1, K - i)):
            H[i * m:(i + 1) * m, t * n:(t + 1) * n] = phi.coeff(-(i + t + 1))
    _, s, Vh = np.linalg.svd(H, full_matrices=True)
    return HankelRealization(symbol=phi, degree=d, matrix=H, singular_values=s,
                             right_vectors=Vh.conj().T)


class HankelNorm(NamedTuple):
    norm: float
    maximizers: PolySubspaceBasis
    degree: int


def hankel_norm(phi: MatrixLaurentPoly, rtol: float = TOP_CLUSTER_RTOL) -> HankelNorm:
    """``||H_Phi||`` together with the full space of maximizing vectors.

    The kernel of ``H_Phi`` contains ``z**K H^2``, so maximizing vectors are
    polynomials of degree ``< K``; the norm at ``d = K - 1`` is checked
    against ``d = K`` before it is reported.
    """
    d = max(phi.band - 1, 0)
    Hd = hankel_matrix(phi, d)
    Hd1 = hankel_matrix(phi, d + 1)
    if abs(Hd.norm - Hd1.norm) > 1e-12 * max(1.0, Hd.norm):
        raise RuntimeError(f"Hankel norm not stabilized: {Hd.norm} vs {Hd1.norm}")
    return HankelNorm(Hd.norm, Hd.maximizers(rtol), d)


def maximizer_duality(phi: MatrixLaurentPoly, xi, tol: float = 1e-8) -> PolySubspaceBasis:
    """Map a maximizing vector of ``H_Phi`` to one of ``H_{Phi^t}``.

    ``eta = zbar * conj(H_Phi xi)``; if ``H_Phi xi = sum_i h_i zbar**(i+1)``
    then ``eta = sum_i conj(h_i) z**i``.

    Raises
    ------
    ValueError
        If ``xi`` is not (within ``tol``) a maximizing vector.
    """
    if isinstance(xi, PolySubspaceBasis):
        if len(xi) != 1:
            raise ValueError("expected a single maximizing vector")
        xi = xi.vectors()[:, 0]
    xi = np.asarray(xi, dtype=complex).ravel()
    n = phi.n
    if xi.size % n:
        raise ValueError("coefficient vector length is not a multiple of n")
    d = xi.size // n - 1
    norm = hankel_norm(phi).norm
    Hx = hankel_matrix(phi, d).apply(xi)
    if norm == 0 or np.linalg.norm(Hx) < (1 - tol) * norm * np.linalg.norm(xi):
        raise ValueError("xi is not a maximizing vector of the Hankel operator")
    eta = np.conj(Hx)
    m = phi.m
    dual = phi.transpose()
    d_eta = eta.size // m - 1
    Heta = hankel_matrix(dual, d_eta).apply(eta)
    res = abs(np.linalg.norm(Heta) - hankel_norm(dual).norm * np.linalg.norm(eta))
    if res > tol * max(1.0, np.linalg.norm(eta)):
        raise ValueError(f"dual vector failed the maximizer check (residual {res:.2e})")
    return PolySubspaceBasis.from_vectors(eta, m, residuals=[res], tol=tol, orthonormal=False)


# -- Toeplitz ------------------------------------------------------------------------


def toeplitz_matrix(phi: MatrixLaurentPoly, d: int) -> np.ndarray:
    """Exact matrix of ``f -> P_+(Phi f)`` from degree ``<= d`` to degree ``<= d + K``."""
    if d < 0:
        raise ValueError("degree must be nonnegative")
    m, n = phi.shape
    K = phi.band
    T = np.zeros(((d + K + 1) * m, (d + 1) * n), dtype=complex)
    for s in range(d + K + 1):
        for t in range(max(0, s - K), min(d, s + K) + 1):
            T[s * m:(s + 1) * m, t * n:(t + 1) * n] = phi.coeff(s - t)
    return T


def small_right_singular(A: np.ndarray, eps: float):
    """Orthonormal right singular vectors of ``A`` with singular value ``<= eps``.

    Columns beyond the row count count as exact zeros.
    """
    ncols = A.shape[1]
    if A.shape[0] == 0:
        return np.eye(ncols, dtype=complex), np.zeros(ncols)
    _, s, Vh = np.linalg.svd(A, full_matrices=True)
    sv = np.zeros(ncols)
    sv[: s.size] = s
    mask = sv <= eps
    return Vh.conj().T[:, mask], sv[mask]


def toeplitz_kernel(phi: MatrixLaurentPoly, d: int, eps: float = DEFAULT_EPS) -> PolySubspaceBasis:
    """``eps``-approximate kernel of ``T_Phi`` restricted to degree ``<= d``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    X, res = small_right_singular(toeplitz_matrix(phi, d), eps)
    return PolySubspaceBasis.from_vectors(X, phi.n, residuals=res, tol=eps) if X.shape[1] else empty_basis(phi.n, d, eps)


def embedded_angles(A: PolySubspaceBasis, B: PolySubspaceBasis) -> np.ndarray:
    """Principal angles after zero-padding both bases to a common degree."""
    if len(A) == 0 or len(B) == 0:
        return np.zeros(0)
    deg = max(A.degree, B.degree)
    return subspace_angles(A.padded(deg), B.padded(deg))


def _kernel_with_gap(phi: MatrixLaurentPoly, d: int, eps: float):
    A = toeplitz_matrix(phi, d)
    X, res = small_right_singular(A, eps)
    s = np.linalg.svd(A, compute_uv=False)
    above = s[s > eps]
    gap = float(above.min()) if above.size else np.inf
    basis = PolySubspaceBasis.from_vectors(X, phi.n, residuals=res, tol=eps) if X.shape[1] else empty_basis(phi.n, d, eps)
    return basis, gap


def kernel_stabilize(phi: MatrixLaurentPoly, eps: float = DEFAULT_EPS, dmin: int | None = None,
                     dmax: int = DEFAULT_DMAX, angle_tol: float = 1e-3, gap_ratio: float = 0.5):
    """Smallest degree at which the approximate kernel of ``T_Phi`` stops changing.

    Returns ``(d_star, report)`` where ``d_star`` is the first ``d`` with the
    same kernel dimension at ``d`` and ``d + 2`` and principal angles below
    ``angle_tol`` between the two (the degree-``d`` kernel embedded by
    zero-padding).  ``report["trajectory"]`` lists ``(d, dim)`` pairs.

    A degree also counts as stable only if the smallest singular value
    above ``eps`` has not shrunk by more than ``gap_ratio`` between ``d``
    and ``d + 2``; otherwise a kernel element is still converging into the
    ``eps`` ball (``2 zbar - 1`` is the standard example).

    Raises
    ------
    KernelStabilizationError
        When no such degree exists up to ``dmax``; the partial report is attached.
    """
    if dmin is None:
        dmin = 2 * phi.band + 2
    if dmin >= dmax:
        raise ValueError("need dmin < dmax")
    cache: dict[int, tuple] = {}

    def ker(d):
        if d not in cache:
            cache[d] = _kernel_with_gap(phi, d, eps)
        return cache[d]

    trajectory = []
    for d in range(dmin, dmax + 1):
        (a, ga), (b, gb) = ker(d), ker(d + 2)
        trajectory.append((d, len(a)))
        if len(a) == len(b) and (np.isinf(ga) or gb >= gap_ratio * ga):
            angles = embedded_angles(a, b)
            if angles.size == 0 or angles.max() < angle_tol:
                trajectory.append((d + 2, len(b)))
                return d, {"degree": d, "dim": len(a), "trajectory": trajectory,
                           "max_angle": float(angles.max()) if angles.size else 0.0,
                           "eps": eps, "kernel": a}
    raise KernelStabilizationError(
        f"kernel of T_Phi inconclusive at degree budget {dmax}",
        {"trajectory": trajectory, "eps": eps, "dmax": dmax},
    )
