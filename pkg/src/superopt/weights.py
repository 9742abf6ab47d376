"""Matrix weights on the circle and weighted Hankel estimates.

A weight ``W`` is admissible for ``Phi`` when ``||H_Phi f||^2 <= (W f, f)``
for every analytic ``f``.  On polynomials of degree ``<= d`` this is the
statement that the largest eigenvalue of the pencil ``(H^* H, G)`` is at most
one, where ``G`` is the Gram matrix of ``(W f, f)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh, null_space, orth

from .hankel import PolySubspaceBasis, empty_basis, hankel_matrix
from .laurent import DEFAULT_TOL_C1, MatrixLaurentPoly, eval_on_grid, singular_profile
from .schmidt import RANK_TOL, SubspaceFamily, _evaluation_blocks

ADMISSIBLE_TOL = 1e-8
EXTREMAL_TOL = 1e-6
HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10


class SingularGram(np.linalg.LinAlgError):
    """The weighted Gram matrix is not positive definite."""

    def __init__(self, msg, direction):
        super().__init__(msg)
        self.direction = direction


@dataclass(frozen=True)
class MatrixWeight:
    """Hermitian nonnegative ``n x n`` matrices ``values[j]`` at the grid points."""

    points: np.ndarray
    values: np.ndarray
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        V = self.values
        herm = np.max(np.abs(V - np.conj(np.swapaxes(V, 1, 2)))) if V.size else 0.0
        if herm > HERMITIAN_TOL * max(1.0, np.abs(V).max()):
            raise ValueError(f"weight is not Hermitian (deviation {herm:.2e})")
        if V.size and self.min_eigenvalue() < -PSD_TOL:
            raise ValueError("weight has negative eigenvalues")

    @property
    def N(self) -> int:
        return len(self.points)

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.values)

    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues().min())

    def dominated_by(self, other: "MatrixWeight", tol: float = PSD_TOL) -> bool:
        """``self <= other`` as Hermitian forms at every grid point."""
        return bool(np.linalg.eigvalsh(other.values - self.values).min() >= -tol)


def weight_from_phi(phi: MatrixLaurentPoly, k: int, N: int | None = None, tol_c1: float = DEFAULT_TOL_C1) -> MatrixWeight:
    """``W_k = phi_k(Phi^* Phi)`` with ``phi_k(x) = max(x, sigma_k^2)``."""
    G = eval_on_grid(phi, N)
    prof = singular_profile(G, tol_c1)
    if not 0 <= k < prof.n_levels:
        raise ValueError(f"level index {k} out of range; symbol has {prof.n_levels} nonzero levels")
    sk = prof.levels[k]
    A = np.einsum("jba,jbc->jac", G.values.conj(), G.values)
    A = (A + np.conj(np.swapaxes(A, 1, 2))) / 2
    lam, Q = np.linalg.eigh(A)
    lam = np.maximum(lam, sk**2)
    W = np.einsum("jab,jb,jcb->jac", Q, lam, Q.conj())
    W = (W + np.conj(np.swapaxes(W, 1, 2))) / 2
    return MatrixWeight(G.points, W, {"kind": "spectral", "k": k, "sigma_k": sk})


def constant_weight(W0, N: int) -> MatrixWeight:
    """The constant weight ``W0`` (scalar or matrix) on an ``N``-point grid."""
    W0 = np.atleast_2d(np.asarray(W0, dtype=complex))
    from .laurent import circle_points

    return MatrixWeight(circle_points(N), np.broadcast_to(W0, (N,) + W0.shape).copy(), {"kind": "constant"})


@dataclass(frozen=True)
class WeightedGram:
    """Gram matrix of ``(W f, g)`` and Hankel matrix on degree-``<= d`` polynomials."""

    degree: int
    G: np.ndarray
    H: np.ndarray

    @property
    def HH(self) -> np.ndarray:
        return self.H.conj().T @ self.H


def weighted_gram(phi: MatrixLaurentPoly, W: MatrixWeight, d: int) -> WeightedGram:
    """Assemble ``G = (1/N) sum_j E_j^* W_j E_j`` and ``H`` at degree ``d`` (trapezoid rule)."""
    if W.n != phi.n:
        raise ValueError("weight size does not match the symbol's column count")
    E = _evaluation_blocks(W.points, W.n, d)
    G = np.einsum("jai,jab,jbk->ik", E.conj(), W.values, E) / W.N
    G = (G + G.conj().T) / 2
    return WeightedGram(d, G, hankel_matrix(phi, d).matrix)


def _pencil(WG: WeightedGram, Z: np.ndarray | None = None):
    A, B = WG.HH, WG.G
    if Z is not None:
        A, B = Z.conj().T @ A @ Z, Z.conj().T @ B @ Z
    lam_b, vec_b = np.linalg.eigh(B)
    if lam_b[0] <= 1e-12 * max(lam_b[-1], 1.0):
        raise SingularGram(f"weighted Gram matrix is singular (min eigenvalue {lam_b[0]:.2e})", vec_b[:, 0])
    lam, X = eigh(A, B)
    return lam, X


@dataclass(frozen=True)
class AdmissibilityReport:
    lam_max: float
    passed: bool
    degree: int
    trajectory: tuple

    def to_json_dict(self) -> dict:
        return {"lambda_max": self.lam_max, "verdict": "pass" if self.passed else "fail",
                "degree": self.degree, "trajectory": [list(t) for t in self.trajectory]}


def _default_degree(phi: MatrixLaurentPoly) -> int:
    return max(phi.band, 1)


def admissible_check(phi: MatrixLaurentPoly, W: MatrixWeight, d: int | None = None, dmax: int = 48,
                     stab_tol: float = 1e-10) -> AdmissibilityReport:
    """Largest eigenvalue of ``(H^* H, G)``; degree raised by 2 until it stops moving.

    Raises
    ------
    SingularGram
        When ``G`` is not positive definite; the degenerate direction is attached.
    """
    d = _default_degree(phi) if d is None else d
    traj = []
    prev = None
    while True:
        lam = float(_pencil(weighted_gram(phi, W, d))[0][-1])
        traj.append((d, lam))
        if prev is not None and abs(lam - prev) <= stab_tol * max(1.0, abs(lam)):
            d -= 2
            lam = prev
            break
        if d + 2 > dmax:
            break
        prev = lam
        d += 2
    return AdmissibilityReport(lam, lam <= 1 + ADMISSIBLE_TOL, d, tuple(traj))


def _family_from_basis(basis: PolySubspaceBasis, points: np.ndarray, rank_tol: float = RANK_TOL) -> SubspaceFamily:
    vals = basis.evaluate(points) if len(basis) else np.zeros((len(points), basis.n, 0))
    bases = []
    for A in vals:
        if A.shape[1] == 0:
            bases.append(np.zeros((basis.n, 0), dtype=complex))
            continue
        U, s, _ = np.linalg.svd(A, full_matrices=False)
        r = int((s > rank_tol * max(s.max(initial=0.0), 1.0)).sum())
        bases.append(U[:, :r])
    return SubspaceFamily.from_bases(bases, points)


def extremal_subspace(phi: MatrixLaurentPoly, W: MatrixWeight, d: int | None = None,
                      tol: float = EXTREMAL_TOL) -> tuple[PolySubspaceBasis, SubspaceFamily]:
    """Extremal functions (generalized eigenvalue within ``tol`` of 1) and their pointwise span.

    The polynomial basis is ``G``-orthonormal, so ``orthonormal`` is False
    in the H^2 sense; residuals are ``|lambda - 1|``.
    """
    d = admissible_check(phi, W).degree if d is None else d
    lam, X = _pencil(weighted_gram(phi, W, d))
    keep = np.abs(lam - 1) <= tol
    if not keep.any():
        basis = empty_basis(phi.n, d, tol)
    else:
        basis = PolySubspaceBasis.from_vectors(X[:, keep], phi.n, residuals=np.abs(lam[keep] - 1), tol=tol,
                                               orthonormal=False, eigenvalues=lam[keep].tolist())
    return basis, _family_from_basis(basis, W.points)


def q_value(phi: MatrixLaurentPoly, W: MatrixWeight, extremal: PolySubspaceBasis, d: int | None = None) -> float:
    """Square root of the largest pencil eigenvalue on the ``G``-orthogonal complement of ``extremal``.

    Returns 0 when the complement is empty.
    """
    if len(extremal) == 0:
        raise ValueError("extremal set is empty")
    d = max(extremal.degree, _default_degree(phi)) if d is None else d
    if d < extremal.degree:
        raise ValueError("degree below the extremal basis degree")
    WG = weighted_gram(phi, W, d)
    B = extremal.padded(d)
    Z = null_space(B.conj().T @ WG.G)
    if Z.shape[1] == 0:
        return 0.0
    lam, _ = _pencil(WG, Z)
    return float(np.sqrt(max(lam[-1], 0.0)))


def pinch(W: MatrixWeight, E: SubspaceFamily, a: float) -> MatrixWeight:
    """``P W P + a^2 (I - P)`` with ``P`` the projector onto ``E(zeta)``."""
    if a <= 0:
        raise ValueError("a must be positive")
    if not E.constant_dim:
        raise ValueError("pinching needs a family of constant dimension")
    if E.N != W.N or E.n != W.n:
        raise ValueError("family and weight live on different grids or spaces")
    P = E.projectors()
    I = np.eye(W.n)
    V = P @ W.values @ P + a**2 * (I - P)
    V = (V + np.conj(np.swapaxes(V, 1, 2))) / 2
    return MatrixWeight(W.points, V, {"kind": "pinched", "a": a, "base": dict(W.provenance)})


def lemma_orthogonality_residual(phi: MatrixLaurentPoly, W: MatrixWeight, extremal: PolySubspaceBasis,
                                 d: int | None = None) -> float:
    """Largest ``|<H f, H g>| / (||H f|| ||H g||)`` over extremal ``f`` and ``g`` W-orthogonal to ``f``.

    For an admissible weight and extremal ``f`` this vanishes, because
    ``H^* H f = G f`` in the weighted geometry.
    """
    d = max(extremal.degree, _default_degree(phi)) if d is None else d
    WG = weighted_gram(phi, W, d)
    worst = 0.0
    for f in extremal.padded(d).T:
        Hf = WG.H @ f
        nf = np.linalg.norm(Hf)
        if nf == 0:
            continue
        Z = null_space((WG.G @ f)[None, :].conj())
        R = orth(WG.H @ Z) if Z.shape[1] else np.zeros((len(Hf), 0))
        if R.shape[1] == 0:
            continue
        worst = max(worst, float(np.linalg.norm(R.conj().T @ Hf) / nf))
    return worst
