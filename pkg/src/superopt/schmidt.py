"""Pointwise subspace families on the circle and the search for analytic spanning functions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import subspace_angles

from .hankel import DEFAULT_EPS, PolySubspaceBasis, empty_basis, small_right_singular, toeplitz_matrix
from .laurent import GridSampling, MatrixLaurentPoly, circle_points

RANK_TOL = 1e-6
COVERAGE = 0.99
SIDE_WEIGHT = 10.0


class LevelNotSeparated(ValueError):
    """A singular value sits on the threshold that defines a Schmidt family."""


@dataclass(frozen=True)
class SubspaceFamily:
    """Orthonormal bases ``bases[j]`` (``n x r_j``) of subspaces of C^n at grid points.

    ``constant_dim`` is False when ``r_j`` varies along the grid; such a
    family cannot be spanned by analytic functions.
    """

    n: int
    points: np.ndarray
    bases: tuple
    dims: np.ndarray
    gap: float

    @property
    def N(self) -> int:
        return len(self.points)

    @property
    def constant_dim(self) -> bool:
        return bool(np.all(self.dims == self.dims[0]))

    @property
    def dim(self) -> int:
        vals, counts = np.unique(self.dims, return_counts=True)
        return int(vals[np.argmax(counts)])

    def projectors(self) -> np.ndarray:
        return np.stack([B @ B.conj().T for B in self.bases])

    @classmethod
    def from_bases(cls, bases, points, gap=np.inf) -> "SubspaceFamily":
        bases = tuple(np.asarray(B, dtype=complex) for B in bases)
        return cls(n=bases[0].shape[0], points=np.asarray(points), bases=bases,
                   dims=np.array([B.shape[1] for B in bases]), gap=float(gap))

    @classmethod
    def constant(cls, B, N: int) -> "SubspaceFamily":
        B = np.linalg.qr(np.atleast_2d(np.asarray(B, dtype=complex)))[0] if np.size(B) else np.zeros((np.shape(B)[0], 0))
        return cls.from_bases([B] * N, circle_points(N))

    def max_angle_to(self, other: "SubspaceFamily") -> float:
        """Largest principal angle between the two families over the grid."""
        if self.N != other.N:
            raise ValueError("families live on different grids")
        worst = 0.0
        for A, B in zip(self.bases, other.bases):
            if A.shape[1] != B.shape[1]:
                return np.pi / 2
            if A.shape[1]:
                worst = max(worst, float(subspace_angles(A, B).max()))
        return worst

    def contains(self, other: "SubspaceFamily") -> float:
        """Largest angle between ``other`` and its projection into ``self`` (0 means inclusion)."""
        worst = 0.0
        for A, B in zip(self.bases, other.bases):
            if B.shape[1] == 0:
                continue
            resid = B - A @ (A.conj().T @ B)
            worst = max(worst, float(np.linalg.norm(resid, 2)))
        return float(np.arcsin(min(worst, 1.0)))


def schmidt_family(G: GridSampling, sigma: float, tol: float) -> SubspaceFamily:
    """Span of right singular vectors with singular value ``>= sigma - tol`` at every point.

    Raises
    ------
    LevelNotSeparated
        If some singular value lies within ``tol / 2`` of the threshold
        ``sigma - tol``, so membership would be decided by rounding.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    thr = sigma - tol
    s = G.s
    if np.any(np.abs(s - thr) < tol / 2):
        j = int(np.argwhere(np.abs(s - thr) < tol / 2)[0, 0])
        raise LevelNotSeparated(f"singular value near threshold {thr:.6g} at grid point {j}")
    keep = s >= thr
    bases = [G.V[j][:, keep[j]] for j in range(G.N)]
    lo = np.where(keep, s, np.inf).min(axis=1)
    hi = np.where(~keep, s, -np.inf).max(axis=1)
    hi = np.where(np.isfinite(hi), hi, 0.0)
    lo = np.where(np.isfinite(lo), lo, 0.0)
    gap = float(np.min(lo - hi))
    n = G.shape[1]
    return SubspaceFamily(n=n, points=G.points, bases=tuple(bases), dims=keep.sum(axis=1), gap=gap)


def pointwise_kernel_family(G: GridSampling, tol: float = RANK_TOL) -> SubspaceFamily:
    """The family ``zeta -> (Ker Phi(zeta))^perp``, i.e. the pointwise row space."""
    scale = max(G.sup_norm, 1.0)
    keep = G.s > tol * scale
    bases = [G.V[j][:, keep[j]] for j in range(G.N)]
    lo = np.where(keep, G.s, np.inf).min(axis=1)
    gap = float(np.min(np.where(np.isfinite(lo), lo, 0.0)))
    return SubspaceFamily(n=G.shape[1], points=G.points, bases=tuple(bases), dims=keep.sum(axis=1), gap=gap)


def _evaluation_blocks(points: np.ndarray, n: int, d: int) -> np.ndarray:
    """``E[j]`` with ``f(zeta_j) = E[j] @ x``; shape ``(N, n, (d+1) n)``."""
    pw = points[:, None] ** np.arange(d + 1)
    eye = np.eye(n)
    return np.einsum("jt,ab->jatb", pw, eye).reshape(len(points), n, (d + 1) * n)


def pointwise_rank(basis: PolySubspaceBasis, points: np.ndarray, rank_tol: float = RANK_TOL):
    """Rank of ``span{f(zeta_j)}`` at each point, plus the singular values used."""
    if len(basis) == 0:
        return np.zeros(len(points), dtype=int), np.zeros((len(points), 0))
    vals = basis.evaluate(points)
    sv = np.linalg.svd(vals, compute_uv=False)
    scale = max(float(sv.max()), 1.0)
    return (sv > rank_tol * scale).sum(axis=1), sv


@dataclass(frozen=True)
class SpanResult:
    """Outcome of :func:`analytic_span_solve`.

    ``found`` is the verdict; ``basis`` holds the candidate solutions either
    way.  ``coverage`` is the fraction of grid points where the pointwise span
    of ``basis`` reaches ``rank_needed``.
    """

    found: bool
    basis: PolySubspaceBasis
    degree: int
    rank_needed: int
    coverage: float
    membership_residuals: np.ndarray
    toeplitz_residuals: np.ndarray | None

    def to_json_dict(self) -> dict:
        out = {
            "found": self.found,
            "degree": self.degree,
            "rank_needed": self.rank_needed,
            "coverage": self.coverage,
            "membership_residuals": [float(x) for x in self.membership_residuals],
            "basis": self.basis.to_json_dict(),
        }
        if self.toeplitz_residuals is not None:
            out["toeplitz_residuals"] = [float(x) for x in self.toeplitz_residuals]
        return out


def membership_matrix(F: SubspaceFamily, d: int) -> np.ndarray:
    """Stacked ``P_perp(zeta_j) f(zeta_j)`` constraints, weighted by ``1/sqrt(N)``."""
    E = _evaluation_blocks(F.points, F.n, d)
    Pperp = np.eye(F.n) - F.projectors()
    A = np.einsum("jab,jbc->jac", Pperp, E).reshape(F.N * F.n, -1)
    return A / np.sqrt(F.N)


def analytic_span_solve(F: SubspaceFamily, d: int, eps: float = DEFAULT_EPS,
                        side: MatrixLaurentPoly | None = None, rank_needed: int | None = None,
                        rank_tol: float = RANK_TOL, coverage: float = COVERAGE) -> SpanResult:
    """Search for analytic polynomials of degree ``<= d`` that span ``F`` pointwise.

    Solves for the ``eps``-approximate null space of the pointwise membership
    constraints, stacked (when ``side`` is given) with the exact map
    ``f -> P_+(side f)`` weighted by ``10 / eps``.  The search succeeds when
    the solutions span a space of dimension ``rank_needed`` (default
    ``F.dim``) on at least ``coverage`` of the grid.
    """
    if not F.constant_dim:
        raise ValueError("family has non-constant dimension; it cannot be analytic")
    r = F.dim if rank_needed is None else rank_needed
    A = membership_matrix(F, d)
    T = None
    if side is not None:
        if side.n != F.n:
            raise ValueError("side-constraint symbol does not act on the family's space")
        T = toeplitz_matrix(side, d)
        A = np.vstack([A, (SIDE_WEIGHT / eps) * T])
    X, _ = small_right_singular(A, eps)
    Amem = membership_matrix(F, d)
    mem_res = np.linalg.norm(Amem @ X, axis=0) if X.shape[1] else np.zeros(0)
    top_res = np.linalg.norm(T @ X, axis=0) if (T is not None and X.shape[1]) else (np.zeros(0) if T is not None else None)
    if X.shape[1] == 0:
        basis = empty_basis(F.n, d, eps)
    else:
        res = top_res if top_res is not None else mem_res
        basis = PolySubspaceBasis.from_vectors(X, F.n, residuals=res, tol=eps if T is None else eps**2 / SIDE_WEIGHT)
    if r == 0:
        return SpanResult(True, basis, d, 0, 1.0, mem_res, top_res)
    ranks, _ = pointwise_rank(basis, F.points, rank_tol)
    cov = float(np.mean(ranks >= r))
    return SpanResult(cov >= coverage, basis, d, r, cov, mem_res, top_res)


def polynomial_pointwise_kernel(phi: MatrixLaurentPoly, d: int, N: int, eps: float = DEFAULT_EPS) -> PolySubspaceBasis:
    """Polynomials ``f`` of degree ``<= d`` with ``Phi(zeta) f(zeta) = 0`` on the grid (``eps``-approximate)."""
    points = circle_points(N)
    E = _evaluation_blocks(points, phi.n, d)
    vals = phi(points)
    A = np.einsum("jab,jbc->jac", vals, E).reshape(N * phi.m, -1) / np.sqrt(N)
    X, res = small_right_singular(A, eps)
    if X.shape[1] == 0:
        return empty_basis(phi.n, d, eps)
    return PolySubspaceBasis.from_vectors(X, phi.n, residuals=res, tol=eps)
