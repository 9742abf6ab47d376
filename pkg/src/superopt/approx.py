"""Grid oracles for best and superoptimal analytic approximation.

The unknown is an analytic matrix polynomial ``F`` of degree ``<= dF``.  The
best approximation minimizes ``max_j ||Phi(zeta_j) - F(zeta_j)||`` over the
grid: first through the smooth surrogates ``(mean s_0^{2p})^{1/2p}`` for
``p = 1, 2, 4, ..., 64`` (L-BFGS, warm started), then through the exact
epigraph SDP solved with Clarabel.  Superoptimal stages minimize the smoothed
``s_j`` with quadratic penalties holding ``max s_i`` below the earlier
stage values plus a slack.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp, softmax

from .hankel import TOP_CLUSTER_RTOL, hankel_matrix, hankel_norm
from .laurent import MatrixLaurentPoly, circle_points, default_grid_size, eval_on_grid, fit, next_pow2

log = logging.getLogger(__name__)

P_SCHEDULE = (1, 2, 4, 8, 16, 32, 64)
SLACK = 1e-4
KYFAN_SLACK = 1e-8
CHECK_OVERSAMPLE = 8
SV_IDENTITY_TOL = 5e-2


@dataclass
class MinimaxResult:
    """Outcome of an approximation run.

    ``profile[j]`` is ``max_zeta s_j(Phi - F)`` on a check grid
    ``CHECK_OVERSAMPLE`` times finer than the optimization grid.
    ``trace`` lists ``(stage, label, value)`` with the running best value of
    the stage objective.  ``flags`` is empty for a clean run.
    """

    F: MatrixLaurentPoly
    profile: tuple
    lower_bound: float
    trace: list
    degree: int
    N: int
    caps: tuple = ()
    slack: float = 0.0
    flags: list = field(default_factory=list)

    @property
    def value(self) -> float:
        return self.profile[0] if self.profile else 0.0

    @property
    def converged(self) -> bool:
        return not self.flags

    def sup_norm_F(self, N: int | None = None) -> float:
        N = N or self.N * CHECK_OVERSAMPLE
        return eval_on_grid(self.F, N).sup_norm if self.F.band * 2 + 2 <= N else float("nan")

    def to_json_dict(self) -> dict:
        return {
            "F": self.F.to_json_dict(),
            "profile": list(self.profile),
            "lower_bound": self.lower_bound,
            "trace": [[s, str(l), float(v)] for s, l, v in self.trace],
            "degree": self.degree,
            "N": self.N,
            "caps": list(self.caps),
            "slack": self.slack,
            "flags": list(self.flags),
            "F_sup_norm": self.sup_norm_F(),
        }


class _GridProblem:
    """Residual ``Phi - F`` on the grid as a function of packed real coordinates."""

    def __init__(self, phi: MatrixLaurentPoly, dF: int, N: int):
        self.phi = phi
        self.m, self.n = phi.shape
        self.dF = dF
        self.N = N
        self.points = circle_points(N)
        self.values = eval_on_grid(phi, N).values
        self.pw = self.points[:, None] ** np.arange(dF + 1)
        self.size = (dF + 1) * self.m * self.n

    def unpack(self, x) -> np.ndarray:
        x = np.asarray(x)
        return (x[: self.size] + 1j * x[self.size:]).reshape(self.dF + 1, self.m, self.n)

    def pack(self, F) -> np.ndarray:
        F = np.asarray(F).reshape(-1)
        return np.concatenate([F.real, F.imag])

    def residual(self, x) -> np.ndarray:
        return self.values - np.einsum("jt,tab->jab", self.pw, self.unpack(x))

    def svd(self, x):
        return np.linalg.svd(self.residual(x), full_matrices=False)

    def sv_gradient(self, U, Vh, idx: int, w) -> np.ndarray:
        """Gradient of ``sum_j w_j s_idx(zeta_j)`` with respect to the packed coordinates."""
        u = U[:, :, idx]
        v = np.conj(Vh[:, idx, :])
        M = np.conj(u)[:, :, None] * v[:, None, :]
        g = np.einsum("j,jt,jab->tab", w, self.pw, M).reshape(-1)
        return np.concatenate([-g.real, g.imag])

    def poly(self, x) -> MatrixLaurentPoly:
        F = self.unpack(x)
        return MatrixLaurentPoly({t: F[t] for t in range(self.dF + 1)}, shape=(self.m, self.n))


def _lp_objective(prob: _GridProblem, idx: int, p: int, caps=(), mu: float = 0.0):
    """Smoothed max of ``s_idx`` plus ``mu * mean(relu(s_i - cap_i)^2)`` for ``i < idx``."""

    def f(x):
        U, s, Vh = prob.svd(x)
        sj = np.maximum(s[:, idx], 1e-300)
        L = logsumexp(2 * p * np.log(sj)) - np.log(prob.N)
        val = np.exp(L / (2 * p))
        w = val * softmax(2 * p * np.log(sj)) / sj
        grad = prob.sv_gradient(U, Vh, idx, w)
        for i, cap in enumerate(caps):
            viol = np.maximum(s[:, i] - cap, 0.0)
            if viol.any():
                val += mu * np.mean(viol**2)
                grad += prob.sv_gradient(U, Vh, i, 2 * mu * viol / prob.N)
        return val, grad

    return f


def _grid_max(prob: _GridProblem, x, idx: int) -> float:
    return float(np.linalg.svd(prob.residual(x), compute_uv=False)[:, idx].max())


def _profile(phi: MatrixLaurentPoly, F: MatrixLaurentPoly, N: int) -> tuple:
    E = phi - F
    N = max(N, next_pow2(2 * E.band + 2))
    s = eval_on_grid(E, N).s
    return tuple(float(x) for x in s.max(axis=0))


def _svec_index(k: int):
    """Row/column indices of the upper triangle, column by column, and the sqrt(2) scaling."""
    rows, cols = np.triu_indices(k)
    order = np.lexsort((rows, cols))
    rows, cols = rows[order], cols[order]
    scale = np.where(rows == cols, 1.0, np.sqrt(2.0))
    return rows, cols, scale


def _real_embed(M: np.ndarray) -> np.ndarray:
    """``[[Re M, -Im M], [Im M, Re M]]`` for a stack of Hermitian matrices."""
    top = np.concatenate([M.real, -M.imag], axis=-1)
    bot = np.concatenate([M.imag, M.real], axis=-1)
    return np.concatenate([top, bot], axis=-2)


def _dilation(A: np.ndarray) -> np.ndarray:
    """``[[0, A], [A^*, 0]]`` for a stack of ``m x n`` matrices."""
    N, m, n = A.shape
    D = np.zeros((N, m + n, m + n), dtype=complex)
    D[:, :m, m:] = A
    D[:, m:, :m] = np.conj(np.swapaxes(A, 1, 2))
    return D


def _hermitian_basis(k: int) -> np.ndarray:
    """Real basis of ``k x k`` Hermitian matrices: symmetric real parts, then antisymmetric imaginary parts."""
    out = []
    for a in range(k):
        for b in range(a, k):
            E = np.zeros((k, k), dtype=complex)
            E[a, b] = E[b, a] = 1.0
            out.append(E)
    for a in range(k):
        for b in range(a + 1, k):
            E = np.zeros((k, k), dtype=complex)
            E[a, b], E[b, a] = 1j, -1j
            out.append(E)
    return np.stack(out)


def _kyfan_sdp(prob: _GridProblem, rank: int, caps: dict | None = None):
    """Minimize ``max_j ||A_j||_(rank)`` subject to ``||A_j||_(r) <= caps[r]``, as one Clarabel SDP.

    ``||.||_(r)`` is the sum of the ``r`` largest singular values, i.e. of
    the ``r`` largest eigenvalues of the Hermitian dilation ``D_j`` of
    ``A_j = Phi(zeta_j) - F(zeta_j)``.  For ``r = 1`` the constraint is
    ``b I - D_j >= 0``; for ``r > 1`` it is ``Z_j >= 0``, ``Z_j + s_j I - D_j >= 0``
    and ``tr Z_j + r s_j <= b``.  All Hermitian constraints use the real
    embedding.  Returns packed coordinates of ``F``, or ``None`` when the
    solver does not report success.
    """
    import clarabel
    import scipy.sparse as sp

    m, n, T, N = prob.m, prob.n, prob.dF + 1, prob.N
    k = m + n
    rows, cols, scale = _svec_index(2 * k)
    L = rows.size

    def svec(M):
        return M[..., rows, cols] * scale

    nF = 2 * prob.size
    Fblock = []
    for part in (1.0, 1j):
        for t in range(T):
            for a in range(m):
                for c in range(n):
                    E = np.zeros((N, m, n), dtype=complex)
                    E[:, a, c] = part * prob.pw[:, t]
                    Fblock.append(-svec(_real_embed(_dilation(E))).reshape(-1))
    Fblock = sp.csc_matrix(np.stack(Fblock, axis=1))
    DPhi = svec(_real_embed(-_dilation(prob.values))).reshape(-1)
    I_loc = svec(np.eye(2 * k))
    Hb = _hermitian_basis(k)
    Z_loc = np.stack([svec(_real_embed(H)) for H in Hb], axis=1)
    trace_row = np.array([np.trace(H).real for H in Hb])

    constraints = [(r, b) for r, b in sorted((caps or {}).items())] + [(rank, None)]
    nloc = [0 if r == 1 else N * (k * k + 1) for r, _ in constraints]
    offsets = nF + np.concatenate([[0], np.cumsum(nloc)]).astype(int)
    nv = int(offsets[-1]) + 1
    iu = nv - 1

    blocks, rhs, cones = [], [], []

    def pad(M, start):
        M = sp.csc_matrix(M)
        return sp.hstack([sp.csc_matrix((M.shape[0], start)), M,
                          sp.csc_matrix((M.shape[0], nv - start - M.shape[1]))])

    for (r, bound), off in zip(constraints, offsets[:-1]):
        if r == 1:
            A = sp.hstack([Fblock, sp.csc_matrix((N * L, nv - nF))]).tolil()
            if bound is None:
                A[:, iu] = -np.tile(I_loc, N)[:, None]
                b = DPhi
            else:
                b = DPhi + bound * np.tile(I_loc, N)
            blocks.append(sp.csc_matrix(A))
            rhs.append(b)
            cones += [clarabel.PSDTriangleConeT(2 * k)] * N
            continue
        local = np.hstack([Z_loc, I_loc[:, None]])
        eyeN = sp.identity(N, format="csc")
        # Z_j + s_j I - D(Phi - F) >= 0
        A1 = sp.hstack([Fblock, sp.csc_matrix((N * L, int(off) - nF))])
        A1 = sp.hstack([A1, -sp.kron(eyeN, local), sp.csc_matrix((N * L, nv - int(off) - N * (k * k + 1)))])
        blocks.append(sp.csc_matrix(A1))
        rhs.append(DPhi)
        cones += [clarabel.PSDTriangleConeT(2 * k)] * N
        # Z_j >= 0
        zonly = np.hstack([Z_loc, np.zeros((L, 1))])
        blocks.append(pad(-sp.kron(eyeN, zonly), int(off)))
        rhs.append(np.zeros(N * L))
        cones += [clarabel.PSDTriangleConeT(2 * k)] * N
        # tr Z_j + r s_j <= bound (or u)
        tr = np.concatenate([trace_row, [float(r)]])
        A3 = pad(sp.kron(eyeN, tr[None, :]), int(off)).tolil()
        if bound is None:
            A3[:, iu] = -1.0
            b3 = np.zeros(N)
        else:
            b3 = np.full(N, float(bound))
        blocks.append(sp.csc_matrix(A3))
        rhs.append(b3)
        cones.append(clarabel.NonnegativeConeT(N))

    A = sp.vstack(blocks, format="csc")
    b = np.concatenate(rhs)
    q = np.zeros(nv)
    q[iu] = 1.0
    P = sp.csc_matrix((nv, nv))
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    sol = clarabel.DefaultSolver(P, q, A, b, cones, settings).solve()
    if str(sol.status) not in ("Solved", "AlmostSolved"):
        log.info("Ky Fan SDP (rank %d) ended with status %s", rank, sol.status)
        return None
    return np.asarray(sol.x[:nF])


def _sdp_polish(prob: _GridProblem, x0=None):
    """Exact grid minimax ``min t`` s.t. ``||A_j|| <= t``; the rank-one case of :func:`_kyfan_sdp`."""
    return _kyfan_sdp(prob, 1)


def _smoothed_stage(prob, x, idx, stage, trace, caps=(), mus=(0.0,), maxiter=400):
    """Warm-started chain over ``p`` (and penalty weights); returns the best iterate seen."""
    best_x = x
    best_val = _grid_max(prob, x, idx) if not caps else _stage_value(prob, x, idx, caps)
    for mu in mus:
        for p in P_SCHEDULE:
            res = minimize(_lp_objective(prob, idx, p, caps, mu), x, jac=True,
                           method="L-BFGS-B", options={"maxiter": maxiter})
            x = res.x
            val = _grid_max(prob, x, idx) if not caps else _stage_value(prob, x, idx, caps)
            if val < best_val:
                best_x, best_val = x, val
            trace.append((stage, f"p={p}" + (f",mu={mu:g}" if caps else ""), best_val))
    return best_x, best_val


def _stage_value(prob, x, idx, caps) -> float:
    """Stage objective with infeasible points ranked last."""
    s = np.linalg.svd(prob.residual(x), compute_uv=False)
    if any(s[:, i].max() > c for i, c in enumerate(caps)):
        return np.inf
    return float(s[:, idx].max())


def best_approx(phi: MatrixLaurentPoly, dF: int | None = None, N: int | None = None, polish: bool = True,
                x0: np.ndarray | None = None) -> MinimaxResult:
    """Best analytic approximation of degree ``<= dF`` in the grid sup norm.

    The trace is nonincreasing by construction (running best); the result
    is flagged if the final value undercuts the Hankel norm, which would
    mean the grid is too coarse.
    """
    if dF is None:
        dF = 2 * phi.band + 4
    if dF < 0:
        raise ValueError("dF must be nonnegative")
    N = N or default_grid_size(max(phi.band, dF))
    prob = _GridProblem(phi, dF, N)
    x = np.zeros(2 * prob.size) if x0 is None else np.asarray(x0, dtype=float)
    trace = [(0, "start", _grid_max(prob, x, 0))]
    x, val = _smoothed_stage(prob, x, 0, 0, trace)
    flags = []
    if polish:
        xp = _sdp_polish(prob, x)
        if xp is None:
            flags.append("sdp polish failed")
        else:
            vp = _grid_max(prob, xp, 0)
            if vp < val:
                x, val = xp, vp
            trace.append((0, "sdp", val))
    F = prob.poly(x)
    lb = hankel_norm(phi).norm
    prof = _profile(phi, F, N * CHECK_OVERSAMPLE)
    if prof[0] < lb - 1e-9:
        flags.append("value below the Hankel norm: grid too coarse")
    return MinimaxResult(F=F, profile=prof, lower_bound=lb, trace=trace, degree=dF, N=N, flags=flags)


def superoptimal_approx(phi: MatrixLaurentPoly, dF: int | None = None, stages: int | None = None,
                        N: int | None = None, slack: float = SLACK) -> MinimaxResult:
    """Lexicographic minimization of ``max s_0, max s_1, ...`` over analytic ``F``.

    Stage ``j`` keeps ``max s_i <= t_i + slack * sigma_0`` for ``i < j``.
    A stage whose result breaks an earlier cap is flagged.
    """
    m, n = phi.shape
    p = min(m, n)
    if p > 3:
        raise ValueError("superoptimal oracle is limited to min(m, n) <= 3")
    stages = p if stages is None else min(stages, p)
    if dF is None:
        dF = min(2 * phi.band + 4, 8)
    if dF > 8:
        raise ValueError("superoptimal oracle is limited to dF <= 8")
    base = best_approx(phi, dF, N)
    N = base.N
    prob = _GridProblem(phi, dF, N)
    x = prob.pack(np.stack([base.F.coeff(t) for t in range(dF + 1)]))
    sigma0 = eval_on_grid(phi, N).sup_norm
    sl = slack * max(sigma0, 1e-300)
    t_star = [_grid_max(prob, x, 0)]
    trace = list(base.trace)
    flags = list(base.flags)
    caps_out = [t_star[0] + sl]
    for j in range(1, stages):
        caps = tuple(t + sl / 2 for t in t_star)
        mus = (1e2 / max(sigma0, 1e-300), 1e4 / max(sigma0, 1e-300), 1e6 / max(sigma0, 1e-300))
        x_new, val = _smoothed_stage(prob, x, j, j, trace, caps=caps, mus=mus)
        x_new, val = _kyfan_stage(prob, x if np.isinf(val) else x_new, val, j, sl,
                                  KYFAN_SLACK * max(sigma0, 1e-300), t_star, trace)
        if np.isinf(val):
            # keep the previous iterate, which satisfies the caps
            val = _stage_value(prob, x, j, tuple(t + sl for t in t_star))
            if np.isinf(val):
                flags.append(f"stage {j} infeasible within slack")
                val = _grid_max(prob, x, j)
        else:
            x = x_new
        s = np.linalg.svd(prob.residual(x), compute_uv=False)
        for i, t in enumerate(t_star):
            if s[:, i].max() > t + sl:
                flags.append(f"stage {j} raised s_{i} above its cap")
        t_star.append(float(s[:, j].max()))
        caps_out.append(t_star[-1] + sl)
    F = prob.poly(x)
    prof = _profile(phi, F, N * CHECK_OVERSAMPLE)
    return MinimaxResult(F=F, profile=prof, lower_bound=base.lower_bound, trace=trace, degree=dF, N=N,
                         caps=tuple(caps_out), slack=sl, flags=flags)


def _kyfan_stage(prob, x, val, j, sl, kf_sl, t_star, trace):
    """Convex stage ``j``: minimize the max Ky Fan ``(j+1)``-norm with the lower sums capped.

    The caps are the grid maxima of the Ky Fan ``r``-norms at ``x`` plus
    ``kf_sl``.  The lower stages are nearly degenerate (``s_i`` is constant
    at the optimum), so the slack is kept at solver precision: ``t_j``
    moves roughly like the square root of it.  The result replaces ``x``
    only if it respects the individual caps ``t_i + sl`` and lowers
    ``max s_j``.
    """
    s = np.linalg.svd(prob.residual(x), compute_uv=False)
    csum = np.cumsum(s, axis=1)
    for widen in (1.0, 1e2, 1e4):
        caps = {r: float(csum[:, r - 1].max()) + widen * kf_sl for r in range(1, j + 1)}
        xs = _kyfan_sdp(prob, j + 1, caps)
        if xs is not None:
            break
    else:
        trace.append((j, "kyfan sdp failed", val))
        return x, val
    vs = _stage_value(prob, xs, j, tuple(t + sl for t in t_star))
    if vs < val:
        x, val = xs, vs
    trace.append((j, "kyfan sdp", val))
    return x, val


@dataclass(frozen=True)
class AAKResult:
    """Scalar best approximation from a maximizing vector of the Hankel matrix.

    ``error`` holds ``(H xi) / xi`` on the grid and ``approximant`` the
    analytic part of the fitted ``phi - error``.
    """

    approximant: MatrixLaurentPoly
    error: np.ndarray
    norm: float
    N: int

    @property
    def modulus_deviation(self) -> float:
        return float(np.max(np.abs(np.abs(self.error) - self.norm)))


def scalar_aak_best(phi: MatrixLaurentPoly, N: int | None = None, rtol: float = TOP_CLUSTER_RTOL) -> AAKResult:
    """Best analytic approximation of a scalar symbol via the Hankel maximizing vector.

    Raises
    ------
    ValueError
        If the symbol is not scalar or the top Hankel singular value is not simple.
    """
    if not phi.is_scalar:
        raise ValueError("scalar symbol required")
    N = N or default_grid_size(phi.band)
    pts = circle_points(N)
    K = phi.band
    vals = eval_on_grid(phi, N).values[:, 0, 0]
    if K == 0 or not phi.coanalytic_part().coeffs.any():
        return AAKResult(phi.analytic_part(), np.zeros(N, dtype=complex), 0.0, N)
    hr = hankel_matrix(phi, K - 1)
    s = hr.singular_values
    if len(s) > 1 and s[1] >= s[0] * (1 - rtol):
        raise ValueError("top Hankel singular value is not simple")
    xi = hr.right_vectors[:, 0]
    Hxi = hr.matrix @ xi
    xi_vals = np.polyval(xi[::-1], pts)
    h_vals = np.polyval(np.concatenate([Hxi[::-1], [0.0]]), np.conj(pts))
    if np.abs(xi_vals).min() <= 1e-12 * np.abs(xi_vals).max():
        raise ValueError("maximizing vector vanishes on the grid")
    err = h_vals / xi_vals
    approx_vals = vals - err
    F = fit(approx_vals[:, None, None]).analytic_part()
    return AAKResult(F, err, float(s[0]), N)


def check_sv_identity(phi: MatrixLaurentPoly, R: MinimaxResult, tol: float = SV_IDENTITY_TOL) -> dict:
    """Deviation of ``s_j(Phi - F)(zeta)`` from its grid maximum ``t_j``, over all ``j`` and grid points."""
    E = phi - R.F
    N = max(R.N * CHECK_OVERSAMPLE, next_pow2(2 * E.band + 2))
    s = eval_on_grid(E, N).s
    t = np.asarray(R.profile)
    dev = np.abs(s - t[None, :]).max(axis=0)
    worst = float(dev.max()) if dev.size else 0.0
    return {"deviation": worst, "per_index": [float(x) for x in dev], "t": [float(x) for x in t],
            "tol": tol, "passed": bool(worst <= tol and R.converged), "flags": list(R.flags)}
