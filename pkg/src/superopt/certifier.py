"""Numeric verdicts for conditions C1-C4 and for (very) badly approximable symbols.

Every verdict is one of ``"pass"``, ``"fail"`` or ``"inconclusive"``.  A
``fail`` is only issued on a refutation:

* a singular value function that is not flat on the grid,
* a stabilized excess of approximate Toeplitz kernel over the pointwise
  kernel (C2),
* ``||H_Phi|| < ||Phi||_inf``, which rules out any analytic maximizing
  family at the top level, or
* a non-isometric normalized symbol (uniqueness of the best approximation).

Running out of polynomial degree before a spanning family is found gives
``inconclusive``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from ._parallel import pmap
from .hankel import (
    DEFAULT_DMAX,
    DEFAULT_EPS,
    PolySubspaceBasis,
    _kernel_with_gap,
    hankel_norm,
)
from .laurent import (
    DEFAULT_TOL_C1,
    GridError,
    MatrixLaurentPoly,
    SingularProfile,
    WindingUndefined,
    default_grid_size,
    eval_on_grid,
    next_pow2,
    singular_profile,
    winding_number,
)
from .schmidt import (
    COVERAGE,
    SpanResult,
    SubspaceFamily,
    analytic_span_solve,
    polynomial_pointwise_kernel,
    schmidt_family,
)

PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"
C2_ANGLE_TOL = 1e-4
ZBAR = MatrixLaurentPoly.monomial(-1)


class InternalInconsistency(AssertionError):
    """Verdicts that contradict a logical implication between the conditions."""


def degree_schedule(dmax: int, dmin: int = 0) -> list[int]:
    """Degrees tried by the spanning-family search: every degree up to 16, then 24, 32, 48, 64, ..."""
    ds = list(range(dmin, min(dmax, 16) + 1))
    d = 24
    while d <= dmax:
        if d > dmin:
            ds.append(d)
        d = d + 8 if d < 32 else d + d // 2
    if ds and ds[-1] != dmax and dmax > 16:
        ds.append(dmax)
    return ds


@dataclass(frozen=True)
class CertifyConfig:
    """Budgets and tolerances shared by all checks.

    ``N`` is the grid size (``None`` picks the default for the symbol's
    band), ``eps`` the kernel tolerance, ``dmin``/``dmax`` the degree budget
    and ``tol_c1`` the flatness tolerance relative to ``s_0``.
    """

    N: int | None = None
    eps: float = DEFAULT_EPS
    dmin: int | None = None
    dmax: int = DEFAULT_DMAX
    tol_c1: float = DEFAULT_TOL_C1
    coverage: float = COVERAGE

    def __post_init__(self):
        if self.eps <= 0 or self.tol_c1 <= 0:
            raise ValueError("tolerances must be positive")
        if self.N is not None and (self.N < 1 or self.N & (self.N - 1)):
            raise GridError(f"grid size must be a power of two, got {self.N}")
        if self.dmax < 1:
            raise ValueError("dmax must be positive")

    def grid_for(self, phi: MatrixLaurentPoly) -> int:
        if self.N is None:
            return default_grid_size(phi.band)
        if self.N < 2 * phi.band + 2:
            raise GridError(f"grid size {self.N} too small for band {phi.band}; need at least {next_pow2(2 * phi.band + 2)}")
        return self.N

    def to_json_dict(self) -> dict:
        return {"N": self.N, "eps": self.eps, "dmin": self.dmin, "dmax": self.dmax,
                "tol_c1": self.tol_c1, "coverage": self.coverage}


@dataclass
class Verdict:
    """One verdict with its evidence.

    ``witnesses`` holds one :class:`PolySubspaceBasis` per level (or per
    half for C2); ``detail`` holds JSON-ready numbers.
    """

    status: str
    note: str = ""
    detail: dict = field(default_factory=dict)
    witnesses: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def to_json_dict(self) -> dict:
        return {"status": self.status, "note": self.note, "detail": _jsonable(self.detail),
                "witnesses": [w.to_json_dict() for w in self.witnesses]}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x) if np.isfinite(x) else str(float(x))
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    return x


@dataclass
class Certificate:
    """All verdicts for one symbol together with the profile and budgets used."""

    shape: tuple
    band: int
    profile: SingularProfile
    verdicts: dict
    budgets: dict
    extras: dict = field(default_factory=dict)

    def status(self, name: str) -> str:
        return self.verdicts[name].status

    @property
    def conclusive(self) -> bool:
        return all(v.status != INCONCLUSIVE for v in self.verdicts.values())

    def summary(self) -> dict:
        return {k: v.status for k, v in self.verdicts.items()}

    def to_json_dict(self) -> dict:
        return {
            "shape": list(self.shape),
            "band": self.band,
            "profile": self.profile.to_json_dict(),
            "verdicts": {k: v.to_json_dict() for k, v in self.verdicts.items()},
            "budgets": _jsonable(self.budgets),
            "extras": _jsonable(self.extras),
        }

    def dumps(self, pretty: bool = True) -> str:
        return json.dumps(self.to_json_dict(), indent=2 if pretty else None, sort_keys=True)

    def report(self) -> str:
        """Short human-readable summary, one line per verdict."""
        mark = {PASS: "pass", FAIL: "FAIL", INCONCLUSIVE: "inconclusive"}
        lines = [f"symbol {self.shape[0]}x{self.shape[1]}, band {self.band}, "
                 f"levels {[round(x, 10) for x in self.profile.levels]} mult {list(self.profile.multiplicities)}"]
        for k, v in self.verdicts.items():
            lines.append(f"  {k:<24} {mark[v.status]:<13} {v.note}")
        return "\n".join(lines)


# -- shared context -----------------------------------------------------------------


class _Context:
    """Lazily computed grid data reused across checks."""

    def __init__(self, phi: MatrixLaurentPoly, cfg: CertifyConfig):
        self.phi = phi
        self.cfg = cfg
        self.N = cfg.grid_for(phi)
        self.G = eval_on_grid(phi, self.N)
        self.profile = singular_profile(self.G, cfg.tol_c1)
        self._Gt = None
        self._hn = None

    @property
    def Gt(self):
        if self._Gt is None:
            self._Gt = eval_on_grid(self.phi.transpose(), self.N)
        return self._Gt

    @property
    def hankel(self):
        if self._hn is None:
            self._hn = hankel_norm(self.phi)
        return self._hn

    @property
    def sigma0(self) -> float:
        return self.profile.levels[0] if self.profile.levels else 0.0

    def level_tols(self) -> list[float]:
        """Half the gap below each level; used as the Schmidt-family threshold offset."""
        lv = list(self.profile.levels) + [0.0]
        return [(lv[k] - lv[k + 1]) / 2 for k in range(len(lv) - 1)]

    def family(self, k: int, transpose: bool = False) -> SubspaceFamily:
        G = self.Gt if transpose else self.G
        return schmidt_family(G, self.profile.levels[k], self.level_tols()[k])

    def refuted_at_top(self) -> bool:
        """``||H_Phi||`` measurably below ``||Phi||_inf``."""
        return self.hankel.norm < self.sigma0 * (1 - 10 * self.cfg.tol_c1)


def _ctx(phi, cfg) -> _Context:
    return phi if isinstance(phi, _Context) else _Context(phi, cfg or CertifyConfig())


def _search(F: SubspaceFamily, cfg: CertifyConfig, side=None, rank_needed=None) -> tuple[SpanResult | None, list]:
    """Run :func:`analytic_span_solve` along the degree schedule; first success wins."""
    tried = []
    last = None
    for d in degree_schedule(cfg.dmax, cfg.dmin or 0):
        res = analytic_span_solve(F, d, cfg.eps, side=side, rank_needed=rank_needed, coverage=cfg.coverage)
        tried.append((d, res.basis.dim, round(res.coverage, 6)))
        last = res
        if res.found:
            return res, tried
    return (last if last is not None and last.found else None), tried


# -- C1 -----------------------------------------------------------------------------


def check_C1(phi, cfg: CertifyConfig | None = None) -> tuple[Verdict, SingularProfile]:
    """Pass iff every singular value function is constant on the grid within ``tol_c1 * s_0``."""
    ctx = _ctx(phi, cfg)
    p = ctx.profile
    bad = [j for j, f in enumerate(p.index_flat) if not f]
    if bad:
        v = Verdict(FAIL, f"s_{bad[0]} is not constant on the grid",
                    {"nonflat_indices": bad, "deviation": list(p.index_deviation), "tol": p.tol})
    else:
        v = Verdict(PASS, "all singular value functions are constant",
                    {"levels": list(p.levels), "multiplicities": list(p.multiplicities), "tol": p.tol})
    return v, p


# -- C2 -----------------------------------------------------------------------------


def _principal_containment(inner: PolySubspaceBasis, outer: PolySubspaceBasis) -> float:
    """Largest angle between ``inner`` and its projection on ``outer`` (coefficient space)."""
    if len(inner) == 0:
        return 0.0
    if len(outer) == 0:
        return float(np.pi / 2)
    deg = max(inner.degree, outer.degree)
    A, B = inner.padded(deg), outer.padded(deg)
    Qb = np.linalg.qr(B)[0]
    resid = A - Qb @ (Qb.conj().T @ A)
    Qa = np.linalg.qr(A)[0]
    resid = Qa - Qb @ (Qb.conj().T @ Qa)
    return float(np.arcsin(min(np.linalg.norm(resid, 2), 1.0)))


def _excess_vectors(K: PolySubspaceBasis, P: PolySubspaceBasis, count: int) -> np.ndarray:
    """Orthonormal directions of ``K`` farthest from ``P``."""
    X = K.vectors()
    if len(P):
        Qp = np.linalg.qr(P.vectors())[0]
        X = X - Qp @ (Qp.conj().T @ X)
    U, _, _ = np.linalg.svd(X, full_matrices=False)
    return U[:, :count]


def _c2_half(toep_symbol: MatrixLaurentPoly, point_symbol: MatrixLaurentPoly, cfg: CertifyConfig, N: int) -> dict:
    """Compare ``Ker T_S`` with ``{f : P f = 0}`` by stabilizing the dimension excess."""
    K = max(toep_symbol.band, point_symbol.band)
    dmin = cfg.dmin if cfg.dmin is not None else 2 * K + 2
    cache = {}

    def data(d):
        if d not in cache:
            kt, gap = _kernel_with_gap(toep_symbol, d, cfg.eps)
            Nd = max(N, next_pow2(2 * (d + K) + 2))
            kp = polynomial_pointwise_kernel(point_symbol, d, Nd, cfg.eps)
            cache[d] = (kt, gap, kp)
        return cache[d]

    trajectory = []
    for d in range(dmin, cfg.dmax - 1, 2):
        kt, ga, kp = data(d)
        kt2, gb, kp2 = data(d + 2)
        e1, e2 = len(kt) - len(kp), len(kt2) - len(kp2)
        trajectory.append([d, len(kt), len(kp)])
        stable_gap = np.isinf(ga) or gb >= 0.5 * ga
        if e1 == e2 and stable_gap:
            trajectory.append([d + 2, len(kt2), len(kp2)])
            angle = _principal_containment(kp, kt)
            out = {"degree": d, "dim_toeplitz_kernel": len(kt), "dim_pointwise_kernel": len(kp),
                   "excess": e1, "containment_angle": angle, "trajectory": trajectory}
            if e1 == 0 and angle <= C2_ANGLE_TOL:
                out["status"] = PASS
                out["witness"] = kt
            elif e1 > 0:
                X = _excess_vectors(kt, kp, e1)
                w = PolySubspaceBasis.from_vectors(X, toep_symbol.n, residuals=_toeplitz_residuals(toep_symbol, X, d),
                                                   tol=cfg.eps)
                out["status"] = FAIL
                out["witness"] = w
                out["pointwise_residuals"] = _pointwise_l2(point_symbol, w, Nd=max(N, next_pow2(2 * (d + K) + 2)))
            else:
                out["status"] = INCONCLUSIVE
            return out
    return {"status": INCONCLUSIVE, "trajectory": trajectory, "reason": f"excess not stable by degree {cfg.dmax}"}


def _toeplitz_residuals(S, X, d):
    from .hankel import toeplitz_matrix

    T = toeplitz_matrix(S, d)
    return np.linalg.norm(T @ X, axis=0) / np.maximum(np.linalg.norm(X, axis=0), 1e-300)


def _pointwise_l2(P: MatrixLaurentPoly, w: PolySubspaceBasis, Nd: int) -> list[float]:
    """``||P f||_{L^2} / ||f||_{L^2}`` for each witness function."""
    pts = eval_on_grid(P, Nd)
    vals = w.evaluate(pts.points)
    Pf = np.einsum("jab,jbr->jar", pts.values, vals)
    num = np.sqrt(np.mean(np.sum(np.abs(Pf) ** 2, axis=1), axis=0))
    den = np.sqrt(np.mean(np.sum(np.abs(vals) ** 2, axis=1), axis=0))
    return [float(x) for x in num / den]


def check_C2(phi, cfg: CertifyConfig | None = None) -> Verdict:
    """Both kernel identities of C2, decided by dimension excess at stabilized degree.

    First half: ``Ker T_{zbar Phi^*}`` against ``{f : Phi^* f = 0}``.
    Second half: ``Ker T_{zbar conj(Phi)}`` against ``{f : conj(Phi) f = 0}``.
    """
    ctx = _ctx(phi, cfg)
    cfg = ctx.cfg
    P1 = ctx.phi.adjoint()
    P2 = ctx.phi.conj()
    halves = pmap(lambda P: _c2_half(ZBAR * P, P, cfg, ctx.N), [P1, P2])
    statuses = [h["status"] for h in halves]
    if FAIL in statuses:
        status = FAIL
    elif INCONCLUSIVE in statuses:
        status = INCONCLUSIVE
    else:
        status = PASS
    names = ("first", "conj")
    note = ", ".join(f"{n} half {s}" for n, s in zip(names, statuses))
    detail = {n: {k: v for k, v in h.items() if k != "witness"} for n, h in zip(names, halves)}
    witnesses = [h.get("witness") for h in halves]
    witnesses = [w for w in witnesses if w is not None]
    return Verdict(status, note, detail, witnesses)


# -- C3 -----------------------------------------------------------------------------


def _families(ctx: _Context, transpose: bool):
    return [ctx.family(k, transpose) for k in range(ctx.profile.n_levels)]


def check_C3(phi, cfg: CertifyConfig | None = None) -> Verdict:
    """Analyticity of the Schmidt families of ``Phi`` and ``Phi^t`` at every nonzero level."""
    ctx = _ctx(phi, cfg)
    c1, _ = check_C1(ctx)
    if not c1.passed:
        return Verdict(FAIL, "C1 fails, and analytic Schmidt families force constant singular values",
                       {"cause": "C1"})
    jobs = [(t, k) for t in (False, True) for k in range(ctx.profile.n_levels)]
    fams = {False: None, True: None}
    fams[False] = _families(ctx, False)
    fams[True] = _families(ctx, True)
    results = pmap(lambda job: _search(fams[job[0]][job[1]], ctx.cfg), jobs)
    detail, witnesses, status = {}, [], PASS
    for (t, k), (res, tried) in zip(jobs, results):
        key = f"{'transpose' if t else 'phi'}[{k}]"
        detail[key] = {"level": ctx.profile.levels[k], "found": res is not None, "tried": tried}
        if res is None:
            status = INCONCLUSIVE
        else:
            detail[key]["degree"] = res.degree
            witnesses.append(res.basis)
    note = "all Schmidt families analytic" if status == PASS else "no polynomial span found within the degree budget"
    return Verdict(status, note, detail, witnesses)


# -- C4 -----------------------------------------------------------------------------


def check_C4(phi, cfg: CertifyConfig | None = None) -> Verdict:
    """Each Schmidt family at a nonzero level spanned by polynomials in ``Ker T_Phi``."""
    ctx = _ctx(phi, cfg)
    c1, _ = check_C1(ctx)
    if not c1.passed:
        return Verdict(FAIL, "C1 fails, and C4 forces constant singular values", {"cause": "C1"})
    L = ctx.profile.n_levels
    fams = _families(ctx, False)
    results = pmap(lambda k: _search(fams[k], ctx.cfg, side=ctx.phi), range(L))
    detail, witnesses, status, failed_at = {}, [], PASS, None
    for k, (res, tried) in enumerate(results):
        detail[f"level[{k}]"] = {"level": ctx.profile.levels[k], "rank_needed": fams[k].dim,
                                 "found": res is not None, "tried": tried}
        if res is None:
            status = INCONCLUSIVE if status == PASS else status
            if k == 0 and ctx.refuted_at_top():
                status, failed_at = FAIL, 0
        else:
            detail[f"level[{k}]"]["degree"] = res.degree
            witnesses.append(res.basis)
    detail["hankel_norm"] = ctx.hankel.norm
    if status == PASS:
        note = f"witnesses found at all {L} levels"
    elif status == FAIL:
        note = f"fails at sigma = {ctx.profile.levels[failed_at]:.6g}: ||H_Phi|| < ||Phi||_inf"
    else:
        note = "no witnesses within the degree budget"
    return Verdict(status, note, detail, witnesses)


# -- theorems ------------------------------------------------------------------------


def certify_badly_approximable(phi, cfg: CertifyConfig | None = None) -> Verdict:
    """``s_0`` constant and some ``f`` in ``Ker T_Phi`` maximizing ``Phi(zeta)`` almost everywhere."""
    ctx = _ctx(phi, cfg)
    p = ctx.profile
    if p.n_levels == 0:
        return Verdict(PASS, "zero symbol", {"hankel_norm": 0.0})
    if not p.index_flat[0]:
        return Verdict(FAIL, "||Phi(zeta)|| is not constant", {"deviation": p.index_deviation[0], "tol": p.tol})
    F = ctx.family(0)
    res, tried = _search(F, ctx.cfg, side=ctx.phi, rank_needed=1)
    detail = {"sigma0": ctx.sigma0, "hankel_norm": ctx.hankel.norm, "tried": tried}
    if res is None:
        if ctx.refuted_at_top():
            return Verdict(FAIL, "||H_Phi|| < ||Phi||_inf", detail)
        return Verdict(INCONCLUSIVE, "no maximizing witness within the degree budget", detail)
    # the witness must be a pointwise maximizing vector on almost all of the grid
    vals = res.basis.evaluate(ctx.G.points)
    Pf = np.einsum("jab,jbr->jar", ctx.G.values, vals)
    ratio = np.linalg.norm(Pf, axis=1) / np.maximum(np.linalg.norm(vals, axis=1), 1e-300)
    tol = 10 * p.tol
    share = np.mean(ratio >= ctx.sigma0 - tol, axis=0)
    best = int(np.argmax(share))
    detail.update({"degree": res.degree, "maximizing_share": float(share[best]), "witness_index": best})
    if share[best] < ctx.cfg.coverage:
        return Verdict(INCONCLUSIVE, "witness is not pointwise maximizing on enough of the grid", detail)
    w = PolySubspaceBasis(n=res.basis.n, degree=res.basis.degree, coeffs=res.basis.coeffs[best:best + 1],
                          residuals=res.basis.residuals[best:best + 1], tol=res.basis.tol)
    return Verdict(PASS, "maximizing analytic witness in Ker T_Phi", detail, [w])


def certify_very_badly_approximable(phi, cfg: CertifyConfig | None = None, c4: Verdict | None = None) -> Certificate:
    """C4 at every nonzero level; admissibility is automatic for Laurent polynomials."""
    ctx = _ctx(phi, cfg)
    c1, _ = check_C1(ctx)
    c4 = c4 if c4 is not None else check_C4(ctx)
    v = Verdict(c4.status, "C4 " + c4.note, dict(c4.detail), list(c4.witnesses))
    v.detail["essential_norm"] = 0.0
    cert = _certificate(ctx, {"C1": c1, "C4": c4, "very_badly_approximable": v})
    _coherence(cert)
    return cert


def certify_unique_best(phi, cfg: CertifyConfig | None = None) -> Verdict:
    """Zero as the only best approximation: isometric values and a full-rank span in ``Ker T_Phi``.

    The symbol is normalized by its grid sup norm; when ``n > m`` the
    transpose is examined instead.
    """
    ctx = _ctx(phi, cfg)
    transposed = ctx.phi.n > ctx.phi.m
    work = _Context(ctx.phi.transpose(), ctx.cfg) if transposed else ctx
    s0 = work.G.sup_norm
    if s0 == 0:
        return Verdict(FAIL, "zero symbol has many best approximations", {"transposed": transposed})
    A = work.G.values / s0
    gram = np.einsum("jba,jbc->jac", A.conj(), A)
    iso = float(np.max(np.abs(gram - np.eye(A.shape[2]))))
    tol = 10 * work.cfg.tol_c1
    detail = {"transposed": transposed, "isometry_deviation": iso, "tol": tol, "sup_norm": s0}
    if iso > tol:
        return Verdict(FAIL, "normalized symbol does not take isometric values", detail)
    F = SubspaceFamily.constant(np.eye(A.shape[2]), work.N)
    res, tried = _search(F, work.cfg, side=work.phi)
    detail["tried"] = tried
    if res is None:
        if work.refuted_at_top():
            return Verdict(FAIL, "||H_Phi|| < ||Phi||_inf", detail)
        return Verdict(INCONCLUSIVE, "no full-rank span within the degree budget", detail)
    detail["degree"] = res.degree
    return Verdict(PASS, "isometric with a full-rank span in Ker T_Phi", detail, [res.basis])


# -- full run ------------------------------------------------------------------------


def _certificate(ctx: _Context, verdicts: dict) -> Certificate:
    extras = {"hankel_norm": ctx.hankel.norm, "sup_norm": ctx.G.sup_norm, "essential_norm": 0.0}
    if ctx.phi.is_scalar:
        try:
            extras["winding_number"] = winding_number(ctx.phi, ctx.G)
        except (WindingUndefined, GridError) as exc:
            extras["winding_number"] = None
            extras["winding_note"] = str(exc)
    budgets = dict(ctx.cfg.to_json_dict())
    budgets["N"] = ctx.N
    return Certificate(shape=ctx.phi.shape, band=ctx.phi.band, profile=ctx.profile,
                       verdicts=verdicts, budgets=budgets, extras=extras)


def _coherence(cert: Certificate) -> None:
    """C4 pass forces C1 pass; C4 pass forces C3 not to fail; VBA pass forces badly approximable pass."""
    st = cert.summary()
    if st.get("C4") == PASS:
        if st.get("C1", PASS) != PASS:
            raise InternalInconsistency("C4 passed while C1 failed")
        if st.get("C3", PASS) == FAIL:
            raise InternalInconsistency("C4 passed while C3 failed")
    if st.get("very_badly_approximable") == PASS and st.get("badly_approximable", PASS) == FAIL:
        raise InternalInconsistency("very badly approximable but not badly approximable")


def certify(phi: MatrixLaurentPoly, cfg: CertifyConfig | None = None, checks=None) -> Certificate:
    """Run C1, C2, C3, C4, badly approximable, very badly approximable and uniqueness in order."""
    ctx = _Context(phi, cfg or CertifyConfig())
    wanted = checks or ("C1", "C2", "C3", "C4", "badly_approximable", "very_badly_approximable", "unique_best")
    verdicts: dict = {}
    c1, _ = check_C1(ctx)
    verdicts["C1"] = c1
    if "C2" in wanted:
        verdicts["C2"] = check_C2(ctx)
    if "C3" in wanted:
        verdicts["C3"] = check_C3(ctx)
    c4 = None
    if "C4" in wanted or "very_badly_approximable" in wanted:
        c4 = check_C4(ctx)
        if "C4" in wanted:
            verdicts["C4"] = c4
    if "badly_approximable" in wanted:
        verdicts["badly_approximable"] = certify_badly_approximable(ctx)
    if "very_badly_approximable" in wanted:
        vba = certify_very_badly_approximable(ctx, c4=c4).verdicts["very_badly_approximable"]
        verdicts["very_badly_approximable"] = vba
    if "unique_best" in wanted:
        verdicts["unique_best"] = certify_unique_best(ctx)
    cert = _certificate(ctx, verdicts)
    _coherence(cert)
    return cert
