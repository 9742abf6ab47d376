"""Constructors for symbols with known structure.

Thematic 2x2 blocks ``[[v1, -conj(v2)], [v2, conj(v1)]]`` built from coprime
polynomial columns, block embeddings of them as balanced factors, products
of the canonical form

    Phi = W_0^* ... W_{l-1}^* diag(s_0 U_0, ..., s_{l-1} U_{l-1}, 0) V_{l-1}^* ... V_0^*

with ``U_j = zbar**k_j * Q_j`` (``Q_j`` a constant unitary), the worked 2x2
examples, and seeded analytic perturbations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import unitary_group

from .laurent import MatrixLaurentPoly, default_grid_size, eval_on_grid

UNIT_TOL = 1e-10
COPRIME_TOL = 1e-8

Z = MatrixLaurentPoly.monomial(1)
ZBAR = MatrixLaurentPoly.monomial(-1)


class FactoryError(ValueError):
    pass


def _poly_roots(p: MatrixLaurentPoly) -> np.ndarray | None:
    """Roots of an analytic scalar polynomial; ``None`` for the zero polynomial."""
    c = np.array([p.coeff(k)[0, 0] for k in range(p.band + 1)])
    nz = np.flatnonzero(np.abs(c) > 1e-14)
    if nz.size == 0:
        return None
    c = c[: nz[-1] + 1]
    return np.roots(c[::-1])


@dataclass(frozen=True)
class ThematicPair:
    """Analytic scalar polynomials with ``|v1|^2 + |v2|^2 = 1`` on the circle and no common zero in the closed disk."""

    v1: MatrixLaurentPoly
    v2: MatrixLaurentPoly

    def __post_init__(self):
        for v in (self.v1, self.v2):
            if not v.is_scalar or not v.is_analytic():
                raise FactoryError("thematic entries must be analytic scalar polynomials")
        N = default_grid_size(max(self.v1.band, self.v2.band))
        g1 = eval_on_grid(self.v1, N).values[:, 0, 0]
        g2 = eval_on_grid(self.v2, N).values[:, 0, 0]
        dev = np.max(np.abs(np.abs(g1) ** 2 + np.abs(g2) ** 2 - 1))
        if dev > UNIT_TOL:
            raise FactoryError(f"column is not unit-norm on the circle (deviation {dev:.2e})")
        if not self.coprime():
            raise FactoryError("v1 and v2 share a zero in the closed unit disk")

    def coprime(self) -> bool:
        r1 = _poly_roots(self.v1)
        r2 = _poly_roots(self.v2)
        if r1 is None:
            return r2 is not None and not np.any(np.abs(r2) <= 1 + COPRIME_TOL)
        if r2 is None:
            return not np.any(np.abs(r1) <= 1 + COPRIME_TOL)
        inside = r1[np.abs(r1) <= 1 + COPRIME_TOL]
        return not any(abs(self.v2(z)[0, 0]) < COPRIME_TOL for z in inside)

    def to_json_dict(self) -> dict:
        return {"v1": self.v1.to_json_dict(), "v2": self.v2.to_json_dict()}

    @classmethod
    def from_json_dict(cls, doc) -> "ThematicPair":
        return cls(MatrixLaurentPoly.from_json_dict(doc["v1"]), MatrixLaurentPoly.from_json_dict(doc["v2"]))


def thematic_2x2(p: ThematicPair) -> MatrixLaurentPoly:
    """``[[v1, -conj(v2)], [v2, conj(v1)]]``, unitary-valued with determinant 1."""
    return MatrixLaurentPoly.block([[p.v1, -p.v2.conj()], [p.v2, p.v1.conj()]])


def random_thematic_pair(rng: np.random.Generator, degree: int = 1, max_tries: int = 100) -> ThematicPair:
    """Column ``Q_d diag(z, 1) ... Q_1 diag(z, 1) Q_0 e_1`` with Haar-random ``Q_i``; retried until coprime."""
    shift = MatrixLaurentPoly.diag(Z, MatrixLaurentPoly.constant(1.0))
    for _ in range(max_tries):
        u = MatrixLaurentPoly.constant(unitary_group.rvs(2, random_state=rng)[:, :1])
        for _ in range(degree):
            u = MatrixLaurentPoly.constant(unitary_group.rvs(2, random_state=rng)) @ (shift @ u)
        try:
            return ThematicPair(u.submatrix([0], [0]), u.submatrix([1], [0]))
        except FactoryError:
            continue
    raise FactoryError("could not draw a coprime thematic column")


def _is_unitary(Q, tol=1e-10) -> bool:
    Q = np.asarray(Q)
    return Q.shape[0] == Q.shape[1] and np.allclose(Q.conj().T @ Q, np.eye(Q.shape[0]), atol=tol)


@dataclass(frozen=True)
class BalancedFactor:
    """An ``r``-balanced ``size x size`` factor.

    Built as ``left @ E @ right`` where ``E`` is the identity with a thematic
    block occupying rows/columns ``r-1, r`` (omitted when ``pair`` is None),
    ``left`` is any constant unitary and ``right`` a constant unitary that is
    block diagonal with respect to ``(r, size - r)``.
    """

    size: int
    r: int
    pair: ThematicPair | None = None
    left: np.ndarray | None = None
    right: np.ndarray | None = None

    def __post_init__(self):
        if not 0 <= self.r <= self.size:
            raise FactoryError("need 0 <= r <= size")
        if self.pair is not None and not 1 <= self.r < self.size:
            raise FactoryError("a thematic block needs 1 <= r < size")
        for Q in (self.left, self.right):
            if Q is not None and (np.shape(Q) != (self.size, self.size) or not _is_unitary(Q)):
                raise FactoryError("constant factors must be size x size unitaries")
        if self.right is not None:
            R = np.asarray(self.right)
            if np.abs(R[: self.r, self.r:]).max(initial=0) > 1e-12 or np.abs(R[self.r:, : self.r]).max(initial=0) > 1e-12:
                raise FactoryError("right factor must be block diagonal for the (r, size - r) split")

    def symbol(self) -> MatrixLaurentPoly:
        E = MatrixLaurentPoly.identity(self.size)
        if self.pair is not None:
            p = self.r - 1
            blocks = []
            if p:
                blocks.append(MatrixLaurentPoly.identity(p))
            blocks.append(thematic_2x2(self.pair))
            if self.size - p - 2:
                blocks.append(MatrixLaurentPoly.identity(self.size - p - 2))
            E = MatrixLaurentPoly.diag(*blocks)
        if self.left is not None:
            E = MatrixLaurentPoly.constant(self.left) @ E
        if self.right is not None:
            E = E @ MatrixLaurentPoly.constant(self.right)
        return E

    def to_json_dict(self) -> dict:
        def mat(Q):
            return None if Q is None else {"re": np.real(Q).tolist(), "im": np.imag(Q).tolist()}
        return {"size": self.size, "r": self.r,
                "pair": None if self.pair is None else self.pair.to_json_dict(),
                "left": mat(self.left), "right": mat(self.right)}

    @classmethod
    def from_json_dict(cls, doc) -> "BalancedFactor":
        def mat(d):
            return None if d is None else np.array(d["re"]) + 1j * np.array(d["im"])
        pair = None if doc.get("pair") is None else ThematicPair.from_json_dict(doc["pair"])
        return cls(size=doc["size"], r=doc["r"], pair=pair, left=mat(doc.get("left")), right=mat(doc.get("right")))


@dataclass(frozen=True)
class CanonicalRecipe:
    """Ingredients of a canonical factorization.

    ``right[j]`` is the balanced block of ``V_j`` and ``left[j]`` the balanced
    block of ``W_j^t``; both act on the coordinates after the first
    ``d_0 + ... + d_{j-1}``.  ``None`` means identity.
    """

    m: int
    n: int
    levels: tuple
    multiplicities: tuple
    exponents: tuple
    unitaries: tuple = ()
    right: tuple = ()
    left: tuple = ()
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        L = len(self.levels)
        if len(self.multiplicities) != L or len(self.exponents) != L:
            raise FactoryError("levels, multiplicities and exponents must have equal length")
        if any(b >= a for a, b in zip(self.levels, self.levels[1:])) or any(s <= 0 for s in self.levels):
            raise FactoryError("levels must be positive and strictly decreasing")
        if any(d < 1 for d in self.multiplicities) or sum(self.multiplicities) > min(self.m, self.n):
            raise FactoryError("multiplicities must be positive with sum <= min(m, n)")
        if any(k < 1 for k in self.exponents):
            raise FactoryError("unitary blocks need exponent k >= 1")
        for j, Q in enumerate(self.unitaries):
            if Q is not None and (np.shape(Q) != (self.multiplicities[j],) * 2 or not _is_unitary(Q)):
                raise FactoryError(f"unitary for level {j} has the wrong shape or is not unitary")
        offsets = np.concatenate([[0], np.cumsum(self.multiplicities)[:-1]]).astype(int)
        for side, size in (("right", self.n), ("left", self.m)):
            for j, f in enumerate(getattr(self, side)):
                if f is None:
                    continue
                if f.size != size - offsets[j] or f.r != self.multiplicities[j]:
                    raise FactoryError(f"{side}[{j}] must be {self.multiplicities[j]}-balanced of size {size - offsets[j]}")

    @property
    def offsets(self) -> list[int]:
        return [int(x) for x in np.concatenate([[0], np.cumsum(self.multiplicities)[:-1]])]

    def to_json_dict(self) -> dict:
        def mat(Q):
            return None if Q is None else {"re": np.real(Q).tolist(), "im": np.imag(Q).tolist()}
        return {
            "m": self.m, "n": self.n,
            "levels": list(self.levels), "multiplicities": list(self.multiplicities),
            "exponents": list(self.exponents),
            "unitaries": [mat(Q) for Q in self.unitaries],
            "right": [None if f is None else f.to_json_dict() for f in self.right],
            "left": [None if f is None else f.to_json_dict() for f in self.left],
        }

    @classmethod
    def from_json_dict(cls, doc) -> "CanonicalRecipe":
        try:
            def mat(d):
                return None if d is None else np.array(d["re"]) + 1j * np.array(d.get("im", 0.0))
            return cls(
                m=doc["m"], n=doc["n"], levels=tuple(doc["levels"]),
                multiplicities=tuple(doc["multiplicities"]), exponents=tuple(doc["exponents"]),
                unitaries=tuple(mat(q) for q in doc.get("unitaries", [])),
                right=tuple(None if f is None else BalancedFactor.from_json_dict(f) for f in doc.get("right", [])),
                left=tuple(None if f is None else BalancedFactor.from_json_dict(f) for f in doc.get("left", [])),
            )
        except (KeyError, TypeError) as exc:
            raise FactoryError(f"malformed recipe: {exc}") from None


def _embed(block: MatrixLaurentPoly, offset: int) -> MatrixLaurentPoly:
    if offset == 0:
        return block
    return MatrixLaurentPoly.diag(MatrixLaurentPoly.identity(offset), block)


def compose_canonical(recipe: CanonicalRecipe) -> MatrixLaurentPoly:
    """Multiply out a canonical factorization exactly."""
    m, n = recipe.m, recipe.n
    D = np.zeros((1, m, n), dtype=complex)
    D = MatrixLaurentPoly(D)
    blocks = []
    for j, (sigma, k) in enumerate(zip(recipe.levels, recipe.exponents)):
        d = recipe.multiplicities[j]
        Q = recipe.unitaries[j] if j < len(recipe.unitaries) and recipe.unitaries[j] is not None else np.eye(d)
        blocks.append(MatrixLaurentPoly.monomial(-k, 1.0) * MatrixLaurentPoly.constant(sigma * np.asarray(Q)))
    r = sum(recipe.multiplicities)
    if r < m or r < n:
        pad = MatrixLaurentPoly.zeros(m - r, n - r) if (m - r and n - r) else None
        core = MatrixLaurentPoly.diag(*blocks)
        rows = [[core, MatrixLaurentPoly.zeros(r, n - r)]] if n - r else [[core]]
        if m - r:
            rows.append([MatrixLaurentPoly.zeros(m - r, r)] + ([pad] if n - r else []))
        D = MatrixLaurentPoly.block(rows)
    else:
        D = MatrixLaurentPoly.diag(*blocks)

    phi = D
    offsets = recipe.offsets
    for j in range(len(recipe.levels) - 1, -1, -1):
        f = recipe.right[j] if j < len(recipe.right) else None
        if f is not None:
            phi = phi @ _embed(f.symbol(), offsets[j]).adjoint()
    for j in range(len(recipe.levels) - 1, -1, -1):
        f = recipe.left[j] if j < len(recipe.left) else None
        if f is not None:
            W = _embed(f.symbol().transpose(), offsets[j])
            phi = W.adjoint() @ phi
    return phi


def random_recipe(seed: int, max_size: int = 3, max_band: int = 5, shape: tuple | None = None,
                  max_tries: int = 200) -> CanonicalRecipe:
    """A seeded canonical recipe with ``m, n <= max_size`` (or the given shape) and product band ``<= max_band``."""
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        m = int(rng.integers(1, max_size + 1))
        n = int(rng.integers(1, max_size + 1))
        if shape is not None:
            m, n = shape
        p = min(m, n)
        L = int(rng.integers(1, p + 1))
        mult = [1] * L
        for _ in range(int(rng.integers(0, p - L + 1))):
            mult[int(rng.integers(0, L))] += 1
        levels = tuple(float(x) for x in sorted(rng.uniform(0.2, 1.0, size=L), reverse=True))
        if L > 1 and min(a - b for a, b in zip(levels, levels[1:])) < 0.1:
            continue
        exps = tuple(int(k) for k in rng.integers(1, 3, size=L))
        unitaries = tuple(unitary_group.rvs(d, random_state=rng) if d > 1 else np.exp(2j * np.pi * rng.random()) * np.eye(1)
                          for d in mult)
        offsets = np.concatenate([[0], np.cumsum(mult)[:-1]]).astype(int)

        def factor(size, r):
            if size <= r:
                return BalancedFactor(size=size, r=r, left=unitary_group.rvs(size, random_state=rng) if size > 1 else None)
            pair = random_thematic_pair(rng, degree=int(rng.integers(1, 3))) if rng.random() < 0.8 else None
            right = np.zeros((size, size), dtype=complex)
            right[:r, :r] = unitary_group.rvs(r, random_state=rng) if r > 1 else np.exp(2j * np.pi * rng.random())
            right[r:, r:] = unitary_group.rvs(size - r, random_state=rng) if size - r > 1 else np.exp(2j * np.pi * rng.random())
            left = unitary_group.rvs(size, random_state=rng)
            return BalancedFactor(size=size, r=r, pair=pair, left=left, right=right)

        right = tuple(factor(n - int(offsets[j]), mult[j]) if rng.random() < 0.8 else None for j in range(L))
        left = tuple(factor(m - int(offsets[j]), mult[j]) if rng.random() < 0.6 else None for j in range(L))
        recipe = CanonicalRecipe(m=m, n=n, levels=levels, multiplicities=tuple(mult), exponents=exps,
                                 unitaries=unitaries, right=right, left=left, meta={"seed": seed})
        if compose_canonical(recipe).band <= max_band:
            return recipe
    raise FactoryError("could not draw a recipe within the band budget")


# -- worked examples ---------------------------------------------------------------

_S2 = np.sqrt(2.0)


def _pair_ex() -> ThematicPair:
    return ThematicPair(Z / _S2, MatrixLaurentPoly.scalar({0: 1 / _S2}))


def example_symbol(name: str) -> MatrixLaurentPoly:
    """The 2x2 worked examples with polynomial data.

    ``ex1``: ``W^* diag(zbar, zbar/2)`` with ``W`` thematic from ``(z/sqrt2, 1/sqrt2)``.
    ``ex2``: ``[[conj(v1), conj(v2)], [0, 0]]`` for the same column.
    ``ex3``: ``diag(1, zbar^2/2) V^*``; ``ex3_shifted`` is ``zbar`` times it.
    """
    V = thematic_2x2(_pair_ex())
    if name == "ex1":
        return V.adjoint() @ MatrixLaurentPoly.diag(ZBAR, ZBAR / 2)
    if name == "ex2":
        return MatrixLaurentPoly.diag(MatrixLaurentPoly.constant(1.0), MatrixLaurentPoly.zeros(1, 1)) @ V.adjoint()
    if name == "ex3":
        return MatrixLaurentPoly.diag(MatrixLaurentPoly.constant(1.0), MatrixLaurentPoly.monomial(-2, 0.5)) @ V.adjoint()
    if name == "ex3_shifted":
        return MatrixLaurentPoly.diag(ZBAR, MatrixLaurentPoly.monomial(-3, 0.5)) @ V.adjoint()
    raise KeyError(f"unknown example '{name}'")


EXPECTED = {
    "ex1": {"C1": "pass", "C2": "pass", "C3": "pass"},
    "ex2": {"C1": "pass", "C2": "fail", "C2_first": "pass", "C2_conj": "fail", "C3": "pass"},
    "ex3": {"C1": "pass", "C2": "pass", "C3": "pass", "C4": "fail", "badly_approximable": "fail",
            "very_badly_approximable": "fail"},
    "ex3_shifted": {"C1": "pass", "C2": "pass", "C3": "pass", "C4": "pass", "badly_approximable": "pass",
                    "very_badly_approximable": "pass", "levels": [1.0, 0.5], "multiplicities": [1, 1]},
}

EXAMPLE_NAMES = tuple(EXPECTED)


def paper_example(name: str):
    """``(symbol, expected verdicts)`` for one of ``ex1, ex2, ex3, ex3_shifted``."""
    return example_symbol(name), dict(EXPECTED[name])


def ex3_shifted_recipe() -> CanonicalRecipe:
    """Recipe whose product is ``ex3_shifted``: levels (1, 1/2), ``U = (zbar, zbar^3)``, one thematic right factor."""
    return CanonicalRecipe(m=2, n=2, levels=(1.0, 0.5), multiplicities=(1, 1), exponents=(1, 3),
                           right=(BalancedFactor(size=2, r=1, pair=_pair_ex()), None))


def perturb(phi: MatrixLaurentPoly, eps: float, seed: int) -> MatrixLaurentPoly:
    """``phi + eps * G`` with ``G`` a seeded analytic polynomial of degree <= 2 and unit sup norm on the grid."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if eps == 0:
        return phi
    rng = np.random.default_rng(seed)
    m, n = phi.shape
    G = MatrixLaurentPoly({k: rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n)) for k in range(3)})
    G = G / eval_on_grid(G).sup_norm
    return phi + eps * G
