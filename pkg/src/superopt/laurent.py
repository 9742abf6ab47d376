"""Matrix Laurent polynomials on the unit circle.

A symbol is stored as a dense stack of Fourier coefficients ``C_k``,
``k = -K..K``, so that ``Phi(zeta) = sum_k C_k zeta**k``.  Everything
downstream (Hankel/Toeplitz sections, Schmidt families, weights, the
minimax oracle) consumes this type or its grid sampling.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

PRUNE_TOL = 1e-13
DEFAULT_TOL_C1 = 1e-6


class SymbolFormatError(ValueError):
    """Raised when a JSON symbol document is malformed."""


class GridError(ValueError):
    """Raised when a grid is too small or too coarse for the requested operation."""


class WindingUndefined(ValueError):
    """Raised when a scalar symbol (nearly) vanishes on the grid."""


def next_pow2(x: int) -> int:
    return 1 << max(0, int(x - 1).bit_length())


def default_grid_size(band: int) -> int:
    """Default number of grid points for a symbol of band ``band``."""
    return max(256, next_pow2(8 * band + 8))


def circle_points(N: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(N) / N)


class MatrixLaurentPoly:
    """An ``m x n`` matrix function on the circle with finitely many Fourier modes.

    Parameters
    ----------
    coeffs : mapping or ndarray
        Either a mapping ``{k: C_k}`` from integer mode to ``m x n`` matrix,
        or an array of shape ``(2K+1, m, n)`` holding ``C_{-K}, ..., C_K``.
    shape : tuple, optional
        ``(m, n)``; required only when ``coeffs`` is an empty mapping.
    prune : float
        Outer coefficients with Frobenius norm below this are dropped and the
        band shrunk.

    Instances are immutable; every operation returns a new symbol.
    """

    __slots__ = ("_c", "_K")

    def __init__(self, coeffs, shape: tuple[int, int] | None = None, prune: float = PRUNE_TOL):
        if isinstance(coeffs, Mapping):
            arr = _array_from_mapping(coeffs, shape)
        else:
            arr = np.array(coeffs, dtype=complex)
            if arr.ndim != 3 or arr.shape[0] % 2 != 1:
                raise ValueError("coefficient array must have shape (2K+1, m, n)")
        if arr.shape[1] < 1 or arr.shape[2] < 1:
            raise ValueError("symbol dimensions must be positive")
        K = arr.shape[0] // 2
        while K > 0:
            lo, hi = arr[0], arr[-1]
            if np.linalg.norm(lo) < prune and np.linalg.norm(hi) < prune:
                arr = arr[1:-1]
                K -= 1
            else:
                break
        arr.setflags(write=False)
        self._c = arr
        self._K = K

    # -- constructors -------------------------------------------------------

    @classmethod
    def constant(cls, C) -> "MatrixLaurentPoly":
        C = np.atleast_2d(np.asarray(C, dtype=complex))
        return cls(C[None])

    @classmethod
    def monomial(cls, k: int, C=1.0) -> "MatrixLaurentPoly":
        """``C * z**k`` (``C`` defaults to the scalar 1)."""
        C = np.atleast_2d(np.asarray(C, dtype=complex))
        return cls({k: C})

    @classmethod
    def scalar(cls, coeffs: Mapping[int, complex]) -> "MatrixLaurentPoly":
        """Scalar symbol from ``{k: c_k}``."""
        return cls({k: np.array([[c]], dtype=complex) for k, c in coeffs.items()}, shape=(1, 1))

    @classmethod
    def zeros(cls, m: int, n: int) -> "MatrixLaurentPoly":
        return cls(np.zeros((1, m, n), dtype=complex))

    @classmethod
    def identity(cls, n: int) -> "MatrixLaurentPoly":
        return cls.constant(np.eye(n))

    @classmethod
    def block(cls, rows) -> "MatrixLaurentPoly":
        """Assemble a block matrix from nested lists of symbols."""
        K = max(b.band for row in rows for b in row)
        stacked = [
            np.concatenate([b.padded(K) for b in row], axis=2) for row in rows
        ]
        return cls(np.concatenate(stacked, axis=1))

    @classmethod
    def diag(cls, *blocks: "MatrixLaurentPoly") -> "MatrixLaurentPoly":
        """Block-diagonal symbol; zero blocks fill the off-diagonal."""
        K = max(b.band for b in blocks)
        m = sum(b.m for b in blocks)
        n = sum(b.n for b in blocks)
        out = np.zeros((2 * K + 1, m, n), dtype=complex)
        i = j = 0
        for b in blocks:
            out[:, i:i + b.m, j:j + b.n] = b.padded(K)
            i += b.m
            j += b.n
        return cls(out)

    # -- basic data -----------------------------------------------------------

    @property
    def band(self) -> int:
        return self._K

    @property
    def shape(self) -> tuple[int, int]:
        return self._c.shape[1], self._c.shape[2]

    @property
    def m(self) -> int:
        return self._c.shape[1]

    @property
    def n(self) -> int:
        return self._c.shape[2]

    @property
    def coeffs(self) -> np.ndarray:
        """Read-only array ``(2K+1, m, n)`` of ``C_{-K}..C_K``."""
        return self._c

    def coeff(self, k: int) -> np.ndarray:
        if abs(k) > self._K:
            return np.zeros(self.shape, dtype=complex)
        return self._c[k + self._K]

    def items(self):
        """Iterate over ``(k, C_k)`` for the nonzero coefficients."""
        for idx, C in enumerate(self._c):
            if np.any(C != 0):
                yield idx - self._K, C

    def padded(self, K: int) -> np.ndarray:
        """Coefficient array zero-padded to band ``K >= self.band``."""
        if K < self._K:
            raise ValueError("cannot pad to a smaller band")
        pad = K - self._K
        return np.pad(self._c, ((pad, pad), (0, 0), (0, 0)))

    @property
    def is_scalar(self) -> bool:
        return self.shape == (1, 1)

    def is_analytic(self, tol: float = PRUNE_TOL) -> bool:
        return all(np.linalg.norm(self.coeff(k)) < tol for k in range(-self._K, 0))

    # -- arithmetic -------------------------------------------------------------

    def _check_same_shape(self, other):
        if self.shape != other.shape:
            raise ValueError(f"dimension mismatch: {self.shape} vs {other.shape}")

    def __add__(self, other):
        if not isinstance(other, MatrixLaurentPoly):
            return NotImplemented
        self._check_same_shape(other)
        K = max(self._K, other._K)
        return MatrixLaurentPoly(self.padded(K) + other.padded(K))

    def __sub__(self, other):
        if not isinstance(other, MatrixLaurentPoly):
            return NotImplemented
        return self + (-other)

    def __neg__(self):
        return MatrixLaurentPoly(-self._c)

    def __mul__(self, c):
        if isinstance(c, MatrixLaurentPoly):
            if c.is_scalar:
                return c.__rmul_scalar_poly(self)
            if self.is_scalar:
                return self.__rmul_scalar_poly(c)
            raise TypeError("use @ for matrix products of symbols")
        return MatrixLaurentPoly(self._c * complex(c))

    __rmul__ = __mul__

    def __rmul_scalar_poly(self, other: "MatrixLaurentPoly") -> "MatrixLaurentPoly":
        # self is 1x1; multiply every entry of other by it.
        K = self._K + other._K
        out = np.zeros((2 * K + 1, other.m, other.n), dtype=complex)
        for i, c in enumerate(self._c[:, 0, 0]):
            if c != 0:
                out[i:i + 2 * other._K + 1] += c * other._c
        return MatrixLaurentPoly(out)

    def __truediv__(self, c):
        return MatrixLaurentPoly(self._c / complex(c))

    def __matmul__(self, other: "MatrixLaurentPoly") -> "MatrixLaurentPoly":
        if self.n != other.m:
            raise ValueError(f"dimension mismatch: {self.shape} @ {other.shape}")
        K = self._K + other._K
        out = np.zeros((2 * K + 1, self.m, other.n), dtype=complex)
        B = other._c
        for i, A in enumerate(self._c):
            if np.any(A != 0):
                out[i:i + B.shape[0]] += np.einsum("ab,kbc->kac", A, B)
        return MatrixLaurentPoly(out)

    def shift(self, k: int) -> "MatrixLaurentPoly":
        """Multiply by ``z**k``."""
        return MatrixLaurentPoly({j + k: C for j, C in self.items()}, shape=self.shape)

    def transpose(self) -> "MatrixLaurentPoly":
        return MatrixLaurentPoly(np.transpose(self._c, (0, 2, 1)))

    def conj(self) -> "MatrixLaurentPoly":
        """Pointwise complex conjugate: mode ``k`` becomes ``conj(C_{-k})``."""
        return MatrixLaurentPoly(np.conj(self._c[::-1]))

    def adjoint(self) -> "MatrixLaurentPoly":
        """Pointwise conjugate transpose: mode ``k`` becomes ``C_{-k}^*``."""
        return MatrixLaurentPoly(np.conj(np.transpose(self._c[::-1], (0, 2, 1))))

    T = property(transpose)
    H = property(adjoint)

    def analytic_part(self) -> "MatrixLaurentPoly":
        return MatrixLaurentPoly({k: C for k, C in self.items() if k >= 0}, shape=self.shape)

    def coanalytic_part(self) -> "MatrixLaurentPoly":
        """Strictly negative modes (the part seen by the Hankel operator)."""
        return MatrixLaurentPoly({k: C for k, C in self.items() if k < 0}, shape=self.shape)

    def submatrix(self, rows, cols) -> "MatrixLaurentPoly":
        return MatrixLaurentPoly(self._c[:, rows][:, :, cols])

    def det(self) -> "MatrixLaurentPoly":
        """Determinant of a small square symbol by cofactor expansion."""
        if self.m != self.n:
            raise ValueError("determinant of a non-square symbol")
        if self.m == 1:
            return self
        total = None
        for j in range(self.n):
            minor = self.submatrix(list(range(1, self.m)), [c for c in range(self.n) if c != j])
            term = self.submatrix([0], [j]) * minor.det()
            term = term if j % 2 == 0 else -term
            total = term if total is None else total + term
        return total

    # -- evaluation ---------------------------------------------------------------

    def __call__(self, zeta) -> np.ndarray:
        """Evaluate at points on (or off) the circle; returns ``(..., m, n)``."""
        zeta = np.asarray(zeta, dtype=complex)
        # only modes that are present, so analytic symbols can be evaluated at 0
        used = np.flatnonzero(np.any(self._c != 0, axis=(1, 2)))
        ks = used - self._K
        powers = zeta[..., None] ** ks
        return np.einsum("...k,kab->...ab", powers, self._c[used])

    def allclose(self, other: "MatrixLaurentPoly", atol: float = 1e-12) -> bool:
        if self.shape != other.shape:
            return False
        K = max(self._K, other._K)
        return bool(np.max(np.abs(self.padded(K) - other.padded(K)), initial=0.0) <= atol)

    def __eq__(self, other):
        if not isinstance(other, MatrixLaurentPoly):
            return NotImplemented
        return self.shape == other.shape and self._K == other._K and np.array_equal(self._c, other._c)

    __hash__ = None

    def __repr__(self):
        return f"MatrixLaurentPoly(shape={self.shape}, band={self._K})"

    # -- serialization ---------------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "coeffs": [
                {"k": int(k), "re": C.real.tolist(), "im": C.imag.tolist()}
                for k, C in self.items()
            ],
        }

    @classmethod
    def from_json_dict(cls, doc) -> "MatrixLaurentPoly":
        if not isinstance(doc, Mapping):
            raise SymbolFormatError("symbol document must be a JSON object")
        for key in ("m", "n", "coeffs"):
            if key not in doc:
                raise SymbolFormatError(f"missing field '{key}'")
        m, n = doc["m"], doc["n"]
        if not (isinstance(m, int) and isinstance(n, int) and m > 0 and n > 0):
            raise SymbolFormatError("fields 'm' and 'n' must be positive integers")
        if not isinstance(doc["coeffs"], list):
            raise SymbolFormatError("field 'coeffs' must be a list")
        coeffs: dict[int, np.ndarray] = {}
        for i, entry in enumerate(doc["coeffs"]):
            where = f"coeffs[{i}]"
            if not isinstance(entry, Mapping) or "k" not in entry or "re" not in entry:
                raise SymbolFormatError(f"{where}: expected an object with 'k', 're' and optionally 'im'")
            k = entry["k"]
            if not isinstance(k, int):
                raise SymbolFormatError(f"{where}.k must be an integer")
            try:
                re = np.asarray(entry["re"], dtype=float)
                im = np.asarray(entry.get("im", np.zeros((m, n))), dtype=float)
            except (TypeError, ValueError) as exc:
                raise SymbolFormatError(f"{where}: non-numeric matrix entries ({exc})") from None
            if re.shape != (m, n) or im.shape != (m, n):
                raise SymbolFormatError(f"{where}: expected {m}x{n} matrices, got {re.shape} and {im.shape}")
            if k in coeffs:
                raise SymbolFormatError(f"{where}: duplicate mode k={k}")
            coeffs[k] = re + 1j * im
        return cls(coeffs, shape=(m, n))

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)


def _array_from_mapping(coeffs: Mapping, shape) -> np.ndarray:
    mats = {int(k): np.atleast_2d(np.asarray(C, dtype=complex)) for k, C in coeffs.items()}
    if shape is None:
        if not mats:
            raise ValueError("shape is required for an empty coefficient mapping")
        shape = next(iter(mats.values())).shape
    K = max((abs(k) for k in mats), default=0)
    arr = np.zeros((2 * K + 1, *shape), dtype=complex)
    for k, C in mats.items():
        if C.shape != tuple(shape):
            raise ValueError(f"coefficient at k={k} has shape {C.shape}, expected {tuple(shape)}")
        arr[k + K] = C
    return arr


def load_symbol(path) -> MatrixLaurentPoly:
    """Read a symbol from a JSON file (see :meth:`MatrixLaurentPoly.to_json_dict`)."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SymbolFormatError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return MatrixLaurentPoly.from_json_dict(doc)


def save_symbol(symbol: MatrixLaurentPoly, path) -> None:
    Path(path).write_text(json.dumps(symbol.to_json_dict(), indent=2, sort_keys=True) + "\n")


# -- grid sampling ------------------------------------------------------------------


@dataclass(frozen=True)
class GridSampling:
    """Values and pointwise SVD of a symbol on ``N`` equispaced circle points.

    ``s[j]`` is nonincreasing; ``U[j] @ diag(s[j]) @ V[j]^*`` reproduces
    ``values[j]`` (thin SVD, ``p = min(m, n)`` columns).  The first nonzero
    entry of every right singular vector is real and positive.
    """

    N: int
    points: np.ndarray
    values: np.ndarray
    s: np.ndarray
    U: np.ndarray
    V: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape[1], self.values.shape[2]

    @property
    def sup_norm(self) -> float:
        return float(self.s[:, 0].max()) if self.s.size else 0.0


def _svd_with_phase(values: np.ndarray):
    U, s, Vh = np.linalg.svd(values, full_matrices=False)
    V = np.conj(np.swapaxes(Vh, 1, 2))
    # Phase convention: first entry with |.| > 1e-12 of each column of V real positive.
    mag = np.abs(V)
    first = np.argmax(mag > 1e-12, axis=1)  # (N, p)
    pick = np.take_along_axis(V, first[:, None, :], axis=1)[:, 0, :]
    phase = np.where(np.abs(pick) > 0, np.conj(pick) / np.where(np.abs(pick) > 0, np.abs(pick), 1), 1)
    V = V * phase[:, None, :]
    U = U * phase[:, None, :]
    return U, s, V


def sample_values(values: np.ndarray) -> GridSampling:
    """Wrap precomputed grid values ``(N, m, n)`` with their pointwise SVD."""
    values = np.asarray(values, dtype=complex)
    N = values.shape[0]
    U, s, V = _svd_with_phase(values)
    return GridSampling(N=N, points=circle_points(N), values=values, s=s, U=U, V=V)


def eval_on_grid(phi: MatrixLaurentPoly, N: int | None = None) -> GridSampling:
    """Sample ``phi`` on ``N`` points ``exp(2 pi i j / N)`` by FFT, with pointwise SVD.

    ``N`` must be a power of two and at least ``2K + 2``; the default is
    :func:`default_grid_size`.
    """
    K = phi.band
    if N is None:
        N = default_grid_size(K)
    if N & (N - 1) or N < 1:
        raise GridError(f"grid size must be a power of two, got {N}")
    if N < 2 * K + 2:
        raise GridError(f"grid size {N} too small for band {K}; need at least {next_pow2(2 * K + 2)}")
    a = np.zeros((N, phi.m, phi.n), dtype=complex)
    for idx, C in enumerate(phi.coeffs):
        a[(idx - K) % N] += C
    values = np.fft.ifft(a, axis=0) * N
    return sample_values(values)


def fit(values: np.ndarray, band: int | None = None) -> MatrixLaurentPoly:
    """Trigonometric interpolation of grid values back to Laurent coefficients.

    Exact for symbols of band ``K`` whenever ``N >= 2K + 1``.
    """
    values = np.asarray(values, dtype=complex)
    N = values.shape[0]
    if band is None:
        band = N // 2 - 1
    if 2 * band + 1 > N:
        raise GridError(f"cannot fit band {band} from {N} samples")
    a = np.fft.fft(values, axis=0) / N
    ks = np.arange(-band, band + 1)
    return MatrixLaurentPoly(a[ks % N])


# -- singular profile -------------------------------------------------------------


@dataclass(frozen=True)
class SingularProfile:
    """Grid statistics of the singular value functions ``zeta -> s_j(Phi(zeta))``.

    The per-index arrays cover every index ``j < min(m, n)``; ``levels`` and
    ``multiplicities`` describe the distinct nonzero levels after merging
    indices whose medians are closer than ``tol``.
    """

    levels: tuple[float, ...]
    multiplicities: tuple[int, ...]
    flat: tuple[bool, ...]
    deviation: tuple[float, ...]
    index_levels: tuple[float, ...]
    index_flat: tuple[bool, ...]
    index_deviation: tuple[float, ...]
    tol: float

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    @property
    def all_flat(self) -> bool:
        return all(self.index_flat)

    def dims(self) -> tuple[int, ...]:
        """Cumulative dimensions of the Schmidt families at each level."""
        return tuple(int(x) for x in np.cumsum(self.multiplicities))

    def to_json_dict(self) -> dict:
        return {
            "levels": list(self.levels),
            "multiplicities": list(self.multiplicities),
            "flat": list(self.flat),
            "deviation": list(self.deviation),
            "index_levels": list(self.index_levels),
            "index_flat": list(self.index_flat),
            "index_deviation": list(self.index_deviation),
            "tol": self.tol,
        }


def singular_profile(G: GridSampling, tol_c1: float = DEFAULT_TOL_C1) -> SingularProfile:
    """Cluster the grid singular values into levels and test them for flatness.

    ``tol_c1`` is relative to the median of ``s_0``.
    """
    s = G.s
    if s.size == 0:
        return SingularProfile((), (), (), (), (), (), (), 0.0)
    scale = float(np.median(s[:, 0]))
    tol = tol_c1 * scale if scale > 0 else tol_c1
    idx_level = np.median(s, axis=0)
    idx_dev = np.max(np.abs(s - idx_level), axis=0)
    idx_flat = idx_dev <= tol

    groups: list[list[int]] = []
    for j, lev in enumerate(idx_level):
        if lev <= tol:
            break
        if groups and idx_level[groups[-1][-1]] - lev < tol:
            groups[-1].append(j)
        else:
            groups.append([j])
    levels = tuple(float(np.mean(idx_level[g])) for g in groups)
    return SingularProfile(
        levels=levels,
        multiplicities=tuple(len(g) for g in groups),
        flat=tuple(bool(np.all(idx_flat[g])) for g in groups),
        deviation=tuple(float(np.max(idx_dev[g])) for g in groups),
        index_levels=tuple(float(x) for x in idx_level),
        index_flat=tuple(bool(x) for x in idx_flat),
        index_deviation=tuple(float(x) for x in idx_dev),
        tol=float(tol),
    )


def winding_number(phi: MatrixLaurentPoly, grid: GridSampling | None = None, zero_tol: float = 1e-10) -> int:
    """Winding number of a nonvanishing scalar symbol around the origin."""
    if not phi.is_scalar:
        raise ValueError("winding number needs a scalar symbol")
    if grid is None:
        grid = eval_on_grid(phi)
    v = grid.values[:, 0, 0]
    amax = np.abs(v).max()
    if amax == 0 or np.abs(v).min() <= zero_tol * max(amax, 1.0):
        raise WindingUndefined("symbol vanishes (numerically) on the grid; winding undefined")
    incr = np.angle(np.roll(v, -1) / v)
    if np.max(np.abs(incr)) > np.pi / 2:
        raise GridError(f"grid of {grid.N} points too coarse for a reliable winding number; use N >= {2 * grid.N}")
    return int(np.rint(incr.sum() / (2 * np.pi)))
