"""Action polynomials with Fourier-series coefficients.

A :class:`HomogeneousPart` is ``sum_{|alpha|=m} c_alpha(theta) I^alpha`` and a
:class:`TaylorFourier` collects such parts over a window of degrees.  The
power ``(I + sum_k V_k)^alpha`` needed by the normal-form recursion is
computed by :func:`power_expansion` through memoized graded products.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import DimensionError, MissingData
from .fourier import (
    DEFAULT_CONFIG,
    ArithmeticConfig,
    ArithmeticLog,
    FourierSeries,
    fs_derivative,
    fs_linear_combine,
    fs_product,
    fs_sum,
    multi_indices,
)


def graded_key(alpha: Sequence[int]):
    return (sum(alpha), tuple(alpha))


def unit(n: int, j: int) -> tuple:
    return tuple(1 if i == j else 0 for i in range(n))


class HomogeneousPart:
    """Degree-``degree`` homogeneous polynomial in the actions.

    Parameters
    ----------
    dim : int
    degree : int
    terms : mapping
        ``{alpha: FourierSeries}`` with ``|alpha| == degree``.
    """

    __slots__ = ("dim", "degree", "_terms")

    def __init__(self, dim: int, degree: int, terms: Mapping | None = None):
        data = {}
        for alpha, series in (terms or {}).items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != dim or min(alpha) < 0:
                raise DimensionError(f"bad multi-index {alpha} for dim {dim}")
            if sum(alpha) != degree:
                raise ValueError(f"multi-index {alpha} is not of degree {degree}")
            if series.dim != dim:
                raise DimensionError("coefficient series has the wrong dimension")
            if not series.is_zero():
                data[alpha] = series
        self.dim = dim
        self.degree = degree
        self._terms = dict(sorted(data.items()))

    @classmethod
    def zero(cls, dim: int, degree: int) -> "HomogeneousPart":
        return cls(dim, degree, {})

    @classmethod
    def monomial(cls, alpha: Sequence[int], series: FourierSeries | None = None) -> "HomogeneousPart":
        alpha = tuple(alpha)
        n = len(alpha)
        series = series if series is not None else FourierSeries.constant(1.0, n)
        return cls(n, sum(alpha), {alpha: series})

    @property
    def terms(self) -> Mapping:
        return dict(self._terms)

    def __getitem__(self, alpha) -> FourierSeries:
        return self._terms.get(tuple(alpha), FourierSeries.zero(self.dim))

    def __contains__(self, alpha) -> bool:
        return tuple(alpha) in self._terms

    def __iter__(self):
        return iter(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def items(self):
        return self._terms.items()

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def real(self) -> bool:
        return all(s.real for s in self._terms.values())

    @property
    def max_mode(self) -> int:
        return max((s.max_mode for s in self._terms.values()), default=0)

    def __repr__(self) -> str:
        return f"HomogeneousPart(dim={self.dim}, degree={self.degree}, n_terms={len(self)})"

    def __add__(self, other: "HomogeneousPart") -> "HomogeneousPart":
        return hp_add(self, other)

    def scale(self, a) -> "HomogeneousPart":
        return HomogeneousPart(self.dim, self.degree, {al: s.scale(a) for al, s in self.items()})

    def times_series(self, f: FourierSeries, max_mode: int | None = None,
                     log: ArithmeticLog | None = None,
                     config: ArithmeticConfig = DEFAULT_CONFIG) -> "HomogeneousPart":
        return HomogeneousPart(self.dim, self.degree, {
            al: fs_product(f, s, max_mode, log, config) for al, s in self.items()})

    def map(self, fn) -> "HomogeneousPart":
        return HomogeneousPart(self.dim, self.degree, {al: fn(s) for al, s in self.items()})


def hp_add(a: HomogeneousPart, b: HomogeneousPart) -> HomogeneousPart:
    if a.dim != b.dim:
        raise DimensionError("dimension mismatch")
    if a.degree != b.degree:
        raise ValueError("cannot add parts of different degree")
    terms = dict(a.items())
    for alpha, s in b.items():
        terms[alpha] = fs_linear_combine(1.0, terms[alpha], 1.0, s) if alpha in terms else s
    return HomogeneousPart(a.dim, a.degree, terms)


def hp_multiply(a: HomogeneousPart, b: HomogeneousPart, max_mode: int | None = None,
                log: ArithmeticLog | None = None,
                config: ArithmeticConfig = DEFAULT_CONFIG) -> HomogeneousPart:
    """Product of two homogeneous parts; degrees add and monomials convolve."""
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch: {a.dim} != {b.dim}")
    buckets: dict = {}
    for alpha, u in a.items():
        for beta, v in b.items():
            gamma = tuple(x + y for x, y in zip(alpha, beta))
            buckets.setdefault(gamma, []).append(fs_product(u, v, max_mode, log, config))
    terms = {g: (ps[0] if len(ps) == 1 else fs_sum(ps, a.dim, config)) for g, ps in buckets.items()}
    return HomogeneousPart(a.dim, a.degree + b.degree, terms)


@dataclass
class TaylorFourier:
    """``sum_m parts[m]`` over the degree window ``[m_min, m_max]``."""

    dim: int
    parts: dict = field(default_factory=dict)
    m_min: int = 0
    m_max: int = -1

    def __post_init__(self):
        for m, part in self.parts.items():
            if part.dim != self.dim:
                raise DimensionError("part dimension mismatch")
            if part.degree != m:
                raise ValueError(f"part stored under key {m} has degree {part.degree}")
        if self.parts:
            lo, hi = min(self.parts), max(self.parts)
            if self.m_max < self.m_min:
                self.m_min, self.m_max = lo, hi
            if lo < self.m_min or hi > self.m_max:
                raise ValueError("parts outside the declared degree window")
        self.parts = dict(sorted(self.parts.items()))

    def part(self, m: int) -> HomogeneousPart:
        return self.parts.get(m, HomogeneousPart.zero(self.dim, m))

    def with_part(self, part: HomogeneousPart) -> "TaylorFourier":
        parts = dict(self.parts)
        parts[part.degree] = part
        lo = min(self.m_min, part.degree) if self.m_max >= self.m_min else part.degree
        hi = max(self.m_max, part.degree)
        return TaylorFourier(self.dim, parts, lo, hi)

    def is_zero(self) -> bool:
        return all(p.is_zero() for p in self.parts.values())

    def terms(self) -> Iterator[tuple]:
        """Yield ``(alpha, series)`` over all parts in graded-lex order."""
        for m in sorted(self.parts):
            yield from self.parts[m].items()


@dataclass(frozen=True)
class IndexTuple:
    """Element ``(alpha^1, ..., alpha^{m-1})`` of the index set N(alpha, m)."""

    m: int
    alphas: tuple

    def __post_init__(self):
        weight = sum(j * sum(a) for j, a in enumerate(self.alphas, start=1))
        if weight != self.m:
            raise ValueError(f"weighted length {weight} != {self.m}")

    @property
    def alpha(self) -> tuple:
        return tuple(map(sum, zip(*self.alphas)))

    @property
    def weight(self) -> int:
        """The multinomial coefficient alpha! / (alpha^1! ... alpha^{m-1}!)."""
        num = math.prod(math.factorial(a) for a in self.alpha)
        den = math.prod(math.factorial(x) for a in self.alphas for x in a)
        return num // den


def _bounded_indices(bound: tuple, total: int):
    """Multi-indices beta <= bound componentwise with |beta| = total."""
    if len(bound) == 1:
        if total <= bound[0]:
            yield (total,)
        return
    for first in range(min(bound[0], total), -1, -1):
        for rest in _bounded_indices(bound[1:], total - first):
            yield (first,) + rest


def enumerate_index_set(alpha: Sequence[int], m: int) -> Iterator[IndexTuple]:
    """Enumerate N(alpha, m): tuples summing to alpha with sum_j j|alpha^j| = m."""
    alpha = tuple(alpha)
    n = len(alpha)
    zero = (0,) * n

    def rec(j: int, remaining: tuple, weight_left: int, acc: list):
        left = sum(remaining)
        if j == m:
            if left == 0 and weight_left == 0:
                yield IndexTuple(m, tuple(acc))
            return
        # every remaining unit costs at least j
        if weight_left < j * left:
            return
        for size in range(min(left, weight_left // j), -1, -1):
            for beta in _bounded_indices(remaining, size):
                acc.append(beta)
                yield from rec(j + 1, tuple(r - b for r, b in zip(remaining, beta)),
                               weight_left - j * size, acc)
                acc.pop()

    if m < 1:
        return
    yield from rec(1, alpha, m, [])


def multinomial_weight_sum(alpha: Sequence[int], m: int) -> int:
    """Sum of alpha!/(alpha^1!...alpha^{m-1}!) over N(alpha, m), exactly.

    Equals ``(m-1)! / ((m-|alpha|)! (|alpha|-1)!)``.
    """
    a = sum(alpha)
    if not 2 <= a <= m:
        raise ValueError("need 2 <= |alpha| <= m")
    return sum(t.weight for t in enumerate_index_set(alpha, m))


def multinomial_weight_closed_form(alpha: Sequence[int], m: int) -> int:
    a = sum(alpha)
    return math.factorial(m - 1) // (math.factorial(m - a) * math.factorial(a - 1))


# -- graded series and powers -------------------------------------------------

def _graded_multiply(A: dict, B: dict, top: int, max_mode, log, config,
                     only: int | None = None) -> dict:
    out: dict = {}
    for ga, pa in A.items():
        for gb, pb in B.items():
            g = ga + gb
            if g > top or (only is not None and g != only):
                continue
            prod = hp_multiply(pa, pb, max_mode, log, config)
            out[g] = hp_add(out[g], prod) if g in out else prod
    return out


class PowerCache:
    """Memoized powers of the graded components ``V_i = sum_k V_{i,k}``.

    ``vector_parts[i]`` maps grade ``k >= 1`` to the degree-``k`` homogeneous
    part of the i-th component.  All products are truncated at total degree
    ``top`` and at Fourier radius ``max_mode``.
    """

    def __init__(self, vector_parts: Sequence[Mapping], top: int, max_mode: int | None = None,
                 log: ArithmeticLog | None = None, config: ArithmeticConfig = DEFAULT_CONFIG):
        self.n = len(vector_parts)
        self.components = [{g: p for g, p in comp.items() if g <= top and not p.is_zero()}
                           for comp in vector_parts]
        self.supplied = [set(comp) for comp in vector_parts]
        self.top = top
        self.max_mode = max_mode
        self.log = log
        self.config = config
        one = HomogeneousPart.monomial((0,) * self.n)
        self._powers = [{0: {0: one}} for _ in range(self.n)]

    def power(self, i: int, p: int) -> dict:
        cache = self._powers[i]
        if p not in cache:
            prev = self.power(i, p - 1)
            cache[p] = _graded_multiply(prev, self.components[i], self.top,
                                        self.max_mode, self.log, self.config)
        return cache[p]

    def expansion(self, alpha: Sequence[int], m: int) -> HomogeneousPart:
        alpha = tuple(alpha)
        a = sum(alpha)
        need = m - a + 1
        for i, ai in enumerate(alpha):
            if ai and not all(g in self.supplied[i] for g in range(1, need + 1)):
                raise MissingData(f"component {i} lacks grades 1..{need}")
        acc = {0: HomogeneousPart.monomial((0,) * self.n)}
        factors = [i for i, ai in enumerate(alpha) if ai]
        for pos, i in enumerate(factors):
            last = pos == len(factors) - 1
            acc = _graded_multiply(acc, self.power(i, alpha[i]), m, self.max_mode, self.log,
                                   self.config, only=m if last else None)
        return acc.get(m, HomogeneousPart.zero(self.n, m))


def power_expansion(vector_parts: Sequence[Mapping], alpha: Sequence[int], m: int,
                    max_mode: int | None = None, log: ArithmeticLog | None = None,
                    config: ArithmeticConfig = DEFAULT_CONFIG) -> HomogeneousPart:
    """Degree-``m`` part ``A_{alpha,m}`` of ``prod_i (sum_k V_{i,k})^{alpha_i}``.

    Parameters
    ----------
    vector_parts : sequence of mappings
        ``vector_parts[i][k]`` is the degree-``k`` part of the i-th component;
        grade 1 is normally the bare action ``I_i``.
    alpha : multi-index with ``|alpha| >= 2``
    m : target degree, ``m >= |alpha|``
    """
    if sum(alpha) < 2:
        raise ValueError("|alpha| must be at least 2")
    if m < sum(alpha):
        raise ValueError("m must be at least |alpha|")
    if len(vector_parts) != len(alpha):
        raise DimensionError("one component per action axis is required")
    return PowerCache(vector_parts, m, max_mode, log, config).expansion(alpha, m)


def correction_components(n: int, g: TaylorFourier, top: int) -> list:
    """Components of ``I + d_theta g`` graded by action degree, up to ``top``."""
    comps = []
    for i in range(n):
        comp = {1: HomogeneousPart.monomial(unit(n, i))}
        for k in range(2, top + 1):
            part = g.parts.get(k)
            if part is None:
                comp[k] = HomogeneousPart.zero(n, k)
            else:
                comp[k] = part.map(lambda s, i=i: fs_derivative(s, i))
        comps.append(comp)
    return comps


# -- evaluation and differentiation -----------------------------------------

def tf_eval(f: TaylorFourier, theta: Sequence[float], I: Sequence[float]) -> float:
    """Real part of ``sum_alpha c_alpha(theta) I^alpha``."""
    return CompiledTF.from_tf(f).value(theta, I)


def tf_gradient(f: TaylorFourier, variable: tuple) -> TaylorFourier:
    """Differentiate in ``("angle", j)`` or ``("action", j)`` (0-based axis)."""
    kind, j = variable
    if not 0 <= j < f.dim:
        raise IndexError(f"axis {j} out of range")
    parts = {}
    if kind in ("angle", "theta"):
        for m, part in f.parts.items():
            parts[m] = part.map(lambda s: fs_derivative(s, j))
        return TaylorFourier(f.dim, parts, f.m_min, f.m_max)
    if kind not in ("action", "I"):
        raise ValueError(f"unknown variable kind {kind!r}")
    for m, part in f.parts.items():
        if m == 0:
            continue
        terms = {}
        for alpha, s in part.items():
            if alpha[j]:
                lowered = tuple(a - (i == j) for i, a in enumerate(alpha))
                terms[lowered] = s.scale(float(alpha[j]))
        parts[m - 1] = HomogeneousPart(f.dim, m - 1, terms)
    lo = max(f.m_min - 1, 0)
    return TaylorFourier(f.dim, parts, lo, max(f.m_max - 1, lo))


class CompiledTF:
    """Flat arrays ``(alpha, k, c)`` for fast double-precision evaluation."""

    def __init__(self, dim: int, alphas: np.ndarray, ks: np.ndarray, cs: np.ndarray):
        self.dim = dim
        self.alphas = alphas.reshape(-1, dim).astype(np.int64)
        self.ks = ks.reshape(-1, dim).astype(np.int64)
        self.cs = cs.astype(complex)

    @classmethod
    def from_tf(cls, f: TaylorFourier) -> "CompiledTF":
        rows_a, rows_k, vals = [], [], []
        for alpha, series in f.terms():
            for k, c in series.items():
                rows_a.append(alpha)
                rows_k.append(k)
                vals.append(complex(c))
        n = f.dim
        return cls(n, np.array(rows_a, dtype=np.int64).reshape(-1, n),
                   np.array(rows_k, dtype=np.int64).reshape(-1, n), np.array(vals, dtype=complex))

    def __len__(self) -> int:
        return len(self.cs)

    def _waves(self, theta):
        return self.cs * np.exp(1j * (self.ks @ np.asarray(theta, dtype=float)))

    def _mono(self, I, lower: int | None = None):
        I = np.asarray(I, dtype=float)
        a = self.alphas
        if lower is None:
            return np.prod(I ** a, axis=1)
        reduced = a.copy()
        reduced[:, lower] -= 1
        return a[:, lower] * np.prod(I ** np.maximum(reduced, 0), axis=1)

    def _mono2(self, I, i: int, j: int):
        a = self.alphas.copy()
        coef = a[:, i].astype(float)
        a[:, i] -= 1
        coef = coef * a[:, j]
        a[:, j] -= 1
        return coef * np.prod(np.asarray(I, dtype=float) ** np.maximum(a, 0), axis=1)

    def value(self, theta, I) -> float:
        if not len(self):
            return 0.0
        return float(np.real(np.sum(self._waves(theta) * self._mono(I))))

    def grad_theta(self, theta, I) -> np.ndarray:
        if not len(self):
            return np.zeros(self.dim)
        w = self._waves(theta) * self._mono(I)
        return np.real((1j * self.ks.T) @ w)

    def grad_action(self, theta, I) -> np.ndarray:
        if not len(self):
            return np.zeros(self.dim)
        w = self._waves(theta)
        return np.array([np.real(np.sum(w * self._mono(I, j))) for j in range(self.dim)])

    def hessian_blocks(self, theta, I):
        """Return ``(H_tt, H_tI, H_II)`` second-derivative blocks."""
        n = self.dim
        if not len(self):
            z = np.zeros((n, n))
            return z, z.copy(), z.copy()
        w = self._waves(theta)
        mono = self._mono(I)
        ks = self.ks.astype(float)
        htt = -np.real((ks.T * (w * mono)) @ ks)
        htI = np.empty((n, n))
        hII = np.empty((n, n))
        for j in range(n):
            dj = self._mono(I, j)
            htI[:, j] = np.real((1j * ks.T) @ (w * dj))
            for i in range(n):
                hII[i, j] = np.real(np.sum(w * self._mono2(I, i, j)))
        return htt, htI, hII

    def value_mp(self, theta, I, mp):
        """Evaluate in mpmath arithmetic; ``theta`` and ``I`` may be mp numbers."""
        total = mp.mpf(0)
        for a, k, c in zip(self.alphas, self.ks, self.cs):
            phase = mp.fsum(int(kj) * t for kj, t in zip(k, theta))
            mono = mp.mpf(1)
            for aj, x in zip(a, I):
                if aj:
                    mono *= x ** int(aj)
            total += (mp.mpf(c.real) * mp.cos(phase) - mp.mpf(c.imag) * mp.sin(phase)) * mono
        return total

    def grad_theta_mp(self, theta, I, mp):
        out = [mp.mpf(0)] * self.dim
        for a, k, c in zip(self.alphas, self.ks, self.cs):
            phase = mp.fsum(int(kj) * t for kj, t in zip(k, theta))
            mono = mp.mpf(1)
            for aj, x in zip(a, I):
                if aj:
                    mono *= x ** int(aj)
            # d/dtheta_j Re(c e^{i k theta}) = -k_j (Re c sin + Im c cos)
            base = -(mp.mpf(c.real) * mp.sin(phase) + mp.mpf(c.imag) * mp.cos(phase)) * mono
            out = [o + int(kj) * base for o, kj in zip(out, k)]
        return out


def homogeneous_parts_of(f: TaylorFourier) -> list:
    return [f.parts[m] for m in sorted(f.parts)]


__all__ = [
    "HomogeneousPart", "TaylorFourier", "IndexTuple", "PowerCache", "CompiledTF",
    "hp_add", "hp_multiply", "power_expansion", "enumerate_index_set",
    "multinomial_weight_sum", "multinomial_weight_closed_form", "correction_components",
    "tf_eval", "tf_gradient", "graded_key", "unit", "multi_indices",
]
