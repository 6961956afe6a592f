"""Sparse Fourier series on the n-torus.

A :class:`FourierSeries` stores the finitely many nonzero coefficients of

.. math::
    u(\\theta) = \\sum_k u_k e^{i\\langle k, \\theta\\rangle}

keyed by integer frequency tuples.  Besides linear algebra and convolution the
module provides the weighted Wiener norms S_s and P_s, bounds on the sup norm
of derivatives, and the small-divisor solver of the homological equation
``<omega, d/dtheta> u = f``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionError, NonZeroMean, ResonantMode


@dataclass(frozen=True)
class ArithmeticConfig:
    """Tolerances shared by the series arithmetic.

    Parameters
    ----------
    drop_tol : float
        Amplitudes with modulus below this value are not stored.
    mean_zero_rel : float
        Relative tolerance (with respect to S_0) on the mean of a right-hand
        side passed to :func:`solve_homological`.
    resonance_floor : float
        Hard floor on ``|<omega, k>|`` below which a mode counts as resonant.
    k_max : int
        Global cap on the Fourier radius kept by the normal-form recursion.
    grid_points : int
        Points per angle used by the sampled sup-norm estimate.
    hermitian_tol : float
        Relative tolerance of the reality check on construction.
    """

    drop_tol: float = 1e-30
    mean_zero_rel: float = 1e-12
    resonance_floor: float = 1e-14
    k_max: int = 64
    grid_points: int = 256
    hermitian_tol: float = 1e-12


DEFAULT_CONFIG = ArithmeticConfig()


@dataclass
class ArithmeticLog:
    """Append-only record filled by products and homological solves."""

    truncated_mass: float = 0.0
    min_divisor: float = math.inf
    n_products: int = 0
    n_solves: int = 0

    def record_truncation(self, mass: float) -> None:
        self.truncated_mass += float(mass)
        self.n_products += 1

    def record_divisor(self, value: float) -> None:
        self.n_solves += 1
        if value < self.min_divisor:
            self.min_divisor = float(value)


def l1(k: Sequence[int]) -> int:
    return sum(abs(x) for x in k)


def _positive_half(k: tuple) -> bool:
    for x in k:
        if x:
            return x > 0
    return False


def _neg(k: tuple) -> tuple:
    return tuple(-x for x in k)


def _conj(c):
    return c.conjugate()


class FourierSeries:
    """Finitely supported Fourier series.

    Instances are immutable; every operation returns a new series.

    Parameters
    ----------
    dim : int
        Number of angles n.
    coeffs : mapping
        ``{k: amplitude}`` with ``k`` a length-``dim`` integer tuple.
    max_mode : int, optional
        Truncation radius in the l1 norm; defaults to the largest stored |k|.
    real : bool
        Flag the series as real valued; Hermitian symmetry is then checked.
    config : ArithmeticConfig, optional
    """

    __slots__ = ("dim", "_coeffs", "max_mode", "real")

    def __init__(self, dim: int, coeffs: Mapping | None = None, max_mode: int | None = None,
                 real: bool = False, config: ArithmeticConfig = DEFAULT_CONFIG):
        if dim < 1:
            raise ValueError("dim must be positive")
        data = {}
        for k, c in (coeffs or {}).items():
            k = tuple(int(x) for x in k)
            if len(k) != dim:
                raise DimensionError(f"mode {k} does not have dimension {dim}")
            if abs(c) < config.drop_tol:
                continue
            data[k] = c if not isinstance(c, (int, float)) else complex(c)
        top = max((l1(k) for k in data), default=0)
        if max_mode is None:
            max_mode = top
        elif top > max_mode:
            raise ValueError(f"stored mode with |k|={top} exceeds max_mode={max_mode}")
        if real:
            scale = max((abs(c) for c in data.values()), default=0.0)
            slack = config.hermitian_tol * scale + config.drop_tol
            for k, c in data.items():
                partner = data.get(_neg(k), 0.0)
                if abs(c - _conj(partner)) > slack:
                    raise ValueError(f"series flagged real violates Hermitian symmetry at k={k}")
        self.dim = dim
        self._coeffs = data
        self.max_mode = int(max_mode)
        self.real = bool(real)

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls, dim: int, real: bool = True) -> "FourierSeries":
        return cls(dim, {}, 0, real)

    @classmethod
    def constant(cls, value, dim: int) -> "FourierSeries":
        real = isinstance(value, (int, float)) or getattr(value, "imag", 0) == 0
        return cls(dim, {(0,) * dim: value}, 0, real)

    @classmethod
    def cos(cls, k: Sequence[int], amplitude: float = 1.0) -> "FourierSeries":
        """``amplitude * cos(<k, theta>)``."""
        k = tuple(k)
        if not any(k):
            return cls.constant(amplitude, len(k))
        return cls(len(k), {k: amplitude / 2, _neg(k): amplitude / 2}, real=True)

    @classmethod
    def sin(cls, k: Sequence[int], amplitude: float = 1.0) -> "FourierSeries":
        """``amplitude * sin(<k, theta>)``."""
        k = tuple(k)
        if not any(k):
            return cls.zero(len(k))
        return cls(len(k), {k: -0.5j * amplitude, _neg(k): 0.5j * amplitude}, real=True)

    @classmethod
    def _trusted(cls, dim, data, max_mode, real) -> "FourierSeries":
        obj = object.__new__(cls)
        obj.dim = dim
        obj._coeffs = data
        obj.max_mode = max_mode
        obj.real = real
        return obj

    # -- mapping-like access ------------------------------------------------
    @property
    def coeffs(self) -> Mapping:
        return MappingProxyType(self._coeffs)

    def __getitem__(self, k) -> complex:
        return self._coeffs.get(tuple(k), 0.0)

    def __len__(self) -> int:
        return len(self._coeffs)

    def __iter__(self):
        return iter(self._coeffs)

    def items(self):
        return self._coeffs.items()

    def sorted_items(self):
        return sorted(self._coeffs.items())

    def is_zero(self) -> bool:
        return not self._coeffs

    def __repr__(self) -> str:
        body = ", ".join(f"{k}: {c:.6g}" for k, c in self.sorted_items()[:6])
        more = "" if len(self) <= 6 else ", ..."
        return f"FourierSeries(dim={self.dim}, real={self.real}, {{{body}{more}}})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, FourierSeries):
            return NotImplemented
        return self.dim == other.dim and self._coeffs == other._coeffs

    __hash__ = None

    # -- operator sugar -----------------------------------------------------
    def __add__(self, other):
        return fs_linear_combine(1.0, self, 1.0, other)

    def __sub__(self, other):
        return fs_linear_combine(1.0, self, -1.0, other)

    def __neg__(self):
        return self.scale(-1.0)

    def __mul__(self, other):
        if isinstance(other, FourierSeries):
            return fs_product(self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, a) -> "FourierSeries":
        real = self.real and getattr(a, "imag", 0) == 0
        data = {k: a * c for k, c in self._coeffs.items()}
        return FourierSeries(self.dim, data, self.max_mode, real)

    def with_max_mode(self, max_mode: int) -> "FourierSeries":
        return FourierSeries(self.dim, self._coeffs, max(max_mode, self.max_mode), self.real)

    def astype(self, extended: bool) -> "FourierSeries":
        """Convert amplitudes to ``mpmath.mpc`` (extended) or builtin complex."""
        if extended:
            import mpmath
            data = {k: mpmath.mpc(c) for k, c in self._coeffs.items()}
        else:
            data = {k: complex(c) for k, c in self._coeffs.items()}
        return FourierSeries._trusted(self.dim, data, self.max_mode, self.real)

    def __call__(self, theta) -> complex:
        return fs_evaluate(self, theta)


def _check_dims(u: FourierSeries, v: FourierSeries) -> None:
    if u.dim != v.dim:
        raise DimensionError(f"dimension mismatch: {u.dim} != {v.dim}")


def _symmetrize(data: dict) -> dict:
    """Make ``data`` exactly Hermitian, keeping the positive-half values."""
    out = {}
    for k, c in data.items():
        if _positive_half(k):
            out[k] = c
            out[_neg(k)] = _conj(c)
        elif not any(k):
            out[k] = c.real + 0j if isinstance(c, complex) else type(c)(c.real)
    for k, c in data.items():
        if not _positive_half(k) and any(k) and _neg(k) not in data:
            out[_neg(k)] = _conj(c)
            out[k] = c
    return out


def _is_real_scalar(a) -> bool:
    return isinstance(a, (int, float)) or getattr(a, "imag", 1) == 0


def fs_linear_combine(a, u: FourierSeries, b, v: FourierSeries,
                      config: ArithmeticConfig = DEFAULT_CONFIG) -> FourierSeries:
    """Return ``a*u + b*v`` coefficientwise."""
    _check_dims(u, v)
    data = {k: a * c for k, c in u.items()}
    for k, c in v.items():
        data[k] = data.get(k, 0.0) + b * c
    data = {k: c for k, c in data.items() if abs(c) >= config.drop_tol}
    real = u.real and v.real and _is_real_scalar(a) and _is_real_scalar(b)
    return FourierSeries._trusted(u.dim, data, max(u.max_mode, v.max_mode), real)


def fs_sum(series: Iterable[FourierSeries], dim: int,
           config: ArithmeticConfig = DEFAULT_CONFIG) -> FourierSeries:
    data: dict = {}
    real = True
    max_mode = 0
    for s in series:
        if s.dim != dim:
            raise DimensionError(f"dimension mismatch: {s.dim} != {dim}")
        real = real and s.real
        max_mode = max(max_mode, s.max_mode)
        for k, c in s.items():
            data[k] = data.get(k, 0.0) + c
    data = {k: c for k, c in data.items() if abs(c) >= config.drop_tol}
    return FourierSeries._trusted(dim, data, max_mode, real)


def fs_product(u: FourierSeries, v: FourierSeries, max_mode: int | None = None,
               log: ArithmeticLog | None = None,
               config: ArithmeticConfig = DEFAULT_CONFIG) -> FourierSeries:
    """Convolution ``(uv)_k = sum_l u_l v_{k-l}``.

    Modes with ``|k| > max_mode`` are dropped and their absolute mass is added
    to ``log.truncated_mass``.  ``max_mode`` defaults to the sum of the input
    radii, in which case nothing is lost.
    """
    _check_dims(u, v)
    if max_mode is None:
        max_mode = u.max_mode + v.max_mode
    real = u.real and v.real
    data: dict = {}
    if len(u) > len(v):
        u, v = v, u
    vitems = list(v.items())
    for ku, cu in u.items():
        for kv, cv in vitems:
            k = tuple(x + y for x, y in zip(ku, kv))
            if real and _positive_half(k) is False and any(k):
                # negative half is filled from the conjugate below
                continue
            data[k] = data.get(k, 0.0) + cu * cv
    discarded = 0.0
    kept = {}
    for k, c in data.items():
        if l1(k) > max_mode:
            discarded += abs(c) * (2 if real and any(k) else 1)
        elif abs(c) >= config.drop_tol:
            kept[k] = c
    if real:
        kept = _symmetrize(kept)
    if log is not None:
        log.record_truncation(discarded)
    return FourierSeries._trusted(u.dim, kept, int(max_mode), real)


def fs_derivative(u: FourierSeries, j: int) -> FourierSeries:
    """Partial derivative in the angle ``theta_j`` (0-based axis)."""
    if not 0 <= j < u.dim:
        raise IndexError(f"axis {j} out of range for dim {u.dim}")
    data = {k: 1j * k[j] * c for k, c in u.items() if k[j] != 0}
    return FourierSeries._trusted(u.dim, data, u.max_mode, u.real)


def fs_multi_derivative(u: FourierSeries, alpha: Sequence[int]) -> FourierSeries:
    data = {}
    order = sum(alpha)
    for k, c in u.items():
        w = 1
        for kj, aj in zip(k, alpha):
            w *= kj ** aj
        if w:
            data[k] = (1j ** order) * w * c
    return FourierSeries._trusted(u.dim, data, u.max_mode, u.real)


def fs_mean(u: FourierSeries) -> complex:
    """The zero mode, i.e. the average over the torus."""
    return u[(0,) * u.dim]


def fs_evaluate(u: FourierSeries, theta) -> complex:
    theta = np.asarray(theta, dtype=float)
    total = 0j
    for k, c in u.items():
        total += complex(c) * np.exp(1j * float(np.dot(k, theta)))
    return total


def lie_derivative(u: FourierSeries, omega: Sequence[float]) -> FourierSeries:
    """Apply ``L_omega = sum_j omega_j d/dtheta_j``."""
    data = {k: 1j * sum(w * x for w, x in zip(omega, k)) * c for k, c in u.items() if any(k)}
    return FourierSeries._trusted(u.dim, data, u.max_mode, u.real)


# -- norms -------------------------------------------------------------------

@dataclass(frozen=True)
class NormValue:
    """A computed norm; ``kind`` is one of ``S``, ``P``, ``Q-upper``, ``Q-grid``."""

    s: float
    value: float
    kind: str

    def __float__(self) -> float:
        return self.value


def wiener_norm(u: FourierSeries, s: float) -> NormValue:
    """S_s(u) = sum_k (1+|k|)^s |u_k|."""
    if s < 0:
        raise ValueError("smoothness weight s must be nonnegative")
    total = math.fsum(float(abs(c)) * (1.0 + l1(k)) ** s for k, c in u.items())
    return NormValue(float(s), total, "S")


def modified_norm(u: FourierSeries, s: float) -> NormValue:
    """P_s(u) = (s+1)^2 S_s(u)."""
    return NormValue(float(s), (s + 1.0) ** 2 * wiener_norm(u, s).value, "P")


def multi_indices(n: int, p: int):
    """All alpha in N^n with |alpha| = p, in lexicographic order."""
    if n == 1:
        yield (p,)
        return
    for first in range(p, -1, -1):
        for rest in multi_indices(n - 1, p - first):
            yield (first,) + rest


def sup_derivative_bound(u: FourierSeries, p: int, mode: str = "upper",
                         grid_points: int | None = None,
                         config: ArithmeticConfig = DEFAULT_CONFIG) -> NormValue:
    """Bounds for Q_p(u) = sup_{|alpha|=p} sup_theta |d^alpha u|.

    ``mode="upper"`` returns ``sup_alpha sum_k |k^alpha| |u_k|`` which
    dominates Q_p; ``mode="grid"`` samples the derivatives on a uniform grid,
    giving a lower estimate.
    """
    if p < 0:
        raise ValueError("p must be nonnegative")
    if u.is_zero():
        return NormValue(float(p), 0.0, "Q-upper" if mode == "upper" else "Q-grid")
    ks = np.array(list(u.coeffs.keys()), dtype=float)
    cs = np.array([complex(c) for c in u.coeffs.values()])
    alphas = list(multi_indices(u.dim, p))
    if mode == "upper":
        best = 0.0
        for alpha in alphas:
            w = np.prod(np.abs(ks) ** np.array(alpha, dtype=float), axis=1)
            best = max(best, float(np.sum(w * np.abs(cs))))
        return NormValue(float(p), best, "Q-upper")
    if mode != "grid":
        raise ValueError(f"unknown mode {mode!r}")
    npts = grid_points or config.grid_points
    # keep the sample count bounded in higher dimension
    while npts ** u.dim > 2 ** 20 and npts > 8:
        npts //= 2
    axes = [np.arange(npts) * (2 * np.pi / npts)] * u.dim
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, u.dim)
    phases = np.exp(1j * mesh @ ks.T)
    best = 0.0
    for alpha in alphas:
        w = np.prod((1j * ks) ** np.array(alpha, dtype=float), axis=1)
        vals = phases @ (w * cs)
        best = max(best, float(np.max(np.abs(vals))))
    return NormValue(float(p), best, "Q-grid")


# -- Diophantine frequencies and the homological equation ----------------------

def integer_vectors(n: int, K: int, include_zero: bool = False):
    """Integer vectors with 0 < |k|_1 <= K (lexicographic)."""
    for k in itertools.product(range(-K, K + 1), repeat=n):
        s = l1(k)
        if s <= K and (s > 0 or include_zero):
            yield k


def dioph_empirical_kappa(omega: Sequence[float], tau: float, K: int) -> float:
    """min over 0 < |k| <= K of |<omega, k>| |k|^tau, by exhaustive scan."""
    omega = np.asarray(omega, dtype=float)
    n = omega.size
    if K < 1:
        raise ValueError("K must be at least 1")
    if tau < n - 1:
        raise ValueError(f"tau must be at least n-1 = {n - 1}")
    grids = np.meshgrid(*[np.arange(-K, K + 1)] * n, indexing="ij")
    ks = np.stack([g.ravel() for g in grids], axis=1)
    norms = np.abs(ks).sum(axis=1)
    mask = (norms > 0) & (norms <= K)
    ks, norms = ks[mask], norms[mask]
    vals = np.abs(ks @ omega) * norms.astype(float) ** tau
    return float(vals.min())


@dataclass(frozen=True)
class DiophantineVector:
    """Frequency vector omega with Diophantine constants (kappa, tau).

    The condition ``|<omega,k>| >= kappa |k|^-tau`` is verified for all
    ``0 < |k| <= verified_horizon`` on construction.
    """

    omega: tuple
    kappa: float
    tau: float
    verified_horizon: int

    def __post_init__(self):
        object.__setattr__(self, "omega", tuple(float(w) for w in self.omega))
        n = len(self.omega)
        if not 0 < self.kappa <= 1:
            raise ValueError("kappa must lie in (0, 1]")
        if self.tau < n - 1:
            raise ValueError(f"tau must be at least n-1 = {n - 1}")
        if self.verified_horizon >= 1:
            measured = dioph_empirical_kappa(self.omega, self.tau, self.verified_horizon)
            if measured < self.kappa * (1 - 1e-12):
                raise ResonantMode(
                    f"omega violates the Diophantine bound up to |k|={self.verified_horizon}: "
                    f"min |<omega,k>||k|^tau = {measured:.3e} < kappa = {self.kappa:.3e}")

    @property
    def dim(self) -> int:
        return len(self.omega)

    @classmethod
    def from_omega(cls, omega: Sequence[float], tau: float, horizon: int = 100,
                   floor: float = DEFAULT_CONFIG.resonance_floor) -> "DiophantineVector":
        """Measure kappa empirically up to ``horizon`` and clamp it to 1."""
        kappa = dioph_empirical_kappa(omega, tau, horizon)
        if kappa <= floor:
            raise ResonantMode(f"omega={tuple(omega)} is resonant within |k| <= {horizon}")
        return cls(tuple(omega), min(kappa, 1.0), tau, horizon)


def solve_homological(f: FourierSeries, w: DiophantineVector | Sequence[float],
                      log: ArithmeticLog | None = None,
                      config: ArithmeticConfig = DEFAULT_CONFIG) -> FourierSeries:
    """Solve ``L_omega u = f`` with ``<u> = 0``: ``u_k = f_k / (i <omega,k>)``.

    Raises
    ------
    NonZeroMean
        If the mean of ``f`` exceeds ``config.mean_zero_rel * S_0(f)``.
    ResonantMode
        If a stored mode has ``|<omega,k>|`` below ``config.resonance_floor``.
    """
    omega = w.omega if isinstance(w, DiophantineVector) else tuple(w)
    if len(omega) != f.dim:
        raise DimensionError(f"omega has length {len(omega)}, series has dim {f.dim}")
    mean = fs_mean(f)
    if abs(mean) > config.mean_zero_rel * wiener_norm(f, 0).value:
        raise NonZeroMean(f"right-hand side has mean {complex(mean):.3e}")
    extended = any(not isinstance(c, complex) for c in f.coeffs.values())
    if extended:
        import mpmath
        omega = [mpmath.mpf(x) for x in omega]
    data = {}
    smallest = math.inf
    for k, c in f.items():
        if not any(k):
            continue
        d = sum(wj * kj for wj, kj in zip(omega, k))
        ad = abs(float(d))
        if ad < config.resonance_floor:
            raise ResonantMode(f"|<omega,k>| = {ad:.3e} at k={k}")
        smallest = min(smallest, ad)
        data[k] = c / (1j * d)
    if log is not None:
        log.record_divisor(smallest)
    return FourierSeries._trusted(f.dim, data, f.max_mode, f.real)
