"""Order-by-order Birkhoff normal form near a Kronecker torus.

For ``H(theta, r) = <omega, r> + sum_{|alpha|>=2} b_alpha(theta) r^alpha`` the
generating function ``g = sum_{m>=2} g_m`` is built so that

    H(theta, I + d_theta g) = <omega, I> + sum_m R_m(I) + O(|I|^{M+1}).

At order ``m`` the degree-``m`` part ``B_m`` of the left-hand side is assembled
from ``b_alpha`` and ``g_2..g_{m-1}``, its average ``R_m`` is split off, and
``L_omega g_m = R_m - B_m`` is solved mode by mode.
"""
from __future__ import annotations

import contextlib
import logging
from dataclasses import dataclass, field

from .diagnostics import GevreyParams
from .errors import MissingData, ResonantMode
from .fourier import (
    DEFAULT_CONFIG,
    ArithmeticConfig,
    ArithmeticLog,
    DiophantineVector,
    FourierSeries,
    fs_linear_combine,
    fs_mean,
    solve_homological,
)
from .series import (
    CompiledTF,
    HomogeneousPart,
    PowerCache,
    TaylorFourier,
    correction_components,
    hp_add,
)

log = logging.getLogger(__name__)

EXTENDED_PRECISION_BITS = 128


@dataclass
class HamiltonianSpec:
    """Hamiltonian in prepared coordinates around the torus ``r = 0``.

    ``coeffs`` holds ``b_alpha`` for ``|alpha| >= 2``; the linear part is
    exactly ``<omega, r>`` and ``H(theta, 0) = 0``.
    """

    dim: int
    omega: DiophantineVector
    coeffs: TaylorFourier
    gevrey: GevreyParams
    domain_radius: float = 0.1
    config: ArithmeticConfig = DEFAULT_CONFIG

    def __post_init__(self):
        if self.omega.dim != self.dim or self.coeffs.dim != self.dim:
            raise ValueError("dimension mismatch between omega, coefficients and dim")
        for m, part in self.coeffs.parts.items():
            if m < 2 and not part.is_zero():
                raise ValueError("coefficients must start at degree 2")
            for alpha, series in part.items():
                if not series.real:
                    raise ValueError(f"coefficient b_{alpha} is not flagged real")
        if self.domain_radius <= 0:
            raise ValueError("domain_radius must be positive")

    @property
    def input_radius(self) -> int:
        """Largest Fourier radius among the input coefficients (at least 1)."""
        return max([1] + [s.max_mode for _, s in self.coeffs.terms()])

    def coefficient_items(self, max_degree: int):
        for m in sorted(self.coeffs.parts):
            if 2 <= m <= max_degree:
                yield from self.coeffs.parts[m].items()

    def is_integrable(self) -> bool:
        return all(set(s.coeffs) <= {(0,) * self.dim} for _, s in self.coeffs.terms())

    def compiled(self) -> CompiledTF:
        return CompiledTF.from_tf(self.coeffs)

    def energy(self, theta, r) -> float:
        """H(theta, r) from the stored Taylor-Fourier data."""
        return float(sum(w * x for w, x in zip(self.omega.omega, r))) + self.compiled().value(theta, r)


@dataclass
class BNFResult:
    """Finite jet of the normal form through order ``order``."""

    order: int
    dim: int
    omega: tuple
    g: TaylorFourier
    normal_form: list
    B_parts: dict | None = None
    divisor_log: dict = field(default_factory=dict)
    truncation_log: dict = field(default_factory=dict)
    error: str | None = None

    def R(self, m: int) -> HomogeneousPart:
        for part in self.normal_form:
            if part.degree == m:
                return part
        return HomogeneousPart.zero(self.dim, m)

    def H0_tf(self) -> TaylorFourier:
        parts = {p.degree: p for p in self.normal_form}
        return TaylorFourier(self.dim, parts, 2, max(self.order, 2))

    def H0(self, I) -> float:
        """``<omega, I> + sum_m R_m(I)``."""
        lin = sum(w * x for w, x in zip(self.omega, I))
        return float(lin) + CompiledTF.from_tf(self.H0_tf()).value((0.0,) * self.dim, I)

    @property
    def completed_order(self) -> int:
        return max([1] + [p.degree for p in self.normal_form])


def _radius_for_order(spec: HamiltonianSpec, m: int) -> int:
    return min(m * spec.input_radius, spec.config.k_max)


def assemble_Bm(spec: HamiltonianSpec, g_lower: TaylorFourier, m: int,
                log: ArithmeticLog | None = None) -> HomogeneousPart:
    """Degree-``m`` part of ``sum_alpha b_alpha (I + d_theta g)^alpha``."""
    if m < 2:
        raise ValueError("m must be at least 2")
    missing = [k for k in range(2, m) if k not in g_lower.parts]
    if missing:
        raise MissingData(f"generating function lacks orders {missing}")
    n = spec.dim
    radius = _radius_for_order(spec, m)
    cfg = spec.config
    comps = correction_components(n, g_lower, m - 1)
    cache = PowerCache(comps, m, radius, log, cfg)
    total = HomogeneousPart.zero(n, m)
    for alpha, b in spec.coefficient_items(m):
        if m == sum(alpha):
            contribution = HomogeneousPart(n, m, {alpha: b})
        else:
            contribution = cache.expansion(alpha, m).times_series(b, radius, log, cfg)
        total = hp_add(total, contribution)
    return total


def bnf_step(spec: HamiltonianSpec, g_lower: TaylorFourier, m: int,
             log: ArithmeticLog | None = None):
    """One order of the recursion.

    Returns
    -------
    g_m, R_m, B_m : HomogeneousPart
        ``L_omega g_m + B_m = R_m`` with ``R_m = <B_m>`` and ``<g_m> = 0``.
    """
    B = assemble_Bm(spec, g_lower, m, log)
    n = spec.dim
    zero_k = (0,) * n
    R_terms, g_terms = {}, {}
    for alpha, series in B.items():
        mean = fs_mean(series)
        if series.real:
            mean = mean.real
        if abs(mean) > 0:
            R_terms[alpha] = FourierSeries._trusted(n, {zero_k: mean + 0j * mean}, 0, series.real)
        oscillating = FourierSeries._trusted(
            n, {k: c for k, c in series.items() if k != zero_k}, series.max_mode, series.real)
        if not oscillating.is_zero():
            u = solve_homological(oscillating, spec.omega, log, spec.config)
            g_terms[alpha] = u.scale(-1.0)
    return HomogeneousPart(n, m, g_terms), HomogeneousPart(n, m, R_terms), B


def _to_extended(spec: HamiltonianSpec) -> HamiltonianSpec:
    parts = {m: p.map(lambda s: s.astype(True)) for m, p in spec.coeffs.parts.items()}
    coeffs = TaylorFourier(spec.dim, parts, spec.coeffs.m_min, spec.coeffs.m_max)
    return HamiltonianSpec(spec.dim, spec.omega, coeffs, spec.gevrey, spec.domain_radius, spec.config)


def bnf_run(spec: HamiltonianSpec, M: int, retain_B: bool | None = None,
            extended: bool = False) -> BNFResult:
    """Run the recursion for ``m = 2..M``.

    Parameters
    ----------
    retain_B : bool, optional
        Keep the ``B_m`` parts for diagnostics; defaults to on for ``M < 8``.
    extended : bool
        Carry coefficients as 128-bit ``mpmath`` numbers.

    On :class:`ResonantMode` the recursion stops and the partial result is
    returned with ``error`` set.
    """
    if M < 2:
        raise ValueError("order M must be at least 2")
    if retain_B is None:
        retain_B = M < 8
    if extended:
        import mpmath
        ctx = mpmath.workprec(EXTENDED_PRECISION_BITS)
        spec = _to_extended(spec)
    else:
        ctx = contextlib.nullcontext()
    g = TaylorFourier(spec.dim, {}, 2, 1)
    result = BNFResult(M, spec.dim, spec.omega.omega, g, [], {} if retain_B else None)
    with ctx:
        for m in range(2, M + 1):
            order_log = ArithmeticLog()
            try:
                g_m, R_m, B_m = bnf_step(spec, result.g, m, order_log)
            except ResonantMode as exc:
                log.warning("order %d aborted: %s", m, exc)
                result.error = f"ResonantMode at order {m}: {exc}"
                break
            result.g = result.g.with_part(g_m)
            result.normal_form.append(R_m)
            if retain_B:
                result.B_parts[m] = B_m
            result.divisor_log[m] = order_log.min_divisor
            result.truncation_log[m] = order_log.truncated_mass
            log.debug("order %d: %d g-terms, min divisor %.3e", m, len(g_m), order_log.min_divisor)
    return result


def homological_residual(spec: HamiltonianSpec, g_m: HomogeneousPart, R_m: HomogeneousPart,
                         B_m: HomogeneousPart) -> dict:
    """``S_0(L_omega g_m[a] + B_m[a] - R_m[a]) / S_0(B_m[a])`` for every alpha."""
    from .fourier import lie_derivative, wiener_norm

    out = {}
    for alpha in set(g_m) | set(R_m) | set(B_m):
        lhs = lie_derivative(g_m[alpha], spec.omega.omega)
        lhs = fs_linear_combine(1.0, lhs, 1.0, B_m[alpha])
        lhs = fs_linear_combine(1.0, lhs, -1.0, R_m[alpha])
        scale = wiener_norm(B_m[alpha], 0).value
        out[alpha] = wiener_norm(lhs, 0).value / scale if scale else wiener_norm(lhs, 0).value
    return out
