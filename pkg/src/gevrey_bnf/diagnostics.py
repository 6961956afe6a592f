"""Gevrey-type growth diagnostics for the normal-form coefficients.

The bounds of interest have the shape

    P_s(g_m) <= C1^s C2^(m-1) Gamma(rho s + (mu-1)(m-1) - rho)

with ``mu = rho (tau + 1) + 1``.  Everything here works in log space since the
Gamma factors overflow doubles already for moderate ``m``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateProfile
from .fourier import fs_derivative, modified_norm
from .series import HomogeneousPart, hp_multiply

GRID_STEP = math.log(2.0) / 8  # envelope search resolution: 2^(1/8)
GRID_MAX = 160  # C1 searched on [1, 2^20]
CHECK_SLACK = 1e-12


@dataclass(frozen=True)
class GevreyParams:
    """Exponents and constants of an anisotropic Gevrey class.

    ``mu`` is derived from ``rho`` and ``tau``; ``mu_override`` exists only to
    probe alternative exponents and is off by default.
    """

    rho: float
    tau: float
    kappa: float = 1.0
    L0: float = 1.0
    L1: float = 1.0
    L2: float = 1.0
    C1: float | None = None
    C2: float | None = None
    mu_override: float | None = None

    def __post_init__(self):
        if self.rho < 1:
            raise ValueError("rho must be >= 1")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if not 0 < self.kappa <= 1:
            raise ValueError("kappa must lie in (0, 1]")
        if min(self.L0, self.L1, self.L2) < 1:
            raise ValueError("L0, L1, L2 must be >= 1")
        for c in (self.C1, self.C2):
            if c is not None and c <= 0:
                raise ValueError("C1 and C2 must be positive")

    @property
    def mu(self) -> float:
        if self.mu_override is not None:
            return float(self.mu_override)
        return self.rho * (self.tau + 1) + 1

    def with_constants(self, C1: float, C2: float) -> "GevreyParams":
        return GevreyParams(self.rho, self.tau, self.kappa, self.L0, self.L1, self.L2,
                            C1, C2, self.mu_override)

    def as_dict(self) -> dict:
        return {"rho": self.rho, "tau": self.tau, "mu": self.mu, "kappa": self.kappa,
                "L0": self.L0, "L1": self.L1, "L2": self.L2, "C1": self.C1, "C2": self.C2}


@dataclass
class NormProfile:
    """P_s of one order, for each s in ``s_grid``.

    ``values`` majorizes the sup over the unit polydisc by summing the
    coefficient norms over alpha; ``lower`` is the largest single coefficient.
    """

    m: int
    s_grid: tuple
    values: tuple
    lower: tuple

    def __post_init__(self):
        for v in self.values + self.lower:
            if not (math.isfinite(v) and v >= 0):
                raise ValueError("profile values must be finite and nonnegative")

    def is_zero(self) -> bool:
        return not any(self.values)


def norm_profile(part: HomogeneousPart, s_grid) -> NormProfile:
    s_grid = tuple(float(s) for s in s_grid)
    values, lower = [], []
    for s in s_grid:
        norms = [modified_norm(c, s).value for _, c in part.items()]
        values.append(math.fsum(norms))
        lower.append(max(norms, default=0.0))
    return NormProfile(part.degree, s_grid, tuple(values), tuple(lower))


def profiles_to_csv(profiles, kind: str) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "m", "s", "upper", "lower"])
    for p in profiles:
        for s, v, lo in zip(p.s_grid, p.values, p.lower):
            w.writerow([kind, p.m, f"{s:.17g}", f"{v:.17g}", f"{lo:.17g}"])
    return buf.getvalue()


# -- envelope fitting ------------------------------------------------------------

def _g_log_gamma(params: GevreyParams, m: int, s: float) -> float:
    return math.lgamma(params.rho * s + (params.mu - 1) * (m - 1) - params.rho)


def _b_log_gamma(params: GevreyParams, m: int, s: float) -> float:
    return math.lgamma(params.rho * s + (params.mu - 1) * (m - 2))


@dataclass
class EnvelopeFit:
    """Certified constants plus the plain least-squares estimate.

    Unpacks as ``C1, C2``.
    """

    C1: float
    C2: float
    regression: tuple | None
    n_entries: int
    violations: int
    max_log_slack: float
    vacuous: bool = False
    notes: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.C1, self.C2))

    def as_dict(self) -> dict:
        return {"C1": self.C1, "C2": self.C2,
                "regression": list(self.regression) if self.regression else None,
                "n_entries": self.n_entries, "violations": self.violations,
                "max_log_slack": self.max_log_slack, "vacuous": self.vacuous,
                "notes": list(self.notes)}


def _entries(profiles, params):
    """(s, m-1, log value - log Gamma) for every nonzero profile entry."""
    rows = []
    for p in profiles:
        for s, v in zip(p.s_grid, p.values):
            if v > 0:
                rows.append((s, p.m - 1, math.log(v) - _g_log_gamma(params, p.m, s)))
    return rows


def envelope_violations(profiles, params: GevreyParams, C1: float, C2: float) -> int:
    """Number of entries with P_s(g_m) > C1^s C2^(m-1) Gamma(...)."""
    bad = 0
    for s, w, y in _entries(profiles, params):
        if y > s * math.log(C1) + w * math.log(C2) + CHECK_SLACK:
            bad += 1
    return bad


def fit_constants(profiles, params: GevreyParams) -> EnvelopeFit:
    """Smallest grid constants (C1, C2) bounding every profile entry.

    ``C1`` runs over ``2^(j/8)``, ``j = 0..160``.  For each ``C1`` the least
    admissible ``C2 >= 1`` is rounded up to the same grid, and the pair with the
    smallest product ``C1 C2`` wins (ties go to the smaller ``C1``).
    """
    profiles = sorted(profiles, key=lambda p: p.m)
    if len(profiles) < 2:
        raise DegenerateProfile("need profiles for at least two orders (M >= 3)")
    if any(len(p.s_grid) < 2 for p in profiles):
        raise DegenerateProfile("need at least two smoothness weights")
    rows = _entries(profiles, params)
    n_entries = sum(len(p.s_grid) for p in profiles)
    if not rows:
        return EnvelopeFit(1.0, 1.0, None, n_entries, 0, 0.0, vacuous=True,
                           notes=["all profiles vanish; the bound holds for any constants"])

    S = np.array([r[0] for r in rows])
    W = np.array([r[1] for r in rows], dtype=float)
    Y = np.array([r[2] for r in rows])
    regression = None
    design = np.column_stack([S, W])
    if np.linalg.matrix_rank(design) == 2:
        coef, *_ = np.linalg.lstsq(design, Y, rcond=None)
        regression = (float(np.exp(coef[0])), float(np.exp(coef[1])))

    best = None
    for j1 in range(GRID_MAX + 1):
        a = j1 * GRID_STEP
        need = float(np.max((Y - S * a) / W))
        j2 = max(0, math.ceil(need / GRID_STEP))
        # guard against rounding right at a grid point
        while np.any(Y > S * a + W * j2 * GRID_STEP + CHECK_SLACK):
            j2 += 1
        if best is None or j1 + j2 < best[0] + best[1]:
            best = (j1, j2)
    j1, j2 = best
    C1, C2 = 2.0 ** (j1 / 8), 2.0 ** (j2 / 8)
    slack = S * math.log(C1) + W * math.log(C2) - Y
    fit = EnvelopeFit(C1, C2, regression, n_entries,
                      envelope_violations(profiles, params, C1, C2), float(np.min(slack)))
    if j1 == GRID_MAX:
        fit.notes.append("C1 reached the top of the search grid")
    return fit


def b_envelope(profiles, params: GevreyParams, C1: float, C2: float) -> float:
    """Least B0 with P_s(B_m) <= B0 C1^s C2^(m-2) Gamma(rho s + (mu-1)(m-2)), m >= 3."""
    worst = -math.inf
    for p in profiles:
        if p.m < 3:
            continue
        for s, v in zip(p.s_grid, p.values):
            if v > 0:
                r = (math.log(v) - s * math.log(C1) - (p.m - 2) * math.log(C2)
                     - _b_log_gamma(params, p.m, s))
                worst = max(worst, r)
    return math.exp(worst) if worst > -math.inf else 0.0


# -- optimal truncation and stability time ------------------------------------

def _require(value, name):
    if value is None:
        raise ValueError(f"{name} must be set (fit or prescribe it first)")
    return value


def _exponent(I_norm: float, params: GevreyParams) -> float:
    if I_norm <= 0:
        raise ValueError("action size must be positive")
    C2 = _require(params.C2, "C2")
    return (C2 * I_norm) ** (-1.0 / (params.rho * (params.tau + 1)))


def optimal_truncation(I_norm: float, params: GevreyParams) -> int:
    """Order at which to stop the normal form for actions of size ``I_norm``."""
    x = _exponent(I_norm, params)
    return max(2, int(round(x)))


def log_remainder_bound(I_norm: float, alpha, beta, A: float, params: GevreyParams) -> float:
    if A <= 0:
        raise ValueError("A must be positive")
    x = _exponent(I_norm, params)
    out = math.log(A) - x
    if sum(alpha):
        out += sum(alpha) * math.log(_require(params.C1, "C1"))
        out += params.rho * sum(math.lgamma(a + 1) for a in alpha)
    if sum(beta):
        out += sum(beta) * math.log(params.C2)
        out += (params.mu - 1) * sum(math.lgamma(b + 1) for b in beta)
    return out


def remainder_bound(I_norm: float, alpha, beta, A: float, params: GevreyParams) -> float:
    """A C1^|a| C2^|b| (a!)^rho (b!)^(mu-1) exp(-(C2 |I|)^(-1/(rho(tau+1))))."""
    lg = log_remainder_bound(I_norm, alpha, beta, A, params)
    return math.exp(lg) if lg < 709 else math.inf


@dataclass(frozen=True)
class StabilityTime:
    log_T: float
    log10_T: float
    T: float
    floored: bool


def stability_time_estimate(I_norm: float, params: GevreyParams) -> StabilityTime:
    """Heuristic confinement horizon, the reciprocal of the remainder size.

    The exponent is floored at 1, so ``C2 |I| >= 1`` yields ``T = e``.
    """
    x = _exponent(I_norm, params)
    floored = x < 1
    x = max(x, 1.0)
    return StabilityTime(x, x / math.log(10), math.exp(x) if x < 709 else math.inf, floored)


# -- spot checks of the product estimates ---------------------------------------

def _part_derivative(part: HomogeneousPart, j: int) -> HomogeneousPart:
    return part.map(lambda s: fs_derivative(s, j))


def _lemma_log_rhs(params, C1, C2, ms, s, extra=0):
    """Log of the product-estimate right side without the C0, K0 factors."""
    p = len(ms)
    Mp = sum(ms) - p
    mu, delta = params.mu, params.mu - 2
    expo = 1 + delta - mu  # = -1 for delta = mu - 2
    out = (p + s) * math.log(C1) + Mp * math.log(C2)
    out += expo * (math.lgamma(Mp + 1) - sum(math.lgamma(m) for m in ms))
    out += math.lgamma(params.rho * s + (mu - 1) * (Mp + extra))
    return out


def verify_estimate_lemmas(result, params: GevreyParams, sample_budget: int = 64,
                           seed: int = 0, s_grid=(0.0, 1.0, 2.0, 4.0), spec=None) -> dict:
    """Spot-check the derivative and product estimates on sampled tuples.

    ``C1``, ``C2`` come from ``params`` or, when unset, from :func:`fit_constants`
    on the generating function.  The product estimates are checked by
    reporting the smallest ``C0`` (and ``K0`` when ``spec`` supplies the input
    coefficients) that makes every sample pass.
    """
    mu = params.mu
    if mu <= 2:
        raise ValueError("the product estimates need mu > 2 (delta = mu - 2 > 0)")
    rng = np.random.default_rng(seed)
    n = result.dim
    orders = sorted(m for m, part in result.g.parts.items() if m >= 2)
    top = max(orders, default=1)
    if top < 3:
        raise ValueError("need the generating function through order >= 3")
    report = {"delta": mu - 2, "s_grid": list(s_grid)}

    # derivative bound, exhaustively over orders, axes and coefficients
    worst = 0.0
    for m in orders:
        for j in range(n):
            for _, c in result.g.part(m).items():
                d = fs_derivative(c, j)
                for s in s_grid:
                    rhs = modified_norm(c, s + 1).value
                    lhs = modified_norm(d, s).value
                    if lhs > 0:
                        worst = max(worst, lhs / rhs)
    report["derivative"] = {"max_ratio": worst, "passed": worst <= 1 + 1e-12}

    if all(result.g.part(m).is_zero() for m in orders):
        report["product"] = {"C0": 1.0, "samples": 0, "vacuous": True}
        report["coefficient"] = {"K0": 1.0, "samples": 0, "vacuous": True}
        report["passed"] = True
        return report

    C1, C2 = params.C1, params.C2
    if C1 is None or C2 is None:
        fit = fit_constants([norm_profile(result.g.part(m), s_grid) for m in orders], params)
        C1, C2 = fit.C1, fit.C2
    report["C1"], report["C2"] = C1, C2

    # sampled tuples (m_1..m_p), p <= 3, with 2 <= m_k <= top
    def sample_tuples():
        seen = set()
        for p in (1, 2, 3):
            for _ in range(sample_budget):
                ms = tuple(sorted(int(x) for x in rng.integers(2, top + 1, size=p)))
                js = tuple(int(x) for x in rng.integers(0, n, size=p))
                if (ms, js) not in seen:
                    seen.add((ms, js))
                    yield ms, js

    tuples = list(sample_tuples())
    products = {}
    log_c0, p1_ratio, count = 0.0, 0.0, 0
    for ms, js in tuples:
        prod = _part_derivative(result.g.part(ms[0]), js[0])
        for m, j in zip(ms[1:], js[1:]):
            prod = hp_multiply(prod, _part_derivative(result.g.part(m), j))
        products[(ms, js)] = prod
        prof = norm_profile(prod, s_grid)
        for s, v in zip(s_grid, prof.values):
            if v <= 0:
                continue
            count += 1
            gap = math.log(v) - _lemma_log_rhs(params, C1, C2, ms, s)
            if len(ms) == 1:
                p1_ratio = max(p1_ratio, math.exp(gap))
            else:
                log_c0 = max(log_c0, gap / (len(ms) - 1))
    C0 = math.exp(log_c0)
    report["product"] = {"C0": C0, "samples": count, "p1_max_ratio": p1_ratio,
                         "p1_passed": p1_ratio <= 1 + 1e-9}

    if spec is not None:
        log_k0, kcount = 0.0, 0
        coeffs = [(a, b) for a, b in spec.coefficient_items(10 ** 6) if not b.is_zero()]
        for (ms, js), prod in products.items():
            if not coeffs:
                break
            alpha, b = coeffs[int(rng.integers(len(coeffs)))]
            k = sum(alpha)
            prof = norm_profile(prod.times_series(b), s_grid)
            Mp = sum(ms) - len(ms)
            for s, v in zip(s_grid, prof.values):
                if v <= 0:
                    continue
                kcount += 1
                rhs = (_lemma_log_rhs(params, C1, C2, ms, s, extra=k - 2)
                       + (k - 1) * (mu - 1 + math.log(params.L2))
                       + (len(ms) - 1) * log_c0
                       - (math.lgamma(Mp + k - 1) - math.lgamma(k - 1) - math.lgamma(Mp + 1)))
                log_k0 = max(log_k0, math.log(v) - rhs)
        report["coefficient"] = {"K0": math.exp(log_k0), "samples": kcount}
    report["passed"] = bool(report["derivative"]["passed"] and math.isfinite(C0))
    return report
