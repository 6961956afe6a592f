"""Gamma and Beta function helpers plus grid checks of the inequalities they obey.

Everything works with logarithms so that arguments of a few hundred (routine
in the Gevrey bounds) do not overflow.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

PASS_SLACK = 1e-10


@dataclass
class InequalityReport:
    """Outcome of checking ``LHS <= RHS`` over a grid.

    ``worst_ratio`` is the largest LHS/RHS seen; ``witness`` is where.
    ``constant`` holds a fitted constant for the checks that produce one.
    """

    name: str
    grid: str
    worst_ratio: float
    witness: tuple
    constant: float | None = None
    extra: dict = field(default_factory=dict)
    passed: bool | None = None

    def __post_init__(self):
        if self.passed is None:
            self.passed = bool(self.worst_ratio <= 1 + PASS_SLACK)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "grid": self.grid,
            "worst_ratio": self.worst_ratio,
            "witness": list(self.witness),
            "constant": self.constant,
            "passed": self.passed,
            **({"extra": self.extra} if self.extra else {}),
        }


def log_gamma(x: float) -> float:
    """Natural logarithm of Gamma(x) for x > 0."""
    if x <= 0:
        raise ValueError("log_gamma needs a positive argument")
    return math.lgamma(x)


def log_beta(x: float, y: float) -> float:
    if x <= 0 or y <= 0:
        raise ValueError("beta needs positive arguments")
    return math.lgamma(x) + math.lgamma(y) - math.lgamma(x + y)


def beta(x: float, y: float) -> float:
    """B(x, y) = Gamma(x) Gamma(y) / Gamma(x + y)."""
    return math.exp(log_beta(x, y))


def log_binom(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def check_gamma_beta_identity(samples: int = 200, seed: int = 0) -> InequalityReport:
    """Relative defect of Gamma(x)Gamma(y) = Gamma(x+y)B(x,y), via direct Gamma."""
    rng = np.random.default_rng(seed)
    worst, witness = 0.0, ()
    for x, y in rng.uniform(0.05, 60.0, size=(samples, 2)):
        lhs = math.gamma(x) * math.gamma(y)
        rhs = math.gamma(x + y) * beta(x, y)
        err = abs(lhs - rhs) / lhs
        if err > worst:
            worst, witness = err, (float(x), float(y))
    return InequalityReport("gamma-beta identity", f"{samples} uniform samples in (0.05, 60)^2",
                            worst, witness, passed=worst <= 1e-10, extra={"max_rel_defect": worst})


def check_beta_cauchy(grid=(0.25, 0.5, 1.0, 2.0, 5.0)) -> InequalityReport:
    """B(a+b, c+d) <= B(2a, 2c)^{1/2} B(2b, 2d)^{1/2} for a, b, c, d in ``grid``."""
    worst, witness = -math.inf, ()
    for a, b, c, d in itertools.product(grid, repeat=4):
        lr = log_beta(a + b, c + d) - 0.5 * (log_beta(2 * a, 2 * c) + log_beta(2 * b, 2 * d))
        if lr > worst:
            worst, witness = lr, (a, b, c, d)
    return InequalityReport("beta cauchy", f"{{{', '.join(map(str, grid))}}}^4",
                            math.exp(worst), witness)


def check_beta_lower(grid=None) -> InequalityReport:
    """B(x, y) >= 4^{-x-y} over a log grid of x, y in [0.1, 20]."""
    if grid is None:
        grid = np.geomspace(0.1, 20.0, 41)
    worst, witness = -math.inf, ()
    for x, y in itertools.product(grid, repeat=2):
        lr = -(x + y) * math.log(4.0) - log_beta(x, y)
        if lr > worst:
            worst, witness = lr, (float(x), float(y))
    return InequalityReport("beta lower bound", f"log grid {len(grid)}x{len(grid)} on [0.1, 20]",
                            math.exp(worst), witness)


def gamma_ratio_constant(nu: float, delta: float, step: float, upper: float = 30.0):
    """Smallest C' with binom([x]+[y],[x])^nu B(nu x+delta, nu y+delta) <= C'/min(x+1,y+1)^((nu+1)/2).

    The grid is ``x, y in {0, step, 2 step, ..., upper}``.  Returns
    ``(C', witness)``.
    """
    pts = np.arange(0.0, upper + step / 2, step)
    best, witness = -math.inf, ()
    for x in pts:
        for y in pts:
            fx, fy = int(math.floor(x + 1e-12)), int(math.floor(y + 1e-12))
            val = (nu * log_binom(fx + fy, fx) + log_beta(nu * x + delta, nu * y + delta)
                   + 0.5 * (nu + 1) * math.log(min(x + 1, y + 1)))
            if val > best:
                best, witness = val, (float(x), float(y))
    return math.exp(best), witness


def check_gamma_ratio(nu: float, delta: float, step: float = 0.25, upper: float = 30.0,
                      rel_tol: float = 0.05) -> InequalityReport:
    """Fit the binomial-Beta constant and check it is stable under grid refinement."""
    if nu < 1 or delta <= 0:
        raise ValueError("need nu >= 1 and delta > 0")
    coarse, _ = gamma_ratio_constant(nu, delta, step, upper)
    fine, witness = gamma_ratio_constant(nu, delta, step / 2, upper)
    change = abs(fine - coarse) / coarse
    ok = math.isfinite(fine) and change <= rel_tol
    return InequalityReport(
        f"binomial-beta bound nu={nu} delta={delta}",
        f"x,y in [0,{upper}] step {step} and {step / 2}",
        worst_ratio=1.0 if ok else math.inf, witness=witness, constant=fine,
        extra={"coarse_constant": coarse, "refined_constant": fine, "relative_change": change},
        passed=ok)


def stirling_constant(rho: float, m_max: int) -> tuple:
    """Smallest C >= 1 with C^-m Gamma(rho m+1) <= (m!)^rho <= C^m Gamma(rho m+1), 1 <= m <= m_max."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    best, witness = 0.0, 1
    for m in range(1, m_max + 1):
        gap = abs(rho * math.lgamma(m + 1) - math.lgamma(rho * m + 1)) / m
        if gap > best:
            best, witness = gap, m
    return math.exp(best), witness


def stirling_equiv(rho: float, m_max: int, refine_to: int | None = None,
                   rel_tol: float = 0.05) -> InequalityReport:
    """Fit C(rho) on m <= m_max and compare against m <= ``refine_to`` (default 2 m_max)."""
    C, witness = stirling_constant(rho, m_max)
    refine_to = refine_to or 2 * m_max
    C2, _ = stirling_constant(rho, refine_to)
    change = abs(C2 - C) / C
    ok = math.isfinite(C2) and change <= rel_tol
    return InequalityReport(
        f"factorial power equivalence rho={rho}", f"1 <= m <= {m_max} (refined to {refine_to})",
        worst_ratio=1.0 if ok else math.inf, witness=(witness,), constant=C,
        extra={"refined_constant": C2, "relative_change": change}, passed=ok)


def gamma_suite(seed: int = 0) -> list:
    """All Gamma/Beta reports used by the ``checks`` command."""
    reports = [check_gamma_beta_identity(seed=seed), check_beta_cauchy(), check_beta_lower()]
    for nu, delta in ((1.0, 1.0), (2.0, 0.5), (2.0, 1.0), (3.0, 2.0)):
        reports.append(check_gamma_ratio(nu, delta))
    for rho in (1.0, 1.5, 2.0):
        reports.append(stirling_equiv(rho, 20, 40))
    return reports
