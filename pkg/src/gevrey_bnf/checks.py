"""Randomized and exhaustive checks of the norm, product and counting inequalities.

Each suite returns a list of plain dicts with at least ``name`` and ``passed``.
"""
from __future__ import annotations

import math

import mpmath
import numpy as np

from . import special
from .fourier import (
    FourierSeries,
    dioph_empirical_kappa,
    fs_multi_derivative,
    fs_product,
    lie_derivative,
    modified_norm,
    multi_indices,
    solve_homological,
    sup_derivative_bound,
    wiener_norm,
)
from .series import multinomial_weight_closed_form, multinomial_weight_sum

SLACK = 1e-10
PRODUCT_CONSTANT = 8 * math.pi ** 2 / 3
GOLDEN = (1 + math.sqrt(5)) / 2


def random_trig_poly(rng, n: int, K: int, n_modes: int, mean_zero: bool = True) -> FourierSeries:
    """Real, nonzero trigonometric polynomial with up to ``n_modes`` random modes of size <= K."""
    data = {}
    while not data:
        _fill_modes(rng, n, K, n_modes, mean_zero, data)
    return FourierSeries(n, data, real=True)


def _fill_modes(rng, n, K, n_modes, mean_zero, data):
    for _ in range(n_modes):
        k = tuple(int(x) for x in rng.integers(-K, K + 1, size=n))
        if sum(abs(x) for x in k) > K:
            continue
        if not any(k):
            if mean_zero:
                continue
            data[k] = complex(rng.standard_normal())
            continue
        c = complex(rng.standard_normal(), rng.standard_normal()) * 0.5
        data[k] = c
        data[tuple(-x for x in k)] = c.conjugate()


def _report(name: str, checked: int, worst: float, passed: bool, **extra) -> dict:
    return {"name": name, "checked": checked, "worst_ratio": worst, "passed": bool(passed), **extra}


def homological_check(count: int = 100, seed: int = 0, s_grid=(0.0, 1.0, 2.5, 5.0),
                      tau: float = 1.0) -> list:
    """Solution bound and residual identity for random mean-zero right-hand sides."""
    rng = np.random.default_rng(seed)
    worst, worst_res, checked = 0.0, 0.0, 0
    for i in range(count):
        n = 1 + i % 2
        omega = (1.0,) if n == 1 else (1.0, GOLDEN)
        f = random_trig_poly(rng, n, int(rng.integers(1, 21)), int(rng.integers(1, 13)))
        u = solve_homological(f, omega)
        kappa = dioph_empirical_kappa(omega, tau, max(1, f.max_mode))
        for s in s_grid:
            lhs = wiener_norm(u, s).value
            rhs = wiener_norm(f, s + tau).value / kappa
            worst = max(worst, lhs / rhs)
            checked += 1
        back = lie_derivative(u, omega) - f
        worst_res = max(worst_res, wiener_norm(back, 0).value / wiener_norm(f, 0).value)
    return [
        _report("homological solution bound", checked, worst, worst <= 1 + SLACK),
        _report("homological residual identity", count, worst_res, worst_res <= 1e-10,
                note="worst_ratio is the relative S_0 residual"),
    ]


def _floor(s: float) -> int:
    return int(math.floor(s + 1e-12))


def product_rhs_wiener(u, v, s: float) -> float:
    fs = _floor(s)
    return 2 * math.fsum(
        math.comb(fs, m) * (wiener_norm(u, s - m).value * wiener_norm(v, m).value
                            + wiener_norm(v, s - m).value * wiener_norm(u, m).value)
        for m in range(fs + 1))


def product_rhs_modified(u, v, s: float) -> float:
    fs = _floor(s)
    return PRODUCT_CONSTANT * max(
        math.comb(fs, m) * (modified_norm(u, s - m).value * modified_norm(v, m).value
                            + modified_norm(v, s - m).value * modified_norm(u, m).value)
        for m in range(fs + 1))


def product_check(count: int = 200, seed: int = 0, s_grid=(0.0, 1.5, 3.0, 6.25)) -> list:
    rng = np.random.default_rng(seed)
    w1 = w2 = 0.0
    checked = 0
    for i in range(count):
        n = 1 + i % 2
        u = random_trig_poly(rng, n, int(rng.integers(1, 11)), int(rng.integers(1, 9)), False)
        v = random_trig_poly(rng, n, int(rng.integers(1, 11)), int(rng.integers(1, 9)), False)
        uv = fs_product(u, v)
        for s in s_grid:
            w1 = max(w1, wiener_norm(uv, s).value / product_rhs_wiener(u, v, s))
            w2 = max(w2, modified_norm(uv, s).value / product_rhs_modified(u, v, s))
            checked += 1
    return [
        _report("weighted Wiener product bound", checked, w1, w1 <= 1 + SLACK),
        _report("modified-norm product bound", checked, w2, w2 <= 1 + SLACK,
                constant=PRODUCT_CONSTANT),
    ]


def derivative_check(count: int = 100, seed: int = 0, s_grid=(0.0, 0.5, 2.0, 4.5)) -> dict:
    rng = np.random.default_rng(seed)
    worst, checked = 0.0, 0
    for i in range(count):
        n = 1 + i % 2
        u = random_trig_poly(rng, n, int(rng.integers(1, 16)), int(rng.integers(1, 10)), False)
        for p in range(4):
            for alpha in multi_indices(n, p):
                d = fs_multi_derivative(u, alpha)
                for s in s_grid:
                    lhs = modified_norm(d, s).value
                    if lhs > 0:
                        worst = max(worst, lhs / modified_norm(u, s + p).value)
                    checked += 1
    return _report("derivative norm compatibility", checked, worst, worst <= 1 + SLACK)


def lattice_constant(n: int) -> float:
    """sum over k in Z^n of (1 + |k|_1)^(-n-1)."""

    def shell(j):
        # number of k in Z^n with |k|_1 = j
        return sum(2 ** i * math.comb(n, i) * math.comb(j - 1, i - 1) for i in range(1, min(n, j) + 1))

    with mpmath.workdps(20):
        tail = mpmath.nsum(lambda j: shell(int(j)) / (1 + j) ** (n + 1), [1, mpmath.inf])
    return 1.0 + float(tail)


def sandwich_check(count: int = 60, seed: int = 0, s_grid=(0.0, 1.0, 2.5, 4.0),
                   grid_points: int = 64) -> list:
    """Lower half with the sampled sup; upper half with the Fourier-side majorant of Q."""
    rng = np.random.default_rng(seed)
    lower, upper, checked = 0.0, 0.0, 0
    consts = {n: 2 * math.e ** 2 * (2 * n) ** (n + 2) * lattice_constant(n) for n in (1, 2)}
    for i in range(count):
        n = 1 + i % 2
        u = random_trig_poly(rng, n, int(rng.integers(1, 9)), int(rng.integers(1, 8)), False)
        for s in s_grid:
            fs = _floor(s)
            P = modified_norm(u, s).value
            q = sup_derivative_bound(u, fs, "grid", grid_points).value
            lower = max(lower, q / P)
            rhs = consts[n] * (2 * math.e * n) ** fs * (
                sup_derivative_bound(u, fs + n + 2, "upper").value
                + sup_derivative_bound(u, 0, "upper").value)
            upper = max(upper, P / rhs)
            checked += 1
    return [
        _report("sup-norm lower sandwich", checked, lower, lower <= 1 + SLACK),
        _report("sup-norm upper sandwich (Fourier majorant)", checked, upper, upper <= 1 + SLACK,
                constants={str(k): v for k, v in consts.items()}),
    ]


def wiener_suite(seed: int = 0) -> list:
    return (homological_check(seed=seed) + product_check(seed=seed)
            + [derivative_check(seed=seed)] + sandwich_check(seed=seed))


def combinatorics_suite(max_m: int = 12, max_n: int = 3) -> list:
    """Exact comparison of the enumerated multinomial weight sum with its closed form."""
    checked, mismatches = 0, []
    for n in range(1, max_n + 1):
        for m in range(2, max_m + 1):
            for total in range(2, m + 1):
                for alpha in multi_indices(n, total):
                    got = multinomial_weight_sum(alpha, m)
                    want = multinomial_weight_closed_form(alpha, m)
                    checked += 1
                    if got != want:
                        mismatches.append({"alpha": list(alpha), "m": m, "sum": got, "closed": want})
    return [{"name": "multinomial weight identity", "checked": checked,
             "mismatches": mismatches[:20], "passed": not mismatches}]


def gamma_suite(seed: int = 0) -> list:
    return [r.as_dict() for r in special.gamma_suite(seed)]


SUITES = {"wiener": wiener_suite, "gamma": gamma_suite,
          "combinatorics": lambda seed=0: combinatorics_suite()}


def run_suites(name: str, seed: int = 0) -> dict:
    names = list(SUITES) if name == "all" else [name]
    out = {}
    for nm in names:
        out[nm] = SUITES[nm](seed=seed)
    return out
