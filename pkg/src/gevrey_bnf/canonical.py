"""Canonical change of variables defined by a generating function.

A generating function ``g(theta, I)`` defines the map ``(phi, I) -> (x, y)``
through

    phi = x + grad_I g(x, I),     y = I + grad_theta g(x, I).

The first relation is implicit in ``x``; for small ``I`` it is a contraction.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .errors import DomainError, NoConvergence
from .series import CompiledTF, TaylorFourier

RESIDUAL_DPS = 40
ZERO_RESIDUAL = 1e-30


def _random_directions(rng, n: int, count: int) -> np.ndarray:
    v = rng.standard_normal((count, n))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def contraction_factor(compiled: CompiledTF, theta, I) -> float:
    """Spectral norm of d/dtheta grad_I g, the Lipschitz constant of the angle iteration."""
    _, htI, _ = compiled.hessian_blocks(theta, I)
    return float(np.linalg.norm(htI, 2))


def default_domain_radius(g: TaylorFourier, samples: int = 32, seed: int = 0,
                          r_max: float = 1.0, limit: float = 0.9) -> float:
    """Largest dyadic radius ``2^-j <= r_max`` whose sampled contraction factor is below ``limit``."""
    compiled = CompiledTF.from_tf(g)
    if not len(compiled):
        return r_max
    rng = np.random.default_rng(seed)
    n = g.dim
    thetas = rng.uniform(0, 2 * np.pi, (samples, n))
    dirs = _random_directions(rng, n, samples)
    for j in range(60):
        r = r_max * 2.0 ** -j
        q = max(contraction_factor(compiled, t, r * d) for t, d in zip(thetas, dirs))
        if q < limit:
            return r
    return r_max * 2.0 ** -60


@dataclass
class CanonicalMap:
    """The map generated by ``g``; ``g`` must start at degree 2 in the actions."""

    g: TaylorFourier
    domain_radius: float | None = None
    max_iter: int = 100
    tol: float = 1e-12
    _compiled: CompiledTF = field(init=False, repr=False)

    def __post_init__(self):
        for m, part in self.g.parts.items():
            if m < 2 and not part.is_zero():
                raise ValueError("generating function must be O(|I|^2)")
        self._compiled = CompiledTF.from_tf(self.g)
        if self.domain_radius is None:
            self.domain_radius = default_domain_radius(self.g)
        if self.domain_radius <= 0:
            raise ValueError("domain_radius must be positive")

    @property
    def dim(self) -> int:
        return self.g.dim

    @property
    def compiled(self) -> CompiledTF:
        return self._compiled

    def _check_domain(self, I) -> np.ndarray:
        I = np.asarray(I, dtype=float)
        if I.shape != (self.dim,):
            raise ValueError(f"action must have {self.dim} components")
        if np.linalg.norm(I) > self.domain_radius * (1 + 1e-12):
            raise DomainError(f"|I| = {np.linalg.norm(I):.3e} exceeds domain radius {self.domain_radius:.3e}")
        return I

    def solve_angle(self, phi, I) -> np.ndarray:
        """Solve ``phi = theta + grad_I g(theta, I)`` for ``theta``.

        Fixed-point iteration while the local contraction factor is at most
        1/2, Newton otherwise, and always two Newton steps at the end.
        """
        phi = np.asarray(phi, dtype=float)
        I = self._check_domain(I)
        theta = phi.copy()
        if not len(self._compiled) or not np.any(I):
            return theta
        c = self._compiled
        eye = np.eye(self.dim)
        newton = False
        polish = 0
        for _ in range(self.max_iter):
            F = theta + c.grad_action(theta, I) - phi
            small = np.max(np.abs(F)) <= self.tol * 1e-2
            if small and polish >= 2:
                return theta
            _, htI, _ = c.hessian_blocks(theta, I)
            if not newton and np.linalg.norm(htI, 2) > 0.5:
                newton = True
            if newton or np.max(np.abs(F)) <= self.tol:
                theta = theta - np.linalg.solve(eye + htI.T, F)
                polish += 1
            else:
                theta = phi - c.grad_action(theta, I)
        F = theta + c.grad_action(theta, I) - phi
        if np.max(np.abs(F)) > self.tol:
            raise NoConvergence(f"angle equation residual {np.max(np.abs(F)):.3e} after {self.max_iter} iterations")
        return theta

    def apply(self, phi, I):
        """``(x, y)`` with ``x = solve_angle(phi, I)`` and ``y = I + grad_theta g(x, I)``."""
        I = self._check_domain(I)
        x = self.solve_angle(phi, I)
        return x, I + self._compiled.grad_theta(x, I)

    def inverse(self, x, y):
        """Recover ``(phi, I)`` from ``(x, y)``; ``I`` solves ``I = y - grad_theta g(x, I)``."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        c = self._compiled
        I = y.copy()
        eye = np.eye(self.dim)
        for it in range(self.max_iter):
            F = I + c.grad_theta(x, I) - y
            if np.max(np.abs(F)) <= self.tol * 1e-2 and it >= 2:
                break
            _, htI, _ = c.hessian_blocks(x, I)
            # d/dI_k of grad_theta_j g = htI[j, k]
            I = I - np.linalg.solve(eye + htI, F)
        else:
            raise NoConvergence("action equation did not converge")
        return x + c.grad_action(x, I), I


def apply_map(cmap: CanonicalMap, phi, I):
    return cmap.apply(phi, I)


def solve_angle(cmap: CanonicalMap, phi, I):
    return cmap.solve_angle(phi, I)


def symplecticity_defect(cmap: CanonicalMap, phi, I, h: float = 1e-6) -> float:
    """Max-norm of ``J^T Omega J - Omega`` for the central-difference Jacobian of the map."""
    n = cmap.dim
    z0 = np.concatenate([np.asarray(phi, float), np.asarray(I, float)])
    J = np.empty((2 * n, 2 * n))
    for j in range(2 * n):
        e = np.zeros(2 * n)
        e[j] = h
        xp, yp = cmap.apply((z0 + e)[:n], (z0 + e)[n:])
        xm, ym = cmap.apply((z0 - e)[:n], (z0 - e)[n:])
        J[:, j] = (np.concatenate([xp, yp]) - np.concatenate([xm, ym])) / (2 * h)
    omega = np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])
    return float(np.max(np.abs(J.T @ omega @ J - omega)))


def symplecticity_check(cmap: CanonicalMap, radius: float, samples: int = 50, seed: int = 0,
                        h: float = 1e-6) -> float:
    """Worst defect over random points with ``|I| = radius``."""
    rng = np.random.default_rng(seed)
    n = cmap.dim
    phis = rng.uniform(0, 2 * np.pi, (samples, n))
    dirs = _random_directions(rng, n, samples)
    return max(symplecticity_defect(cmap, p, radius * d, h) for p, d in zip(phis, dirs))


# -- flatness of the transformed Hamiltonian ------------------------------------

@dataclass
class FlatnessTable:
    radii: list
    residuals: list
    slope: float | None
    order: int

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "sup_residual", "fitted_slope"])
        slope = "" if self.slope is None else f"{self.slope:.17g}"
        for r, v in zip(self.radii, self.residuals):
            w.writerow([f"{r:.17g}", f"{v:.17g}", slope])
        return buf.getvalue()


def flatness_residual(spec, result, cmap: CanonicalMap, compiled_h0: CompiledTF, phi, I) -> float:
    """``|H(x, y) - H0(I)|`` with ``(x, y)`` the image of ``(phi, I)``.

    The angle is solved in double precision; ``y``, ``H`` and ``H0`` are
    evaluated with 40 significant digits because the difference is many
    orders of magnitude below the size of either term.
    """
    x = cmap.solve_angle(phi, I)
    mp = mpmath.mp
    with mpmath.workdps(RESIDUAL_DPS):
        xs = [mp.mpf(float(v)) for v in x]
        Is = [mp.mpf(float(v)) for v in I]
        corr = cmap.compiled.grad_theta_mp(xs, Is, mp)
        ys = [a + b for a, b in zip(Is, corr)]
        omega = [mp.mpf(w) for w in spec.omega.omega]
        H = mp.fsum(w * v for w, v in zip(omega, ys)) + spec.compiled().value_mp(xs, ys, mp)
        H0 = mp.fsum(w * v for w, v in zip(omega, Is)) + compiled_h0.value_mp([0] * len(Is), Is, mp)
        return float(abs(H - H0))


def flatness_scan(spec, result, radii=None, samples: int = 64, seed: int = 0,
                  cmap: CanonicalMap | None = None) -> FlatnessTable:
    """Sup of the flatness residual over random points on spheres ``|I| = r``.

    The log-log slope is fitted by least squares; it is ``None`` when every
    residual is below ``1e-30`` (nothing left to scale).
    """
    if radii is None:
        radii = np.geomspace(1e-3, 1e-2, 8)
    radii = [float(r) for r in radii]
    if cmap is None:
        cmap = CanonicalMap(result.g, domain_radius=max(max(radii), spec.domain_radius))
    h0 = CompiledTF.from_tf(result.H0_tf())
    rng = np.random.default_rng(seed)
    n = spec.dim
    sups = []
    for r in radii:
        phis = rng.uniform(0, 2 * np.pi, (samples, n))
        dirs = _random_directions(rng, n, samples)
        sups.append(max(flatness_residual(spec, result, cmap, h0, p, r * d) for p, d in zip(phis, dirs)))
    slope = None
    if max(sups) > ZERO_RESIDUAL:
        keep = [(math.log(r), math.log(v)) for r, v in zip(radii, sups) if v > ZERO_RESIDUAL]
        if len(keep) >= 2:
            xs, ys = zip(*keep)
            slope = float(np.polyfit(xs, ys, 1)[0])
    return FlatnessTable(radii, sups, slope, result.completed_order)
