import math

import mpmath
import numpy as np
import pytest

from gevrey_bnf.canonical import (
    CanonicalMap,
    apply_map,
    default_domain_radius,
    flatness_scan,
    solve_angle,
    symplecticity_check,
)
from gevrey_bnf.engine import bnf_run
from gevrey_bnf.errors import DomainError
from gevrey_bnf.fourier import FourierSeries
from gevrey_bnf.series import HomogeneousPart, TaylorFourier


def g2_only():
    part = HomogeneousPart(1, 2, {(2,): FourierSeries.sin((1,), -0.25)})
    return CanonicalMap(TaylorFourier(1, {2: part}), domain_radius=0.5)


def test_zero_action_is_fixed():
    cmap = g2_only()
    phi = np.array([1.234])
    assert solve_angle(cmap, phi, [0.0])[0] == phi[0]
    x, y = apply_map(cmap, phi, [0.0])
    assert x[0] == phi[0] and y[0] == 0.0


def test_empty_generating_function_is_identity():
    cmap = CanonicalMap(TaylorFourier(2, {}, 2, 1), domain_radius=1.0)
    x, y = cmap.apply([0.3, 2.0], [0.1, -0.05])
    assert list(x) == [0.3, 2.0] and list(y) == [0.1, -0.05]


@pytest.mark.parametrize("phi", [0.0, 0.7, math.pi / 2, 3.0, 5.5])
def test_solve_angle_scalar_oracle(phi):
    cmap = g2_only()
    theta = solve_angle(cmap, [phi], [0.1])[0]
    want = float(mpmath.findroot(lambda t: t - 0.05 * mpmath.sin(t) - phi, phi))
    assert theta == pytest.approx(want, abs=1e-12)
    assert abs(phi - theta + 0.05 * math.sin(theta)) < 1e-12


def test_apply_map_example():
    cmap = g2_only()
    x, y = apply_map(cmap, [math.pi / 2], [0.1])
    assert y[0] == pytest.approx(0.1 - 0.25 * math.cos(x[0]) * 0.01, abs=1e-15)


def test_inverse_round_trip(golden_spec):
    res = bnf_run(golden_spec, 4)
    cmap = CanonicalMap(res.g, domain_radius=0.1)
    rng = np.random.default_rng(0)
    for _ in range(10):
        phi = rng.uniform(0, 2 * np.pi, 2)
        I = rng.uniform(-0.05, 0.05, 2)
        x, y = cmap.apply(phi, I)
        phi2, I2 = cmap.inverse(x, y)
        assert np.allclose(phi2, phi, atol=1e-12) and np.allclose(I2, I, atol=1e-14)


def test_domain_is_enforced():
    with pytest.raises(DomainError):
        g2_only().apply([0.0], [0.6])


def test_default_radius_is_contracting():
    r = default_domain_radius(g2_only().g)
    # contraction factor of the angle map is 0.5 r |cos| <= 0.5 r
    assert r == 1.0
    big = HomogeneousPart(1, 2, {(2,): FourierSeries.sin((1,), -10.0)})
    assert default_domain_radius(TaylorFourier(1, {2: big})) < 0.05


def test_rejects_low_order_terms():
    with pytest.raises(ValueError):
        CanonicalMap(TaylorFourier(1, {1: HomogeneousPart(1, 1, {(1,): FourierSeries.cos((1,))})}))


@pytest.mark.parametrize("name", ["pendulum_spec", "golden_spec"])
def test_symplecticity(name, request):
    spec = request.getfixturevalue(name)
    res = bnf_run(spec, 4)
    cmap = CanonicalMap(res.g, domain_radius=spec.domain_radius)
    assert symplecticity_check(cmap, 1e-2, samples=20) <= 1e-6


def test_flatness_integrable(integrable_spec):
    res = bnf_run(integrable_spec, 4)
    table = flatness_scan(integrable_spec, res, samples=8)
    assert max(table.residuals) <= 1e-30
    assert table.slope is None


@pytest.mark.parametrize("M", [2, 3])
def test_flatness_slopes(pendulum_spec, M):
    table = flatness_scan(pendulum_spec, bnf_run(pendulum_spec, M), samples=16)
    assert table.slope >= M + 1 - 0.2
    assert len(table.to_csv().splitlines()) == 9
