import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gevrey_bnf.errors import DimensionError, NonZeroMean, ResonantMode
from gevrey_bnf.fourier import (
    ArithmeticConfig,
    ArithmeticLog,
    DiophantineVector,
    FourierSeries,
    dioph_empirical_kappa,
    fs_derivative,
    fs_evaluate,
    fs_linear_combine,
    fs_mean,
    fs_product,
    lie_derivative,
    modified_norm,
    solve_homological,
    sup_derivative_bound,
    wiener_norm,
)

PHI = (1 + math.sqrt(5)) / 2
COS = FourierSeries.cos((1,))
SIN = FourierSeries.sin((1,))


def real_series(n, max_k=4):
    key = st.tuples(*[st.integers(-max_k, max_k)] * n)
    amp = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)

    def build(d):
        data = {}
        for k, c in d.items():
            if not any(k):
                data[k] = complex(c.real)
            else:
                data[k] = c
                data[tuple(-x for x in k)] = c.conjugate()
        return FourierSeries(n, data, real=True)

    return st.dictionaries(key, amp, max_size=5).map(build)


# -- construction and linear algebra ------------------------------------------

def test_reality_is_checked():
    with pytest.raises(ValueError):
        FourierSeries(1, {(1,): 1.0, (-1,): 2.0}, real=True)


def test_max_mode_is_enforced():
    with pytest.raises(ValueError):
        FourierSeries(1, {(3,): 1.0}, max_mode=2)


def test_cancellation_gives_zero():
    assert fs_linear_combine(1, COS, 1, -COS).is_zero()


def test_scaling():
    u = fs_linear_combine(2, COS, 0, COS)
    assert u[(1,)] == pytest.approx(1) and u[(-1,)] == pytest.approx(1)


def test_cos_plus_sin():
    u = fs_linear_combine(1, COS, 1, SIN)
    assert u[(1,)] == pytest.approx(0.5 - 0.5j)
    assert u[(-1,)] == pytest.approx(0.5 + 0.5j)
    assert u.real


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        fs_linear_combine(1, COS, 1, FourierSeries.cos((1, 0)))
    with pytest.raises(DimensionError):
        fs_product(COS, FourierSeries.cos((1, 0)))


# -- products -------------------------------------------------------------------

def test_double_angle():
    p = fs_product(COS, COS)
    assert p[(0,)] == pytest.approx(0.5)
    assert p[(2,)] == pytest.approx(0.25) and p[(-2,)] == pytest.approx(0.25)
    assert wiener_norm(p, 0).value == pytest.approx(wiener_norm(COS, 0).value ** 2)


def test_product_identity():
    assert fs_product(COS, FourierSeries.constant(1.0, 1)) == COS


def test_truncation_is_logged():
    log = ArithmeticLog()
    p = fs_product(COS, COS, max_mode=1, log=log)
    assert (2,) not in p.coeffs
    assert log.truncated_mass == pytest.approx(0.5)


@settings(max_examples=60, deadline=None)
@given(real_series(2), real_series(2), st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi))
def test_product_matches_pointwise(u, v, a, b):
    p = fs_product(u, v)
    assert p.real
    lhs = fs_evaluate(p, (a, b))
    rhs = fs_evaluate(u, (a, b)) * fs_evaluate(v, (a, b))
    assert abs(lhs - rhs) <= 1e-10 * (1 + abs(rhs))
    assert abs(lhs.imag) <= 1e-10 * (1 + abs(lhs))


# -- derivatives and means -------------------------------------------------------

def test_derivative_examples():
    assert fs_derivative(SIN, 0) == COS
    assert fs_derivative(FourierSeries.constant(3.0, 1), 0).is_zero()
    d = fs_derivative(FourierSeries.cos((1, 2)), 1)
    assert d == FourierSeries.sin((1, 2), -2.0)
    with pytest.raises(IndexError):
        fs_derivative(COS, 1)


def test_means():
    assert fs_mean(COS) == 0
    assert fs_mean(fs_product(COS, COS)) == pytest.approx(0.5)
    assert fs_mean(FourierSeries.constant(2.5, 2)) == 2.5


# -- norms ------------------------------------------------------------------------

def test_wiener_and_modified_norms():
    assert wiener_norm(COS, 0).value == pytest.approx(1)
    assert wiener_norm(COS, 1).value == pytest.approx(2)
    assert wiener_norm(COS, 2).value == pytest.approx(4)
    assert wiener_norm(FourierSeries.zero(1), 3).value == 0
    assert modified_norm(COS, 0).value == pytest.approx(1)
    assert modified_norm(COS, 1).value == pytest.approx(8)
    assert modified_norm(COS, 2).value == pytest.approx(36)
    assert modified_norm(COS, 1).kind == "P"
    with pytest.raises(ValueError):
        wiener_norm(COS, -1)


def test_sup_derivative_bounds():
    assert sup_derivative_bound(COS, 0).value == pytest.approx(1)
    assert sup_derivative_bound(COS, 1).value == pytest.approx(1)
    assert sup_derivative_bound(FourierSeries.constant(5.0, 1), 0, "grid").value == pytest.approx(5)


@settings(max_examples=40, deadline=None)
@given(real_series(2, 3), st.integers(0, 3))
def test_grid_estimate_below_upper_bound(u, p):
    grid = sup_derivative_bound(u, p, "grid", 32).value
    upper = sup_derivative_bound(u, p, "upper").value
    assert grid <= upper * (1 + 1e-12) + 1e-12


# -- Diophantine data and the homological equation -------------------------------

def test_empirical_kappa():
    assert dioph_empirical_kappa((1.0,), 1, 100) == pytest.approx(1.0)
    assert dioph_empirical_kappa((1.0, PHI), 1, 100) == pytest.approx(1.0)
    assert dioph_empirical_kappa((1.0, 0.5), 1, 4) == 0.0


def test_diophantine_vector_validation():
    DiophantineVector((1.0, PHI), 1.0, 1.0, 100)
    with pytest.raises(ResonantMode):
        DiophantineVector.from_omega((1.0, 0.5), 1.0, 4)
    with pytest.raises(ValueError):
        DiophantineVector((1.0,), 1.5, 1.0, 10)
    with pytest.raises(ValueError):
        DiophantineVector((1.0, PHI, 2.0), 0.1, 1.0, 10)


def test_homological_examples():
    assert solve_homological(COS, (1.0,)) == SIN
    assert solve_homological(FourierSeries.zero(1), (1.0,)).is_zero()
    f = FourierSeries.cos((1, -1))
    u = solve_homological(f, DiophantineVector.from_omega((1.0, PHI), 1.0))
    expected = FourierSeries.sin((1, -1), 1 / (1 - PHI))
    for k in ((1, -1), (-1, 1)):
        assert u[k] == pytest.approx(expected[k], rel=1e-14)


def test_homological_errors():
    with pytest.raises(NonZeroMean):
        solve_homological(FourierSeries.constant(1.0, 1) + COS, (1.0,))
    with pytest.raises(ResonantMode):
        solve_homological(FourierSeries.cos((1, -2)), (1.0, 0.5))


def test_divisor_log():
    log = ArithmeticLog()
    solve_homological(FourierSeries.cos((3,)) + COS, (1.0,), log)
    assert log.min_divisor == pytest.approx(1.0)


@settings(max_examples=60, deadline=None)
@given(real_series(2, 6), st.sampled_from([0.0, 1.0, 2.5, 5.0]))
def test_homological_bound_and_residual(f, s):
    f = fs_linear_combine(1, f, -1, FourierSeries.constant(fs_mean(f), 2)) if fs_mean(f) else f
    omega = (1.0, PHI)
    u = solve_homological(f, omega)
    assert fs_mean(u) == 0
    assert u.real
    if f.is_zero():
        return
    kappa = dioph_empirical_kappa(omega, 1.0, max(1, f.max_mode))
    assert wiener_norm(u, s).value <= wiener_norm(f, s + 1).value / kappa * (1 + 1e-10)
    back = fs_linear_combine(1, lie_derivative(u, omega), -1, f)
    assert wiener_norm(back, 0).value <= 1e-12 * wiener_norm(f, 0).value


def test_extended_precision_round_trip():
    import mpmath
    u = COS.astype(True)
    assert isinstance(next(iter(u.coeffs.values())), mpmath.mpc)
    with mpmath.workprec(128):
        v = solve_homological(u, (1.0,))
    assert complex(v[(1,)]) == pytest.approx(SIN[(1,)])


def test_config_drop_tolerance():
    cfg = ArithmeticConfig(drop_tol=1e-3)
    u = FourierSeries(1, {(1,): 1e-4, (-1,): 1e-4, (0,): 1.0}, real=True, config=cfg)
    assert set(u.coeffs) == {(0,)}


def test_evaluate_cos():
    assert fs_evaluate(COS, (0.3,)).real == pytest.approx(np.cos(0.3))
