import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gevrey_bnf.errors import DimensionError, MissingData
from gevrey_bnf.fourier import FourierSeries, fs_evaluate, multi_indices
from gevrey_bnf.series import (
    CompiledTF,
    HomogeneousPart,
    IndexTuple,
    TaylorFourier,
    enumerate_index_set,
    hp_add,
    hp_multiply,
    multinomial_weight_closed_form,
    multinomial_weight_sum,
    power_expansion,
    tf_gradient,
    unit,
)

COS = FourierSeries.cos((1,))
SIN = FourierSeries.sin((1,))


def part_value(part, theta, I):
    """Direct complex evaluation, independent of CompiledTF."""
    total = 0j
    for alpha, s in part.items():
        total += complex(fs_evaluate(s, theta)) * math.prod(x ** a for x, a in zip(I, alpha))
    return total


def random_part(rng, n, degree, K=2):
    terms = {}
    for alpha in multi_indices(n, degree):
        data = {}
        for _ in range(2):
            k = tuple(int(x) for x in rng.integers(-K, K + 1, size=n))
            c = complex(rng.standard_normal(), rng.standard_normal())
            if not any(k):
                c = complex(c.real)
            data[k] = c
            data[tuple(-x for x in k)] = c.conjugate()
        terms[alpha] = FourierSeries(n, data, real=True)
    return HomogeneousPart(n, degree, terms)


def random_components(rng, n, top):
    comps = []
    for i in range(n):
        comp = {1: HomogeneousPart.monomial(unit(n, i))}
        for k in range(2, top + 1):
            comp[k] = random_part(rng, n, k)
        comps.append(comp)
    return comps


def contour_coefficient(comps, alpha, m, theta, I, nodes=64):
    """Degree-m coefficient in t of prod_i (sum_k V_ik(theta, t I))^alpha_i, by the DFT."""
    ts = np.exp(2j * np.pi * np.arange(nodes) / nodes)
    vals = []
    for t in ts:
        It = [t * x for x in I]
        prod = 1
        for i, a in enumerate(alpha):
            v = sum(part_value(p, theta, It) for p in comps[i].values())
            prod *= v ** a
        vals.append(prod)
    return np.sum(np.array(vals) * ts ** (-m)) / nodes


# -- homogeneous parts ------------------------------------------------------------

def test_degree_is_checked():
    with pytest.raises(ValueError):
        HomogeneousPart(1, 2, {(3,): COS})
    with pytest.raises(DimensionError):
        HomogeneousPart(2, 2, {(2,): COS})


def test_add_and_multiply():
    a = HomogeneousPart(1, 2, {(2,): COS})
    b = HomogeneousPart(1, 2, {(2,): SIN})
    s = hp_add(a, b)
    assert s[(2,)] == COS + SIN
    with pytest.raises(ValueError):
        hp_add(a, HomogeneousPart.zero(1, 3))
    p = hp_multiply(a, HomogeneousPart(1, 1, {(1,): COS}))
    assert p.degree == 3
    assert p[(3,)][(0,)] == pytest.approx(0.5)


def test_multiply_matches_pointwise():
    rng = np.random.default_rng(1)
    a, b = random_part(rng, 2, 2), random_part(rng, 2, 3)
    p = hp_multiply(a, b)
    theta, I = (0.4, 1.3), (0.7, -0.2)
    assert part_value(p, theta, I) == pytest.approx(part_value(a, theta, I) * part_value(b, theta, I))


def test_taylor_fourier_window():
    tf = TaylorFourier(1, {2: HomogeneousPart(1, 2, {(2,): COS})})
    assert (tf.m_min, tf.m_max) == (2, 2)
    assert tf.part(5).is_zero()
    with pytest.raises(ValueError):
        TaylorFourier(1, {2: HomogeneousPart.zero(1, 3)})


def test_gradient_in_action():
    tf = TaylorFourier(2, {3: HomogeneousPart(2, 3, {(2, 1): FourierSeries.cos((1, 0))})})
    d = tf_gradient(tf, ("I", 0))
    assert d.parts[2][(1, 1)] == FourierSeries.cos((1, 0), 2.0)


def test_compiled_evaluation_matches_direct():
    rng = np.random.default_rng(3)
    part = random_part(rng, 2, 3)
    tf = TaylorFourier(2, {3: part})
    theta, I = (0.9, 2.1), (0.3, 0.5)
    assert CompiledTF.from_tf(tf).value(theta, I) == pytest.approx(part_value(part, theta, I).real)


# -- index sets and weights --------------------------------------------------------

def test_index_set_small_case():
    tuples = list(enumerate_index_set((2,), 3))
    assert [t.alphas for t in tuples] == [((1,), (1,))]
    assert tuples[0].weight == 2


def test_index_set_members_are_valid():
    for t in enumerate_index_set((2, 1), 6):
        assert t.alpha == (2, 1)
        assert sum(j * sum(a) for j, a in enumerate(t.alphas, 1)) == 6


def test_index_tuple_rejects_wrong_weight():
    with pytest.raises(ValueError):
        IndexTuple(4, ((1,), (1,), (0,)))


def brute_weight_sum(alpha, m):
    """Sum over all assignments of each unit of alpha to a level j, with sum of levels = m."""
    units = [i for i, a in enumerate(alpha) for _ in range(a)]
    count = 0
    for levels in product(range(1, m), repeat=len(units)):
        if sum(levels) == m:
            count += 1
    return count


@pytest.mark.parametrize("alpha,m", [((2,), 4), ((3,), 5), ((1, 1), 4), ((2, 1), 5), ((1, 1, 1), 5)])
def test_weight_sum_matches_compositions(alpha, m):
    # assigning each of the |alpha| labeled units a level in 1..m-1 with total m
    # counts alpha!/prod(alpha^j!) per index tuple, i.e. compositions of m into |alpha| parts
    assert multinomial_weight_sum(alpha, m) == brute_weight_sum(alpha, m)
    assert multinomial_weight_sum(alpha, m) == math.comb(m - 1, sum(alpha) - 1)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=1, max_size=3), st.integers(0, 4))
def test_weight_identity_property(alpha, extra):
    if sum(alpha) < 2:
        return
    m = sum(alpha) + extra
    assert multinomial_weight_sum(alpha, m) == multinomial_weight_closed_form(alpha, m)


def test_weight_sum_domain():
    with pytest.raises(ValueError):
        multinomial_weight_sum((1,), 3)


# -- power expansion ---------------------------------------------------------------

def test_power_expansion_spec_example():
    comps = [{1: HomogeneousPart.monomial((1,)),
              2: HomogeneousPart(1, 2, {(2,): FourierSeries.cos((1,), 0.5)})}]
    out = power_expansion(comps, (2,), 3)
    assert set(out) == {(3,)}
    assert out[(3,)] == COS
    assert power_expansion(comps, (2,), 2)[(2,)] == FourierSeries.constant(1.0, 1)


@pytest.mark.parametrize("n,top", [(1, 6), (2, 4)])
def test_power_expansion_against_contour_oracle(n, top):
    rng = np.random.default_rng(7 + n)
    comps = random_components(rng, n, top - 1)
    theta = tuple(rng.uniform(0, 2 * np.pi, n))
    I = tuple(rng.uniform(0.2, 0.8, n))
    for total in range(2, top + 1):
        for alpha in multi_indices(n, total):
            for m in range(total, top + 1):
                got = part_value(power_expansion(comps, alpha, m), theta, I)
                want = contour_coefficient(comps, alpha, m, theta, I)
                assert abs(got - want) <= 1e-12 * max(1.0, abs(want)), (alpha, m)


def index_set_expansion(comps, alpha, m, theta, I):
    """Sum over N(alpha, m) of the multinomial weight times prod_j V_j^{alpha^j}."""
    total = 0j
    for t in enumerate_index_set(alpha, m):
        term = t.weight
        for j, beta in enumerate(t.alphas, start=1):
            for i, b in enumerate(beta):
                if b:
                    term *= part_value(comps[i].get(j, HomogeneousPart.zero(len(alpha), j)), theta, I) ** b
        total += term
    return total


def test_power_expansion_against_index_set_sum():
    rng = np.random.default_rng(11)
    comps = random_components(rng, 2, 5)
    theta, I = (1.1, 0.2), (0.5, 0.35)
    for alpha in [(2, 0), (1, 1), (2, 1), (1, 3), (0, 2)]:
        for m in range(sum(alpha), 7):
            got = part_value(power_expansion(comps, alpha, m), theta, I)
            want = index_set_expansion(comps, alpha, m, theta, I)
            assert abs(got - want) <= 1e-12 * max(1.0, abs(want))


def test_power_expansion_missing_grade():
    comps = [{1: HomogeneousPart.monomial((1,))}]
    with pytest.raises(MissingData):
        power_expansion(comps, (2,), 4)


def test_power_expansion_argument_checks():
    comps = [{1: HomogeneousPart.monomial((1,))}]
    with pytest.raises(ValueError):
        power_expansion(comps, (1,), 2)
    with pytest.raises(ValueError):
        power_expansion(comps, (3,), 2)
    with pytest.raises(DimensionError):
        power_expansion(comps, (1, 1), 2)


def test_bare_actions_give_monomial():
    comps = [{1: HomogeneousPart.monomial(unit(2, i)), 2: HomogeneousPart.zero(2, 2)} for i in range(2)]
    out = power_expansion(comps, (1, 2), 3)
    assert list(out) == [(1, 2)]
    assert out[(1, 2)] == FourierSeries.constant(1.0, 2)
    assert power_expansion(comps, (1, 1), 3).is_zero()
