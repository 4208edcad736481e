import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nifslab.catalog import EXAMPLE_RADIUS, GAMMA_EXAMPLE, osc_threshold_level
from nifslab.engine import (
    AmbientSpace,
    Ball,
    DepthCeilingError,
    ParameterError,
    address,
    address_batch,
    address_series,
    compose,
    derivative_norm,
    images_nested,
    osc_check,
    required_depth,
)
from nifslab.symbolic import SymbolStream, Word, prefix, shift

from conftest import nonreal

T = 0.5 + 0.5j


def test_compose_closed_form(example):
    # phi_w(z) = t^j z + sum_i b^(i)_{w_i} t^(i-1)
    w = Word(1, (1, 0, 1, 1))
    f = compose(example, w, T)
    assert f.linear == pytest.approx(T ** 4)
    expected = 1 + 0 + (1 / 3) * T ** 2 + (1 / 4) * T ** 3
    assert f.translation == pytest.approx(expected, abs=1e-15)


def test_compose_triple_first_symbol(example):
    f = compose(example, Word(1, (0, 0, 0)), T)
    assert abs(f.linear) == pytest.approx(0.353553, abs=1e-6)
    assert f.translation == 0


def test_empty_word_is_identity(example):
    f = compose(example, Word(1, ()), T)
    assert f(1.5 + 2j) == 1.5 + 2j
    assert derivative_norm(f) == 1.0


def test_compose_errors(example):
    with pytest.raises(ValueError):
        compose(example, Word(1, (2,)), T)
    with pytest.raises(ParameterError):
        compose(example, Word(1, (0,)), 0.5)
    with pytest.raises(ParameterError):
        compose(example, Word(1, (0,)), 0.8j)


def test_derivative_norm_power(example):
    t = nonreal(0.6)
    f = compose(example, Word(1, (0, 1, 1, 0, 1)), t)
    assert derivative_norm(f) == pytest.approx(0.07776, rel=1e-12)
    assert derivative_norm(f) <= GAMMA_EXAMPLE ** 5


def test_address_all_ones_is_zero(example):
    p = address(example, SymbolStream.periodic([0]), T, 1e-10)
    assert p.point == 0
    assert p.error_bound <= 1e-10


def test_address_all_twos_real_oracle(example):
    p = address(example, SymbolStream.periodic([1]), 0.5, 1e-12, check=False)
    assert abs(p.point - 2 * math.log(2)) <= p.error_bound
    assert p.point.real == pytest.approx(1.386294, abs=1e-6)


def test_address_all_twos_complex_oracle(example):
    t = nonreal(0.7, 2.0)
    p = address(example, SymbolStream.periodic([1]), t, 1e-12)
    assert abs(p.point - (-np.log(1 - t) / t)) <= p.error_bound + 1e-14


def test_address_depth_ceiling(example):
    with pytest.raises(DepthCeilingError):
        address(example, SymbolStream.periodic([1]), T, 1e-300, depth_ceiling=100)
    with pytest.raises(ValueError):
        address(example, SymbolStream.periodic([1]), T, 0.0)


def test_cantor_addresses(cantor_family):
    p = address(cantor_family, SymbolStream.periodic([1]), 0.0, 1e-12)
    assert abs(p.point - 1) <= p.error_bound
    q = address(cantor_family, SymbolStream.eventually_constant([0], 1), 0.0, 1e-12)
    assert abs(q.point - 1 / 3) <= q.error_bound


def test_address_series_examples(example):
    c = address_series(example, SymbolStream.eventually_constant([1], 0), length=5)
    assert np.allclose(c, [1, 0, 0, 0, 0])
    c = address_series(example, SymbolStream.periodic([1], start_level=3), length=4)
    assert np.allclose(c, [1 / 3, 1 / 4, 1 / 5, 1 / 6])


def test_address_series_refused_elsewhere(cantor_family):
    with pytest.raises(ValueError):
        address_series(cantor_family, SymbolStream.periodic([0]))


def test_series_matches_address(example):
    stream = SymbolStream.random(11, start_level=4)
    t = nonreal(0.65, 0.4)
    c = address_series(example, stream, length=400)
    series = np.polyval(c[::-1], t)
    p = address(example, stream, t, 1e-13)
    assert abs(series - p.point) <= p.error_bound + 1e-13


def test_batch_matches_scalar(example):
    t = nonreal(0.55)
    rng = np.random.default_rng(1)
    syms = rng.integers(0, 2, size=(20, 60))
    pts = address_batch(example, syms, t)
    for row, z in zip(syms, pts):
        f = compose(example, Word(1, tuple(row)), t)
        assert abs(f(0j) - z) < 1e-13


def test_required_depth_minimal():
    n = required_depth(0.5, 2.0, 1e-6)
    assert 0.5 ** n * 2 <= 1e-6 < 0.5 ** (n - 1) * 2


def test_space_needs_gap():
    with pytest.raises(ValueError):
        AmbientSpace(2, Ball(0, 1), Ball(0, 1))
    with pytest.raises(ValueError):
        Ball(0, 0)


def test_example_maps_x_into_x(example):
    X = example.space.X
    assert X.radius == pytest.approx(EXAMPLE_RADIUS)
    ts = np.array([nonreal(GAMMA_EXAMPLE * 0.999999, a) for a in np.linspace(0.1, 3.0, 7)])
    for j in (1, 2, 5, 50):
        a, b = example.level(j, ts)
        assert np.all(X.contains_ball(a * X.center + b, np.abs(a) * X.radius))


def test_osc_threshold(example):
    for t in [nonreal(0.1), nonreal(0.4, 2), nonreal(0.7, -1)]:
        j0 = osc_threshold_level(t)
        rep = osc_check(example, t, j0 + 3)
        assert not rep.satisfied
        assert rep.witness_level == j0
        assert rep.witness_level <= math.ceil(1 / (2 * abs(t) * EXAMPLE_RADIUS)) + 1
        if j0 > 1:
            assert osc_check(example, t, j0 - 1).satisfied


def test_osc_cantor(cantor_family):
    assert osc_check(cantor_family, 0.0, 30).satisfied


def test_nesting(example):
    assert images_nested(example, SymbolStream.random(3), nonreal(0.7), 30)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 10), st.floats(0.05, 0.73), st.floats(0.05, 3.0))
def test_shift_recursion(seed, n, mod, ang):
    # pi_1(w) = phi_{w|n}(pi_{n+1}(sigma^n w))
    from nifslab.catalog import paper_example

    S = paper_example()
    t = mod * np.exp(1j * ang)
    w = SymbolStream.random(seed)
    tol = 1e-11
    p1 = address(S, w, t, tol)
    pn = address(S, shift(w, n), t, tol)
    f = compose(S, prefix(w, n), t)
    assert abs(p1.point - f(pn.point)) <= p1.error_bound + abs(f.linear) * pn.error_bound + 1e-14


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=0, max_size=8),
       st.lists(st.integers(0, 1), min_size=0, max_size=8), st.floats(0.05, 3.0))
def test_multiplicativity(w1, w2, ang):
    from nifslab.catalog import paper_example

    S = paper_example()
    t = 0.6 * np.exp(1j * ang)
    a = Word(1, tuple(w1))
    b = Word(1 + len(w1), tuple(w2))
    ab = compose(S, a.concat(b), t)
    assert derivative_norm(ab) == pytest.approx(
        derivative_norm(compose(S, a, t)) * derivative_norm(compose(S, b, t)), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 1000), st.integers(1, 12))
def test_lower_distance_bound_equality(seed, j):
    from nifslab.catalog import paper_example

    S = paper_example()
    rng = np.random.default_rng(seed)
    t = 0.5 * np.exp(1j * rng.uniform(0.1, 3))
    w = Word(1, tuple(rng.integers(0, 2, j)))
    f = compose(S, w, t)
    x, y = S.space.sample_points(rng, 2)
    assert abs(f(x) - f(y)) == pytest.approx(derivative_norm(f) * abs(x - y), rel=1e-12)
