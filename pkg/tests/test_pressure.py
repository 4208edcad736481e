import math
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nifslab.catalog import random_affine
from nifslab.pressure import (
    EnumerationBudgetError,
    bowen_continuity_scan,
    bowen_dimension,
    log_partition_sum,
    partition_sum,
    pressure,
    pressure_profile,
    segment,
    submultiplicative_violations,
)

from conftest import nonreal


def closed_form_s(t):
    return math.log(2) / -math.log(abs(t))


def test_partition_sum_example(example):
    t = nonreal(0.5)
    assert partition_sum(example, t, 1.0, 3) == pytest.approx(1.0, rel=1e-12)
    t = nonreal(0.6, 2.0)
    assert partition_sum(example, t, 2.0, 4) == pytest.approx(16 * 0.6 ** 8, rel=1e-12)


def test_s_zero_counts_words(example):
    assert partition_sum(example, nonreal(0.3), 0.0, 10) == pytest.approx(1024, rel=1e-12)


def test_negative_s_rejected(example):
    with pytest.raises(ValueError):
        partition_sum(example, nonreal(0.3), -0.1, 2)


def test_enumeration_budget(example):
    with pytest.raises(EnumerationBudgetError):
        partition_sum(example, nonreal(0.3), 1.0, 30, cap=2 ** 20)


def test_routes_agree(example):
    for seed in range(3):
        S = random_affine(seed, m=2, sizes=(2, 3))
        for s in (0.3, 1.0, 2.5):
            a = log_partition_sum(S, 0.2, s, 9, method="enumerate")
            b = log_partition_sum(S, 0.2, s, 9, method="factor")
            assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


def test_pressure_closed_form(example):
    t = nonreal(0.45)
    for s in (0.5, 1.0, 2.0):
        assert pressure(example, t, s) == pytest.approx(math.log(2) + s * math.log(0.45), abs=1e-13)


@pytest.mark.parametrize("mod", [0.1, 0.3, 0.5, 0.6, 0.7])
def test_bowen_closed_form(example, mod):
    t = nonreal(mod, 1.3)
    r = bowen_dimension(example, t, tolerance=1e-10)
    assert not r.infinite
    assert abs(r.s - closed_form_s(t)) <= 1e-9


def test_bowen_half_is_one(example):
    assert bowen_dimension(example, nonreal(0.5)).s == pytest.approx(1.0, abs=1e-9)


def test_bowen_cantor_and_slopes(cantor_family, slopes):
    assert bowen_dimension(cantor_family, 0.0).s == pytest.approx(math.log(2) / math.log(3), abs=1e-9)
    # 2^-s + 4^-s = 1  =>  2^-s = golden-ratio conjugate
    golden = (math.sqrt(5) - 1) / 2
    assert bowen_dimension(slopes, 0.0).s == pytest.approx(math.log(golden) / math.log(0.5), abs=1e-9)


def test_infinity_marker(cantor_family):
    r = bowen_dimension(cantor_family, 0.0, s_ceiling=0.5)
    assert r.infinite and r.value == math.inf


def test_bowen_fast(example):
    t0 = time.perf_counter()
    for k in range(10):
        bowen_dimension(example, nonreal(0.1 + 0.06 * k, 0.2 + 0.2 * k), depth=1)
    assert time.perf_counter() - t0 < 1.0


def test_window_spread_zero_for_autonomous(example):
    prof = pressure_profile(example, nonreal(0.5), [0.7, 1.3], depth=12)
    assert np.all(prof.window_spread() < 1e-12)


def test_continuity_scan(example):
    path = segment(0.3 + 0.3j, 0.5 + 0.4j, 0.02)
    scan = bowen_continuity_scan(example, path)
    expected = [closed_form_s(t) for t in path]
    assert np.allclose(scan.s_values, expected, atol=1e-8)
    assert scan.max_jump < 0.1


def test_submultiplicative_example(example):
    assert submultiplicative_violations(example, nonreal(0.6), 1.1, max_total=10) == []


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 50), st.floats(0.0, 3.0), st.floats(0.01, 1.0), st.integers(1, 10))
def test_pressure_monotone_in_s(seed, s, ds, n):
    S = random_affine(seed, m=2)
    a = log_partition_sum(S, 0.3, s, n, method="enumerate")
    b = log_partition_sum(S, 0.3, s + ds, n, method="enumerate")
    assert b <= a + 1e-12


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 200), st.floats(0.1, 2.5))
def test_submultiplicative_random(seed, s):
    S = random_affine(seed, m=1, sizes=(2, 3))
    assert submultiplicative_violations(S, -0.5, s, max_total=8) == []
