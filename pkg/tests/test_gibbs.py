import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nifslab.catalog import random_affine
from nifslab.engine import ParameterRegion
from nifslab.gibbs import (
    GibbsMeasure,
    build_gibbs,
    cylinder_log_masses,
    cylinder_mass,
    gibbs_bound_violations,
    sample_prefixes,
    sample_stream,
)
from nifslab.pressure import EnumerationBudgetError
from nifslab.symbolic import Word, enumerate_words

from conftest import nonreal


def test_example_uniform(example):
    g = build_gibbs(example, nonreal(0.6), 1.3, 8)
    assert np.allclose(g.masses, 2.0 ** -8, rtol=1e-12)
    assert cylinder_mass(g, Word(1, (1, 0, 1))) == pytest.approx(1 / 8, rel=1e-12)


def test_empty_word_total(example):
    g = build_gibbs(example, nonreal(0.4), 0.7, 6)
    assert cylinder_mass(g, Word(1, ())) == pytest.approx(1.0, abs=1e-12)


def test_slopes_masses(slopes):
    g = build_gibbs(slopes, 0.0, 1.0, 1)
    assert g.masses == pytest.approx([2 / 3, 1 / 3], rel=1e-12)


def test_symmetric_halves(cantor_family):
    g = build_gibbs(cantor_family, 0.0, 1.0, 1)
    assert g.masses == pytest.approx([0.5, 0.5])


def test_errors(example):
    g = build_gibbs(example, nonreal(0.5), 1.0, 3)
    with pytest.raises(ValueError):
        cylinder_mass(g, Word(1, (0, 0, 0, 0)))
    with pytest.raises(ValueError):
        build_gibbs(example, nonreal(0.5), -1.0, 3)
    with pytest.raises(EnumerationBudgetError):
        build_gibbs(example, nonreal(0.5), 1.0, 30, cap=1 << 10)


def test_bound_random_schedules():
    for seed in range(5):
        S = random_affine(seed, m=2, sizes=(2, 3))
        g = build_gibbs(S, 0.4, 0.9, 8)
        assert gibbs_bound_violations(g) == []


def test_additivity_exhaustive():
    S = random_affine(7, m=1, sizes=(3, 2))
    g = build_gibbs(S, -0.3, 0.8, 6)
    for m in range(0, 6):
        for w in enumerate_words(S.alphabet, m):
            parts = sum(cylinder_mass(g, Word(1, w.symbols + (i,)))
                        for i in range(S.alphabet.size_at(m + 1)))
            assert cylinder_mass(g, w) == pytest.approx(parts, rel=1e-12)


def test_log_table_matches_cylinders():
    S = random_affine(2, m=2)
    g = build_gibbs(S, 0.1, 1.2, 5)
    lm = cylinder_log_masses(g, 2)
    for k, w in enumerate(enumerate_words(S.alphabet, 2)):
        assert math.exp(lm[k]) == pytest.approx(cylinder_mass(g, w), rel=1e-12)


def test_sampling_frequencies():
    S = random_affine(4, m=1)
    g = build_gibbs(S, 0.0, 1.0, 4)
    rng = np.random.default_rng(0)
    N = 100_000
    pref = sample_prefixes(g, N, rng)
    idx = np.zeros(N, dtype=np.int64)
    for k in range(4):
        idx = idx * 2 + pref[:, k]
    freq = np.bincount(idx, minlength=16) / N
    p = g.masses
    se = np.sqrt(p * (1 - p) / N)
    assert np.all(np.abs(freq - p) <= 3 * se + 1e-12)


def test_point_mass_table(example):
    logm = np.full(4, -np.inf)
    logm[2] = 0.0
    g = GibbsMeasure(example, nonreal(0.5), 1.0, 2, logm, 0.0)
    for seed in range(10):
        assert sample_stream(g, seed).symbols(2) == (1, 0)


def test_stream_determinism(example):
    g = build_gibbs(example, nonreal(0.5), 1.0, 10)
    a = sample_stream(g, 3).symbols(40)
    assert a == sample_stream(g, 3).symbols(40)
    assert a != sample_stream(g, 4).symbols(40)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 500), st.floats(0.0, 3.0), st.integers(1, 8))
def test_bound_property(seed, s, n):
    S = random_affine(seed, m=2, sizes=(2,))
    assert gibbs_bound_violations(build_gibbs(S, 0.5, s, n)) == []
