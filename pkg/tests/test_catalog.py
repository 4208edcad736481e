import numpy as np
import pytest

from nifslab.catalog import (
    CATALOG,
    GAMMA_EXAMPLE,
    ConfigError,
    from_config,
    load_family,
    random_affine,
)
from nifslab.engine import address, compose
from nifslab.expr import ExpressionError, compile_expression
from nifslab.symbolic import SymbolStream, Word

from conftest import CONFIGS, nonreal


def test_gamma_value():
    assert GAMMA_EXAMPLE == pytest.approx(0.73143, abs=1e-5)


def test_catalog_keys():
    assert {"paper-example", "cantor"} <= set(CATALOG)
    assert load_family("paper-example").name == "paper-example"


def test_region_membership(example):
    assert example.region.contains(0.5 + 0.2j)
    assert not example.region.contains(0.5)
    assert not example.region.contains(0.8j)
    lo, hi = example.region.bounding_box
    assert lo.real <= -GAMMA_EXAMPLE and hi.imag >= GAMMA_EXAMPLE


def test_yaml_example_matches_catalog(example):
    cfg = load_family(CONFIGS / "paper-example.yaml")
    t = nonreal(0.6, 0.7)
    w = SymbolStream.random(4)
    a = address(example, w, t, 1e-12).point
    b = address(cfg, w, t, 1e-12).point
    assert abs(a - b) < 1e-10


def test_unknown_family():
    with pytest.raises(ConfigError):
        load_family("no-such-family")


def test_malformed_config():
    with pytest.raises(ConfigError):
        from_config({"space": {"radius": 1}})


def test_random_affine_self_maps():
    for seed in range(5):
        S = random_affine(seed, m=2)
        X = S.space.X
        for t in (-0.99, 0.0, 0.99):
            for j in range(1, 7):
                a, b = S.level(j, t)
                assert np.all(X.contains_ball(a * X.center + b, np.abs(a) * X.radius))
                assert np.all(np.abs(a) <= S.contraction_at(t) + 1e-15)
                assert S.contraction_at(t) <= S.gamma


def test_config_random_affine_shortcut():
    S = from_config({"family": "random-affine", "seed": 3, "m": 1})
    assert S.m == 1 and S.name == "random-affine-3"


def test_expression_variables():
    f = compile_expression("t*j + i")
    assert f(2, 0, 3.0) == 7.0  # i is exposed 1-based
    g = compile_expression("sqrt(abs(t))/j")
    assert g(2, 0, 4.0) == pytest.approx(1.0)


@pytest.mark.parametrize("bad", ["__import__('os')", "t.real", "lambda: 1", "x + 1", "t[0]"])
def test_expression_rejects(bad):
    with pytest.raises(ExpressionError):
        compile_expression(bad)


def test_config_maps_compose():
    S = load_family(CONFIGS / "slopes.yaml")
    f = compose(S, Word(1, (0, 1)), 0.0)
    # x -> (x/4 + 3/4)/2
    assert f(1.0) == pytest.approx(0.5)
