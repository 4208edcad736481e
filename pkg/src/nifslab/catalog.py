"""Built-in families and loading of families from YAML/JSON configs."""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Mapping

import numpy as np
import yaml

from .engine import AmbientSpace, Ball, MapSchedule, ParameterRegion
from .expr import compile_expression
from .symbolic import AlphabetSchedule

__all__ = [
    "GAMMA_EXAMPLE",
    "EXAMPLE_RADIUS",
    "CATALOG",
    "paper_example",
    "cantor",
    "random_affine",
    "from_config",
    "load_family",
    "ConfigError",
]

#: 2 * 5**(-5/8): contraction bound and modulus limit of the two-map example.
GAMMA_EXAMPLE = 2.0 * 5.0 ** (-5.0 / 8.0)
#: Radius of the seed disk X = {|z| <= 1/(1 - GAMMA_EXAMPLE)}.
EXAMPLE_RADIUS = 1.0 / (1.0 - GAMMA_EXAMPLE)


class ConfigError(ValueError):
    pass


def _example_linear(j, i, t):
    return t


def _example_translation(j, i, t):
    return 0.0 if i == 0 else 1.0 / j


def paper_example() -> MapSchedule:
    """{z -> t z, z -> t z + 1/j} on |z| <= 1/(1-gamma), t non-real with |t| < gamma."""
    R = EXAMPLE_RADIUS
    return MapSchedule(
        name="paper-example",
        space=AmbientSpace(2, Ball(0j, R), Ball(0j, 1.25 * R)),
        alphabet=AlphabetSchedule((2,)),
        region=ParameterRegion.disk(0j, GAMMA_EXAMPLE, exclude_real=True,
                                    tag="|t| < 2*5^(-5/8), t not real"),
        linear=_example_linear,
        translation=_example_translation,
        gamma=GAMMA_EXAMPLE,
        contraction=lambda t: float(abs(t)),
        closed_form=True,
        series_form=True,
        source={"family": "paper-example"},
    )


def cantor() -> MapSchedule:
    """Autonomous middle-third Cantor system {x/3, x/3 + 2/3} on [0, 1]."""
    return MapSchedule(
        name="cantor",
        space=AmbientSpace(1, Ball(0.5, 0.5), Ball(0.5, 1.0)),
        alphabet=AlphabetSchedule((2,)),
        region=ParameterRegion.interval(-1.0, 1.0, tag="parameter unused"),
        linear=lambda j, i, t: 1.0 / 3.0 + 0.0 * np.real(t),
        translation=lambda j, i, t: 0.0 if i == 0 else 2.0 / 3.0,
        gamma=1.0 / 3.0,
        contraction=lambda t: 1.0 / 3.0,
        closed_form=True,
        source={"family": "cantor"},
    )


def random_affine(seed: int, m: int = 1, sizes=(2,), period: int = 3,
                  slope_range=(0.15, 0.55)) -> MapSchedule:
    """Random level-periodic affine conformal family on the unit ball.

    Level j uses coefficient table (j-1) % period.  The parameter t in (-1, 1)
    scales every linear part by (1 + 0.2 t); translations are shrunk so that
    every image of X stays inside X for all t.
    """
    rng = np.random.default_rng(seed)
    alphabet = AlphabetSchedule(tuple(sizes))
    width = alphabet.max_size
    mags = rng.uniform(*slope_range, size=(period, width))
    if m == 1:
        phase = rng.choice([-1.0, 1.0], size=(period, width))
    else:
        phase = np.exp(2j * np.pi * rng.uniform(size=(period, width)))
    a0 = mags * phase
    room = 1.0 - 1.2 * mags
    if m == 1:
        b0 = room * rng.uniform(-1.0, 1.0, size=(period, width))
    else:
        b0 = room * np.sqrt(rng.uniform(size=(period, width))) * np.exp(
            2j * np.pi * rng.uniform(size=(period, width)))

    def linear(j, i, t):
        return a0[(j - 1) % period, i] * (1.0 + 0.2 * np.real(t))

    def translation(j, i, t):
        return b0[(j - 1) % period, i]

    gamma = float(1.2 * mags.max())
    return MapSchedule(
        name=f"random-affine-{seed}",
        space=AmbientSpace(m, Ball(0j, 1.0), Ball(0j, 1.5)),
        alphabet=alphabet,
        region=ParameterRegion.interval(-1.0, 1.0),
        linear=linear,
        translation=translation,
        gamma=gamma,
        contraction=lambda t: float(np.abs(a0).max() * (1.0 + 0.2 * np.real(t))),
        closed_form=True,
        source={"family": "random-affine", "seed": seed, "m": m, "sizes": list(sizes),
                "period": period},
    )


CATALOG = {
    "paper-example": paper_example,
    "cantor": cantor,
}


def _point(value, m: int) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    vals = list(value)
    if len(vals) == 1:
        return complex(vals[0])
    if len(vals) == 2:
        return complex(vals[0], vals[1])
    raise ConfigError(f"cannot read point {value!r}")


def from_config(cfg: Mapping) -> MapSchedule:
    """Build a family from a parsed config mapping (see configs/ for examples)."""
    try:
        if cfg.get("family") == "random-affine":
            return random_affine(int(cfg["seed"]), int(cfg.get("m", 1)),
                                 tuple(cfg.get("sizes", (2,))), int(cfg.get("period", 3)))
        if "family" in cfg and cfg["family"] in CATALOG:
            return CATALOG[cfg["family"]]()
        space_cfg = cfg["space"]
        m = int(space_cfg.get("m", 2))
        center = _point(space_cfg.get("center", 0), m)
        radius = float(space_cfg["radius"])
        ext = float(space_cfg.get("extension_radius", 1.25 * radius))
        space = AmbientSpace(m, Ball(center, radius), Ball(center, ext))

        sizes = cfg.get("alphabet", [2])
        alphabet = AlphabetSchedule(tuple(sizes) if isinstance(sizes, (list, tuple)) else (int(sizes),))

        maps = cfg["maps"]
        if len(maps) < alphabet.max_size:
            raise ConfigError(f"{len(maps)} map rules for alphabets of size up to {alphabet.max_size}")
        lin_rules = [compile_expression(mp["linear"]) for mp in maps]
        tr_rules = [compile_expression(mp.get("translation", "0")) for mp in maps]

        reg = cfg["region"]
        kind = reg.get("kind", "disk")
        if kind == "disk":
            region = ParameterRegion.disk(_point(reg.get("center", 0), 2), float(reg["radius"]),
                                          bool(reg.get("exclude_real", False)), reg.get("tag", ""))
        elif kind == "interval":
            region = ParameterRegion.interval(float(reg["lo"]), float(reg["hi"]), reg.get("tag", ""))
        else:
            raise ConfigError(f"unknown region kind {kind!r}")

        contraction = None
        if "contraction" in cfg:
            c_rule = compile_expression(cfg["contraction"])
            contraction = lambda t: float(np.abs(c_rule(1, 0, t)))  # noqa: E731

        return MapSchedule(
            name=str(cfg.get("name", "configured")),
            space=space,
            alphabet=alphabet,
            region=region,
            linear=lambda j, i, t: lin_rules[i](j, i, t),
            translation=lambda j, i, t: tr_rules[i](j, i, t),
            gamma=float(cfg["gamma"]),
            contraction=contraction,
            closed_form=False,
            series_form=False,
            source=dict(cfg),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed family config: {exc!r}") from None


def load_family(source) -> MapSchedule:
    """Catalog key, path to a .yaml/.yml/.json config, or an already-parsed mapping."""
    if isinstance(source, Mapping):
        return from_config(source)
    key = str(source)
    if key in CATALOG:
        return CATALOG[key]()
    path = Path(key)
    if not path.is_file():
        raise ConfigError(f"unknown family {key!r} (not a catalog key or a file)")
    text = path.read_text(encoding="utf-8")
    try:
        cfg = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if not isinstance(cfg, Mapping):
        raise ConfigError(f"{path} does not contain a mapping")
    return from_config(cfg)


def osc_threshold_level(t) -> int:
    """Least level j at which the example's two images of int X overlap: 1/j < 2|t|R."""
    return math.floor(1.0 / (2.0 * abs(t) * EXAMPLE_RADIUS)) + 1
