"""Command-line entry point: ``nifslab <command> [options]``.

Every output file starts with a provenance header (version, command, config
JSON, config hash, seed and, on its own line, a timestamp).  The config line
alone is enough to rerun the command: ``--from-header FILE``.
"""
from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .catalog import ConfigError, load_family
from .conditions import FAILED, check_conditions
from .dimension import box_counting, dimension_sweep, render_png, sample_limit_set, save_cloud
from .engine import ParameterError
from .expr import ExpressionError
from .gibbs import build_gibbs, decode_index
from .pressure import bowen_continuity_scan, bowen_dimension, segment
from .symbolic import Word, format_word
from .transversality import DiskRegion, SearchRegion, double_zero_search, transversality_scan

EXIT_OK, EXIT_CONFIG, EXIT_MARKER, EXIT_INTERNAL = 0, 1, 2, 3
COMMANDS = ("pressure", "dim", "transversality", "conditions", "gibbs", "render", "sweep")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclasses.dataclass
class RunConfig:
    command: str
    family: str = "paper-example"
    t: str | None = None
    grid: str | None = None
    path: str | None = None
    step: float = 0.01
    depth: int = 20
    tol: float = 1e-6
    points: int = 100_000
    seed: int = 0
    n: int = 3
    s: float | None = None
    eps: float | None = None
    dim_tol: float = 0.15
    threshold: float = 0.9
    n_max: int = 20
    pairs: int = 16
    cell: float = 0.002
    radii: str = "0.01,1,12"
    g: str = "0.3,0.45,0.2"
    g_cap: float | None = None
    dz_trials: int = 0
    dz_restarts: int = 64
    render: bool = False
    out: str = "out"
    workers: int | None = None

    def provenance_config(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("out")
        d.pop("workers")
        return d


# ---------------------------------------------------------------------------
# parsing helpers


def parse_complex(text: str) -> complex:
    parts = [p for p in str(text).replace(" ", "").split(",") if p != ""]
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise ConfigError(f"cannot read parameter {text!r} (expected 're,im')")


def parse_grid(spec: str) -> np.ndarray:
    """Grids: ``box:re0,re1,im0,im1:step``, ``polar:r1,r2,...@deg``, ``list:re,im;re,im``."""
    try:
        kind, _, rest = spec.partition(":")
        if kind == "box":
            bounds, _, step = rest.rpartition(":")
            x0, x1, y0, y1 = (float(v) for v in bounds.split(","))
            h = float(step)
            xs = x0 + h * np.arange(int(math.floor((x1 - x0) / h + 1e-9)) + 1)
            ys = y0 + h * np.arange(int(math.floor((y1 - y0) / h + 1e-9)) + 1)
            return (xs[None, :] + 1j * ys[:, None]).ravel()
        if kind == "polar":
            mods, _, deg = rest.partition("@")
            ang = math.radians(float(deg))
            return np.array([float(r) * complex(math.cos(ang), math.sin(ang))
                             for r in mods.split(",")])
        if kind == "list":
            return np.array([parse_complex(p) for p in rest.split(";") if p.strip()])
    except ValueError:
        pass
    raise ConfigError(f"cannot read grid {spec!r}")


def _radii(text: str) -> np.ndarray:
    lo, hi, k = text.split(",")
    return np.geomspace(float(lo), float(hi), int(k))


def _params(cfg: RunConfig) -> np.ndarray:
    if cfg.t is not None:
        return np.array([parse_complex(cfg.t)])
    if cfg.grid is not None:
        return parse_grid(cfg.grid)
    raise ConfigError("give --t or --grid")


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".12g")
    return str(x).replace(",", ";").replace("\n", " ")


# ---------------------------------------------------------------------------
# output


def provenance_lines(cfg: RunConfig) -> list[str]:
    conf = json.dumps(cfg.provenance_config(), sort_keys=True, separators=(",", ":"))
    digest = hashlib.sha256(conf.encode()).hexdigest()
    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return [
        f"# nifslab {__version__}",
        f"# command: {cfg.command}",
        f"# config: {conf}",
        f"# config-sha256: {digest}",
        f"# seed: {cfg.seed}",
        f"# timestamp: {stamp}",
    ]


def write_records(path: Path, cfg: RunConfig, columns, rows, footer=()) -> None:
    lines = provenance_lines(cfg)
    lines.append(",".join(columns))
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    lines.extend(f"# {f}" for f in footer)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def write_report(path: Path, cfg: RunConfig, body: dict) -> None:
    head = provenance_lines(cfg)
    doc = {"provenance": {
        "version": __version__,
        "command": cfg.command,
        "config": cfg.provenance_config(),
        "config_sha256": head[3].split(": ", 1)[1],
        "seed": cfg.seed,
        "timestamp": head[5].split(": ", 1)[1],
    }, **body}
    text = json.dumps(doc, indent=2, sort_keys=True, default=_jsonable, allow_nan=True)
    path.write_text(text + "\n", encoding="utf-8", newline="\n")


def _jsonable(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if dataclasses.is_dataclass(x):
        return dataclasses.asdict(x)
    raise TypeError(type(x))


def read_header_config(path) -> dict:
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("# config: "):
            return json.loads(line[len("# config: "):])
        if '"config": {' in line:
            break
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return doc["provenance"]["config"]
    except (ValueError, KeyError, TypeError):
        raise ConfigError(f"{path} carries no provenance config") from None


# ---------------------------------------------------------------------------
# commands


def _pool(cfg: RunConfig) -> ThreadPoolExecutor:
    return ThreadPoolExecutor(max_workers=cfg.workers or os.cpu_count() or 1)


def cmd_pressure(cfg: RunConfig, out: Path) -> int:
    schedule = load_family(cfg.family)
    ts = _params(cfg)
    if cfg.t is not None:
        schedule.check_parameter(ts[0])

    def one(t):
        if not schedule.region.contains(t):
            return [t.real, t.imag, math.nan, math.nan, cfg.depth, "error", "outside U"]
        r = bowen_dimension(schedule, t, tolerance=cfg.tol, depth=cfg.depth)
        return [t.real, t.imag, r.value, r.residual, cfg.depth,
                "infinite" if r.infinite else "ok", ""]

    with _pool(cfg) as pool:
        rows = list(pool.map(one, ts))
    write_records(out / "pressure.csv", cfg,
                  ["t_re", "t_im", "s", "residual", "depth", "status", "warning"], rows)
    for row in rows:
        if row[5] == "error":
            print(f"warning: t = {row[0]:g}{row[1]:+g}i lies outside U", file=sys.stderr)
    return EXIT_MARKER if any(r[5] == "infinite" for r in rows) else EXIT_OK


def cmd_sweep(cfg: RunConfig, out: Path) -> int:
    schedule = load_family(cfg.family)
    if cfg.path is None:
        raise ConfigError("sweep needs --path 're,im:re,im'")
    a, _, b = cfg.path.partition(":")
    ts = segment(parse_complex(a), parse_complex(b), cfg.step)
    scan = bowen_continuity_scan(schedule, ts, tolerance=cfg.tol, depth=cfg.depth)
    ds = np.concatenate([[0.0], scan.ds])
    rows = [[t.real, t.imag, s, d] for t, s, d in zip(scan.ts, scan.s_values, ds)]
    footer = [f"summary: max_jump={fmt(scan.max_jump)} max_slope={fmt(scan.max_slope)}"]
    write_records(out / "continuity.csv", cfg, ["t_re", "t_im", "s", "ds"], rows, footer)
    print(footer[0])
    return EXIT_MARKER if np.any(np.isinf(scan.s_values)) else EXIT_OK


def cmd_dim(cfg: RunConfig, out: Path) -> int:
    schedule = load_family(cfg.family)
    ts = _params(cfg)
    with _pool(cfg) as pool:
        res = dimension_sweep(schedule, ts, cfg.points, cfg.tol, cfg.seed, cfg.dim_tol,
                              cfg.threshold, depth=cfg.depth, executor=pool)
    rows = [[r.t.real, r.t.imag, r.s, r.target, r.estimate, r.verdict, r.conforming, r.note]
            for r in res.records]
    footer = [f"summary: conforming_fraction={fmt(res.fraction)} threshold={fmt(res.threshold)} "
              f"tolerance={fmt(res.tolerance)} (threshold is an engineering choice)"]
    write_records(out / "dim.csv", cfg,
                  ["t_re", "t_im", "s", "target", "estimate", "verdict", "conforming", "note"],
                  rows, footer)
    print(footer[0])
    if cfg.render:
        for k, r in enumerate(res.records):
            if r.verdict == "error":
                continue
            cloud = sample_limit_set(schedule, r.t, cfg.points, cfg.tol, seed=cfg.seed + k)
            eps = cfg.eps or cloud.extent() / 512
            render_png(cloud, eps, out / f"dim_{k}.png", text=_png_text(cfg))
    return EXIT_MARKER if any(r.verdict == "inconclusive" for r in res.records) else EXIT_OK


def cmd_transversality(cfg: RunConfig, out: Path) -> int:
    schedule = load_family(cfg.family)
    cx, cy, r = (float(v) for v in cfg.g.split(","))
    cap = cfg.g_cap
    if cap is None and schedule.region.kind == "disk":
        # keep G at positive distance from |t| = radius of U
        cap = 0.99 * (abs(schedule.region.center) + schedule.region.radius)
    G = DiskRegion(complex(cx, cy), r, cap)
    scan = transversality_scan(schedule, G, range(1, cfg.n_max + 1), _radii(cfg.radii), cfg.cell,
                               pairs=cfg.pairs, seed=cfg.seed)
    rows = [[n, c, c / n ** 2, lr] for n, c, lr in zip(scan.ns, scan.C_hat, scan.log_rates)]
    footer = [f"summary: K_fit={fmt(scan.K_fit)} K_spread={fmt(scan.K_spread)}"]
    write_records(out / "transversality.csv", cfg, ["n", "C_hat", "C_over_n2", "log_rate"],
                  rows, footer)
    print(footer[0])
    if cfg.dz_trials > 0:
        res = double_zero_search(region=SearchRegion.inside_exclusion(), trials=cfg.dz_trials,
                                 restarts=cfg.dz_restarts, seed=cfg.seed)
        write_report(out / "double_zero.json", cfg, {
            "min_value": res.value, "location": res.location, "threshold": res.threshold,
            "below_threshold": res.below_threshold, "trials": res.trials,
            "restarts": res.restarts, "consistent": res.consistent,
            "series_leading": res.series.leading, "series_coeffs": res.series.coeffs,
        })
        print(f"double-zero search: min max(|f|,|f'|) = {res.value:.6g}")
    return EXIT_OK


def cmd_conditions(cfg: RunConfig, out: Path) -> int:
    schedule = load_family(cfg.family)
    if cfg.t is None and cfg.grid is None:
        grid = _default_condition_grid(schedule)
    else:
        grid = _params(cfg)
    rep = check_conditions(schedule, grid, depth=cfg.depth, seed=cfg.seed)
    write_report(out / "conditions.json", cfg, rep.to_dict())
    sys.stdout.write(rep.to_text())
    return EXIT_MARKER if any(r.status == FAILED for r in rep.records) else EXIT_OK


def _default_condition_grid(schedule):
    reg = schedule.region
    if reg.kind == "disk":
        r = reg.radius * np.array([0.3, 0.6, 0.9])
        return reg.center + np.concatenate([r * np.exp(1j * a) for a in (0.5, 1.5, 2.5)])
    return np.linspace(reg.lo, reg.hi, 7)[1:-1] + 0j


def cmd_gibbs(cfg: RunConfig, out: Path) -> int:
    schedule = load_family(cfg.family)
    t = _params(cfg)[0]
    schedule.check_parameter(t)
    if cfg.s is None:
        s = bowen_dimension(schedule, t, depth=cfg.depth).value - (cfg.eps or 0.0) / 4
    else:
        s = cfg.s
    measure = build_gibbs(schedule, t, s, cfg.n)
    rows = []
    for idx, lm in enumerate(measure.log_masses):
        rows.append([format_word(Word(1, decode_index(schedule.alphabet, idx, cfg.n))),
                     math.exp(lm)])
    write_records(out / "gibbs.csv", cfg, ["word", "mass"], rows, [f"s={fmt(s)}"])
    return EXIT_OK


def cmd_render(cfg: RunConfig, out: Path) -> int:
    schedule = load_family(cfg.family)
    t = _params(cfg)[0]
    cloud = sample_limit_set(schedule, t, cfg.points, cfg.tol, seed=cfg.seed)
    eps = cfg.eps or max(cloud.extent(), 1e-12) / 512
    render_png(cloud, eps, out / "render.png", text=_png_text(cfg))
    save_cloud(cloud, out / "cloud.npy")
    try:
        est = box_counting(cloud).estimate
        print(f"box estimate (default ladder): {est:.6g}")
    except ValueError:
        pass
    return EXIT_OK


def _png_text(cfg):
    return {line[2:].split(": ", 1)[0]: line[2:].split(": ", 1)[-1]
            for line in provenance_lines(cfg)}


HANDLERS = {
    "pressure": cmd_pressure,
    "sweep": cmd_sweep,
    "dim": cmd_dim,
    "transversality": cmd_transversality,
    "conditions": cmd_conditions,
    "gibbs": cmd_gibbs,
    "render": cmd_render,
}


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nifslab", description="Parameterized non-autonomous IFS toolkit")
    p.add_argument("--version", action="version", version=f"nifslab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        c = sub.add_parser(name)
        c.add_argument("--config", help="YAML/JSON file with option values")
        c.add_argument("--from-header", dest="from_header",
                       help="rerun with the config recorded in an output file")
        c.add_argument("--family")
        c.add_argument("--t", help="parameter as 're,im'")
        c.add_argument("--grid", help="box:re0,re1,im0,im1:step | polar:r1,r2@deg | list:re,im;...")
        c.add_argument("--path", help="segment 're,im:re,im' (sweep)")
        c.add_argument("--step", type=float)
        c.add_argument("--depth", type=int)
        c.add_argument("--tol", type=float)
        c.add_argument("--points", type=int)
        c.add_argument("--seed", type=int)
        c.add_argument("--n", type=int, help="Gibbs level")
        c.add_argument("--s", type=float, help="Gibbs exponent (default: Bowen root - eps/4)")
        c.add_argument("--eps", type=float, help="render cell size / Gibbs exponent offset")
        c.add_argument("--dim-tol", dest="dim_tol", type=float)
        c.add_argument("--threshold", type=float)
        c.add_argument("--n-max", dest="n_max", type=int)
        c.add_argument("--pairs", type=int)
        c.add_argument("--cell", type=float)
        c.add_argument("--radii", help="lo,hi,count (geometric)")
        c.add_argument("--g", help="region G as 'cx,cy,radius'")
        c.add_argument("--g-cap", dest="g_cap", type=float,
                       help="modulus cap for G (default 0.99 x the radius of U)")
        c.add_argument("--dz-trials", dest="dz_trials", type=int)
        c.add_argument("--dz-restarts", dest="dz_restarts", type=int)
        c.add_argument("--render", action="store_const", const=True)
        c.add_argument("--out")
        c.add_argument("--workers", type=int)
    return p


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    """Defaults < --from-header < --config file < explicit flags."""
    fields = {f.name for f in dataclasses.fields(RunConfig)}
    values = {}
    if ns.from_header:
        values.update(read_header_config(ns.from_header))
    if ns.config:
        try:
            loaded = yaml.safe_load(Path(ns.config).read_text(encoding="utf-8")) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {ns.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError(f"{ns.config} does not contain a mapping")
        values.update({k.replace("-", "_"): v for k, v in loaded.items()})
    for k, v in vars(ns).items():
        if k in fields and v is not None:
            values[k] = v
    unknown = set(values) - fields
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    values["command"] = ns.command
    return RunConfig(**values)


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        cfg = resolve_config(ns)
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        return HANDLERS[cfg.command](cfg, out)
    except (UsageError, ConfigError, ParameterError, ExpressionError) as exc:
        print(f"nifslab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except Exception as exc:
        print(f"nifslab: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
