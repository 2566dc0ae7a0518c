"""Command-line front end: TOML experiment configs in, CSV tables out.

One experiment per config file.  Documented keys:

    task = "curvature"        # optional; must match the subcommand if present
    seed = 20260809           # optional; verify-battery sampling seed

    [geometry]
    d = 3                     # spatial dimension >= 2

    [[geometry.profiles]]     # exactly d-1 tables; see profiles module grammar
    family = "tanh-step"
    a = 2.0
    b = 1.0
    k = 1.0
    z0 = 0.0

    [mode]                    # used by potential/transform/spectrum/scatter
    omega = 1.2
    mass = 0.0
    m = [1, 0]                # d-1 integers
    coupling = "minimal"      # or "conformal" (requires mass = 0)

    [grid]
    z_min = -8.0
    z_max = 8.0
    n_points = 257            # output sampling density (>= 16)
    tol = 1e-10               # u-map quadrature tolerance

    [search]                  # spectrum task
    omega_sq_min = 0.5
    omega_sq_max = 0.99
    k_max = 8

    [sweep]                   # scatter task; omitted -> single row at mode.omega
    omega_min = 1.02
    omega_max = 4.0
    n_omega = 50

Exit codes: 0 success, 1 verify failure, 2 config parse error, 3 validation
error, 4 solver error.  Output CSVs are byte-deterministic for a fixed config.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

import numpy as np

from . import coordinates, geometry, reduction, solver, verify
from .errors import ConfigError, KkredError, SolverError, ValidationError
from .geometry import Geometry
from .profiles import parse_profile
from .reduction import ModeSpec

__all__ = ["main", "run", "emit_csv", "parse_csv", "load_config"]

TASKS = ("curvature", "potential", "spectrum", "scatter", "transform", "verify")

_TOP_KEYS = {"task", "seed", "geometry", "mode", "grid", "search", "sweep"}
_GRID_KEYS = {"z_min", "z_max", "n_points", "tol"}
_MODE_KEYS = {"omega", "mass", "m", "coupling"}
_SEARCH_KEYS = {"omega_sq_min", "omega_sq_max", "k_max"}
_SWEEP_KEYS = {"omega_min", "omega_max", "n_omega"}


def _fmt(value) -> str:
    if isinstance(value, str):
        if "," in value or "\n" in value:
            raise ValidationError(f"CSV cells may not contain separators: {value!r}")
        return value
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def emit_csv(columns: dict, path) -> None:
    """Write named columns as CSV: header row, 17-significant-digit floats."""
    names = list(columns)
    series = [list(columns[n]) for n in names]
    lengths = {len(s) for s in series}
    if len(names) == 0 or (lengths and lengths != {0} and len(lengths) != 1):
        raise ValidationError("CSV columns must share one length")
    n_rows = series[0].__len__() if series else 0
    lines = [",".join(names)]
    for i in range(n_rows):
        lines.append(",".join(_fmt(s[i]) for s in series))
    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")
    except OSError as exc:
        raise ValidationError(f"cannot write {path}: {exc}") from exc


def parse_csv(path) -> dict:
    """Inverse of emit_csv (all values parsed as floats)."""
    lines = Path(path).read_text(encoding="ascii").splitlines()
    names = lines[0].split(",")
    out = {n: [] for n in names}
    for line in lines[1:]:
        for name, cell in zip(names, line.split(",")):
            out[name].append(float(cell))
    return {n: np.asarray(v) for n, v in out.items()}


def _reject_unknown(table: dict, allowed: set, where: str):
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown} in {where}")


def load_config(path) -> dict:
    """Parse and validate an experiment config; returns plain domain objects."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc

    _reject_unknown(data, _TOP_KEYS, "config root")
    cfg: dict = {
        "task": data.get("task"),
        "seed": int(data.get("seed", verify.DEFAULT_SEED)),
    }
    if cfg["task"] is not None and cfg["task"] not in TASKS:
        raise ValidationError(f"unknown task {cfg['task']!r}; expected one of {TASKS}")

    geo = data.get("geometry")
    if geo is not None:
        _reject_unknown(geo, {"d", "profiles"}, "[geometry]")
        d = geo.get("d")
        profiles_raw = geo.get("profiles", [])
        if d is None:
            raise ValidationError("[geometry] needs the spatial dimension d")
        profiles = tuple(parse_profile(p) for p in profiles_raw)
        if len(profiles) != int(d) - 1:
            raise ValidationError(
                f"geometry with d={d} needs {int(d) - 1} profiles, got {len(profiles)}"
            )
        cfg["geometry"] = Geometry(int(d), profiles)

    grid = data.get("grid")
    if grid is not None:
        _reject_unknown(grid, _GRID_KEYS, "[grid]")
        missing = sorted(_GRID_KEYS - {"tol"} - set(grid))
        if missing:
            raise ValidationError(f"[grid] is missing {missing}")
        z_min, z_max = float(grid["z_min"]), float(grid["z_max"])
        n_points = int(grid["n_points"])
        if not z_min < z_max:
            raise ValidationError(f"[grid] needs z_min < z_max, got [{z_min}, {z_max}]")
        if n_points < 16:
            raise ValidationError(f"[grid] needs n_points >= 16, got {n_points}")
        cfg["grid"] = {
            "z_min": z_min,
            "z_max": z_max,
            "n_points": n_points,
            "tol": float(grid.get("tol", 1e-10)),
        }

    mode = data.get("mode")
    if mode is not None:
        _reject_unknown(mode, _MODE_KEYS, "[mode]")
        cfg["mode"] = ModeSpec(
            omega=float(mode.get("omega", 0.0)),
            mass=float(mode.get("mass", 0.0)),
            m=tuple(mode.get("m", ())),
            coupling=mode.get("coupling", "minimal"),
        )
        if "geometry" in cfg and len(cfg["mode"].m) != cfg["geometry"].d - 1:
            raise ValidationError(
                f"[mode] m has {len(cfg['mode'].m)} entries, geometry needs {cfg['geometry'].d - 1}"
            )

    search = data.get("search")
    if search is not None:
        _reject_unknown(search, _SEARCH_KEYS, "[search]")
        cfg["search"] = {
            "omega_sq_min": float(search["omega_sq_min"]),
            "omega_sq_max": float(search["omega_sq_max"]),
            "k_max": int(search.get("k_max", 8)),
        }

    sweep = data.get("sweep")
    if sweep is not None:
        _reject_unknown(sweep, _SWEEP_KEYS, "[sweep]")
        cfg["sweep"] = {
            "omega_min": float(sweep["omega_min"]),
            "omega_max": float(sweep["omega_max"]),
            "n_omega": int(sweep.get("n_omega", 50)),
        }
    return cfg


def _require(cfg: dict, *keys: str):
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise ValidationError(f"config is missing required section(s): {missing}")


def _build_map(cfg):
    grid = cfg["grid"]
    origin = 0.0 if grid["z_min"] <= 0.0 <= grid["z_max"] else grid["z_min"]
    return coordinates.build_u_map(
        cfg["geometry"], (grid["z_min"], grid["z_max"]), tol=grid["tol"], u_origin_z=origin
    )


def _task_curvature(cfg, out_dir: Path) -> list[Path]:
    _require(cfg, "geometry", "grid")
    grid = cfg["grid"]
    zs = np.linspace(grid["z_min"], grid["z_max"], grid["n_points"])
    reports = [geometry.curvature_oracle(cfg["geometry"], float(z)) for z in zs]
    path = out_dir / "curvature.csv"
    emit_csv(
        {
            "z": zs,
            "scalar": [r.scalar for r in reports],
            "weyl_norm": [r.weyl_norm for r in reports],
            "taub_norm": [r.taub_norm for r in reports],
            "spacetime_weyl_norm": [r.spacetime_weyl_norm for r in reports],
        },
        path,
    )
    return [path]


def _task_transform(cfg, out_dir: Path) -> list[Path]:
    _require(cfg, "geometry", "grid", "mode")
    umap = _build_map(cfg)
    n = cfg["grid"]["n_points"]
    zs = np.linspace(umap.z_min, umap.z_max, n)
    us = coordinates.u_of_z(umap, zs)
    dzdu = 1.0 / coordinates.u_integrand(cfg["geometry"], zs)
    upath = out_dir / "umap.csv"
    emit_csv({"z": zs, "u": us, "dzdu": dzdu}, upath)
    table = reduction.tabulate_potential(cfg["geometry"], umap, cfg["mode"], n=n)
    vpath = out_dir / "potential.csv"
    emit_csv({"u": table.u_grid, "V": table.values}, vpath)
    return [upath, vpath]


def _task_potential(cfg, out_dir: Path) -> list[Path]:
    _require(cfg, "geometry", "grid", "mode")
    umap = _build_map(cfg)
    table = reduction.tabulate_potential(
        cfg["geometry"], umap, cfg["mode"], n=cfg["grid"]["n_points"]
    )
    path = out_dir / "potential.csv"
    emit_csv({"u": table.u_grid, "V": table.values}, path)
    return [path]


def _task_spectrum(cfg, out_dir: Path) -> list[Path]:
    _require(cfg, "geometry", "grid", "mode", "search")
    umap = _build_map(cfg)
    search = cfg["search"]
    result = solver.bound_modes(
        cfg["geometry"], umap, cfg["mode"],
        (search["omega_sq_min"], search["omega_sq_max"]), k_max=search["k_max"],
    )
    path = out_dir / "spectrum.csv"
    emit_csv(
        {
            "k": list(range(len(result.eigen_omega_sq))),
            "omega_sq": result.eigen_omega_sq,
            "node_count": result.node_counts,
            "residual": result.residuals,
        },
        path,
    )
    written = [path]
    for k, omega_sq in enumerate(result.eigen_omega_sq):
        psi = solver.bound_mode_wavefunction(cfg["geometry"], umap, cfg["mode"], omega_sq)
        wpath = out_dir / f"psi_{k}.csv"
        emit_csv({"u": psi.grid, "psi": psi.values}, wpath)
        written.append(wpath)
    return written


def _task_scatter(cfg, out_dir: Path) -> list[Path]:
    _require(cfg, "geometry", "grid", "mode")
    umap = _build_map(cfg)
    sweep = cfg.get("sweep")
    if sweep is None:
        omegas = [cfg["mode"].omega]
    else:
        omegas = np.linspace(sweep["omega_min"], sweep["omega_max"], sweep["n_omega"])
    rows = []
    for omega in omegas:
        mode = ModeSpec(float(omega), cfg["mode"].mass, cfg["mode"].m, cfg["mode"].coupling)
        rows.append(solver.transmission(cfg["geometry"], umap, mode))
    path = out_dir / "scatter.csv"
    emit_csv(
        {
            "omega": [r.omega for r in rows],
            "transmission": [r.transmission for r in rows],
            "reflection": [r.reflection for r in rows],
            "channel_open": [r.channel_open for r in rows],
        },
        path,
    )
    return [path]


def _task_verify(cfg, out_dir: Path) -> tuple[list[Path], bool]:
    results = verify.run_battery(seed=cfg["seed"])
    path = out_dir / "verify.csv"
    emit_csv(
        {
            "check": [r.name for r in results],
            "value": [r.value for r in results],
            "threshold": [r.threshold for r in results],
            "passed": [r.passed for r in results],
        },
        path,
    )
    width = max(len(r.name) for r in results)
    for r in results:
        status = "pass" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {r.value:13.6e} < {r.threshold:9.2e}  {status}")
    ok = all(r.passed for r in results)
    print(f"verify: {'all checks passed' if ok else 'FAILURES present'}")
    return [path], ok


def run(task: str, cfg: dict, out_dir: Path, seed: int | None = None) -> int:
    """Dispatch one task; returns the process exit code."""
    if cfg.get("task") is not None and cfg["task"] != task:
        raise ValidationError(
            f"config declares task {cfg['task']!r} but {task!r} was requested"
        )
    if seed is not None:
        cfg["seed"] = seed
    out_dir.mkdir(parents=True, exist_ok=True)
    if task == "verify":
        paths, ok = _task_verify(cfg, out_dir)
        status = 0 if ok else 1
    else:
        handler = {
            "curvature": _task_curvature,
            "transform": _task_transform,
            "potential": _task_potential,
            "spectrum": _task_spectrum,
            "scatter": _task_scatter,
        }[task]
        paths = handler(cfg, out_dir)
        status = 0
    for p in paths:
        print(f"wrote {p}")
    return status


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="kkred",
        description="variable-compactification-radius space-time laboratory",
    )
    sub = parser.add_subparsers(dest="task", required=True)
    for task in TASKS:
        p = sub.add_parser(task, help=f"run the {task} task")
        p.add_argument("--config", required=True, help="TOML experiment config")
        p.add_argument("--out", default=".", help="output directory (default: cwd)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        return run(args.task, cfg, Path(args.out), seed=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 3
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 4
    except KkredError as exc:  # any other package failure counts as solver-level
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
