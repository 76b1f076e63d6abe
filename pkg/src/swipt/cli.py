"""Command-line front end.

Every command writes plot-ready data: CSV with a leading ``#`` line holding
the JSON provenance (resolved scenario, knobs and seed), or a single JSON
document with a ``provenance`` key. Settings come from, in increasing
priority, built-in defaults, the ``--preset`` scenario, the ``--config``
file (``key = value`` lines or a JSON object, scenario keys and command
knobs mixed) and explicit flags.

Exit codes: 0 success, 2 configuration or I/O error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from importlib import metadata
from pathlib import Path

import numpy as np

from . import optimizer, region, simulator
from .bounds import rate_upper
from .constellation import Constellation
from .errors import ConfigError, SwiptError
from .inner import lower_bound
from .system import _KEYS, PowerSplit, SystemParams, parse_scenario, preset

__all__ = ["main", "build_parser", "cmd_region", "cmd_ergodic", "cmd_bounds", "cmd_optimize", "cmd_simulate"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

# knob -> (type, default)
KNOBS = {
    "region": {"rho_points": (int, 101), "n_samples": (int, 200_000), "inner": (bool, True)},
    "ergodic": {"rho_points": (int, 101), "n_fading": (int, 10_000)},
    "bounds": {
        "rhos": (str, "0.2,0.99"),
        "p_min": (float, 1.0),
        "p_max": (float, 1e4),
        "p_points": (int, 13),
        "n_samples": (int, 200_000),
    },
    "optimize": {
        "targets": (str, "1e-3,1e-4"),
        "modes": (str, "proposed,ps,iie"),
        "rho_step": (float, 1.0 / 40.0),
        "M_cap": (int, 1024),
        "noise_mode": (str, "eb_n0"),
        "eb_n0_db": (float, 20.0),
        "min_rings": (int, 2),
    },
    "simulate": {
        "constellation": (str, ""),
        "rho": (float, 0.05),
        "target_pep": (float, 1e-3),
        "n_trials": (int, 1_000_000),
        "exact_rectifier": (bool, False),
        "logdet": (bool, False),
        "noise_mode": (str, "eb_n0"),
        "eb_n0_db": (float, 20.0),
        "min_rings": (int, 2),
    },
}


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _to_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {value!r}")


def _read_config(path) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if text.strip().startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON config: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("JSON config must be an object")
        return raw
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        raw[key] = value
    return raw


def resolve_config(args: argparse.Namespace) -> tuple[SystemParams, dict, int]:
    """(scenario, knobs, seed) for a parsed command line."""
    raw = _read_config(args.config)
    scenario_raw = {k: raw.pop(k) for k in list(raw) if k in _KEYS or k == "preset"}
    if args.preset is not None:
        scenario_raw["preset"] = args.preset
    params = parse_scenario(json.dumps(scenario_raw)) if scenario_raw else preset("fig4")
    seed = raw.pop("seed", 0)
    if args.seed is not None:
        seed = args.seed
    try:
        seed = int(seed)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"seed must be an integer, got {seed!r}") from exc
    spec = KNOBS[args.command]
    unknown = set(raw) - set(spec)
    if unknown:
        raise ConfigError(f"unknown keys for {args.command}: {sorted(unknown)}")
    knobs = {}
    for name, (kind, default) in spec.items():
        value = getattr(args, name, None)
        if value is None:
            value = raw.get(name, default)
        try:
            knobs[name] = _to_bool(value) if kind is bool else kind(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {name}: {value!r}") from exc
    return params, knobs, seed


def _provenance(command: str, params: SystemParams, knobs: dict, seed: int) -> dict:
    return {
        "command": command,
        "scenario": params.to_dict(),
        "knobs": knobs,
        "seed": seed,
        "version": _version(),
    }


def _floats(text: str, name: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"{name} must be a comma-separated list of numbers") from exc
    if not values:
        raise ConfigError(f"{name} is empty")
    return values


def _rows_csv(rows: list[dict], columns, provenance: dict) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(provenance, sort_keys=True) + "\n")
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _rho_grid(n: int) -> np.ndarray:
    if n < 1:
        raise ConfigError("rho_points must be at least 1")
    return region.default_rho_grid(n)


def cmd_region(params: SystemParams, knobs: dict, seed: int, fmt: str) -> str:
    """Static rate-energy curves: ideal, proposed outer/inner, PS and IIE."""
    prov = _provenance("region", params, knobs, seed)
    curves = region.region_curves(
        params, _rho_grid(knobs["rho_points"]), knobs["n_samples"], seed, include_inner=knobs["inner"]
    )
    if fmt == "json":
        return region.curves_to_json(curves, prov)
    return region.curves_to_csv(curves, prov)


def cmd_ergodic(params: SystemParams, knobs: dict, seed: int, fmt: str) -> str:
    """Fading-averaged curves over Rayleigh channel draws."""
    prov = _provenance("ergodic", params, knobs, seed)
    curves = region.ergodic_region(params, _rho_grid(knobs["rho_points"]), knobs["n_fading"], seed)
    if fmt == "json":
        return region.curves_to_json(curves, prov)
    return region.curves_to_csv(curves, prov)


BOUNDS_COLUMNS = ("P", "rho", "rate_upper", "rate_lower", "rate_lower_std_error", "gap")


def cmd_bounds(params: SystemParams, knobs: dict, seed: int, fmt: str) -> str:
    """Upper and lower rate bounds against transmit power at fixed splits."""
    rhos = _floats(knobs["rhos"], "rhos")
    if not (0 < knobs["p_min"] <= knobs["p_max"]) or knobs["p_points"] < 1:
        raise ConfigError("need 0 < p_min <= p_max and p_points >= 1")
    powers = np.geomspace(knobs["p_min"], knobs["p_max"], knobs["p_points"])
    rows = []
    for rho in rhos:
        split = PowerSplit(rho)
        for p in powers:
            scen = params.replace(P=float(p))
            ub = rate_upper(scen, split).rate_ub
            lb = lower_bound(scen, split, knobs["n_samples"], seed)
            rows.append(
                {
                    "P": float(p),
                    "rho": rho,
                    "rate_upper": ub,
                    "rate_lower": lb.rate_lb,
                    "rate_lower_std_error": lb.std_error,
                    "gap": ub - lb.rate_lb,
                }
            )
    prov = _provenance("bounds", params, knobs, seed)
    if fmt == "json":
        return json.dumps({"provenance": prov, "rows": rows}, indent=2, sort_keys=True)
    return _rows_csv(rows, BOUNDS_COLUMNS, prov)


def cmd_optimize(params: SystemParams, knobs: dict, seed: int, fmt: str) -> str:
    """Staircase tables of the best (log2 M, log2 N_a) per receiver mode and target."""
    targets = _floats(knobs["targets"], "targets")
    modes = [m.strip() for m in knobs["modes"].split(",") if m.strip()]
    grid = optimizer.table_grid(knobs["rho_step"])
    prov = _provenance("optimize", params, knobs, seed)
    tables = []
    for target in targets:
        template = optimizer.DesignPoint(
            0.0,
            target,
            params,
            mode="proposed",
            noise_mode=knobs["noise_mode"],
            eb_n0_db=knobs["eb_n0_db"],
            min_rings=knobs["min_rings"],
        )
        for mode in modes:
            results = optimizer.sweep_rho(template, grid, mode, knobs["M_cap"])
            tables.append((target, mode, results))
    if fmt == "json":
        doc = {
            "provenance": prov,
            "tables": [
                {
                    "target_pep": t,
                    "mode": m,
                    "staircase": optimizer.staircase(res),
                    "points": [r.to_dict() for r in res],
                }
                for t, m, res in tables
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True)
    parts = []
    for i, (t, m, res) in enumerate(tables):
        text = optimizer.staircase_csv(res, prov if i == 0 else None, {"mode": m, "target_pep": t})
        # one header row for the whole file
        parts.append(text if i == 0 else text.split("\n", 1)[1])
    return "".join(parts)


def cmd_simulate(params: SystemParams, knobs: dict, seed: int, fmt: str) -> str:
    """Symbol error rate of a constellation file or of the optimized design at ``rho``."""
    split = PowerSplit(knobs["rho"])
    if knobs["constellation"]:
        try:
            doc = json.loads(Path(knobs["constellation"]).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load constellation: {exc}") from exc
        try:
            con = Constellation.from_dict(doc)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed constellation: {exc}") from exc
        scen = params
        design = None
    else:
        point = optimizer.DesignPoint(
            knobs["rho"],
            knobs["target_pep"],
            params,
            noise_mode=knobs["noise_mode"],
            eb_n0_db=knobs["eb_n0_db"],
            min_rings=knobs["min_rings"],
        )
        design = optimizer.solve_p2(point)
        if not design.feasible:
            raise ConfigError(f"no feasible design at rho={knobs['rho']} for target {knobs['target_pep']}")
        con, scen = design.constellation, design.params
    report = simulator.simulate_ser(
        con,
        scen,
        split,
        knobs["n_trials"],
        seed,
        exact_rectifier=knobs["exact_rectifier"],
        logdet=knobs["logdet"],
    )
    prov = _provenance("simulate", params, knobs, seed)
    doc = {
        "provenance": prov,
        "simulation_scenario": scen.to_dict(),
        "constellation": con.to_dict(),
        "design": None if design is None else design.to_dict(),
        "report": report.to_dict(),
    }
    if fmt == "json":
        return json.dumps(doc, indent=2, sort_keys=True)
    row = {k: v for k, v in report.to_dict().items() if k != "confusion"}
    row["M"] = con.M
    return _rows_csv([row], list(row), prov)


COMMANDS = {
    "region": cmd_region,
    "ergodic": cmd_ergodic,
    "bounds": cmd_bounds,
    "optimize": cmd_optimize,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--config", default=None, help="key = value or JSON file")
    common.add_argument("--preset", default=None, help="scenario preset (fig3..fig7)")
    common.add_argument("--out", default=None, help="output file (default stdout)")

    parser = argparse.ArgumentParser(prog="swipt", description="Rate-energy regions and constellation design.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, knobs in KNOBS.items():
        p = sub.add_parser(name, parents=[common], help=COMMANDS[name].__doc__.splitlines()[0])
        for knob, (kind, default) in knobs.items():
            flag = "--" + knob.replace("_", "-")
            if kind is bool:
                p.add_argument(flag, dest=knob, action=argparse.BooleanOptionalAction, default=None)
            else:
                text = f"default {default}" if default != "" else "JSON constellation file (default: optimized design)"
                p.add_argument(flag, dest=knob, type=kind, default=None, help=text)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        params, knobs, seed = resolve_config(args)
        text = COMMANDS[args.command](params, knobs, seed, args.format)
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SwiptError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
