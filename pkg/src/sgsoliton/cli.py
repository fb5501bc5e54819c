"""Command line driver.

Usage::

    sgsoliton SUBCOMMAND [--config PATH] [key=value ...]

Subcommands: ``identities``, ``roundtrip``, ``stability``, ``nondegeneracy``,
``blowup`` and ``evolve``. A config file holds one ``key = value`` per line;
``#`` starts a comment, lists are comma-separated and booleans are
``true``/``false``. Command-line pairs override the file. Unknown keys are
rejected. Reports are CSV with a header row and floats written with 17
significant digits. The exit code is 0 exactly when every row with a
threshold passes.
"""
from __future__ import annotations

import argparse
import csv
import math
import os
import sys

import numpy as np

from . import experiments as ex

__all__ = ["main", "parse_config", "SCHEMAS", "ConfigError", "write_csv"]


class ConfigError(ValueError):
    """Unknown key or a value that does not parse."""


def _float(s):
    return float(s)


def _opt_float(s):
    return None if str(s).strip().lower() in ("", "none", "default") else float(s)


def _bool(s):
    v = str(s).strip().lower()
    if v not in ("true", "false"):
        raise ValueError(f"expected true/false, got {s!r}")
    return v == "true"


def _list(conv):
    def parse(s):
        if isinstance(s, (list, tuple)):
            return tuple(conv(v) for v in s)
        return tuple(conv(v.strip()) for v in str(s).split(",") if v.strip())
    return parse


_COMMON = dict(L=(_float, 40.0), N=(int, 4096), output=(str, ""))


def _shifts(x1=0.0, x2=0.0):
    return dict(beta=(_float, 0.5), x1=(_float, x1), x2=(_float, x2))


_KINDS = ("breather", "two_kink", "kink_antikink")

SCHEMAS = {
    "identities": dict(_COMMON, **_shifts(0.3, -0.1), half_angle_sign=(_float, 1.0)),
    "roundtrip": dict(_COMMON, **_shifts(0.3, -0.1), kinds=(_list(str), _KINDS), etas=(_list(_float), (1e-3,)),
                      seeds=(_list(int), (0,)), tol=(_float, 1e-10), workers=(int, 0)),
    "stability": dict(_COMMON, **_shifts(), kinds=(_list(str), _KINDS), etas=(_list(_float), (1e-3, 3e-3, 1e-2)),
                      seeds=(_list(int), (0, 1, 2, 3, 4)), T=(_float, 50.0), dt=(_opt_float, None),
                      out_dt=(_float, 0.5), eps0=(_float, 0.05), transport_time=(_float, 5.0),
                      workers=(int, 0), summary=(str, "")),
    "nondegeneracy": dict(_COMMON, betas=(_list(_float), (0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)),
                          n_x1=(int, 64), margin=(_float, 1e-3), refine_every=(int, 8), workers=(int, 0),
                          summary=(str, "")),
    "blowup": dict(_COMMON, betas=(_list(_float), (0.5, math.sqrt(3) / 2)), T=(_float, 12.0),
                   eps0=(_float, 0.05)),
    "evolve": dict(_COMMON, **_shifts(), kind=(str, "breather"), eta=(_float, 1e-3), seed=(int, 0),
                   T=(_float, 10.0), dt=(_opt_float, None), n_out=(int, 11), stride=(int, 1)),
}


def _read_pairs(text):
    pairs = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        k, v = line.split("=", 1)
        pairs.append((k.strip(), v.strip()))
    return pairs


def parse_config(command: str, text: str = "", overrides=()) -> dict:
    """Validated settings for ``command`` from config text and ``key=value`` overrides."""
    if command not in SCHEMAS:
        raise ConfigError(f"unknown subcommand {command!r}")
    schema = SCHEMAS[command]
    cfg = {k: default for k, (_, default) in schema.items()}
    pairs = _read_pairs(text)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        k, v = item.split("=", 1)
        pairs.append((k.strip(), v.strip()))
    for k, v in pairs:
        if k not in schema:
            raise ConfigError(f"unknown key {k!r} for {command}; allowed: {', '.join(sorted(schema))}")
        try:
            cfg[k] = schema[k][0](v)
        except ValueError as err:
            raise ConfigError(f"bad value for {k}: {err}") from None
    return cfg


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (complex, np.complexfloating)):
        return format(complex(v), ".17g")
    return str(v)


def write_csv(rows, fh):
    cols = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    out = csv.writer(fh, lineterminator="\n")
    out.writerow(cols)
    for r in rows:
        out.writerow([_fmt(r.get(c)) for c in cols])


def _emit(rows, path, stream):
    if path:
        with open(path, "w", newline="") as fh:
            write_csv(rows, fh)
    else:
        write_csv(rows, stream)


def _workers(n):
    return n if n > 0 else (os.cpu_count() or 1)


def run(command: str, cfg: dict, stream=None) -> bool:
    """Execute one subcommand and write its CSV; returns True when every threshold passes."""
    stream = sys.stdout if stream is None else stream
    if command == "identities":
        rows = ex.run_identities(cfg["beta"], cfg["x1"], cfg["x2"], cfg["L"], cfg["N"], cfg["half_angle_sign"])
        _emit(rows, cfg["output"], stream)
        return all(r["passed"] for r in rows)
    if command == "roundtrip":
        rows = ex.run_roundtrip(cfg["kinds"], cfg["beta"], cfg["x1"], cfg["x2"], cfg["L"], cfg["N"], cfg["etas"],
                                cfg["seeds"], cfg["tol"], _workers(cfg["workers"]))
        _emit(rows, cfg["output"], stream)
        return all(r["passed"] for r in rows)
    if command == "stability":
        points, summary = ex.run_stability(cfg["kinds"], cfg["beta"], cfg["x1"], cfg["x2"], cfg["etas"],
                                           cfg["seeds"], cfg["T"], cfg["dt"], cfg["L"], cfg["N"], cfg["out_dt"],
                                           cfg["eps0"], cfg["transport_time"], _workers(cfg["workers"]))
        _emit(points, cfg["output"], stream)
        if not cfg["summary"] and not cfg["output"]:
            stream.write("\n")
        _emit(summary, cfg["summary"], stream)
        return all(r["passed"] for r in summary)
    if command == "nondegeneracy":
        scan, summary = ex.run_nondegeneracy_scan(cfg["betas"], cfg["n_x1"], cfg["margin"], cfg["L"], cfg["N"],
                                                  cfg["refine_every"], _workers(cfg["workers"]))
        _emit(scan, cfg["output"], stream)
        if not cfg["summary"] and not cfg["output"]:
            stream.write("\n")
        _emit(summary, cfg["summary"], stream)
        return all(r["passed"] for r in summary)
    if command == "blowup":
        rows = ex.blowup_rows(cfg["betas"], cfg["T"], cfg["L"], cfg["N"], cfg["eps0"])
        _emit(rows, cfg["output"], stream)
        return all(r["passed"] for r in rows)
    if command == "evolve":
        traj = ex.run_evolve(cfg["kind"], cfg["beta"], cfg["x1"], cfg["x2"], cfg["eta"], cfg["seed"], cfg["T"],
                             cfg["dt"], cfg["L"], cfg["N"], cfg["n_out"])
        stride = max(1, cfg["stride"])
        cols = ("t", "x", "re_phi", "im_phi", "re_phi_t", "im_phi_t")
        rows = [dict(zip(cols, r)) for i, r in enumerate(traj.rows()) if (i % traj.grid.N) % stride == 0]
        _emit(rows, cfg["output"], stream)
        return not traj.blew_up
    raise ConfigError(f"unknown subcommand {command!r}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sgsoliton", description="Sine-Gordon 2-soliton experiments.")
    parser.add_argument("command", choices=sorted(SCHEMAS))
    parser.add_argument("--config", help="flat key = value file")
    parser.add_argument("overrides", nargs="*", help="key=value settings overriding the config file")
    args = parser.parse_intermixed_args(argv)
    text = ""
    if args.config:
        with open(args.config) as fh:
            text = fh.read()
    try:
        cfg = parse_config(args.command, text, args.overrides)
    except ConfigError as err:
        parser.error(str(err))
    ok = run(args.command, cfg)
    return 0 if ok else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
