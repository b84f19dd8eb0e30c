"""Command-line entry point: ``solver <problem> [options]``."""

import argparse
import json
import sys

from .elliptic import ConfigurationError
from .harness import LIMITER_CHOICES, RunConfig, run_accuracy, run_flow, run_heat_maxprin, run_poisson_bench
from .integrator import InvariantViolation
from .problems import ALIASES, PROBLEMS

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 2, 3


def _floats(text):
    return tuple(float(t) for t in text.split(",") if t.strip())


def _ints(text):
    return tuple(int(t) for t in text.split(",") if t.strip())


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="solver", description="Bound-preserving compact vorticity solver")
    p.add_argument("problem", choices=sorted(PROBLEMS) + sorted(ALIASES))
    p.add_argument("--config", help="JSON file with option values; command-line flags override it")
    p.add_argument("--nx", type=int)
    p.add_argument("--ny", type=int)
    p.add_argument("--tfinal", type=float, dest="t_final")
    p.add_argument("--limiter", choices=LIMITER_CHOICES)
    p.add_argument("--tvb-p", type=float, dest="tvb_p")
    p.add_argument("--cfl-fraction", type=float, dest="cfl_fraction")
    p.add_argument("--re", type=float, help="Reynolds number; switches to Navier-Stokes")
    p.add_argument("--out", help="output directory")
    p.add_argument("--snapshot", type=_floats, dest="snapshots", help="comma-separated output times")
    p.add_argument("--ns", type=_ints, help="comma-separated grid sizes (accuracy, poisson-bench)")
    p.add_argument("--trials", type=int, help="random trials per case (heat-maxprin)")
    p.add_argument("--seed", type=int)
    return p


CONFIG_KEYS = ("nx", "ny", "t_final", "limiter", "tvb_p", "cfl_fraction", "re", "out", "snapshots", "ns",
               "trials", "seed")
# spellings accepted in config files
FILE_ALIASES = {"tfinal": "t_final", "tvb-p": "tvb_p", "cfl-fraction": "cfl_fraction", "snapshot": "snapshots"}


def load_config_file(path) -> dict:
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ConfigurationError("config file must hold a JSON object")
    out = {}
    for k, v in data.items():
        key = FILE_ALIASES.get(k, k)
        if key not in CONFIG_KEYS:
            raise ConfigurationError(f"unknown config key {k!r}")
        if key in ("snapshots", "ns"):
            v = tuple(v) if isinstance(v, (list, tuple)) else (_floats if key == "snapshots" else _ints)(str(v))
        out[key] = v
    return out


def config_from_args(args) -> RunConfig:
    values = load_config_file(args.config) if args.config else {}
    for k in CONFIG_KEYS:
        v = getattr(args, k, None)
        if v is not None:
            values[k] = v
    return RunConfig(problem=args.problem, **values)


def _print_rows(rows):
    if not rows:
        return
    cols = list(rows[0])
    print(",".join(cols))
    for r in rows:
        print(",".join(f"{r[c]:.6g}" if isinstance(r[c], float) else str(r[c]) for c in cols))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        name = cfg.resolved().problem
        if name == "accuracy":
            _print_rows(run_accuracy(cfg))
        elif name == "poisson_bench":
            _print_rows(run_poisson_bench(cfg))
        elif name == "heat_maxprin":
            _print_rows(run_heat_maxprin(cfg))
        else:
            res = run_flow(cfg)
            last = res.records[-1] if res.records else None
            print(f"steps={len(res.records)} t={res.state.t:.6g} min={res.state.omega.min():.6g} "
                  f"max={res.state.omega.max():.6g} "
                  f"bp_violations={sum(r.bp_violations for r in res.records)}"
                  + (f" dt_last={last.dt:.3g}" if last else ""))
    except (ConfigurationError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
