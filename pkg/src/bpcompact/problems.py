"""Initial data and bounds for the benchmark flows."""

from dataclasses import dataclass
from typing import Callable

import numpy as np

SHEAR_DELTA = 0.05
SHEAR_RHO = np.pi / 15
# patch edges are closed; the tolerance keeps grid points on an edge inside
PATCH_TOL = 1e-12


@dataclass(frozen=True)
class Problem:
    name: str
    initial: Callable | None = None
    exact: Callable | None = None
    bounds: tuple[float, float] | None = None
    lx: float = 2 * np.pi
    ly: float = 2 * np.pi
    t_final: float = 1.0
    snapshots: tuple = ()
    limiter: str = "bp"
    tvb_p: float = 0.0
    cfl_fraction: float = 1 / 24
    n: int = 160


def steady_vorticity(x, y):
    return -2 * np.sin(2 * x) * np.sin(y)


def steady_exact(x, y, t=0.0):
    return steady_vorticity(x, y)


def shear_layer_vorticity(x, y, delta=SHEAR_DELTA, rho=SHEAR_RHO):
    lower = delta * np.cos(x) - np.cosh((y - np.pi / 2) / rho) ** -2 / rho
    upper = delta * np.cos(x) + np.cosh((3 * np.pi / 2 - y) / rho) ** -2 / rho
    return np.where(y <= np.pi, lower, upper)


def _inside(s, lo, hi):
    return (s >= lo - PATCH_TOL) & (s <= hi + PATCH_TOL)


def vortex_patch_vorticity(x, y):
    xin = _inside(x, np.pi / 2, 3 * np.pi / 2)
    neg = xin & _inside(y, np.pi / 4, 3 * np.pi / 4)
    pos = xin & _inside(y, 5 * np.pi / 4, 7 * np.pi / 4)
    return np.where(neg, -1.0, np.where(pos, 1.0, 0.0))


SHEAR_BOUND = SHEAR_DELTA + 1 / SHEAR_RHO

PROBLEMS = {
    "accuracy": Problem("accuracy", steady_vorticity, steady_exact, (-2.0, 2.0), t_final=0.5,
                        limiter="bp+tvb1", tvb_p=300.0),
    "shear_layer": Problem("shear_layer", shear_layer_vorticity, None, (-SHEAR_BOUND, SHEAR_BOUND),
                           t_final=8.0, snapshots=(6.0, 8.0), limiter="bp+tvb1", tvb_p=100.0),
    "vortex_patch": Problem("vortex_patch", vortex_patch_vorticity, None, (-1.0, 1.0),
                            t_final=5.0, snapshots=(5.0,), limiter="bp+tvb1", tvb_p=10.0),
    "poisson_bench": Problem("poisson_bench"),
    "heat_maxprin": Problem("heat_maxprin", n=16),
}
ALIASES = {"poisson-bench": "poisson_bench", "heat-maxprin": "heat_maxprin",
           "shear-layer": "shear_layer", "vortex-patch": "vortex_patch"}


def get_problem(name: str) -> Problem:
    key = ALIASES.get(name, name)
    if key not in PROBLEMS:
        raise KeyError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}")
    return PROBLEMS[key]
