"""Convection and diffusion terms on weighted averages, with TVB flux limiting.

The compact convection step for ``w_t + (u w)_x + (v w)_y = 0`` is written in
conservation form on the weighted average ``wbar = W1x W1y w``::

    wbar_new = wbar - lam1 (F[i+1/2] - F[i-1/2]) - lam2 (G[j+1/2] - G[j-1/2])

with ``lam1 = dt/dx``, ``lam2 = dt/dy`` and face fluxes
``F[i+1/2] = (W1y(u w)[i] + W1y(u w)[i+1]) / 2``.  The TVB limiter replaces
these fluxes by upwind fluxes plus minmod-limited corrections.
"""

from dataclasses import dataclass

import numpy as np

from .compact import DX, DXX, W1, W2, apply_along, solve_along
from .grid import DimensionError, Field2D
from .velocity import VelocityPair

TVB_VARIANTS = ("off", "tvb1", "tvb2")


def _require_periodic(f: Field2D):
    if not f.grid.periodic:
        raise ValueError("convection operators need a periodic grid")


def weighted_average(omega: Field2D) -> Field2D:
    """``W1x W1y omega``: the (1,4,1) x (1,4,1) / 36 local average."""
    _require_periodic(omega)
    return omega.like(apply_along(W1, apply_along(W1, omega.values, 0), 1))


def weighted_average2(omega: Field2D) -> Field2D:
    """``W2x W2y omega``."""
    _require_periodic(omega)
    return omega.like(apply_along(W2, apply_along(W2, omega.values, 0), 1))


def recover_point_values(omega_bar: np.ndarray) -> np.ndarray:
    """Invert ``W1x W1y`` by two periodic tridiagonal line solves."""
    return solve_along(W1, solve_along(W1, omega_bar, 0), 1)


@dataclass(frozen=True)
class FluxField:
    """Face fluxes: ``fx[i, j]`` sits at ``(i+1/2, j)``, ``fy[i, j]`` at ``(i, j+1/2)``.

    Indexing is periodic, so face ``nx+1/2`` is face ``1/2``.
    """

    fx: np.ndarray
    fy: np.ndarray

    def __post_init__(self):
        if self.fx.shape != self.fy.shape:
            raise DimensionError("x and y face fluxes must share a shape")
        if not (np.all(np.isfinite(self.fx)) and np.all(np.isfinite(self.fy))):
            raise FloatingPointError("non-finite flux")

    def __add__(self, other: "FluxField") -> "FluxField":
        return FluxField(self.fx + other.fx, self.fy + other.fy)


def _face(a: np.ndarray, axis: int) -> np.ndarray:
    return 0.5 * (a + np.roll(a, -1, axis=axis))


def _flux_pair(omega: np.ndarray, u: np.ndarray, v: np.ndarray) -> FluxField:
    return FluxField(_face(apply_along(W1, u * omega, 1), 0),
                     _face(apply_along(W1, v * omega, 0), 1))


def baseline_fluxes(omega: Field2D, vel: VelocityPair) -> FluxField:
    """Unlimited compact fluxes; their differences give ``W1y Dx(u w)`` and ``W1x Dy(v w)``."""
    _require_periodic(omega)
    return _flux_pair(omega.values, vel.u.values, vel.v.values)


@dataclass(frozen=True)
class SplitVelocity:
    """Lax-Friedrichs split ``u+- = (u +- alpha_x) / 2`` (same for v)."""

    u_plus: Field2D
    u_minus: Field2D
    v_plus: Field2D
    v_minus: Field2D
    alpha_x: float
    alpha_y: float


def split_velocity(vel: VelocityPair) -> SplitVelocity:
    """Split with ``alpha`` equal to the current grid maximum of ``|u|`` (resp. ``|v|``)."""
    u, v = vel.u.values, vel.v.values
    ax = float(np.max(np.abs(u)))
    ay = float(np.max(np.abs(v)))
    up = 0.5 * (u + ax)
    vp = 0.5 * (v + ay)
    # u - up keeps u+ + u- == u exactly and the sign of u- nonpositive
    return SplitVelocity(vel.u.like(up), vel.u.like(u - up), vel.v.like(vp), vel.v.like(v - vp), ax, ay)


def split_fluxes(omega: Field2D, split: SplitVelocity) -> tuple[FluxField, FluxField]:
    """Baseline fluxes evaluated with ``u+, v+`` and with ``u-, v-``."""
    w = omega.values
    return (_flux_pair(w, split.u_plus.values, split.v_plus.values),
            _flux_pair(w, split.u_minus.values, split.v_minus.values))


def minmod(*args):
    """``s * min|a_k|`` if every argument has strict sign ``s``, else 0 (elementwise)."""
    if not args:
        raise ValueError("minmod needs at least one argument")
    arrs = [np.asarray(a, dtype=float) for a in args]
    s = np.sign(arrs[0])
    same = s != 0
    mag = np.abs(arrs[0])
    for a in arrs[1:]:
        same = same & (np.sign(a) == s)
        mag = np.minimum(mag, np.abs(a))
    out = np.where(same, s * mag, 0.0)
    return float(out) if out.ndim == 0 else out


def modified_minmod(args, P: float, h: float):
    """First argument when ``|a_1| <= P h^2``, otherwise :func:`minmod`."""
    if P < 0:
        raise ValueError("TVB constant P must be nonnegative")
    args = [np.asarray(a, dtype=float) for a in args]
    out = np.where(np.abs(args[0]) <= P * h * h, args[0], minmod(*args))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class TvbParams:
    variant: str = "off"
    P: float = 0.0

    def __post_init__(self):
        if self.variant not in TVB_VARIANTS:
            raise ValueError(f"unknown TVB variant {self.variant!r}")
        if not self.P >= 0:
            raise ValueError("TVB constant P must be nonnegative")

    @property
    def active(self) -> bool:
        return self.variant != "off"


def _limit_direction(wb, f_plus, f_minus, up, um, axis, variant, P, h):
    """Limited total flux through faces ``k+1/2`` along ``axis``.

    ``up``/``um`` are the face velocities (averaged split velocities at
    ``k+1/2``); ``f_plus``/``f_minus`` the sign-split high-order fluxes.
    """
    def sh(a, k):
        # sh(a, k)[i] = a[i + k]
        return np.roll(a, -k, axis=axis)

    wb_next = sh(wb, 1)
    d_plus = f_plus - up * wb
    d_minus = um * wb_next - f_minus
    if variant == "tvb1":
        dw = wb_next - wb
        args_p = (d_plus, up * dw, sh(up, -1) * sh(dw, -1))
        args_m = (d_minus, um * dw, sh(um, 1) * sh(dw, 1))
    else:
        qp = up * wb                    # u+_{k+1/2} wbar_k
        qm = sh(um, -1) * wb            # u-_{k-1/2} wbar_k
        dqp = sh(qp, 1) - qp
        dqm = sh(qm, 1) - qm
        args_p = (d_plus, dqp, sh(dqp, -1))
        args_m = (d_minus, dqm, sh(dqm, 1))
    d_plus = modified_minmod(args_p, P, h)
    d_minus = modified_minmod(args_m, P, h)
    return up * wb + d_plus + um * wb_next - d_minus


def face_velocities(split: SplitVelocity):
    """``u+-`` averaged with W1y onto x faces and ``v+-`` with W1x onto y faces."""
    return (_face(apply_along(W1, split.u_plus.values, 1), 0),
            _face(apply_along(W1, split.u_minus.values, 1), 0),
            _face(apply_along(W1, split.v_plus.values, 0), 1),
            _face(apply_along(W1, split.v_minus.values, 0), 1))


def tvb_limit_fluxes(omega_bar: Field2D, signed: tuple[FluxField, FluxField],
                     split: SplitVelocity, params: TvbParams) -> FluxField:
    """TVB-limited fluxes from the sign-split fluxes of :func:`split_fluxes`."""
    if not params.active:
        raise ValueError("tvb_limit_fluxes needs an active TVB variant")
    g = omega_bar.grid
    wb = omega_bar.values
    fp, fm = signed
    upx, umx, vpy, vmy = face_velocities(split)
    fx = _limit_direction(wb, fp.fx, fm.fx, upx, umx, 0, params.variant, params.P, g.dx)
    fy = _limit_direction(wb, fp.fy, fm.fy, vpy, vmy, 1, params.variant, params.P, g.dy)
    return FluxField(fx, fy)


def conservative_update(omega_bar: Field2D, fluxes: FluxField, lambda1: float, lambda2: float) -> Field2D:
    fx, fy = fluxes.fx, fluxes.fy
    if fx.shape != omega_bar.grid.shape:
        raise DimensionError("flux and field shapes differ")
    return omega_bar.like(omega_bar.values
                          - lambda1 * (fx - np.roll(fx, 1, axis=0))
                          - lambda2 * (fy - np.roll(fy, 1, axis=1)))


def convective_update(omega: Field2D, vel: VelocityPair, dt: float,
                      tvb: TvbParams = TvbParams()) -> Field2D:
    """One forward-Euler convection step of the weighted average ``W1x W1y omega``."""
    g = omega.grid
    wb = weighted_average(omega)
    if tvb.active:
        split = split_velocity(vel)
        fluxes = tvb_limit_fluxes(wb, split_fluxes(omega, split), split, tvb)
    else:
        fluxes = baseline_fluxes(omega, vel)
    return conservative_update(wb, fluxes, dt / g.dx, dt / g.dy)


def averaged_diffusion(omega: Field2D, re: float) -> Field2D:
    """``W1 (W2y Dxx w / dx^2 + W2x Dyy w / dy^2) / Re``: diffusion on doubly averaged values."""
    _check_re(re)
    g = omega.grid
    w = omega.values
    lap = (apply_along(W2, apply_along(DXX, w, 0), 1) / g.dx**2
           + apply_along(W2, apply_along(DXX, w, 1), 0) / g.dy**2)
    return omega.like(apply_along(W1, apply_along(W1, lap, 0), 1) / re)


def ns_averaged_update(omega: Field2D, vel: VelocityPair, dt: float, re: float,
                       tvb: TvbParams = TvbParams()) -> Field2D:
    """Forward-Euler step of ``W2 W1 omega`` for the Navier-Stokes vorticity equation."""
    conv = convective_update(omega, vel, dt, tvb)
    return weighted_average2(conv) + dt * averaged_diffusion(omega, re)


def euler_rhs(omega: Field2D, vel: VelocityPair) -> Field2D:
    """``-W1x^{-1} Dx(u w) / dx - W1y^{-1} Dy(v w) / dy`` in point values."""
    _require_periodic(omega)
    g = omega.grid
    w = omega.values
    fx = solve_along(W1, apply_along(DX, vel.u.values * w, 0), 0) / g.dx
    fy = solve_along(W1, apply_along(DX, vel.v.values * w, 1), 1) / g.dy
    return omega.like(-fx - fy)


def _check_re(re):
    if not re > 0:
        raise ValueError("Reynolds number must be positive")


def ns_rhs(omega: Field2D, vel: VelocityPair, re: float) -> Field2D:
    """:func:`euler_rhs` plus the compact Laplacian of ``omega`` over ``Re`` (``Re = inf`` allowed)."""
    _check_re(re)
    g = omega.grid
    w = omega.values
    lap = (solve_along(W2, apply_along(DXX, w, 0), 0) / g.dx**2
           + solve_along(W2, apply_along(DXX, w, 1), 1) / g.dy**2)
    return euler_rhs(omega, vel) + omega.like(lap / re)
