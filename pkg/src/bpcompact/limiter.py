"""Three-point bound-preserving limiter for periodic lines and its 2D wrappers.

Given periodic point values whose local averages
``(u[i-1] + a u[i] + u[i+1]) / (a + 2)`` lie in ``[m, M]`` (``a >= 2``), the
limiter returns values in ``[m, M]`` with the same sum.  Isolated overshoots
and undershoots push their excess onto in-range neighbours (Step II);
saw-tooth runs, where an undershoot sits next to an overshoot, are clamped
and rescaled as a block (Step III).
"""

from dataclasses import dataclass, field

import numba
import numpy as np

from .compact import W1, W2, solve_along
from .grid import Field2D

# relative tolerance (of M - m) for the weighted-average precondition
PRECONDITION_RTOL = 1e-12


@dataclass(frozen=True)
class BpBounds:
    m: float
    M: float
    a: float = 4.0

    def __post_init__(self):
        if not self.m < self.M:
            raise ValueError("bounds need m < M")
        if not self.a >= 2:
            raise ValueError("limiter weight a must be >= 2")


@dataclass
class BpStats:
    """Counters accumulated over limiter calls."""

    lines: int = 0
    violations: int = 0
    limited_points: int = 0

    def add(self, other: "BpStats"):
        self.lines += other.lines
        self.violations += other.violations
        self.limited_points += other.limited_points


@dataclass(frozen=True)
class SetDecomposition:
    """Index lists of the saw-tooth (class-I) and separated (class-II) sets.

    Each set lists consecutive periodic indices including its two boundary
    points; neighbouring sets share their boundary points.
    """

    class1_sets: list = field(default_factory=list)
    class2_sets: list = field(default_factory=list)


@numba.njit(cache=True)
def _sawtooth_runs(u, m, M):
    """Maximal periodic runs of out-of-range points holding both an under- and overshoot.

    Returns ``(starts, lengths, whole)``: run ``k`` covers indices
    ``starts[k] .. starts[k] + lengths[k] - 1`` (mod n).  ``whole`` is True
    when every point is out of range; the line is then one run with no
    boundary points.
    """
    n = u.shape[0]
    starts = np.empty(n, np.int64)
    lengths = np.empty(n, np.int64)
    first_in = -1
    for i in range(n):
        if m <= u[i] <= M:
            first_in = i
            break
    if first_in < 0:
        starts[0] = 0
        lengths[0] = n
        return starts[:1], lengths[:1], True
    k = 0
    i = 1
    while i < n:
        idx = (first_in + i) % n
        if u[idx] < m or u[idx] > M:
            start = idx
            length = 0
            lo = False
            hi = False
            while i < n:
                j = (first_in + i) % n
                if u[j] < m:
                    lo = True
                elif u[j] > M:
                    hi = True
                else:
                    break
                length += 1
                i += 1
            if lo and hi:
                starts[k] = start
                lengths[k] = length
                k += 1
        else:
            i += 1
    return starts[:k], lengths[:k], False


@numba.njit(cache=True)
def _precondition_ok(u, m, M, a, tol):
    n = u.shape[0]
    for i in range(n):
        avg = (u[i - 1] + a * u[i] + u[(i + 1) % n]) / (a + 2.0)
        if avg < m - tol or avg > M + tol:
            return False
    return True


@numba.njit(cache=True)
def _limit_line(u, m, M, a, tol):
    """Limiter core; returns ``(v, precondition_violated)``."""
    n = u.shape[0]
    v = u.copy()
    ok = _precondition_ok(u, m, M, a, tol)
    starts, lengths, whole = _sawtooth_runs(u, m, M)
    in_run = np.zeros(n, np.bool_)
    for k in range(starts.shape[0]):
        for t in range(lengths[k]):
            in_run[(starts[k] + t) % n] = True

    # Step II: separated extrema, weights from the original values.  A zero
    # weight sum is impossible under the precondition except for
    # roundoff-level excursions, which the final clamp removes.
    for i in range(n):
        if in_run[i]:
            continue
        left = u[i - 1]
        right = u[(i + 1) % n]
        if u[i] < m:
            wl = max(left - m, 0.0)
            wr = max(right - m, 0.0)
            s = wl + wr
            if s > 0.0:
                excess = m - u[i]
                v[i - 1] -= wl / s * excess
                v[(i + 1) % n] -= wr / s * excess
                v[i] = m
            elif m - u[i] > tol:
                ok = False
        elif u[i] > M:
            wl = max(M - left, 0.0)
            wr = max(M - right, 0.0)
            s = wl + wr
            if s > 0.0:
                excess = u[i] - M
                v[i - 1] += wl / s * excess
                v[(i + 1) % n] += wr / s * excess
                v[i] = M
            elif u[i] - M > tol:
                ok = False

    # Step III: saw-tooth blocks
    for k in range(starts.shape[0]):
        st = starts[k]
        ln = lengths[k]
        if whole:
            nb = 0
            b0 = -1
            b1 = -1
        else:
            b0 = (st - 1) % n
            b1 = (st + ln) % n
            nb = 1 if b0 == b1 else 2
        U = 0.0
        for t in range(ln):
            U += v[(st + t) % n]
        bsum = 0.0
        if nb >= 1:
            bsum += v[b0]
        if nb == 2:
            bsum += v[b1]
        U += bsum
        n0 = 0
        n1 = 0
        for t in range(ln):
            j = (st + t) % n
            if u[j] > M:
                v[j] = M
                n1 += 1
            else:
                v[j] = m
                n0 += 1
        V = n1 * M + n0 * m + bsum
        A = bsum - nb * m + n1 * (M - m)
        B = nb * M - bsum + n0 * (M - m)
        diff = V - U
        if diff > 0.0:
            if A > 0.0:
                r = diff / A
                for t in range(ln):
                    j = (st + t) % n
                    v[j] -= (v[j] - m) * r
                if nb >= 1:
                    v[b0] -= (v[b0] - m) * r
                if nb == 2:
                    v[b1] -= (v[b1] - m) * r
        elif diff < 0.0:
            if B > 0.0:
                r = -diff / B
                for t in range(ln):
                    j = (st + t) % n
                    v[j] += (M - v[j]) * r
                if nb >= 1:
                    v[b0] += (M - v[b0]) * r
                if nb == 2:
                    v[b1] += (M - v[b1]) * r
    return v, not ok


@numba.njit(cache=True)
def _clamp_redistribute(v, total, m, M):
    """Clamp to [m, M] and spread the lost mass over the available slack."""
    n = v.shape[0]
    w = np.minimum(np.maximum(v, m), M)
    d = total - w.sum()
    if d > 0.0:
        room = 0.0
        for i in range(n):
            room += M - w[i]
        if room > 0.0:
            r = min(d / room, 1.0)
            for i in range(n):
                w[i] += (M - w[i]) * r
    elif d < 0.0:
        room = 0.0
        for i in range(n):
            room += w[i] - m
        if room > 0.0:
            r = min(-d / room, 1.0)
            for i in range(n):
                w[i] -= (w[i] - m) * r
    return w


@numba.njit(cache=True)
def _limit_rows(arr, m, M, a, tol):
    """Limit every row of a 2D array; returns (out, violations, limited points)."""
    nr, n = arr.shape
    out = np.empty_like(arr)
    violations = 0
    changed = 0
    for r in range(nr):
        u = arr[r].copy()
        needs = False
        for i in range(n):
            if u[i] < m or u[i] > M:
                needs = True
                break
        if not needs:
            out[r] = u
            if not _precondition_ok(u, m, M, a, tol):
                violations += 1
            continue
        v, bad = _limit_line(u, m, M, a, tol)
        if bad:
            violations += 1
            v = _clamp_redistribute(v, u.sum(), m, M)
        # remove roundoff-level excursions left by the floating-point updates
        for i in range(n):
            if v[i] < m:
                v[i] = m
            elif v[i] > M:
                v[i] = M
            if v[i] != u[i]:
                changed += 1
        out[r] = v
    return out, violations, changed


def _tol(bounds: BpBounds) -> float:
    return PRECONDITION_RTOL * (bounds.M - bounds.m)


def classify_sets(u, bounds: BpBounds) -> SetDecomposition:
    """Split a periodic line into saw-tooth sets and the separated sets between them."""
    u = np.asarray(u, dtype=float)
    n = u.shape[0]
    starts, lengths, whole = _sawtooth_runs(u, bounds.m, bounds.M)
    if whole and starts.shape[0] == 1:
        return SetDecomposition([list(range(n))], [])
    if starts.shape[0] == 0:
        return SetDecomposition([], [list(range(n))])
    class1 = []
    ends = []
    for st, ln in zip(starts, lengths):
        b0 = (st - 1) % n
        b1 = (st + ln) % n
        class1.append([int(b0)] + [int((st + t) % n) for t in range(ln)] + [int(b1)])
        ends.append((int(b0), int(b1)))
    class2 = []
    K = len(ends)
    for k in range(K):
        a = ends[k][1]
        b = ends[(k + 1) % K][0]
        span = (b - a) % n
        class2.append([(a + t) % n for t in range(span + 1)])
    return SetDecomposition(class1, class2)


def bp_limit_line(u, bounds: BpBounds, stats: BpStats | None = None) -> np.ndarray:
    """Conservative limiting of one periodic line into ``[m, M]``.

    If the weighted-average precondition fails the result is still clamped
    into range with a best-effort conservative redistribution, and the
    violation is counted in ``stats``.
    """
    u = np.ascontiguousarray(u, dtype=float)
    if u.ndim != 1 or u.shape[0] < 3:
        raise ValueError("bp_limit_line needs a 1D line of at least 3 points")
    out, viol, changed = _limit_rows(u[None, :], bounds.m, bounds.M, float(bounds.a), _tol(bounds))
    if stats is not None:
        stats.add(BpStats(1, int(viol), int(changed)))
    return out[0]


def limit_lines(arr: np.ndarray, axis: int, bounds: BpBounds, stats: BpStats | None = None) -> np.ndarray:
    """Apply the line limiter to every line of ``arr`` along ``axis``."""
    rows = np.ascontiguousarray(np.moveaxis(arr, axis, -1), dtype=float)
    out, viol, changed = _limit_rows(rows, bounds.m, bounds.M, float(bounds.a), _tol(bounds))
    if stats is not None:
        stats.add(BpStats(rows.shape[0], int(viol), int(changed)))
    return np.moveaxis(out, -1, axis)


def _two_pass(avg: np.ndarray, kind: str, m, M, a, stats) -> np.ndarray:
    """From ``K_x K_y w`` in range, recover ``w`` in range (K = W1 with a=4, W2 with a=10)."""
    b = BpBounds(m, M, a)
    z = limit_lines(solve_along(kind, avg, 0), 0, b, stats)   # z = K_y w, x-averages in range
    return limit_lines(solve_along(kind, z, 1), 1, b, stats)


def bp_limit_2d_euler(omega_bar, m: float, M: float, stats: BpStats | None = None) -> np.ndarray:
    """Point values in ``[m, M]`` from a weighted average ``W1x W1y w`` in ``[m, M]``.

    Accepts the average as an array or Field2D; returns the limited point
    values as an array.
    """
    avg = omega_bar.values if isinstance(omega_bar, Field2D) else np.asarray(omega_bar, dtype=float)
    return _two_pass(avg, W1, m, M, 4.0, stats)


def bp_limit_2d_ns(omega_tilde_bar, m: float, M: float, stats: BpStats | None = None) -> np.ndarray:
    """Point values in ``[m, M]`` from ``W2 W1 w`` in ``[m, M]``.

    First recovers and limits ``W2 w`` with ``a = 4``, then recovers and
    limits ``w`` with ``a = 10``.
    """
    avg = omega_tilde_bar.values if isinstance(omega_tilde_bar, Field2D) else np.asarray(omega_tilde_bar, dtype=float)
    tilde = _two_pass(avg, W1, m, M, 4.0, stats)
    return _two_pass(tilde, W2, m, M, 10.0, stats)
