"""Anisotropic dyadic lattice: points, cubes, neighborhoods and approximation rates.

A dyadic index ``(j, k)`` names the point ``x_{j,k} = 2^-j o k`` and the cube
``C_{j,k} = x_{j,k} * (2^-j o [0,1)^3)``. Integer bookkeeping is exact; only
distances are evaluated in floating point (or exactly, for Fraction input).
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Iterable, NamedTuple

import numpy as np
from scipy.optimize import minimize

from . import group
from .group import GPoint

# Printed neighbor rows: (kp, kq) -> inclusive kr range.
_XI_ROWS = [
    ((0, 0), (-1, 1)),
    ((1, 0), (-3, 1)),
    ((1, 1), (-1, 1)),
    ((0, 1), (-1, 3)),
    ((-1, 1), (1, 3)),
    ((-1, 0), (-1, 3)),
    ((-1, -1), (-1, 1)),
    ((0, -1), (-3, 1)),
    ((1, -1), (-3, -1)),
]

XI_PRINTED: tuple[tuple[int, int, int], ...] = tuple(
    (kp, kq, kr) for (kp, kq), (lo, hi) in _XI_ROWS for kr in range(lo, hi + 1))

# The printed rows list the k' whose right translate C_0 * k' touches C_0.
# Cubes are left translates k' * C_0, whose touching set is the reflection
# kr -> -kr of the printed rows; that set is what the neighborhood uses.
XI: tuple[tuple[int, int, int], ...] = tuple((kp, kq, -kr) for kp, kq, kr in XI_PRINTED)


class DyadicIndex(NamedTuple):
    j: int
    k: tuple[int, int, int]


def _idx(idx) -> DyadicIndex:
    j, k = idx
    return DyadicIndex(int(j), tuple(int(c) for c in k))


def kmul(a, b) -> tuple[int, int, int]:
    """Group product of integer triples (closed on Z^3)."""
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2] + 2 * (a[1] * b[0] - a[0] * b[1]))


def kinv(a) -> tuple[int, int, int]:
    return (-a[0], -a[1], -a[2])


def dyadic_point(idx, exact: bool = False) -> GPoint:
    j, (kp, kq, kr) = _idx(idx)
    if exact:
        s = Fraction(2) ** -j
        return GPoint(kp * s, kq * s, kr * s * s)
    return GPoint(math.ldexp(kp, -j), math.ldexp(kq, -j), math.ldexp(kr, -2 * j))


def dyadic_points_array(j: int, k: np.ndarray) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    return k * np.array([2.0 ** -j, 2.0 ** -j, 4.0 ** -j])


def locate(x, j: int) -> DyadicIndex:
    """Index of the unique cube C_{j,k} containing ``x``.

    Exact for int/Fraction coordinates.
    """
    p, q, r = x
    if all(isinstance(c, (int, Fraction)) for c in (p, q, r)):
        s = Fraction(2) ** j
        P, Qc, R = Fraction(p) * s, Fraction(q) * s, Fraction(r) * s * s
    else:
        P, Qc, R = math.ldexp(float(p), j), math.ldexp(float(q), j), math.ldexp(float(r), 2 * j)
    kp, kq = math.floor(P), math.floor(Qc)
    kr = math.floor(R + 2 * (kp * Qc - kq * P))
    return DyadicIndex(j, (kp, kq, kr))


def locate_array(x: np.ndarray, j: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    P = np.ldexp(x[..., 0], j)
    Qc = np.ldexp(x[..., 1], j)
    R = np.ldexp(x[..., 2], 2 * j)
    kp, kq = np.floor(P), np.floor(Qc)
    kr = np.floor(R + 2 * (kp * Qc - kq * P))
    return np.stack([kp, kq, kr], axis=-1).astype(np.int64)


def in_cube(x, idx) -> bool:
    """Exact-convention membership test of ``x`` in C_{j,k}."""
    j, k = _idx(idx)
    u = group.dilate(2.0 ** j if not _is_exact(x) else Fraction(2) ** j,
                     group.mul(group.inv(dyadic_point(idx, exact=_is_exact(x))), x))
    return all(0 <= c < 1 for c in u)


def _is_exact(x) -> bool:
    return all(isinstance(c, (int, Fraction)) for c in x)


def neighborhood(idx, table: Iterable = XI) -> list[DyadicIndex]:
    """The 35 indices whose cubes make up the neighborhood of C_{j,k}."""
    j, k = _idx(idx)
    return [DyadicIndex(j, kmul(k, kp)) for kp in table]


def cube_diameter(j: int) -> float:
    return group.CUBE_DIAMETER_UNIT * 2.0 ** -j


def cube_vertices(idx=(0, (0, 0, 0))) -> np.ndarray:
    corners = np.array(list(itertools.product((0.0, 1.0), repeat=3)))
    j, k = _idx(idx)
    base = np.array(dyadic_point((j, k)), dtype=float)
    return group.mul_array(base, group.dilate_array(2.0 ** -j, corners))


# ---------------------------------------------------------------- touching oracle


def cubes_touch(k, side: str = "left") -> bool:
    """Exact test whether the closed unit cube translated by ``k`` meets closed C_0.

    ``side='left'`` uses k * [0,1]^3 (the cube C_{0,k}); ``'right'`` uses
    [0,1]^3 * k. The r-offset is bilinear in (u_p, u_q), so the extremes sit at
    the corners of the admissible box.
    """
    kp, kq, kr = k
    up = (max(0, -kp), min(1, 1 - kp))
    uq = (max(0, -kq), min(1, 1 - kq))
    if up[0] > up[1] or uq[0] > uq[1]:
        return False
    sgn = 1 if side == "left" else -1
    vals = [kr + sgn * 2 * (kq * a - kp * b) for a in up for b in uq]
    return min(vals) <= 1 and max(vals) + 1 >= 0


def touching_scan(side: str = "left", window: int = 3, r_window: int = 12) -> set:
    return {k for k in itertools.product(range(-window, window + 1),
                                         range(-window, window + 1),
                                         range(-r_window, r_window + 1))
            if cubes_touch(k, side)}


# ---------------------------------------------------------------- ball overlap


def _in_overlap_table(k) -> bool:
    kp, kq, kr = k
    s = kp * kp + kq * kq
    return (s == 0 and abs(kr) <= 1) or (1 <= s <= 2 and abs(kr) <= 2)


def ball_overlap_set(idx=(0, (0, 0, 0))) -> list[DyadicIndex]:
    """Indices k*k' with B(x_{j,k*k'}, 2^-j) meeting B(x_{j,k}, 2^-j)."""
    j, k = _idx(idx)
    cand = itertools.product(range(-1, 2), range(-1, 2), range(-2, 3))
    return [DyadicIndex(j, kmul(k, kp)) for kp in cand if _in_overlap_table(kp)]


def ball_minimax(k) -> float:
    """min over z of max(||z||, ||k^-1 z||); open unit balls meet iff < 1."""
    kin = -np.asarray(k, dtype=float)

    def f(z):
        return max(group.gauge_norm_array(z), group.gauge_norm_array(group.mul_array(kin, z)))

    best = np.inf
    for z0 in (np.asarray(k, float) / 2, np.zeros(3)):
        res = minimize(f, z0, method="Nelder-Mead",
                       options=dict(xatol=1e-11, fatol=1e-12, maxiter=3000))
        best = min(best, float(res.fun))
    return best


def ball_overlap_scan(window=(3, 3, 8), tol: float = 1e-9, grid: int = 41) -> set:
    """Exhaustive geometric oracle for overlapping unit balls at scale 0.

    Three stages: an analytic exclusion (|z_p|, |z_p - k_p| < 1 forces
    |k_p| <= 1, likewise k_q, and then |k_r| <= 5), a grid witness inside
    B(0,1) that certifies overlap, and a minimax solve for what is left.
    """
    wp, wq, wr = window
    ax = np.linspace(-1, 1, grid)
    Z = np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), -1).reshape(-1, 3)
    Z = Z[group.gauge_norm_array(Z) < 1]
    found = set()
    for k in itertools.product(range(-wp, wp + 1), range(-wq, wq + 1), range(-wr, wr + 1)):
        if abs(k[0]) > 1 or abs(k[1]) > 1 or abs(k[2]) > 5:
            continue
        w = group.gauge_norm_array(group.mul_array(-np.asarray(k, float), Z))
        if np.any(w < 1):
            found.add(k)
        elif ball_minimax(k) < 1 - tol:
            found.add(k)
    return found


# ---------------------------------------------------------------- irreducibility and counts


def irreducible(idx) -> DyadicIndex:
    j, (kp, kq, kr) = _idx(idx)
    if j < 0:
        raise ValueError("irreducible expects j >= 0")
    if kp == kq == kr == 0:
        return DyadicIndex(0, (0, 0, 0))
    # strip common factors in one go: t = min(v2(kp), v2(kq), v2(kr)//2, j)
    t = j
    for c, w in ((kp, 1), (kq, 1), (kr, 2)):
        if c:
            t = min(t, ((c & -c).bit_length() - 1) // w)
    return DyadicIndex(j - t, (kp >> t, kq >> t, kr >> (2 * t)))


def irreducible_depth_array(j: int, k: np.ndarray) -> np.ndarray:
    """Vectorised depth J of the irreducible version of each k at scale j."""
    k = np.asarray(k, dtype=np.int64)
    J = np.full(k.shape[:-1], j, dtype=np.int64)
    kp, kq, kr = k[..., 0].copy(), k[..., 1].copy(), k[..., 2].copy()
    active = J > 0
    while np.any(active):
        red = active & (kp % 2 == 0) & (kq % 2 == 0) & (kr % 4 == 0)
        if not np.any(red):
            break
        kp[red] //= 2
        kq[red] //= 2
        kr[red] //= 4
        J[red] -= 1
        active = red & (J > 0)
    return J


def count_L0(j: int) -> int:
    if j < 0:
        raise ValueError("j must be >= 0")
    return 1 << (4 * j)


def count_irreducible(J: int) -> int:
    if J < 0:
        raise ValueError("J must be >= 0")
    return 1 if J == 0 else 15 << (4 * (J - 1))


def L0_indices(j: int) -> np.ndarray:
    """All k with x_{j,k} in [0,1)^3, shape (2^{4j}, 3)."""
    a = np.arange(1 << j)
    b = np.arange(1 << (2 * j))
    g = np.meshgrid(a, a, b, indexing="ij")
    return np.stack(g, -1).reshape(-1, 3)


# ---------------------------------------------------------------- approximation rates


def _covering_constant(grid: int = 25) -> float:
    # max over u in the closed unit cube of min over nearby lattice points
    ax = np.linspace(0, 1, grid)
    U = np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), -1).reshape(-1, 3)
    ks = np.array(list(itertools.product(range(-1, 3), range(-1, 3), range(-4, 6))), float)
    d = np.full(len(U), np.inf)
    for k in ks:
        d = np.minimum(d, group.gauge_norm_array(group.mul_array(-k, U)))
    return float(d.max())


COVERING_CONSTANT = 2 ** -0.25  # max-min grid estimate, see _covering_constant


def rate_window(x, j: int, window: int = 3):
    """Indices k within the search window of locate(x, j)."""
    if window < 1:
        raise ValueError("window must be >= 1")
    _, (kp, kq, kr) = locate(x, j)
    for dp in range(-window, window + 1):
        for dq in range(-window, window + 1):
            for dr in range(-2 * window, 2 * window + 1):
                yield (kp + dp, kq + dq, kr + dr)


def _offsets(window: int) -> np.ndarray:
    a = np.arange(-window, window + 1)
    b = np.arange(-2 * window, 2 * window + 1)
    return np.stack(np.meshgrid(a, a, b, indexing="ij"), -1).reshape(-1, 3)


class RateEstimate(NamedTuple):
    scales: tuple[int, ...]
    min_dist: tuple[float, ...]     # log2 of m_j when exact input underflows
    log2_min_dist: tuple[float, ...]
    depth: tuple[int, ...]
    rate: float


def approx_rate(x, scales: Iterable[int], window: int = 3, C: float | None = None) -> RateEstimate:
    """Dyadic approximation rate of ``x`` over the given scales.

    ``m_j`` is the smallest distance from ``x`` to a dyadic point of scale
    ``j`` in a window around ``locate(x, j)``; the rate is the largest
    ``-log2(m_j / C) / j``. Fraction input is handled exactly.
    """
    scales = tuple(int(j) for j in scales)
    if not scales:
        raise ValueError("scales must be non-empty")
    if any(b <= a for a, b in zip(scales, scales[1:])):
        raise ValueError("scales must be increasing")
    if window < 1:
        raise ValueError("window must be >= 1")
    C = COVERING_CONSTANT if C is None else C
    exact = _is_exact(x)
    mins, logs, depths = [], [], []
    for j in scales:
        if exact:
            best, bk = None, None
            for k in rate_window(x, j, window):
                y = group.mul(group.inv(dyadic_point((j, k), exact=True)), x)
                n4 = (y.p * y.p + y.q * y.q) ** 2 + y.r * y.r
                if best is None or n4 < best:
                    best, bk = n4, k
            lg = group.log2_gauge_norm(group.mul(group.inv(dyadic_point((j, bk), exact=True)), x))
        else:
            ks = np.asarray(locate(x, j).k, dtype=np.int64) + _offsets(window)
            d = group.dist_array(dyadic_points_array(j, ks), np.asarray(x, float))
            i = int(np.argmin(d))
            bk = tuple(int(c) for c in ks[i])
            lg = math.log2(d[i]) if d[i] > 0 else -math.inf
        logs.append(lg)
        mins.append(2.0 ** lg if lg > -1000 else 0.0)
        depths.append(irreducible((j, bk)).j)
    rates = [math.inf if lg == -math.inf else -(lg - math.log2(C)) / j
             for lg, j in zip(logs, scales) if j > 0]
    rate = max(rates) if rates else math.nan
    return RateEstimate(scales, tuple(mins), tuple(logs), tuple(depths), rate)


def liouville_exponents(xi: float, depth: int, a1: int = 2) -> list[int]:
    """Exponents a_1 < a_2 < ... with a_{m+1} = max(ceil(xi a_m), a_m + 2)."""
    a = [a1]
    for _ in range(depth - 1):
        a.append(max(math.ceil(xi * a[-1]), a[-1] + 2))
    return a


def point_with_rate(xi: float, depth: int = 6, a1: int = 2) -> GPoint:
    """Exact point on the p-axis whose dyadic approximation rate is ``xi``.

    ``p = sum_m 2^-a_m``; for ``xi = inf`` the dyadic point (2^-a1, 0, 0).
    """
    if not xi >= 1:
        raise ValueError(f"xi must be >= 1, got {xi}")
    if depth < 2:
        raise ValueError("depth must be >= 2")
    if math.isinf(xi):
        return GPoint(Fraction(1, 1 << a1), Fraction(0), Fraction(0))
    p = sum((Fraction(1, 1 << a) for a in liouville_exponents(xi, depth, a1)), Fraction(0))
    return GPoint(p, Fraction(0), Fraction(0))


def probe_depth(xi: float, j_max: int, a1: int = 2) -> int:
    """Smallest construction depth whose last exponent exceeds 2 j_max.

    Beyond that depth the truncated point and its limit agree to well below
    the resolution of every scale up to ``j_max``.
    """
    if math.isinf(xi):
        return 2
    d = 2
    while liouville_exponents(xi, d, a1)[-1] <= 2 * j_max:
        d += 1
    return d


def default_rate_scales(j_max: int) -> range:
    """Tail scales [ceil(0.6 j_max), j_max] used for generic points."""
    return range(math.ceil(0.6 * j_max), j_max + 1)


def liouville_rate_scales(xi: float, depth: int, a1: int = 2) -> list[int]:
    """Scales a_m of the upper half of the construction, last one dropped.

    The final exponent is where the truncated sum stops, so its rate is an
    artefact of truncation rather than of the limit point.
    """
    a = liouville_exponents(xi, depth, a1)
    return a[max(0, len(a) // 2 - 1):-1]


def rate_set_dimension(xi: float) -> float:
    if not xi >= 1:
        raise ValueError(f"xi must be >= 1, got {xi}")
    return 0.0 if math.isinf(xi) else group.Q / xi
