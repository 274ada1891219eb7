"""Wavelet leaders: largest coefficient over finer cubes inside a neighborhood.

``D_j(x) = sup{|d_{j',k'}| : j' >= j, C_{j',k'} inside Lambda_j(x)}``.

Two evaluation modes:

* ``exact``: for depth monotone fields (value depends on k through the
  irreducible depth J only and is nonincreasing in j and J). Cubes sharing a
  base point are nested, so a dyadic point contributes at the first scale
  where its cube fits; candidates are visited by increasing depth and the
  search stops once the depth bound cannot beat the running maximum.
* ``windowed``: brute enumeration of every cube for ``j <= j' <= j + delta``.
  This is a lower bound for ``D_j``.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from . import lattice
from .synthesis import CoefficientField

MAX_DELTA = 8
EXACT_DEPTH_CAP = 3

# (a, b) -> inclusive c range of the neighbor table column
_COLUMNS: dict[tuple[int, int], tuple[int, int]] = {}
for _a, _b, _c in lattice.XI:
    lo, hi = _COLUMNS.get((_a, _b), (_c, _c))
    _COLUMNS[(_a, _b)] = (min(lo, _c), max(hi, _c))


def contained(j: int, k, jp: int, y) -> bool:
    """Is the cube C_{jp, y} inside Lambda_{j, k}? Exact integer test, jp >= j.

    In units of scale jp the small cube has integer base y and the scale-j
    cubes have side L = 2^{jp-j}. The small cube lies in one (kp, kq) column;
    its r-offset relative to that column sweeps a single interval, hence a
    contiguous run of scale-j cubes.
    """
    L = 1 << (jp - j)
    y0, y1, y2 = (int(c) for c in y)
    kp, kq = y0 // L, y1 // L
    a, b = kp - k[0], kq - k[1]
    col = _COLUMNS.get((a, b))
    if col is None:
        return False
    beta, alpha = y0 - L * kp, y1 - L * kq
    w0 = y2 + 2 * L * (kp * y1 - kq * y0)
    L2 = L * L
    kr_min = (w0 - 2 * beta) // L2
    kr_max = -(-(w0 + 1 + 2 * alpha) // L2) - 1
    shift = k[2] + 2 * (k[1] * a - k[0] * b)
    return shift + col[0] <= kr_min and kr_max <= shift + col[1]


def contained_array(j: int, k, jp: int, y: np.ndarray) -> np.ndarray:
    """Vectorised :func:`contained` on int64 arrays (requires jp <= 30)."""
    if jp > 30:
        raise OverflowError("vectorised containment limited to jp <= 30")
    y = np.asarray(y, dtype=np.int64)
    L = np.int64(1 << (jp - j))
    kp, kq = y[..., 0] // L, y[..., 1] // L
    a, b = kp - k[0], kq - k[1]
    lo = np.full(a.shape, np.iinfo(np.int64).max // 4, dtype=np.int64)
    hi = np.full(a.shape, np.iinfo(np.int64).min // 4, dtype=np.int64)
    for (ca, cb), (clo, chi) in _COLUMNS.items():
        m = (a == ca) & (b == cb)
        lo[m] = clo
        hi[m] = chi
    beta, alpha = y[..., 0] - L * kp, y[..., 1] - L * kq
    w0 = y[..., 2] + 2 * L * (kp * y[..., 1] - kq * y[..., 0])
    L2 = L * L
    kr_min = np.floor_divide(w0 - 2 * beta, L2)
    kr_max = -np.floor_divide(-(w0 + 1 + 2 * alpha), L2) - 1
    shift = k[2] + 2 * (k[1] * a - k[0] * b)
    return (shift + lo <= kr_min) & (kr_max <= shift + hi)


class LeaderResult(NamedTuple):
    value: float
    argmax: tuple[int, tuple[int, int, int]] | None
    complete: bool


def _g(fld: CoefficientField, j: int, J: int) -> float:
    if not fld.in_range(j):
        return 0.0
    return abs(float(fld.rule.depth_value(j, J)))


def _bbox(j: int, k, J: int) -> tuple[np.ndarray, np.ndarray]:
    """Integer index box at scale J holding every point of Lambda_{j,k}."""
    corners = [(a, b, c) for a in (0, 1) for b in (0, 1) for c in (0, 1)]
    lo = [None] * 3
    hi = [None] * 3
    for kk in lattice.neighborhood((j, k)):
        for u in corners:
            v = lattice.kmul(kk.k, u)  # vertex at scale j, integer units
            for i, w in enumerate((1 << J, 1 << J, 1 << (2 * J))):
                den = (1 << j) if i < 2 else (1 << (2 * j))
                val = Fraction(v[i] * w, den)
                lo[i] = val if lo[i] is None else min(lo[i], val)
                hi[i] = val if hi[i] is None else max(hi[i], val)
    return (np.array([math.floor(c) for c in lo]), np.array([math.ceil(c) for c in hi]))


def leader_exact(fld: CoefficientField, x, j: int, j_cap: int | None = None) -> LeaderResult:
    if not fld.depth_monotone:
        raise ValueError("exact leaders need a depth monotone field")
    k = lattice.locate(x, j).k
    j_s = max(j, fld.j_min)
    j_top = fld.j_max if fld.j_max is not None else math.inf
    if j_cap is not None:
        j_top = min(j_top, j_cap)
    best, arg = 0.0, None
    complete = True
    if j_s <= j_top:
        base = np.array([nb.k for nb in lattice.neighborhood((j, k))], dtype=object)
        for kk in base:
            kk = tuple(int(c) for c in kk)
            if not fld.in_support(j, np.array([kk], dtype=np.int64))[0]:
                continue
            J = lattice.irreducible((j, kk)).j
            v = _g(fld, j_s, J)
            if v > best:
                best, arg = v, (j_s, _rescale(kk, j, j_s))
        J = j + 1
        while True:
            jl = max(j_s, J)
            if jl > j_top or _g(fld, jl, J) <= best:
                break
            if J > j_s + EXACT_DEPTH_CAP:
                complete = False
                break
            lo, hi = _bbox(j, k, J)
            axes = [np.arange(a, b + 1, dtype=np.int64) for a, b in zip(lo, hi)]
            m = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, 3)
            m = m[lattice.irreducible_depth_array(J, m) == J]
            m = m[fld.in_support(J, m)]
            m = m[_in_lambda(m, J, j, k)]
            for y in m.tolist():
                jp = jl
                while jp <= min(j_top, jl + 32) and _g(fld, jp, J) > best:
                    if contained(j, k, jp, _rescale(y, J, jp)):
                        best, arg = _g(fld, jp, J), (jp, _rescale(y, J, jp))
                        break
                    jp += 1
            J += 1
    for (eps, jp, kk), v in fld.overlay.items():
        if jp >= j and jp <= j_top and abs(v) > best and contained(j, k, jp, kk):
            best, arg = abs(float(v)), (jp, kk)
    return LeaderResult(best, arg, complete)


def _rescale(y, J: int, jp: int) -> tuple[int, int, int]:
    d = jp - J
    return (int(y[0]) << d, int(y[1]) << d, int(y[2]) << (2 * d))


def _in_lambda(m: np.ndarray, J: int, j: int, k) -> np.ndarray:
    """Scale-J points lying in Lambda_{j,k} (their scale-j cube is a neighbor)."""
    if len(m) == 0:
        return np.zeros(0, dtype=bool)
    d = J - j
    P = m[:, 0] >> d
    Qc = m[:, 1] >> d
    # kr = floor((y_r + 2 L (kp y_q - kq y_p)) / L^2) with L = 2^d
    L = np.int64(1 << d)
    kr = np.floor_divide(m[:, 2] + 2 * L * (P * m[:, 1] - Qc * m[:, 0]), L * L)
    allowed = {nb.k for nb in lattice.neighborhood((j, k))}
    return np.array([(int(a), int(b), int(c)) in allowed for a, b, c in zip(P, Qc, kr)], dtype=bool)


def subcubes(j: int, k, jp: int) -> np.ndarray:
    """Every scale-jp index whose cube lies in Lambda_{j,k}."""
    L = 1 << (jp - j)
    i = np.arange(L, dtype=np.int64)
    m = np.arange(L * L, dtype=np.int64)
    I, Lq, M = np.meshgrid(i, i, m, indexing="ij")
    out = []
    for nb in lattice.neighborhood((j, k)):
        kp, kq, kr = nb.k
        yp = L * kp + I
        yq = L * kq + Lq
        yr = L * L * kr - 2 * L * (kp * yq - kq * yp) + M
        y = np.stack([yp, yq, yr], -1).reshape(-1, 3)
        out.append(y[contained_array(j, k, jp, y)])
    return np.concatenate(out)


def leader_windowed(fld: CoefficientField, x, j: int, delta: int = 4,
                    j_cap: int | None = None) -> LeaderResult:
    if delta > MAX_DELTA:
        raise ValueError(f"window delta {delta} exceeds {MAX_DELTA} (cost grows as 2^(4 delta))")
    if delta < 0:
        raise ValueError("delta must be >= 0")
    k = lattice.locate(x, j).k
    best, arg = 0.0, None
    top = j + delta if j_cap is None else min(j + delta, j_cap)
    for jp in range(j, top + 1):
        if not fld.in_range(jp) and not any(key[1] == jp for key in fld.overlay):
            continue
        y = subcubes(j, k, jp)
        v = fld.abs_max(jp, y)
        if v.size and v.max() > best:
            i = int(np.argmax(v))
            best, arg = float(v[i]), (jp, tuple(int(c) for c in y[i]))
    return LeaderResult(best, arg, True)


def leader(fld: CoefficientField, x, j: int, mode: str = "auto", delta: int = 4,
           j_cap: int | None = None) -> float:
    """D_j(f, x) in the requested mode ('exact', 'windowed' or 'auto')."""
    if mode == "auto":
        mode = "exact" if fld.depth_monotone else "windowed"
    if mode == "exact":
        return leader_exact(fld, x, j, j_cap).value
    if mode == "windowed":
        return leader_windowed(fld, x, j, delta, j_cap).value
    raise ValueError(f"unknown leader mode {mode!r}")
