"""Regularity and spectrum estimation from coefficient fields."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import group, lattice
from .leaders import leader
from .synthesis import BesovParams, BesovSaturatingRule, CoefficientField, besov_seq_norm, log2_scale_sup

DEFAULT_WINDOW = (4, 16)
LOG_TIE = 1e-12


@dataclass(frozen=True)
class ExponentEstimate:
    """Exponent estimate with the per-scale samples it was computed from.

    ``log2_mag[i]`` is log2 of the per-scale magnitude at ``js[i]``; the
    statistic works on ``Y_j = -log2_mag - beta log2 j`` (``beta = 0`` in raw
    mode) and is the smallest chord slope ``(Y_j - Y_{j0}) / (j - j0)`` over
    the second half of the window, ``j0`` being the first scale.
    """

    value: float
    js: tuple[int, ...]
    log2_mag: tuple[float, ...]
    residual: float
    mode: str
    beta: float = 0.0

    def recompute(self) -> float:
        return chord_liminf(np.array(self.js), _corrected(self.js, self.log2_mag, self.beta))


def _corrected(js, log2_mag, beta):
    js = np.asarray(js, dtype=float)
    return -np.asarray(log2_mag, dtype=float) - beta * np.log2(js)


def chord_liminf(js: np.ndarray, Y: np.ndarray) -> float:
    """min over the upper half of the window of (Y_j - Y_{j0}) / (j - j0)."""
    js = np.asarray(js, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if np.all(np.isinf(Y)) and np.all(Y > 0):
        return math.inf
    j0 = js[0]
    mid = j0 + (js[-1] - j0) / 2
    tail = js >= mid
    if np.isinf(Y[0]):
        return math.inf if Y[0] > 0 else -math.inf
    return float(np.min((Y[tail] - Y[0]) / (js[tail] - j0)))


def _fit_residual(js, Y) -> float:
    js = np.asarray(js, dtype=float)
    Y = np.asarray(Y, dtype=float)
    ok = np.isfinite(Y)
    if ok.sum() < 3:
        return 0.0
    A = np.vstack([js[ok], np.ones(ok.sum())]).T
    coef, *_ = np.linalg.lstsq(A, Y[ok], rcond=None)
    return float(np.sqrt(np.mean((A @ coef - Y[ok]) ** 2)))


def _field_beta(fld: CoefficientField) -> float:
    rule = fld.rule
    while hasattr(rule, "base"):
        rule = rule.base
    return rule.params.beta if isinstance(rule, BesovSaturatingRule) else 0.0


def _estimate(js, logs, mode, beta) -> ExponentEstimate:
    if mode not in ("raw", "log"):
        raise ValueError(f"mode must be 'raw' or 'log', got {mode!r}")
    b = beta if mode == "log" else 0.0
    Y = _corrected(js, logs, b)
    return ExponentEstimate(chord_liminf(np.array(js), Y), tuple(int(j) for j in js),
                            tuple(float(v) for v in logs), _fit_residual(js, Y), mode, b)


def _window(j_window) -> list[int]:
    j0, j1 = j_window
    js = list(range(int(j0), int(j1) + 1))
    if len(js) < 4:
        raise ValueError("need at least 4 scales")
    return js


# ---------------------------------------------------------------- exponents


def scale_sup_log2(fld: CoefficientField, j: int) -> float:
    """log2 sup over (eps, k) of |d_{j,k}|, by depth classes or enumeration (j <= 6)."""
    if fld.depth_monotone:
        return log2_scale_sup(fld, j)
    if fld.support != "L0" or j > 6:
        raise NotImplementedError("per-scale sup needs a depth monotone rule or j <= 6 on the unit cube")
    v = fld.abs_max(j, lattice.L0_indices(j))
    m = float(v.max()) if v.size else 0.0
    return math.log2(m) if m > 0 else -math.inf


def global_exponent(fld: CoefficientField, j_window=DEFAULT_WINDOW, mode: str = "raw",
                    beta: float | None = None) -> ExponentEstimate:
    js = _window(j_window)
    logs = [scale_sup_log2(fld, j) for j in js]
    return _estimate(js, logs, mode, _field_beta(fld) if beta is None else beta)


def pointwise_exponent(fld: CoefficientField, x, j_window=DEFAULT_WINDOW, mode: str = "raw",
                       leader_mode: str = "auto", delta: int = 4,
                       beta: float | None = None) -> ExponentEstimate:
    js = _window(j_window)
    logs = []
    for j in js:
        d = leader(fld, x, j, mode=leader_mode, delta=delta)
        logs.append(math.log2(d) if d > 0 else -math.inf)
    return _estimate(js, logs, mode, _field_beta(fld) if beta is None else beta)


def uniform_precondition(fld: CoefficientField, j_window=DEFAULT_WINDOW, slope_tol: float = 0.1) -> dict:
    """Check sup_k |d_{j,k}| <= C 2^{-j sigma} at sigma = global exponent / 2.

    The converse pointwise bound assumes the function is globally C^sigma
    for some sigma > 0; this is the coefficient-side test of that at half
    the measured global exponent. ``holds`` is true when log2 of
    2^{j sigma} sup_k |d_{j,k}| has least-squares slope <= ``slope_tol``.
    """
    js = _window(j_window)
    logs = np.array([scale_sup_log2(fld, j) for j in js])
    h = chord_liminf(np.array(js), -logs)
    if not np.any(np.isfinite(logs)):
        return {"sigma": math.inf, "holds": True, "slope": -math.inf, "positive": True}
    sigma = h / 2 if math.isfinite(h) else 0.0
    ok = np.isfinite(logs)
    y = logs[ok] + sigma * np.array(js)[ok]
    slope = float(np.polyfit(np.array(js)[ok], y, 1)[0]) if ok.sum() >= 2 else 0.0
    return {"sigma": sigma, "holds": bool(slope <= slope_tol), "slope": slope,
            "positive": bool(sigma > 0)}


# ---------------------------------------------------------------- two-regime check


def _sites_near(x0, j: int, rho: float) -> np.ndarray:
    """Indices k with ||2^j o (x_{j,k}^{-1} x0)|| < rho (superset in r, exact filter after)."""
    P = math.ldexp(float(x0[0]), j)
    Qc = math.ldexp(float(x0[1]), j)
    R = math.ldexp(float(x0[2]), 2 * j)
    kp = np.arange(math.floor(P - rho), math.ceil(P + rho) + 1)
    kq = np.arange(math.floor(Qc - rho), math.ceil(Qc + rho) + 1)
    KP, KQ = np.meshgrid(kp, kq, indexing="ij")
    c = R + 2 * (KP * Qc - KQ * P)
    r2 = int(math.ceil(rho * rho))
    off = np.arange(-r2 - 1, r2 + 2)
    KR = np.floor(c)[..., None] + off
    k = np.stack(np.broadcast_arrays(KP[..., None], KQ[..., None], KR), -1).reshape(-1, 3)
    return k.astype(np.int64)


def two_regime_check(fld: CoefficientField, x0, s: float, R: float, j_window=DEFAULT_WINDOW,
                     rho: float = 8.0, beta: float = 0.0, slope_tol: float = 0.1) -> dict:
    """Smallest C with |d_{j,k}| <= C j^-beta 2^{-js} (1 + 2^j delta)^s near x0.

    Sites are scanned with delta(x_{j,k}, x0) < min(R, rho 2^-j). ``holds`` is
    true when the per-scale constants do not grow: the least-squares slope of
    log2 C_j against j stays below ``slope_tol``.
    """
    if not R > 0:
        raise ValueError("R must be positive")
    js = _window(j_window)
    x0a = np.asarray(x0, dtype=float)
    logC = []
    for j in js:
        k = _sites_near(x0, j, rho)
        d = group.dist_array(lattice.dyadic_points_array(j, k), x0a)
        keep = d < min(R, rho * 2.0 ** -j)
        k, d = k[keep], d[keep]
        v = fld.abs_max(j, k)
        nz = v > 0
        if not np.any(nz):
            logC.append(-math.inf)
            continue
        lc = (np.log2(v[nz]) + j * s + beta * math.log2(j)
              - s * np.log2(1 + 2.0 ** j * d[nz]))
        logC.append(float(lc.max()))
    logC = np.array(logC)
    ok = np.isfinite(logC)
    slope = float(np.polyfit(np.array(js)[ok], logC[ok], 1)[0]) if ok.sum() >= 2 else 0.0
    C = float(2.0 ** logC[ok].max()) if ok.any() else 0.0
    return {"holds": bool(slope <= slope_tol), "C": C, "slope": slope,
            "js": js, "log2_C": logC.tolist()}


# ---------------------------------------------------------------- counting


def coefficient_counting(fld: CoefficientField, j: int, h: float, C0: float = 1.0,
                         beta: float = 0.0) -> int:
    """#{k : max_eps |d_{j,k}| >= C0 2^{-jh} j^{-beta}} on the unit-cube support.

    Ties are counted (comparison in the log domain with a 1e-12 slack).
    """
    if fld.support != "L0":
        raise NotImplementedError("counting needs the unit-cube support")
    if j < 0:
        return 0
    log_thr = math.log2(C0) - j * h - (beta * math.log2(j) if j > 0 else 0.0)
    if fld.depth_monotone and not fld.overlay:
        if not fld.in_range(j):
            return 0
        J = np.arange(j + 1)
        lv = _log2_depth_values(fld, j, J)
        hit = lv >= log_thr - LOG_TIE
        return int(sum(lattice.count_irreducible(int(a)) for a in J[hit]))
    if j > 6:
        raise NotImplementedError("brute counting limited to j <= 6")
    v = fld.abs_max(j, lattice.L0_indices(j))
    with np.errstate(divide="ignore"):
        lv = np.log2(v)
    return int(np.count_nonzero(lv >= log_thr - LOG_TIE))


def _log2_depth_values(fld, j, J):
    rule = fld.rule
    if isinstance(rule, BesovSaturatingRule) and j >= 1:
        return np.array([rule.log2_depth_value(j, int(a)) for a in J])
    v = np.abs(np.asarray(rule.depth_value(j, J), dtype=float))
    with np.errstate(divide="ignore"):
        return np.log2(v)


def besov_spectrum_bound(h: float, params: BesovParams) -> float:
    if h < params.t:
        return -math.inf
    return min(params.Q, params.p * (h - params.t))


def embedding_constant(fld: CoefficientField, params: BesovParams, js) -> float:
    """sup over the window of 2^{j(s-Q/p)} |d_{j,k}| (empirical embedding constant)."""
    logs = [scale_sup_log2(fld, j) + j * params.t for j in js]
    m = max(logs)
    return 2.0 ** m if math.isfinite(m) else 0.0


@dataclass(frozen=True)
class SpectrumEstimate:
    h: np.ndarray
    d_hat: np.ndarray
    bound: np.ndarray
    params: BesovParams
    C0: float
    js: tuple[int, ...]
    counts: np.ndarray            # log-corrected threshold, shape (len(h), len(js))
    raw_counts: np.ndarray        # raw threshold C0 2^{-jh}
    count_constant: float
    count_bound_holds: bool
    extra: dict = field(default_factory=dict)


def _count_slope(js, counts) -> float:
    """OLS slope of log2 counts over the trailing run of non-zero counts.

    Counts that vanish at the finest scale give -inf: the set of large
    coefficients dies out, whatever happened at coarse scales.
    """
    counts = np.asarray(counts, dtype=float)
    if counts[-1] <= 0:
        return -math.inf
    zero = np.flatnonzero(counts <= 0)
    start = zero[-1] + 1 if zero.size else 0
    x = np.asarray(js, dtype=float)[start:]
    if len(x) == 1:
        return 0.0
    return float(np.polyfit(x, np.log2(counts[start:]), 1)[0])


def counting_spectrum(fld: CoefficientField, params: BesovParams, h_grid,
                      j_window=(2, 14), C0: float | None = None,
                      log_correction: bool = True) -> SpectrumEstimate:
    """Counting dimensions d(h) = slope of log2 #N(j, h) against j.

    The threshold is C0 2^{-jh}, divided by j^beta when ``log_correction``
    is set so the logarithmic factor of the coefficients does not bias the
    slope. The inequality #N(j, h) <= (A / C0)^p 2^{jp(h-s+Q/p)} with
    A = sup a_j is checked on the raw-threshold counts at every (j, h).
    """
    js = tuple(range(j_window[0], j_window[1] + 1))
    h_grid = np.asarray(list(h_grid), dtype=float)
    if C0 is None:
        C0 = embedding_constant(fld, params, js)
    beta = params.beta if log_correction else 0.0
    counts = np.zeros((len(h_grid), len(js)), dtype=float)
    raw = np.zeros_like(counts)
    d_hat = np.full(len(h_grid), -math.inf)
    if C0 > 0:
        for a, h in enumerate(h_grid):
            for b, j in enumerate(js):
                counts[a, b] = coefficient_counting(fld, j, h, C0, beta)
                raw[a, b] = coefficient_counting(fld, j, h, C0, 0.0)
            d_hat[a] = _count_slope(js, counts[a])
    norm = besov_seq_norm(fld, params, max(js))
    A = float(norm.a[list(js)].max())
    count_C = (A / C0) ** params.p if C0 > 0 else math.inf
    holds = True
    for a, h in enumerate(h_grid):
        for b, j in enumerate(js):
            if raw[a, b] > count_C * 2.0 ** (j * params.p * (h - params.t)) * (1 + 1e-12):
                holds = False
    bound = np.array([besov_spectrum_bound(h, params) for h in h_grid])
    return SpectrumEstimate(h_grid, d_hat, bound, params, C0, js, counts, raw, count_C, holds)


# ---------------------------------------------------------------- Hausdorff pre-measure


def hausdorff_premeasure(points: np.ndarray, s: float, eta: float, j_max: int | None = None) -> float:
    """Upper estimate of the s-dimensional pre-measure at resolution eta.

    Points are covered by the occupied dyadic cubes at the coarsest scale
    whose diameter is <= eta; each cube counts diam^s. With ``j_max`` the
    smallest sum over scales in [j(eta), j_max] is returned, which makes
    the value nonincreasing in eta.
    """
    if not eta > 0:
        raise ValueError("eta must be positive")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    j0 = max(0, math.ceil(math.log2(group.CUBE_DIAMETER_UNIT / eta) - 1e-12))
    j1 = j0 if j_max is None else max(j0, j_max)
    best = math.inf
    for j in range(j0, j1 + 1):
        n = len(np.unique(lattice.locate_array(pts, j), axis=0))
        best = min(best, n * lattice.cube_diameter(j) ** s)
    return best
