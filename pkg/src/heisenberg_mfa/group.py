"""Arithmetic, metric and horizontal calculus on the first Heisenberg group.

Points are (p, q, r) with group law

    (p, q, r) * (p', q', r') = (p + p', q + q', r + r' + 2 (q p' - p q'))

and dilations lambda o (p, q, r) = (lambda p, lambda q, lambda^2 r).

Scalar helpers accept :class:`GPoint` (or any length-3 sequence); the
``*_array`` variants work on ``(..., 3)`` numpy arrays.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, NamedTuple, Sequence

import numpy as np

Q = 4
BALL_VOLUME_UNIT = math.pi ** 2 / 2
CUBE_DIAMETER_UNIT = 13 ** 0.25


class GroupConstants(NamedTuple):
    Q: int = Q
    ball_volume_unit: float = BALL_VOLUME_UNIT
    cube_diameter_unit: float = CUBE_DIAMETER_UNIT


CONSTANTS = GroupConstants()


class GPoint(NamedTuple):
    """A point of the Heisenberg group in global coordinates.

    Coordinates may be floats, ints or :class:`fractions.Fraction`; the
    group operations stay exact for the latter two.
    """

    p: float
    q: float
    r: float

    def __mul__(self, other):  # type: ignore[override]
        return mul(self, other)

    def __invert__(self):
        return inv(self)

    def norm(self) -> float:
        return gauge_norm(self)


IDENTITY = GPoint(0, 0, 0)


def as_point(x) -> GPoint:
    if isinstance(x, GPoint):
        pt = x
    else:
        if len(x) != 3:
            raise ValueError(f"expected 3 coordinates, got {len(x)}")
        pt = GPoint(*x)
    for c in pt:
        if isinstance(c, float) and not math.isfinite(c):
            raise ValueError(f"non-finite coordinate in {pt}")
    return pt


def mul(a, b) -> GPoint:
    p, q, r = a
    p2, q2, r2 = b
    return GPoint(p + p2, q + q2, r + r2 + 2 * (q * p2 - p * q2))


def inv(x) -> GPoint:
    p, q, r = x
    return GPoint(-p, -q, -r)


def dilate(lam, x) -> GPoint:
    if not lam > 0:
        raise ValueError(f"dilation factor must be positive, got {lam}")
    p, q, r = x
    return GPoint(lam * p, lam * q, lam * lam * r)


def gauge_norm(x) -> float:
    p, q, r = (float(c) for c in x)
    # scale first so that huge or tiny coordinates do not overflow the 4th power
    s = max(abs(p), abs(q), math.sqrt(abs(r)))
    if s == 0.0:
        return 0.0
    a, b, c = p / s, q / s, r / (s * s)
    return s * ((a * a + b * b) ** 2 + c * c) ** 0.25


def log2_gauge_norm(x) -> float:
    """log2 of the gauge norm, exact-input friendly.

    Works for Fraction coordinates whose magnitude underflows a double.
    """
    p, q, r = x
    if all(isinstance(c, (int, Fraction)) for c in (p, q, r)):
        n4 = Fraction(p * p + q * q) ** 2 + Fraction(r) ** 2
        if n4 == 0:
            return -math.inf
        # log2 of a rational via integer bit lengths keeps full range
        num, den = n4.numerator, n4.denominator
        shift = num.bit_length() - den.bit_length()
        # bring the ratio near 1 before converting to float
        if shift >= 0:
            mant = Fraction(num, den << shift)
        else:
            mant = Fraction(num << -shift, den)
        return (shift + math.log2(float(mant))) / 4
    n = gauge_norm(x)
    return math.log2(n) if n > 0 else -math.inf


def dist(x, y) -> float:
    return gauge_norm(mul(inv(x), y))


def ball_volume(r: float) -> float:
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    return BALL_VOLUME_UNIT * r ** Q


# ---------------------------------------------------------------- arrays


def mul_array(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = a + b
    out[..., 2] += 2 * (a[..., 1] * b[..., 0] - a[..., 0] * b[..., 1])
    return out


def inv_array(x: np.ndarray) -> np.ndarray:
    return -np.asarray(x, dtype=float)


def dilate_array(lam, x: np.ndarray) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("dilation factor must be positive")
    x = np.array(x, dtype=float)
    x[..., :2] *= lam[..., None] if lam.ndim else lam
    x[..., 2] *= lam * lam
    return x


def gauge_norm_array(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    h = x[..., 0] ** 2 + x[..., 1] ** 2
    return np.sqrt(np.sqrt(h * h + x[..., 2] ** 2))


def dist_array(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return gauge_norm_array(mul_array(inv_array(x), y))


# ---------------------------------------------------------------- sampling


def monte_carlo_ball_volume(n_samples: int = 1_000_000, radius: float = 1.0,
                            rng=None, chunk: int = 1 << 18) -> float:
    """Rejection-sampling estimate of the volume of B(0, radius).

    The ball of radius ``r`` sits inside the box [-r, r]^2 x [-r^2, r^2].
    """
    rng = np.random.default_rng(rng)
    lo = np.array([-radius, -radius, -radius ** 2])
    hi = -lo
    box = float(np.prod(hi - lo))
    hits = 0
    left = int(n_samples)
    while left > 0:
        m = min(chunk, left)
        pts = rng.uniform(lo, hi, size=(m, 3))
        hits += int(np.count_nonzero(gauge_norm_array(pts) < radius))
        left -= m
    return box * hits / n_samples


def quasi_triangle_constant(sample_count: int = 1_000_000, rng=None,
                            scale: float = 1.0, chunk: int = 1 << 18) -> float:
    """Empirical lower bound for the quasi-triangle constant.

    Returns the maximum over random pairs (plus one collinear pair) of
    ||xy|| / (||x|| + ||y||).
    Samples are drawn in the unit box and then dilated by ``scale``, so the
    value does not depend on ``scale`` for a fixed seed.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    rng = np.random.default_rng(rng)
    # one collinear pair on the p-axis is always included; its ratio is 1
    e = dilate_array(scale, np.array([[1.0, 0.0, 0.0]]))
    best = float(gauge_norm_array(mul_array(e, e))[0] / (2 * gauge_norm_array(e)[0]))
    left = int(sample_count)
    while left > 0:
        m = min(chunk, left)
        x = dilate_array(scale, rng.uniform(-1, 1, size=(m, 3)))
        y = dilate_array(scale, rng.uniform(-1, 1, size=(m, 3)))
        den = gauge_norm_array(x) + gauge_norm_array(y)
        ok = den > 0
        ratio = gauge_norm_array(mul_array(x, y))[ok] / den[ok]
        if ratio.size:
            best = max(best, float(ratio.max()))
        left -= m
    return best


# ---------------------------------------------------------------- calculus


def flow(x, field: str, t: float) -> GPoint:
    """Exact flow of a left-invariant field X, Y or Z for time ``t``."""
    p, q, r = x
    if field == "X":
        return GPoint(p + t, q, r + 2 * q * t)
    if field == "Y":
        return GPoint(p, q + t, r - 2 * p * t)
    if field == "Z":
        return GPoint(p, q, r + t)
    raise ValueError(f"unknown vector field {field!r}; expected X, Y or Z")


def horizontal_derivative(f: Callable[[GPoint], float], x, word: Sequence[str] | str,
                          step: float | None = None) -> float:
    """Iterated central difference of ``f`` along the exact flows in ``word``.

    ``word`` is applied as an operator product, so ``"XY"`` means X(Y f).
    """
    word = list(word)
    if len(word) > 4:
        raise ValueError("word length is limited to 4")
    if step is None:
        step = 1e-4 if len(word) <= 1 else 1e-3
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    x = as_point(x)

    def apply(g, fld):
        return lambda y: (g(flow(y, fld, step)) - g(flow(y, fld, -step))) / (2 * step)

    g = f
    for fld in reversed(word):
        g = apply(g, fld)
    return float(g(x))
