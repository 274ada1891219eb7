"""Right Taylor polynomials of homogeneous degree <= 3 and remainder checks."""
from __future__ import annotations

import math
from typing import Callable, Mapping

import numpy as np

from . import group

WORDS = ("", "X", "Y", "XX", "XY", "YX", "YY", "Z",
         "XXX", "XXY", "XYY", "YYY", "XZ", "YZ")


def _word_degree(w: str) -> int:
    return sum(2 if c == "Z" else 1 for c in w)


def taylor_poly(derivs: Mapping[str, float], order: int) -> dict[tuple[int, int, int], float]:
    """Coefficients {(a, b, c): coef} of p^a q^b r^c, a + b + 2c <= order.

    Uses the fixed choice

        f + p Xf + q Yf + (p^2 X^2f + 2pq XYf + q^2 Y^2f) / 2 + (2pq + r) Zf
          + (p^3 X^3f + 3p^2q X^2Yf + 3pq^2 XY^2f + q^3 Y^3f) / 6
          + (2pq + r)(p XZf + q YZf)

    truncated at ``order``. Missing derivatives count as 0.
    """
    if order not in (0, 1, 2, 3):
        raise ValueError("order must be 0, 1, 2 or 3")
    d = lambda w: float(derivs.get(w, 0.0))  # noqa: E731
    c: dict[tuple[int, int, int], float] = {}

    def add(mono, v):
        if v:
            c[mono] = c.get(mono, 0.0) + v

    add((0, 0, 0), d(""))
    if order >= 1:
        add((1, 0, 0), d("X"))
        add((0, 1, 0), d("Y"))
    if order >= 2:
        add((2, 0, 0), d("XX") / 2)
        add((1, 1, 0), d("XY") + 2 * d("Z"))
        add((0, 2, 0), d("YY") / 2)
        add((0, 0, 1), d("Z"))
    if order >= 3:
        add((3, 0, 0), d("XXX") / 6)
        add((2, 1, 0), d("XXY") / 2 + 2 * d("XZ"))
        add((1, 2, 0), d("XYY") / 2 + 2 * d("YZ"))
        add((0, 3, 0), d("YYY") / 6)
        add((1, 0, 1), d("XZ"))
        add((0, 1, 1), d("YZ"))
    return c


def eval_poly(coef: Mapping[tuple[int, int, int], float], y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    out = np.zeros(y.shape[:-1])
    for (a, b, c), v in coef.items():
        out = out + v * y[..., 0] ** a * y[..., 1] ** b * y[..., 2] ** c
    return out


def derivative_table(f: Callable, x0, order: int, step: float | None = None) -> dict[str, float]:
    return {w: (float(f(group.as_point(x0))) if not w else
                group.horizontal_derivative(f, x0, w, step))
            for w in WORDS if _word_degree(w) <= order}


def unit_sphere(n: int, rng=None) -> np.ndarray:
    """Points with gauge norm 1, from random directions pushed to the sphere."""
    rng = np.random.default_rng(rng)
    u = rng.normal(size=(n, 3))
    return group.dilate_array(1.0 / group.gauge_norm_array(u), u)


def taylor_remainder_slope(f: Callable, x0, order: int, radii=None, n_dirs: int = 64,
                           rng=0, step: float | None = None) -> float:
    """log-log slope of max_{||y||=rho} |f(x0 y) - P(y)| against rho.

    Returns +inf when the remainder vanishes at every radius.
    """
    if radii is None:
        radii = np.geomspace(0.3, 0.003, 9)
    radii = np.asarray(radii, dtype=float)
    x0 = group.as_point(x0)
    coef = taylor_poly(derivative_table(f, x0, order, step), order)
    dirs = unit_sphere(n_dirs, rng)
    rem = []
    for rho in radii:
        y = group.dilate_array(rho, dirs)
        vals = np.array([f(group.GPoint(*group.mul(x0, yy))) for yy in y])
        rem.append(float(np.max(np.abs(vals - eval_poly(coef, y)))))
    rem = np.array(rem)
    scale = max(1.0, abs(float(f(x0))))
    if np.all(rem <= 1e-13 * scale):
        return math.inf
    ok = rem > 1e-13 * scale
    return float(np.polyfit(np.log(radii[ok]), np.log(rem[ok]), 1)[0])


# built-in smooth test functions, (p, q, r) -> real
FUNCTIONS: dict[str, Callable] = {
    "constant": lambda x: 1.0,
    "coord-p": lambda x: x[0],
    "coord-r": lambda x: x[2],
    "sin-p-cos-r": lambda x: math.sin(x[0]) * math.cos(x[2]),
    "exp-mix": lambda x: math.exp(0.7 * x[0] - 0.4 * x[1] + 0.3 * x[2]),
}
