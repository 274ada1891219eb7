"""Built-in oracle suites. Each check compares an observed value to an expected one."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import carnot, group, lattice, synthesis
from .analysis import global_exponent, pointwise_exponent


@dataclass
class Check:
    name: str
    observed: object
    expected: object
    passed: bool
    seconds: float = 0.0


def _timed(name: str, fn: Callable[[], tuple[object, object, bool]]) -> Check:
    t = time.perf_counter()
    obs, exp, ok = fn()
    return Check(name, obs, exp, bool(ok), time.perf_counter() - t)


# ---------------------------------------------------------------- lattice


def _partition(n: int = 2000, j: int = 2, rng=0):
    """Each random point lies in exactly one cube of the local candidate window."""
    rng = np.random.default_rng(rng)
    bad = 0
    for x in rng.uniform(0, 1, size=(n, 3)):
        k = lattice.locate(x, j).k
        hits = sum(lattice.in_cube(x, (j, (k[0] + a, k[1] + b, k[2] + c)))
                   for a in (-1, 0, 1) for b in (-1, 0, 1) for c in range(-4, 5))
        bad += hits != 1
    return bad


def lattice_suite(full: bool = True) -> list[Check]:
    out = [
        _timed("neighbors right-translate scan = printed table",
               lambda: (len(s := lattice.touching_scan("right")), "34+self",
                        s == set(lattice.XI_PRINTED) and len(s) == 35)),
        _timed("neighbors left-translate scan = reflected table",
               lambda: (len(s := lattice.touching_scan("left")), "34+self",
                        s == set(lattice.XI) and len(s) == 35)),
        _timed("ball overlap count",
               lambda: (len(s := lattice.ball_overlap_scan()), 43,
                        len(s) == 43 and all(lattice._in_overlap_table(k) for k in s))),
        _timed("cube diameter",
               lambda: (d := _vertex_diameter(), lattice.cube_diameter(0),
                        abs(d - group.CUBE_DIAMETER_UNIT) <= 1e-3)),
        _timed("#L0(3) by enumeration",
               lambda: (n := len(lattice.L0_indices(3)), 4096, n == 4096)),
    ]
    for J in range(1, 5 if full else 4):
        out.append(_timed(f"irreducible count J={J} by parity scan",
                          lambda J=J: (n := _irreducible_scan(J), 15 * 2 ** (4 * (J - 1)),
                                       n == 15 * 2 ** (4 * (J - 1)))))
    out.append(_timed("telescoping identity j<=8", lambda: (ok := _telescoping(8), True, ok)))
    out.append(_timed("partition (points in exactly one cube)",
                      lambda: (b := _partition(), 0, b == 0)))
    return out


def _telescoping(j_max: int) -> bool:
    return all(1 + sum(lattice.count_irreducible(J) for J in range(1, j + 1)) == lattice.count_L0(j)
               == 2 ** (4 * j) for j in range(j_max + 1))


def _vertex_diameter() -> float:
    v = lattice.cube_vertices()
    return float(max(group.dist(a, b) for a in v for b in v))


def _irreducible_scan(J: int) -> int:
    k = lattice.L0_indices(J)
    return int(np.count_nonzero(lattice.irreducible_depth_array(J, k) == J))


# ---------------------------------------------------------------- group


def homogeneity_residuals(n: int = 10_000, rng=0) -> tuple[float, float]:
    """Max relative residual of ||lam x|| = lam ||x|| and of d(zx, zy) = d(x, y)."""
    rng = np.random.default_rng(rng)
    x = rng.uniform(-2, 2, size=(n, 3))
    y = rng.uniform(-2, 2, size=(n, 3))
    z = rng.uniform(-2, 2, size=(n, 3))
    lam = rng.uniform(0.1, 10, size=n)
    nx = group.gauge_norm_array(x)
    hom = np.abs(group.gauge_norm_array(group.dilate_array(lam, x)) - lam * nx) / (lam * nx)
    d0 = group.dist_array(x, y)
    d1 = group.dist_array(group.mul_array(z, x), group.mul_array(z, y))
    inv = np.abs(d1 - d0) / np.maximum(d0, 1e-300)
    return float(hom.max()), float(inv.max())


def group_suite(full: bool = True) -> list[Check]:
    n_mc = 10_000_000 if full else 1_000_000
    tol = 0.005 if full else 0.01
    hom, inv = homogeneity_residuals()
    return [
        _timed(f"Monte Carlo unit-ball volume ({n_mc} samples)",
               lambda: (v := group.monte_carlo_ball_volume(n_mc, rng=1), group.BALL_VOLUME_UNIT,
                        abs(v / group.BALL_VOLUME_UNIT - 1) <= tol)),
        _timed("cube diameter", lambda: (d := _vertex_diameter(), group.CUBE_DIAMETER_UNIT,
                                         abs(d - group.CUBE_DIAMETER_UNIT) <= 1e-3)),
        Check("homogeneity residual", hom, "<=1e-12", hom <= 1e-12),
        Check("left-invariance residual", inv, "<=1e-12", inv <= 1e-12),
        _timed("Z = -[X,Y]/4 on a test function", _commutator_check),
    ]


def _commutator_check():
    f = lambda x: math.sin(x[0] + 0.5 * x[1]) * math.exp(0.3 * x[2])  # noqa: E731
    x0 = (0.2, -0.1, 0.4)
    xy = group.horizontal_derivative(f, x0, "XY")
    yx = group.horizontal_derivative(f, x0, "YX")
    z = group.horizontal_derivative(f, x0, "Z")
    val = -(xy - yx) / 4
    return val, z, abs(val - z) <= 1e-4 * max(1.0, abs(z))


# ---------------------------------------------------------------- carnot


def bch_residual(n: int = 10_000, rng=0) -> float:
    rng = np.random.default_rng(rng)
    a = rng.normal(size=(n, 3)) * 3
    b = rng.normal(size=(n, 3)) * 3
    diff = carnot.bch_mul(carnot.HEISENBERG, a, b) - group.mul_array(a, b)
    return float(np.max(np.abs(diff)))


def carnot_suite(full: bool = True, spec: carnot.StratificationSpec | None = None) -> list[Check]:
    n = 400_000 if full else 100_000
    out = [
        _timed("BCH = Heisenberg law (1e4 pairs)",
               lambda: (r := bch_residual(), "<=1e-12", r <= 1e-12)),
        Check("Q_G heisenberg", carnot.HEISENBERG.hom_dim, 4, carnot.HEISENBERG.hom_dim == 4),
        Check("Q_G engel", carnot.ENGEL.hom_dim, 7, carnot.ENGEL.hom_dim == 7),
        Check("Q_G abelian(5)", carnot.abelian(5).hom_dim, 5, carnot.abelian(5).hom_dim == 5),
    ]
    specs = [(s, s.name) for s in (carnot.HEISENBERG, carnot.ENGEL, carnot.abelian(3))]
    if spec is not None:
        label = f"{spec.name} (input)" if spec.name else "input"
        specs.append((spec, label))
        want = sum((i + 1) * d for i, d in enumerate(spec.layer_dims))
        out.append(Check(f"Q_G {label}", spec.hom_dim, want, spec.hom_dim == want))
    for s, label in specs:
        errs = carnot.validate_spec(s)
        out.append(Check(f"structure {label}", "; ".join(errs) or "ok", "ok", not errs))
        if s.step <= 3:
            out.append(_timed(f"volume exponent {label}",
                              lambda s=s: (e := carnot.volume_scaling_exponent(s, n=n, rng=2),
                                           s.hom_dim, abs(e - s.hom_dim) <= 0.05)))
    return out


# ---------------------------------------------------------------- besov


def besov_suite(full: bool = True) -> list[Check]:
    P = synthesis.BesovParams(2, 2, 2)
    F = synthesis.besov_saturating_field(P)
    out = [_timed("a_j bound for j<=14", lambda: _aj_bound(F, P, 14))]
    jb = 5 if full else 4
    out.append(_timed(f"depth counting = enumeration for j<={jb}", lambda: _depth_vs_brute(F, P, jb)))
    for base, s, N, label in [(F, 2, 3, "F"), (synthesis.zero_field(), 1, 2, "zero"),
                              (F, 1.5, 2, "F")]:
        out.append(_timed(f"sandwich bounds {label} s={s} N={N}",
                          lambda base=base, s=s, N=N: (
                              f"fail_a={(r := synthesis.monofractal_sandwich(base, s, N, 20))['fail_a']} "
                              f"fail_b={r['fail_b']} of {r['checked']}",
                              "fail_a=0 fail_b=0", r["holds"])))
    M = synthesis.monofractal_round(synthesis.besov_saturating_field(synthesis.BesovParams(3, 2, 2)), 1, 1)
    out.append(_timed("monofractal global exponent",
                      lambda: (h := global_exponent(M, mode="raw").value, 1.0, abs(h - 1) <= 0.05)))
    out.append(_timed("monofractal pointwise exponent",
                      lambda: (h := pointwise_exponent(M, (0.3, 0.7, 0.2), mode="raw").value,
                               1.0, abs(h - 1) <= 0.05)))
    return out


def aj_upper_bound(j: int, p: float, beta: float) -> float:
    return 15 ** (2 / p) * j ** -beta * (1 + j * 2.0 ** -4) ** (1 / p)


def _aj_bound(F, P, j_max):
    a = synthesis.besov_seq_norm(F, P, j_max).a
    ratio = max(a[j] / aj_upper_bound(j, P.p, P.beta) for j in range(1, j_max + 1))
    return ratio, "<=1", ratio <= 1 and a[0] == 0


def _depth_vs_brute(F, P, j_max):
    a = synthesis.besov_seq_norm(F, P, j_max, method="depth").a
    b = synthesis.besov_seq_norm(F, P, j_max, method="brute").a
    rel = float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))
    return rel, "<=1e-12", rel <= 1e-12


SUITES = {
    "lattice": lattice_suite,
    "group": group_suite,
    "carnot": carnot_suite,
    "besov": besov_suite,
}


def run(suite: str, full: bool = True, spec=None) -> list[Check]:
    if suite == "all":
        out = []
        for name in SUITES:
            out.extend(run(name, full, spec))
        return out
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; expected one of {sorted(SUITES)} or 'all'")
    if suite == "carnot":
        return carnot_suite(full, spec)
    return SUITES[suite](full)


def format_table(checks: list[Check]) -> str:
    def fmt(v):
        if isinstance(v, float):
            return f"{v:.6g}"
        return str(v)
    rows = [("status", "check", "observed", "expected", "seconds")]
    rows += [("PASS" if c.passed else "FAIL", c.name, fmt(c.observed), fmt(c.expected),
              f"{c.seconds:.2f}") for c in checks]
    w = [max(len(r[i]) for r in rows) for i in range(5)]
    return "\n".join("  ".join(r[i].ljust(w[i]) for i in range(5)).rstrip() for r in rows)
