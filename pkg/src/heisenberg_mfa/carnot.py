"""Stratified nilpotent (Carnot) groups in exponential coordinates.

A group is described by its layer dimensions and the structure constants
``c[i][j][l]`` of the basis brackets ``[X_i, X_j] = sum_l c[i][j][l] X_l``.
Products use the truncated Baker-Campbell-Hausdorff series, which is exact
for step at most 3.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class StratificationSpec:
    """Layer dimensions plus sparse structure constants (0-based indices)."""

    layer_dims: tuple[int, ...]
    brackets: dict[tuple[int, int, int], Fraction | float] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "layer_dims", tuple(int(q) for q in self.layer_dims))
        if not self.layer_dims or any(q < 1 for q in self.layer_dims):
            raise ValueError("layer dimensions must be positive integers")
        full = {}
        for (i, j, l), v in self.brackets.items():
            for idx in (i, j, l):
                if not 0 <= idx < self.dim:
                    raise ValueError(f"bracket index {idx} outside 0..{self.dim - 1}")
            if v == 0:
                continue
            full[(i, j, l)] = v
            # antisymmetric completion, conflicts are kept for validate_spec
            full.setdefault((j, i, l), -v)
        object.__setattr__(self, "brackets", full)

    @property
    def dim(self) -> int:
        return sum(self.layer_dims)

    @property
    def step(self) -> int:
        return len(self.layer_dims)

    @cached_property
    def weights(self) -> tuple[int, ...]:
        return tuple(k + 1 for k, q in enumerate(self.layer_dims) for _ in range(q))

    @property
    def hom_dim(self) -> int:
        return sum((k + 1) * q for k, q in enumerate(self.layer_dims))

    @property
    def sigma_lcm(self) -> int:
        return reduce(math.lcm, self.weights, 1)

    @cached_property
    def tensor(self) -> np.ndarray:
        c = np.zeros((self.dim,) * 3)
        for (i, j, l), v in self.brackets.items():
            c[i, j, l] = float(v)
        return c


def hom_dim(spec: StratificationSpec) -> int:
    return spec.hom_dim


HEISENBERG = StratificationSpec((2, 1), {(0, 1, 2): Fraction(-4)}, name="heisenberg")
ENGEL = StratificationSpec((2, 1, 1), {(0, 1, 2): Fraction(1), (0, 2, 3): Fraction(1)},
                           name="engel")


def abelian(d: int) -> StratificationSpec:
    return StratificationSpec((d,), {}, name=f"abelian-{d}")


# ---------------------------------------------------------------- validation


def _bracket_exact(spec, a: dict, b: dict) -> dict:
    out: dict[int, Fraction] = {}
    for (i, j, l), v in spec.brackets.items():
        if i in a and j in b:
            out[l] = out.get(l, 0) + a[i] * b[j] * v
    return {k: v for k, v in out.items() if v != 0}


def validate_spec(spec: StratificationSpec, tol: float = 1e-12) -> list[str]:
    """Return a list of failed invariants; empty when the structure is valid."""
    failures = []
    d, w = spec.dim, spec.weights
    exact = all(isinstance(v, (int, Fraction)) for v in spec.brackets.values())

    for (i, j, l), v in sorted(spec.brackets.items()):
        if i == j:
            failures.append(f"antisymmetry: [X{i + 1},X{i + 1}] has component {v} on X{l + 1}")
        elif spec.brackets.get((j, i, l), 0) != -v:
            failures.append(f"antisymmetry: c[{i + 1}][{j + 1}][{l + 1}] != -c[{j + 1}][{i + 1}][{l + 1}]")
        if w[l] != w[i] + w[j]:
            failures.append(
                f"grading: [X{i + 1},X{j + 1}] (layers {w[i]},{w[j]}) has component on X{l + 1} in layer {w[l]}")

    for i, j, k in itertools.combinations(range(d), 3):
        e = [{n: Fraction(1)} for n in (i, j, k)]
        terms = [
            _bracket_exact(spec, e[0], _bracket_exact(spec, e[1], e[2])),
            _bracket_exact(spec, e[1], _bracket_exact(spec, e[2], e[0])),
            _bracket_exact(spec, e[2], _bracket_exact(spec, e[0], e[1])),
        ]
        total: dict = {}
        for t in terms:
            for key, v in t.items():
                total[key] = total.get(key, 0) + v
        res = max((abs(v) for v in total.values()), default=0)
        if (res != 0) if exact else (res > tol):
            failures.append(f"jacobi: residual {float(res):.3g} on (X{i + 1},X{j + 1},X{k + 1})")

    # generation: [layer 1, layer k] must span layer k+1
    starts = np.cumsum((0,) + spec.layer_dims)
    c = spec.tensor
    for k in range(1, spec.step):
        first = range(starts[0], starts[1])
        lay = range(starts[k - 1], starts[k])
        nxt = slice(starts[k], starts[k + 1])
        rows = [c[a, b, nxt] for a in first for b in lay]
        rank = np.linalg.matrix_rank(np.array(rows)) if rows else 0
        if rank < spec.layer_dims[k]:
            failures.append(f"stratification: [layer 1, layer {k}] spans rank {rank} < {spec.layer_dims[k]}")
    return failures


# ---------------------------------------------------------------- products


def bracket(spec: StratificationSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    d = spec.dim
    outer = (a[..., :, None] * b[..., None, :]).reshape(a.shape[:-1] + (d * d,))
    return outer @ spec.tensor.reshape(d * d, d)


def bch_mul(spec: StratificationSpec, a, b) -> np.ndarray:
    """Group product exp^-1(exp(a) exp(b)); works on (..., d) arrays."""
    if spec.step > 3:
        raise NotImplementedError("BCH product is implemented for step <= 3 only")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ab = bracket(spec, a, b)
    out = a + b + 0.5 * ab
    if spec.step == 3:
        out = out + (bracket(spec, a, ab) - bracket(spec, b, ab)) / 12.0
    return out


def c_inv(x) -> np.ndarray:
    return -np.asarray(x, dtype=float)


def c_dilate(spec: StratificationSpec, lam, x) -> np.ndarray:
    if not lam > 0:
        raise ValueError(f"dilation factor must be positive, got {lam}")
    return np.asarray(x, dtype=float) * float(lam) ** np.asarray(spec.weights, dtype=float)


def c_gauge_norm(spec: StratificationSpec, x) -> np.ndarray | float:
    x = np.abs(np.asarray(x, dtype=float))
    w = np.asarray(spec.weights, dtype=float)
    s = spec.sigma_lcm
    # normalise by the largest homogeneous component to avoid overflow
    comp = x ** (1.0 / w)
    m = comp.max(axis=-1, keepdims=True)
    m = np.where(m == 0, 1.0, m)
    inner = np.sum((comp / m) ** (2 * s), axis=-1)
    out = m[..., 0] * inner ** (1.0 / (2 * s))
    return float(out) if out.ndim == 0 else out


def c_dist(spec, x, y):
    return c_gauge_norm(spec, bch_mul(spec, c_inv(x), y))


def _bch_abs_bound(spec, a, b):
    """Componentwise majorant of |bch(a', b')| for |a'| <= a, |b'| <= b."""
    c = np.abs(spec.tensor)
    br = lambda u, v: np.einsum("i,j,ijl->l", u, v, c)  # noqa: E731
    ab = br(a, b)
    out = a + b + 0.5 * ab
    if spec.step == 3:
        out = out + (br(a, ab) + br(b, ab)) / 12.0
    return out


# ---------------------------------------------------------------- sampling sets


def lattice_points_in_ball(spec, generators, center, radius, norm=None) -> np.ndarray:
    """Integer combinations of ``generators`` lying in the open ball B(center, radius)."""
    G = np.asarray(generators, dtype=float)
    if G.size == 0:
        raise ValueError("empty lattice")
    if G.shape != (spec.dim, spec.dim):
        raise ValueError(f"expected {spec.dim} generators of length {spec.dim}")
    norm = norm or (lambda z: c_gauge_norm(spec, z))
    center = np.asarray(center, dtype=float)
    w = np.asarray(spec.weights, dtype=float)
    # gamma = center * y with ||y|| < radius; with the carnot norm |y_i| <= radius^w_i
    ybox = radius ** w * _norm_box_factor(spec, norm)
    half = _bch_abs_bound(spec, np.abs(center), ybox)
    Ginv = np.linalg.inv(G.T)
    # gamma lies within [-half, half] since the majorant covers the centre as well
    nc = np.zeros(spec.dim)
    nh = np.abs(Ginv) @ half
    lo = np.floor(nc - nh).astype(int)
    hi = np.ceil(nc + nh).astype(int)
    axes = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
    n = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, spec.dim)
    gam = n @ G
    d = norm(bch_mul(spec, c_inv(center), gam))
    return gam[d < radius]


def _norm_box_factor(spec, norm) -> np.ndarray:
    """Factor f with ||y|| < 1 implying |y_i| < f_i, probed on the unit axes."""
    f = np.empty(spec.dim)
    for i in range(spec.dim):
        e = np.zeros(spec.dim)
        e[i] = 1.0
        # homogeneity: ||t e_i|| = t^(1/w_i) ||e_i|| along each axis; axis extent bounds the ball
        # for the norms used here (monotone in each |y_i|)
        f[i] = float(norm(e)) ** (-spec.weights[i])
    return f


def ball_volume_mc(spec, radius: float, n: int = 400_000, rng=None) -> float:
    """Monte Carlo volume of the gauge ball B(0, radius)."""
    rng = np.random.default_rng(rng)
    w = np.asarray(spec.weights, dtype=float)
    half = radius ** w * _norm_box_factor(spec, lambda z: c_gauge_norm(spec, z))
    x = rng.uniform(-half, half, size=(n, spec.dim))
    return float(np.prod(2 * half) * np.mean(c_gauge_norm(spec, x) < radius))


def volume_scaling_exponent(spec, radii=(0.5, 1.0, 2.0, 4.0), n: int = 400_000, rng=None) -> float:
    """Log-log slope of ball volume against radius; should be close to Q."""
    rng = np.random.default_rng(rng)
    radii = np.asarray(radii, dtype=float)
    v = [ball_volume_mc(spec, r, n, rng) for r in radii]
    return float(np.polyfit(np.log(radii), np.log(v), 1)[0])


def sampling_check(spec, generators, radius: float, sample_count: int = 10_000,
                   box=None, rng=None, norm=None) -> dict:
    """Empirical (C1)/(C2) check: min and max lattice points in B(x, radius)."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    rng = np.random.default_rng(rng)
    if box is None:
        box = (np.zeros(spec.dim), np.full(spec.dim, 4.0))
    lo, hi = (np.asarray(b, dtype=float) for b in box)
    centers = rng.uniform(lo, hi, size=(sample_count, spec.dim))
    counts = np.array([len(lattice_points_in_ball(spec, generators, x, radius, norm))
                       for x in centers])
    return {
        "min_points": int(counts.min()),
        "max_points": int(counts.max()),
        "c1_holds": bool(counts.min() >= 1),
        "sample_count": int(sample_count),
    }


def overlap_count(spec, generators, radius: float = 1.0, norm=None, n_witness: int = 200_000,
                  gamma: float = 1.5, rng=None) -> int:
    """Number of lattice points g with B(0, radius) meeting B(g, radius).

    Overlap is certified by a sampled witness z in B(0, radius) with
    ||g^-1 z|| < radius, so the count is a lower bound that is exact once the
    witness sample is dense enough. Candidates are the lattice points within
    ``2 gamma radius`` of the origin, ``gamma`` bounding the quasi-triangle
    constant of ``norm``.
    """
    rng = np.random.default_rng(rng)
    norm = norm or (lambda z: c_gauge_norm(spec, z))
    w = np.asarray(spec.weights, dtype=float)
    half = radius ** w * _norm_box_factor(spec, norm)
    z = rng.uniform(-half, half, size=(n_witness, spec.dim))
    z = z[norm(z) < radius]
    cand = lattice_points_in_ball(spec, generators, np.zeros(spec.dim), 2 * gamma * radius, norm)
    return sum(bool(np.any(norm(bch_mul(spec, c_inv(g), z)) < radius)) for g in cand)


# ---------------------------------------------------------------- parsing

_FRACTION = re.compile(r"^[+-]?\d+(/\d+)?$")


def _number(tok: str):
    return Fraction(tok) if _FRACTION.match(tok) else float(tok)


def parse_spec(text: str, name: str = "") -> StratificationSpec:
    """Parse ``layers = [q1, ...]`` and ``bracket i j l value`` lines (1-based)."""
    layers = None
    brackets = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("layers"):
            _, _, rhs = line.partition("=")
            layers = tuple(int(t) for t in rhs.strip().strip("[]").split(",") if t.strip())
        elif line.startswith("bracket"):
            toks = line.split()
            if len(toks) != 5:
                raise ValueError(f"line {lineno}: expected 'bracket i j l value'")
            i, j, l = (int(t) - 1 for t in toks[1:4])
            brackets[(i, j, l)] = _number(toks[4])
        else:
            raise ValueError(f"line {lineno}: unrecognised entry {line!r}")
    if layers is None:
        raise ValueError("missing 'layers = [...]' entry")
    return StratificationSpec(layers, brackets, name=name)


def load_spec(path) -> StratificationSpec:
    path = Path(path)
    return parse_spec(path.read_text(), name=path.stem)
