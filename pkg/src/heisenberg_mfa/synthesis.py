"""Coefficient fields: procedural rules, sparse overlays and sequence-space norms.

A :class:`CoefficientField` assigns a value to every index ``(eps, j, k)``
with ``eps`` in ``1..15``. Fields are never materialised; rules are
evaluated on demand, per scale, on integer arrays of ``k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Mapping

import numpy as np

from . import group, lattice

EPS_COUNT = 15


@dataclass(frozen=True)
class BesovParams:
    s: float
    p: float
    q: float
    Q: int = group.Q

    def __post_init__(self):
        if not self.p >= 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if not self.q >= 1:
            raise ValueError(f"q must be >= 1, got {self.q}")
        # s = Q/p is accepted as the borderline case (uniform exponent 0)
        if not self.s >= self.Q / self.p:
            raise ValueError(f"need s >= Q/p, got s={self.s}, Q/p={self.Q / self.p}")

    @property
    def borderline(self) -> bool:
        return self.s == self.Q / self.p

    @property
    def beta(self) -> float:
        return 1 / self.p + (0.0 if math.isinf(self.q) else 2 / self.q)

    @property
    def t(self) -> float:
        """Uniform regularity s - Q/p."""
        return self.s - self.Q / self.p


# ---------------------------------------------------------------- rules


class Rule:
    """Procedural coefficient rule, identical across eps unless stated."""

    depth_monotone = False

    def values(self, j: int, k: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def depth_value(self, j: int, J: np.ndarray | int):
        raise TypeError(f"{type(self).__name__} is not depth monotone")

    def describe(self) -> str:
        raise NotImplementedError


class ZeroRule(Rule):
    depth_monotone = True

    def values(self, j, k):
        return np.zeros(np.shape(k)[:-1])

    def depth_value(self, j, J):
        return np.zeros(np.shape(J)) if np.ndim(J) else 0.0

    def describe(self):
        return "zero"


@dataclass(frozen=True)
class PowerLawRule(Rule):
    """d = 2^{-js} everywhere."""

    s: float
    depth_monotone = True

    def values(self, j, k):
        return np.full(np.shape(k)[:-1], 2.0 ** (-j * self.s))

    def depth_value(self, j, J):
        v = 2.0 ** (-j * self.s)
        return np.full(np.shape(J), v) if np.ndim(J) else v

    def describe(self):
        return f"power-law({self.s!r})"


@dataclass(frozen=True)
class BesovSaturatingRule(Rule):
    """2^{-j(s-Q/p) - J Q/p} / j^beta with J the irreducible depth of (j, k)."""

    params: BesovParams
    depth_monotone = True

    def depth_value(self, j, J):
        P = self.params
        if j < 1:
            return np.zeros(np.shape(J)) if np.ndim(J) else 0.0
        J = np.asarray(J, dtype=float)
        out = np.exp2(-j * P.t - J * P.Q / P.p) / j ** P.beta
        return out if out.ndim else float(out)

    def log2_depth_value(self, j, J):
        P = self.params
        return -j * P.t - J * P.Q / P.p - P.beta * math.log2(j)

    def values(self, j, k):
        return self.depth_value(j, lattice.irreducible_depth_array(j, k))

    def describe(self):
        return "besov-saturating"


def e_star(x):
    """Non-zero integer part: 1 on [0, 2), floor elsewhere."""
    x = np.asarray(x, dtype=float)
    out = np.where((x >= 0) & (x < 2), 1.0, np.floor(x))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class MonofractalRoundRule(Rule):
    """2^{-js-N} E*(2^{js+N} d) applied to a base rule."""

    base: Rule
    s: float
    N: int

    @property
    def depth_monotone(self):  # type: ignore[override]
        return self.base.depth_monotone

    def _round(self, j, v):
        e = j * self.s + self.N
        return np.ldexp(e_star(np.ldexp(v, int(e))), -int(e)) if float(e).is_integer() \
            else 2.0 ** -e * e_star(2.0 ** e * np.asarray(v))

    def values(self, j, k):
        return self._round(j, self.base.values(j, k))

    def depth_value(self, j, J):
        out = self._round(j, self.base.depth_value(j, J))
        return out if np.ndim(out) else float(out)

    def describe(self):
        return f"monofractal-round({self.base.describe()},{self.s!r},{self.N})"


def _splitmix(x: np.ndarray) -> np.ndarray:
    x = (x + np.uint64(0x9E3779B97F4A7C15))
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


@dataclass(frozen=True)
class HashRandomRule(Rule):
    """2^{-js} times a deterministic pseudo-random factor in [1/2, 1]."""

    s: float
    seed: int = 0

    def values(self, j, k):
        k = np.asarray(k, dtype=np.int64).astype(np.uint64)
        with np.errstate(over="ignore"):
            h = _splitmix(np.uint64(self.seed) * np.uint64(0x100000001B3) + np.uint64(j))
            for c in range(3):
                h = _splitmix(h ^ k[..., c])
        u = (h >> np.uint64(11)).astype(float) * 2.0 ** -53
        return 2.0 ** (-j * self.s) * (0.5 + 0.5 * u)

    def describe(self):
        return f"hash-random({self.s!r},{self.seed})"


@dataclass(frozen=True)
class ShiftedRule(Rule):
    """Left translate of a rule by the integer point ``k0`` (scale 0)."""

    base: Rule
    k0: tuple[int, int, int]

    def values(self, j, k):
        k = np.asarray(k, dtype=np.int64)
        a = np.array([-self.k0[0] << j, -self.k0[1] << j, -self.k0[2] << (2 * j)], dtype=np.int64)
        kk = k + a
        kk[..., 2] = k[..., 2] + a[2] + 2 * (a[1] * k[..., 0] - a[0] * k[..., 1])
        return self.base.values(j, kk)

    def describe(self):
        raise ValueError("shifted fields have no file representation")


# ---------------------------------------------------------------- fields


Key = tuple[int, int, tuple[int, int, int]]


@dataclass(frozen=True)
class CoefficientField:
    rule: Rule = field(default_factory=ZeroRule)
    overlay: Mapping[Key, float] = field(default_factory=dict)
    support: str = "L0"
    j_min: int = 0
    j_max: int | None = None
    eps_count: int = EPS_COUNT
    shift: tuple[int, int, int] = (0, 0, 0)

    def __post_init__(self):
        if self.support not in ("L0", "all"):
            raise ValueError(f"support must be 'L0' or 'all', got {self.support!r}")
        clean = {}
        for (eps, j, k), v in self.overlay.items():
            if not 1 <= eps <= self.eps_count:
                raise ValueError(f"eps {eps} outside 1..{self.eps_count}")
            clean[(int(eps), int(j), tuple(int(c) for c in k))] = v
        object.__setattr__(self, "overlay", clean)

    @property
    def depth_monotone(self) -> bool:
        return self.rule.depth_monotone and self.shift == (0, 0, 0)

    def in_range(self, j: int) -> bool:
        return j >= self.j_min and (self.j_max is None or j <= self.j_max)

    def in_support(self, j: int, k: np.ndarray) -> np.ndarray:
        k = np.asarray(k, dtype=np.int64)
        if self.shift != (0, 0, 0):
            a = np.array([-self.shift[0] << j, -self.shift[1] << j, -self.shift[2] << (2 * j)])
            kk = k + a
            kk[..., 2] = k[..., 2] + a[2] + 2 * (a[1] * k[..., 0] - a[0] * k[..., 1])
            k = kk
        if self.support == "all":
            return np.ones(k.shape[:-1], dtype=bool)
        n = 1 << j if j >= 0 else 0
        return ((k[..., 0] >= 0) & (k[..., 0] < n) & (k[..., 1] >= 0) & (k[..., 1] < n)
                & (k[..., 2] >= 0) & (k[..., 2] < n * n))

    def _rule(self) -> Rule:
        return ShiftedRule(self.rule, self.shift) if self.shift != (0, 0, 0) else self.rule

    def rule_values(self, j: int, k: np.ndarray) -> np.ndarray:
        """Rule values (same for every eps) with support and range applied."""
        k = np.asarray(k, dtype=np.int64)
        if not self.in_range(j):
            return np.zeros(k.shape[:-1])
        return np.where(self.in_support(j, k), self._rule().values(j, k), 0.0)

    def value(self, eps: int, j: int, k) -> float:
        key = (int(eps), int(j), tuple(int(c) for c in k))
        if key in self.overlay:
            return float(self.overlay[key])
        return float(self.rule_values(j, np.array([k]))[0])

    def abs_max(self, j: int, k: np.ndarray) -> np.ndarray:
        """max over eps of |d^eps_{j,k}|."""
        k = np.asarray(k, dtype=np.int64)
        out = np.abs(self.rule_values(j, k))
        if self.overlay:
            ov = self.overlay_at_scale(j)
            if ov:
                flat = k.reshape(-1, 3)
                res = out.reshape(-1)
                index = {tuple(row): i for i, row in enumerate(flat.tolist())}
                for kk, vals in ov.items():
                    i = index.get(kk)
                    if i is not None:
                        res[i] = _overlay_abs_max(vals, res[i], self.eps_count)
                out = res.reshape(out.shape)
        return out

    def overlay_at_scale(self, j: int) -> dict:
        """k -> {eps: value} for overlay entries at scale j."""
        out: dict = {}
        for (eps, jj, k), v in self.overlay.items():
            if jj == j:
                out.setdefault(k, {})[eps] = v
        return out

    def with_overlay(self, entries: Mapping[Key, float]) -> "CoefficientField":
        merged = dict(self.overlay)
        merged.update(entries)
        return replace(self, overlay=merged)

    def shifted(self, k0) -> "CoefficientField":
        """Field translated on the left by the integer point ``k0``."""
        if self.overlay:
            raise ValueError("shifting fields with overlays is not supported")
        k0 = tuple(int(c) for c in k0)
        total = lattice.kmul(k0, self.shift)
        return replace(self, shift=total)

    def scaled(self, lam: float) -> "CoefficientField":
        return replace(self, rule=ScaledRule(self.rule, lam),
                       overlay={key: lam * v for key, v in self.overlay.items()})


def _overlay_abs_max(vals: dict, rule_abs: float, eps_count: int) -> float:
    m = max(abs(float(v)) for v in vals.values())
    # eps not overridden keep the rule value
    return m if len(vals) == eps_count else max(m, rule_abs)


@dataclass(frozen=True)
class ScaledRule(Rule):
    base: Rule
    lam: float

    @property
    def depth_monotone(self):  # type: ignore[override]
        return self.base.depth_monotone

    def values(self, j, k):
        return self.lam * self.base.values(j, k)

    def depth_value(self, j, J):
        return self.lam * self.base.depth_value(j, J)

    def describe(self):
        raise ValueError("scaled fields have no file representation")


# ---------------------------------------------------------------- constructors


def besov_saturating_field(params: BesovParams, j_max: int | None = None) -> CoefficientField:
    return CoefficientField(BesovSaturatingRule(params), support="L0", j_min=1, j_max=j_max)


def zero_field(support: str = "L0") -> CoefficientField:
    return CoefficientField(ZeroRule(), support=support)


def monofractal_round(fld: CoefficientField, s: float, N: int) -> CoefficientField:
    """Round every coefficient to 2^{-js-N} E*(2^{js+N} d)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    rule = MonofractalRoundRule(fld.rule, s, int(N))
    ov = {}
    for (eps, j, k), v in fld.overlay.items():
        e = j * s + N
        ov[(eps, j, k)] = 2.0 ** -e * float(e_star(2.0 ** e * float(v)))
    # the rounded rule is non-zero at every supported index, so the range
    # must be explicit: rounding at scales the base leaves empty is kept
    return replace(fld, rule=rule, overlay=ov)


def _pow2_le(x: Fraction, e: Fraction) -> bool:
    """Exact test x <= 2^e for x >= 0 and rational e."""
    b = e.denominator
    return x ** b <= Fraction(2) ** e.numerator


def _pow2_ge(x: Fraction, e: Fraction) -> bool:
    b = e.denominator
    return x ** b >= Fraction(2) ** e.numerator


def monofractal_sandwich(base: CoefficientField, s: float, N: int, j_max: int) -> dict:
    """Check the two rounding bounds exactly at every depth class up to ``j_max``.

    (a) 2^{js} |out - in| <= 2^{-N} and (b) |out| >= 2^{-js-N}, with the
    float coefficients converted to exact rationals. ``s`` must be rational
    with a small denominator (it is read through ``Fraction.limit_denominator``).
    """
    if not base.depth_monotone:
        raise ValueError("sandwich check enumerates depth classes of a depth monotone rule")
    out = monofractal_round(base, s, N)
    sf = Fraction(s).limit_denominator(64)
    checked, fail_a, fail_b = 0, 0, 0
    for j in range(max(base.j_min, 0), j_max + 1):
        if not out.in_range(j):
            continue
        for J in range(j + 1):
            vin = Fraction(float(base.rule.depth_value(j, J)) if base.in_range(j) else 0.0)
            vout = Fraction(float(out.rule.depth_value(j, J)))
            checked += 1
            if not _pow2_le(abs(vout - vin), -sf * j - N):
                fail_a += 1
            if not _pow2_ge(abs(vout), -sf * j - N):
                fail_b += 1
    return {"checked": checked, "fail_a": fail_a, "fail_b": fail_b,
            "holds": fail_a == 0 and fail_b == 0}


# ---------------------------------------------------------------- norms


@dataclass(frozen=True)
class BesovNorm:
    j: np.ndarray
    a: np.ndarray
    aggregate: float
    method: str


def _depth_counts(j: int) -> np.ndarray:
    return np.array([lattice.count_irreducible(J) for J in range(j + 1)], dtype=float)


def besov_seq_norm(fld: CoefficientField, params: BesovParams, j_max: int,
                   method: str = "auto") -> BesovNorm:
    """a_j = || 2^{j(s-Q/p)} d_{j,.} ||_{l^p(eps,k)} for j = 0..j_max and their l^q norm.

    ``method='depth'`` uses per-depth class counting (depth monotone rules on
    the unit-cube support), ``'brute'`` enumerates all 2^{4j} sites.
    """
    if method == "auto":
        method = "depth" if fld.depth_monotone and fld.support == "L0" else "brute"
    if fld.support != "L0" and not isinstance(fld.rule, ZeroRule):
        raise NotImplementedError("sequence norms need the unit-cube support")
    if method == "depth" and not fld.depth_monotone:
        raise ValueError("depth counting needs a depth monotone rule")
    p, t = params.p, params.t
    js = np.arange(j_max + 1)
    a = np.zeros(len(js))
    for j in js:
        j = int(j)
        if method == "depth":
            if fld.in_range(j):
                v = np.abs(np.asarray(fld.rule.depth_value(j, np.arange(j + 1)), dtype=float))
                s_p = fld.eps_count * float(np.sum(_depth_counts(j) * v ** p))
            else:
                s_p = 0.0
        else:
            k = lattice.L0_indices(j)
            s_p = fld.eps_count * float(np.sum(np.abs(fld.rule_values(j, k)) ** p))
        # overlay entries replace the rule value for their eps only
        for kk, vals in fld.overlay_at_scale(j).items():
            inside = bool(fld.in_support(j, np.array([kk]))[0])
            base = abs(float(fld.rule_values(j, np.array([kk]))[0])) if inside else 0.0
            for v in vals.values():
                s_p += abs(float(v)) ** p - base ** p
        a[j] = 2.0 ** (j * t) * max(s_p, 0.0) ** (1 / p)
    if math.isinf(params.q):
        agg = float(a.max())
    else:
        agg = float(np.sum(a ** params.q) ** (1 / params.q))
    return BesovNorm(js, a, agg, method)


def log2_scale_sup(fld: CoefficientField, j: int) -> float:
    """log2 of sup over (eps, k) of |d_{j,k}| for depth monotone fields."""
    if not fld.depth_monotone:
        raise ValueError("per-scale supremum needs a depth monotone rule")
    best = -math.inf
    if fld.in_range(j):
        J = np.arange(j + 1) if fld.support == "L0" else np.arange(max(j, 0) + 1)
        v = np.abs(np.asarray(fld.rule.depth_value(j, J), dtype=float))
        if np.any(v > 0):
            best = math.log2(float(v.max()))
        elif isinstance(fld.rule, BesovSaturatingRule) and j >= 1:
            best = fld.rule.log2_depth_value(j, 0)
    for vals in fld.overlay_at_scale(j).values():
        m = max(abs(float(v)) for v in vals.values())
        if m > 0:
            best = max(best, math.log2(m))
    return best


def holder_sup_norm(fld: CoefficientField, s: float, j_range=(0, 64)) -> float:
    """sup over (eps, j, k) of 2^{js} |d|, computed in the log domain.

    When the field has no upper scale limit and the last quarter of the
    scanned range still grows, the supremum is reported as infinite.
    """
    j0, j1 = j_range
    logs = np.array([log2_scale_sup(fld, j) + j * s for j in range(j0, j1 + 1)])
    finite = logs[np.isfinite(logs)]
    if finite.size == 0:
        return 0.0
    if fld.j_max is None or fld.j_max > j1:
        tail = logs[-max(4, len(logs) // 4):]
        tail = tail[np.isfinite(tail)]
        if tail.size >= 2 and tail[-1] > tail[0] + 1e-9:
            return math.inf
    top = float(finite.max())
    return math.inf if top > 1023 else 2.0 ** top


# ---------------------------------------------------------------- point evaluation


@dataclass(frozen=True)
class SurrogateWavelet:
    """Envelope kernel (1 - c ||x||^2) exp(-||x|| / r0), bounded by amp exp(-||x|| / r0)."""

    decay_rate: float = 0.5
    amplitude: float = 1.0
    c: float = 0.5

    def __call__(self, x: np.ndarray) -> np.ndarray:
        n = group.gauge_norm_array(x)
        osc = np.cos(math.pi * self.c * n * n)
        return self.amplitude * osc * np.exp(-n / self.decay_rate)


def eval_function(fld: CoefficientField, x, wavelet: SurrogateWavelet | None = None,
                  j_cap: int = 6, radius: int = 3) -> float:
    """Sum of d_{j,k} Psi(2^j o (x_{j,k}^{-1} x)) over nearby sites, j <= j_cap.

    Only one eps is represented; the kernel is a visual stand-in, no
    regularity statement rests on these values.
    """
    wavelet = wavelet or SurrogateWavelet()
    x = np.asarray(x, dtype=float)
    total = 0.0
    for j in range(max(fld.j_min, 0), j_cap + 1):
        if not fld.in_range(j):
            continue
        k0 = np.asarray(lattice.locate(tuple(x), j).k, dtype=np.int64)
        a = np.arange(-radius, radius + 1)
        b = np.arange(-4 * radius, 4 * radius + 1)
        off = np.stack(np.meshgrid(a, a, b, indexing="ij"), -1).reshape(-1, 3)
        # sites k0 * off: the window moves with left translations
        ks = k0 + off
        ks[:, 2] += 2 * (k0[1] * off[:, 0] - k0[0] * off[:, 1])
        d = np.array([fld.value(1, j, kk) for kk in ks]) if fld.overlay else fld.rule_values(j, ks)
        nz = d != 0
        if not np.any(nz):
            continue
        pts = lattice.dyadic_points_array(j, ks[nz])
        u = group.dilate_array(2.0 ** j, group.mul_array(-pts, x))
        total += float(np.sum(d[nz] * wavelet(u)))
    return total


# ---------------------------------------------------------------- file format


def _parse_number(tok: str) -> float:
    return float(Fraction(tok)) if "/" in tok else float(tok)


def _split_args(text: str) -> list[str]:
    out, depth, cur = [], 0, ""
    for ch in text:
        if ch == "," and depth == 0:
            out.append(cur.strip())
            cur = ""
            continue
        depth += ch == "("
        depth -= ch == ")"
        cur += ch
    if cur.strip():
        out.append(cur.strip())
    return out


def parse_rule(text: str, params: BesovParams | None) -> Rule:
    text = text.strip()
    name, _, rest = text.partition("(")
    args = _split_args(rest[:-1]) if rest else []
    if name == "zero":
        return ZeroRule()
    if name == "besov-saturating":
        if params is None:
            raise ValueError("besov-saturating rule needs a params line")
        return BesovSaturatingRule(params)
    if name == "power-law":
        return PowerLawRule(_parse_number(args[0]))
    if name == "hash-random":
        return HashRandomRule(_parse_number(args[0]), int(args[1]) if len(args) > 1 else 0)
    if name == "monofractal-round":
        if len(args) == 2:
            # short form (base, N): rounding exponent taken from the params line
            if params is None:
                raise ValueError("monofractal-round(base,N) needs a params line")
            return MonofractalRoundRule(parse_rule(args[0], params), params.s, int(args[1]))
        return MonofractalRoundRule(parse_rule(args[0], params), _parse_number(args[1]), int(args[2]))
    raise ValueError(f"unknown rule {text!r}")


def dumps_field(fld: CoefficientField, params: BesovParams | None = None) -> str:
    lines = ["field-version 1"]
    if params is not None:
        lines.append(f"params {params.s!r} {params.p!r} {params.q!r}")
    lines.append(f"support {fld.support}")
    lines.append(f"jrange {fld.j_min} {'inf' if fld.j_max is None else fld.j_max}")
    lines.append(f"rule {fld.rule.describe()}")
    for (eps, j, k), v in sorted(fld.overlay.items()):
        lines.append(f"{eps} {j} {k[0]} {k[1]} {k[2]} {float(v)!r}")
    return "\n".join(lines) + "\n"


def loads_field(text: str) -> tuple[CoefficientField, BesovParams | None]:
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines or lines[0] != "field-version 1":
        raise ValueError("missing 'field-version 1' header")
    params = None
    support, j_min, j_max, rule_text = "L0", 0, None, "zero"
    overlay = {}
    for ln in lines[1:]:
        tok = ln.split()
        if tok[0] == "params":
            params = BesovParams(*(_parse_number(t) for t in tok[1:4]))
        elif tok[0] == "support":
            support = tok[1]
        elif tok[0] == "jrange":
            j_min = int(tok[1])
            j_max = None if tok[2] == "inf" else int(tok[2])
        elif tok[0] == "rule":
            rule_text = ln[len("rule"):].strip()
        elif len(tok) == 6:
            eps, j, kp, kq, kr = (int(t) for t in tok[:5])
            overlay[(eps, j, (kp, kq, kr))] = _parse_number(tok[5])
        else:
            raise ValueError(f"unrecognised field line {ln!r}")
    rule = parse_rule(rule_text, params)
    return CoefficientField(rule, overlay, support, j_min, j_max), params


def save_field(path, fld, params=None) -> None:
    Path(path).write_text(dumps_field(fld, params))


def load_field(path) -> tuple[CoefficientField, BesovParams | None]:
    return loads_field(Path(path).read_text())
