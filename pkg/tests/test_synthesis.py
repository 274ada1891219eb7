import math
from fractions import Fraction

import numpy as np
import pytest

from heisenberg_mfa import group, lattice, synthesis
from heisenberg_mfa.synthesis import BesovParams, CoefficientField


def test_params():
    P = BesovParams(2, 2, 2)
    assert P.borderline and P.t == 0 and P.beta == 1.5
    assert not BesovParams(3, 2, 2).borderline
    assert BesovParams(3, 2, math.inf).beta == 0.5
    with pytest.raises(ValueError):
        BesovParams(0.5, 2, 2)
    with pytest.raises(ValueError):
        BesovParams(5, 0.5, 2)
    with pytest.raises(ValueError):
        BesovParams(5, 2, 0.5)


def test_e_star():
    assert synthesis.e_star(0.0) == 1
    assert synthesis.e_star(1.999) == 1
    assert synthesis.e_star(5.3) == 5
    assert synthesis.e_star(-0.4) == -1
    x = np.random.default_rng(0).uniform(-50, 50, 10_000)
    e = synthesis.e_star(x)
    assert np.all(np.abs(x - e) <= 1) and np.all(e != 0) and np.all(e == np.round(e))


def test_F_values(F):
    P = BesovParams(2, 2, 2)
    assert F.rule_values(0, np.array([[0, 0, 0]]))[0] == 0
    # j = 3, depth 0 (origin) and depth 3 (odd k_p)
    v = F.rule_values(3, np.array([[0, 0, 0], [1, 0, 0]]))
    assert v[0] == pytest.approx(3 ** -P.beta)
    assert v[1] == pytest.approx(2.0 ** -6 * 3 ** -P.beta)
    assert F.depth_monotone


def _round_examples(s, N, j):
    e = j * s + N
    rule = synthesis.MonofractalRoundRule(synthesis.PowerLawRule(0), s, N)
    return e, rule


def test_monofractal_round_examples():
    s, N, j = 1.0, 2, 3
    e = j * s + N
    unit = 2.0 ** -e
    base = CoefficientField(synthesis.ZeroRule(), {(1, j, (0, 0, 0)): 5.3 * unit,
                                                   (2, j, (0, 0, 0)): -0.4 * unit})
    out = synthesis.monofractal_round(base, s, N)
    assert out.value(1, j, (0, 0, 0)) == 5 * unit
    assert out.value(2, j, (0, 0, 0)) == -1 * unit
    assert out.value(3, j, (0, 0, 0)) == unit  # zero input rounds up to one unit
    with pytest.raises(ValueError):
        synthesis.monofractal_round(base, s, 0)


@pytest.mark.parametrize("params,s,N", [((2, 2, 2), 2, 3), ((3, 2, 2), 1, 1), ((2, 2, 2), 1.5, 2)])
def test_sandwich_exact(params, s, N):
    base = synthesis.besov_saturating_field(BesovParams(*params))
    r = synthesis.monofractal_sandwich(base, s, N, 24)
    assert r["holds"], r


def test_sandwich_zero_base_integral():
    assert synthesis.monofractal_sandwich(synthesis.zero_field(), 1, 2, 24)["holds"]


def test_sandwich_zero_base_half_integer_rounding():
    # at s = 1.5 the bound 2^{-js-N} is irrational for odd j and the zero base
    # sits exactly on it; the float result is the nearest double
    out = synthesis.monofractal_round(synthesis.zero_field(), 1.5, 2)
    for j in range(21):
        v = out.rule.depth_value(j, 0)
        assert v == 2.0 ** (-1.5 * j - 2)


def test_sandwich_brute_small_scale():
    # exact check on every site at j <= 3, including rule_values
    P = BesovParams(2, 2, 2)
    base = synthesis.besov_saturating_field(P)
    out = synthesis.monofractal_round(base, 2, 3)
    for j in range(1, 4):
        k = lattice.L0_indices(j)
        vin = base.rule_values(j, k)
        vout = out.rule_values(j, k)
        for a, b in zip(vin, vout):
            a, b = Fraction(float(a)), Fraction(float(b))
            assert abs(b - a) * 2 ** (2 * j) <= Fraction(1, 2 ** 3)
            assert abs(b) >= Fraction(1, 2 ** (2 * j + 3))


def test_besov_norm_depth_vs_brute(F):
    P = BesovParams(2, 2, 2)
    a = synthesis.besov_seq_norm(F, P, 5, method="depth").a
    b = synthesis.besov_seq_norm(F, P, 5, method="brute").a
    assert np.max(np.abs(a - b) / np.maximum(b, 1e-300)) <= 1e-12


def test_besov_norm_bound(F):
    P = BesovParams(2, 2, 2)
    a = synthesis.besov_seq_norm(F, P, 14).a
    assert a[0] == 0
    for j in range(1, 15):
        assert a[j] <= 15 ** (2 / P.p) * j ** -P.beta * (1 + j * 2.0 ** -4) ** (1 / P.p)


def test_besov_norm_homogeneous(F):
    P = BesovParams(2, 2, 2)
    a = synthesis.besov_seq_norm(F, P, 8)
    b = synthesis.besov_seq_norm(F.scaled(-3.0), P, 8)
    assert np.allclose(b.a, 3 * a.a, rtol=1e-12)
    assert b.aggregate == pytest.approx(3 * a.aggregate, rel=1e-12)


def test_besov_norm_zero_and_overlay(F):
    P = BesovParams(2, 2, 2)
    z = synthesis.besov_seq_norm(synthesis.zero_field(), P, 4)
    assert np.all(z.a == 0) and z.aggregate == 0
    f = synthesis.zero_field().with_overlay({(1, 2, (1, 1, 1)): 0.5})
    n = synthesis.besov_seq_norm(f, P, 3)
    assert n.a[2] == pytest.approx(0.5)
    brute = synthesis.besov_seq_norm(f, P, 3, method="brute")
    assert np.allclose(n.a, brute.a)


def test_overlay_replaces_rule(F):
    k = (1, 0, 0)
    f = F.with_overlay({(4, 3, k): 7.0})
    assert f.value(4, 3, k) == 7.0
    assert f.value(5, 3, k) == F.value(5, 3, k)
    assert f.abs_max(3, np.array([k]))[0] == 7.0
    with pytest.raises(ValueError):
        CoefficientField(overlay={(0, 1, (0, 0, 0)): 1.0})


def test_holder_sup_norm(F):
    P = synthesis.PowerLawRule(1.0)
    f = CoefficientField(P)
    assert synthesis.holder_sup_norm(f, 1.0) == pytest.approx(1.0)
    assert synthesis.holder_sup_norm(f, 0.5) == pytest.approx(1.0)
    assert synthesis.holder_sup_norm(f, 1.5) == math.inf
    assert synthesis.holder_sup_norm(synthesis.zero_field(), 3) == 0


def test_hash_random_deterministic():
    r = synthesis.HashRandomRule(1.0, seed=7)
    k = lattice.L0_indices(2)
    v1, v2 = r.values(2, k), r.values(2, k)
    assert np.array_equal(v1, v2)
    assert np.all((v1 >= 0.25 * 0.5) & (v1 <= 0.25))
    assert not np.array_equal(v1, synthesis.HashRandomRule(1.0, seed=8).values(2, k))


def test_translation_covariance(F, rng):
    k0 = (2, -1, 3)
    g = F.shifted(k0)
    assert not g.depth_monotone
    x0 = lattice.dyadic_point((0, k0))
    for x in rng.uniform(0, 1, size=(20, 3)):
        v0 = synthesis.eval_function(F, x, j_cap=4)
        v1 = synthesis.eval_function(g, group.mul(x0, x), j_cap=4)
        assert v1 == pytest.approx(v0, rel=1e-12, abs=1e-12)
    j = 3
    k = lattice.L0_indices(j)
    shift = np.array([k0[0] << j, k0[1] << j, k0[2] << (2 * j)])
    moved = np.array([lattice.kmul(tuple(shift), tuple(r)) for r in k.tolist()])
    assert np.array_equal(g.rule_values(j, moved), F.rule_values(j, k))


def test_field_file_round_trip(tmp_path, F, rng):
    P = BesovParams(2, 2, 2)
    f = F.with_overlay({(3, 2, (1, 2, 3)): Fraction(3, 8), (1, 5, (0, 0, 1)): -0.1})
    path = tmp_path / "F.field"
    synthesis.save_field(path, f, P)
    g, P2 = synthesis.load_field(path)
    assert P2 == P
    assert g.overlay == {k: float(v) for k, v in f.overlay.items()}
    for j in range(1, 9):
        k = rng.integers(0, 1 << j, size=(125_000, 3))
        k[:, 2] = rng.integers(0, 1 << (2 * j), size=125_000)
        assert np.array_equal(g.rule_values(j, k), f.rule_values(j, k))


def test_monofractal_file_forms():
    P = BesovParams(2, 2, 2)
    text = "field-version 1\nparams 2 2 2\nsupport L0\njrange 1 inf\nrule monofractal-round(besov-saturating,3)\n"
    f, _ = synthesis.loads_field(text)
    assert f.rule.s == 2 and f.rule.N == 3
    g = synthesis.monofractal_round(synthesis.besov_saturating_field(P), 1.5, 2)
    h, _ = synthesis.loads_field(synthesis.dumps_field(g, P))
    assert h.rule.s == 1.5 and h.rule.N == 2
    k = lattice.L0_indices(3)
    assert np.array_equal(h.rule_values(3, k), g.rule_values(3, k))


def test_field_file_errors():
    with pytest.raises(ValueError):
        synthesis.loads_field("rule zero\n")
    with pytest.raises(ValueError):
        synthesis.loads_field("field-version 1\nrule besov-saturating\n")
    with pytest.raises(ValueError):
        synthesis.loads_field("field-version 1\nrule nonsense\n")
    with pytest.raises(ValueError):
        synthesis.loads_field("field-version 1\n1 2 3\n")


def test_eval_function_zero():
    assert synthesis.eval_function(synthesis.zero_field(), (0.3, 0.3, 0.3)) == 0
