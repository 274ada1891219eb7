from fractions import Fraction

import numpy as np
import pytest

from heisenberg_mfa import carnot, group
from heisenberg_mfa.carnot import ENGEL, HEISENBERG, StratificationSpec

SPECS = [HEISENBERG, ENGEL, carnot.abelian(3)]


def test_shipped_specs_valid():
    for s in SPECS:
        assert carnot.validate_spec(s) == []
    assert carnot.abelian(4).step == 1


def test_hom_dim():
    assert HEISENBERG.hom_dim == 4
    assert ENGEL.hom_dim == 7
    assert carnot.abelian(6).hom_dim == 6
    assert carnot.hom_dim(ENGEL) == 7


def test_wrong_layer_reported():
    bad = StratificationSpec((2, 1), {(0, 1, 0): 1})
    errs = carnot.validate_spec(bad)
    assert any("grading" in e for e in errs)


def test_jacobi_violation_reported():
    # [X1,X2] = Y, [X3,Y] = W: the Jacobi sum on (X1, X2, X3) is W
    s = StratificationSpec((3, 1, 1), {(0, 1, 3): 1, (2, 3, 4): 1})
    errs = carnot.validate_spec(s)
    assert any("jacobi" in e.lower() for e in errs)
    assert not any("grading" in e for e in errs)


def test_rank_failure_reported():
    # layer 2 is never reached by brackets of layer 1
    s = StratificationSpec((2, 1), {})
    assert any("stratification" in e for e in carnot.validate_spec(s))


def test_bch_matches_group_law(rng):
    a = rng.normal(size=(10_000, 3)) * 3
    b = rng.normal(size=(10_000, 3)) * 3
    assert np.max(np.abs(carnot.bch_mul(HEISENBERG, a, b) - group.mul_array(a, b))) <= 1e-12
    assert np.allclose(carnot.bch_mul(HEISENBERG, [1, 0, 0], [0, 1, 0]), [1, 1, -2])


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.name)
def test_bch_associative(spec, rng):
    a, b, c = (rng.uniform(-2, 2, size=(10_000, spec.dim)) for _ in range(3))
    lhs = carnot.bch_mul(spec, carnot.bch_mul(spec, a, b), c)
    rhs = carnot.bch_mul(spec, a, carnot.bch_mul(spec, b, c))
    assert np.max(np.abs(lhs - rhs)) <= 1e-10


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.name)
def test_inverse_is_negation(spec, rng):
    x = rng.normal(size=(100, spec.dim))
    assert np.allclose(carnot.bch_mul(spec, x, carnot.c_inv(x)), 0, atol=1e-12)


def test_abelian_is_addition(rng):
    a, b = rng.normal(size=(2, 50, 3))
    assert np.array_equal(carnot.bch_mul(carnot.abelian(3), a, b), a + b)


def test_step_four_rejected():
    s = StratificationSpec((2, 1, 1, 1), {(0, 1, 2): 1, (0, 2, 3): 1, (0, 3, 4): 1})
    with pytest.raises(NotImplementedError):
        carnot.bch_mul(s, np.zeros(5), np.zeros(5))


def test_dilation(rng):
    x = rng.normal(size=(50, 3))
    assert np.allclose(carnot.c_dilate(HEISENBERG, 1.7, x), group.dilate_array(1.7, x))
    assert np.array_equal(carnot.c_dilate(ENGEL, 1, x[:, :1].repeat(4, 1)), x[:, :1].repeat(4, 1))
    with pytest.raises(ValueError):
        carnot.c_dilate(ENGEL, 0, np.zeros(4))
    a, b = rng.normal(size=(2, 200, 4))
    lam = 0.6
    lhs = carnot.c_dilate(ENGEL, lam, carnot.bch_mul(ENGEL, a, b))
    rhs = carnot.bch_mul(ENGEL, carnot.c_dilate(ENGEL, lam, a), carnot.c_dilate(ENGEL, lam, b))
    assert np.allclose(lhs, rhs, atol=1e-12)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.name)
def test_gauge_norm_homogeneous(spec, rng):
    x = rng.normal(size=(1000, spec.dim))
    for lam in (2.0 ** -8, 0.3, 5.0, 2.0 ** 8):
        n0 = carnot.c_gauge_norm(spec, x)
        n1 = carnot.c_gauge_norm(spec, carnot.c_dilate(spec, lam, x))
        assert np.max(np.abs(n1 - lam * n0) / (lam * n0)) <= 1e-12
    for i in range(spec.dim):
        e = np.zeros(spec.dim)
        e[i] = 1
        assert carnot.c_gauge_norm(spec, e) == pytest.approx(1)


def test_heisenberg_carnot_norm_formula():
    x = np.array([0.5, -1.0, 0.7])
    assert carnot.c_gauge_norm(HEISENBERG, x) == pytest.approx((0.5 ** 4 + 1 + 0.49) ** 0.25)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.name)
def test_volume_scaling_exponent(spec):
    assert carnot.volume_scaling_exponent(spec, rng=0) == pytest.approx(spec.hom_dim, abs=0.05)


def test_volume_ratio_two_radii():
    v1 = carnot.ball_volume_mc(HEISENBERG, 1.0, 400_000, rng=1)
    v2 = carnot.ball_volume_mc(HEISENBERG, 2.0, 400_000, rng=2)
    assert np.log2(v2 / v1) == pytest.approx(4, abs=0.05)


def test_sampling_check_radius_two():
    r = carnot.sampling_check(HEISENBERG, np.eye(3), 2.0, sample_count=10_000, rng=0)
    assert r["c1_holds"] and r["min_points"] >= 1
    assert r["sample_count"] == 10_000


def test_sampling_check_small_radius_fails():
    r = carnot.sampling_check(HEISENBERG, np.eye(3), 0.05, sample_count=500, rng=0)
    assert r["min_points"] == 0 and not r["c1_holds"]


def test_sampling_errors():
    with pytest.raises(ValueError):
        carnot.sampling_check(HEISENBERG, np.zeros((0, 3)), 1.0, 10)
    with pytest.raises(ValueError):
        carnot.sampling_check(HEISENBERG, np.eye(3), 0.0, 10)


def test_overlap_count_matches_lattice():
    assert carnot.overlap_count(HEISENBERG, np.eye(3), 1.0, norm=group.gauge_norm_array, rng=0) == 43


def test_parse_spec_exact():
    text = "# engel\nlayers = [2, 1, 1]\nbracket 1 2 3 1\nbracket 1 3 4 1/2\n"
    s = carnot.parse_spec(text, "e")
    assert s.brackets[(0, 2, 3)] == Fraction(1, 2)
    assert s.brackets[(2, 0, 3)] == Fraction(-1, 2)
    assert carnot.validate_spec(s) == []
    with pytest.raises(ValueError):
        carnot.parse_spec("bracket 1 2 3 1\n")
    with pytest.raises(ValueError):
        carnot.parse_spec("layers = [2,1]\nfoo\n")


def test_load_spec(tmp_path):
    p = tmp_path / "heis.txt"
    p.write_text("layers = [2,1]\nbracket 1 2 3 -4\n")
    s = carnot.load_spec(p)
    assert s.name == "heis" and s.hom_dim == 4
    a, b = np.array([0.3, 0.2, 0.1]), np.array([-1.0, 0.5, 2.0])
    assert np.allclose(carnot.bch_mul(s, a, b), group.mul(a, b))
