import numpy as np
import pytest

from heisenberg_mfa import group, lattice, leaders, synthesis
from heisenberg_mfa.synthesis import BesovParams, CoefficientField


def _points_in_cube(jp, y, n=5):
    t = (np.arange(n) + 0.5) / n
    U = np.stack(np.meshgrid(t, t, t, indexing="ij"), -1).reshape(-1, 3)
    base = np.array(lattice.dyadic_point((jp, tuple(y))), dtype=float)
    return group.mul_array(base, group.dilate_array(2.0 ** -jp, U))


def test_contained_against_geometry(rng):
    j, k = 1, (1, 0, 2)
    nb = {i.k for i in lattice.neighborhood((j, k))}
    jp = 3
    base = np.array(lattice.dyadic_point((j, k)))
    lo = lattice.locate(base, jp).k
    checked_in = checked_out = 0
    for _ in range(400):
        y = (lo[0] + int(rng.integers(-12, 12)), lo[1] + int(rng.integers(-12, 12)),
             lo[2] + int(rng.integers(-150, 150)))
        inside = [lattice.locate(p, j).k in nb for p in _points_in_cube(jp, y)]
        if leaders.contained(j, k, jp, y):
            assert all(inside)
            checked_in += 1
        elif not any(inside):
            checked_out += 1
    assert checked_in > 10 and checked_out > 10


def test_subcubes_cover_neighborhood():
    # at jp = j every neighbor cube is contained in the neighborhood
    y = leaders.subcubes(2, (1, 2, 3), 2)
    assert {tuple(r) for r in y.tolist()} == {i.k for i in lattice.neighborhood((2, (1, 2, 3)))}
    # one level down: 16 children per neighbor cube, minus the ones that straddle the edge
    y1 = leaders.subcubes(2, (1, 2, 3), 3)
    assert 0 < len(y1) <= 35 * 16


def test_contained_array_matches(rng):
    j, k, jp = 2, (3, 1, 5), 5
    y = rng.integers(-10, 60, size=(3000, 3))
    y[:, 2] = rng.integers(-300, 1200, size=3000)
    arr = leaders.contained_array(j, k, jp, y)
    assert arr.tolist() == [leaders.contained(j, k, jp, r) for r in y.tolist()]
    with pytest.raises(OverflowError):
        leaders.contained_array(0, k, 31, y)


def test_exact_equals_windowed_F(F, rng):
    for x in rng.uniform(0, 1, size=(8, 3)):
        for j in (1, 2, 3, 4):
            e = leaders.leader_exact(F, x, j)
            w = leaders.leader_windowed(F, x, j, delta=2)
            assert e.complete
            assert e.value == pytest.approx(w.value, rel=1e-12)


def test_exact_equals_windowed_rounded(rng):
    M = synthesis.monofractal_round(synthesis.besov_saturating_field(BesovParams(3, 2, 2)), 1, 1)
    for x in rng.uniform(0, 1, size=(5, 3)):
        for j in (1, 2, 3):
            assert leaders.leader(M, x, j, "exact") == pytest.approx(leaders.leader(M, x, j, "windowed", 2))


def test_leader_at_origin(F):
    # the origin cube holds the depth 0 site, which dominates every scale
    P = BesovParams(2, 2, 2)
    for j in range(1, 10):
        assert leaders.leader(F, (0.0, 0.0, 0.0), j) == pytest.approx(j ** -P.beta)


def test_overlay_seen():
    f = synthesis.zero_field().with_overlay({(2, 6, (16, 16, 256)): 0.3})
    x = lattice.dyadic_point((6, (16, 16, 256)))
    assert leaders.leader(f, x, 3, "exact") == 0.3
    assert leaders.leader(f, x, 3, "windowed", 3) == 0.3
    far = (0.9, 0.05, 0.1)
    assert leaders.leader(f, far, 3, "exact") == 0


def test_non_monotone_field():
    f = CoefficientField(synthesis.HashRandomRule(1.0, seed=1))
    assert not f.depth_monotone
    with pytest.raises(ValueError):
        leaders.leader_exact(f, (0.5, 0.5, 0.5), 2)
    v = leaders.leader(f, (0.5, 0.5, 0.5), 2, "auto", delta=1)
    assert 0.125 <= v <= 0.25


def test_delta_limits(F):
    with pytest.raises(ValueError):
        leaders.leader_windowed(F, (0.1, 0.1, 0.1), 2, delta=leaders.MAX_DELTA + 1)
    with pytest.raises(ValueError):
        leaders.leader_windowed(F, (0.1, 0.1, 0.1), 2, delta=-1)
    with pytest.raises(ValueError):
        leaders.leader(F, (0.1, 0.1, 0.1), 2, mode="bogus")
