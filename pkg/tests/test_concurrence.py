import numpy as np
import pytest

from qutrit_roof.concurrence import C_MAX, c_curve, c_roof, c_roof_array, verify_plane
from qutrit_roof.curve import Surface
from qutrit_roof.exceptions import DomainError
from qutrit_roof.states import z_sep_boundary


def barycentric(rbar, z):
    return np.array([z, (1 - z) * (1 + rbar) / 2, (1 - z) * (1 - rbar) / 2])


def test_examples():
    assert c_roof(0.0, 1.0) == pytest.approx(2 / np.sqrt(3), abs=1e-15)
    assert C_MAX == pytest.approx(np.sqrt(4 / 3), abs=1e-15)
    assert c_roof(1.0, 0.0) == 0.0
    assert c_roof(0.0, 1 / 3) == 0.0
    assert c_roof(0.2, 2 / 7) == 0.0
    assert c_roof(-0.5, 0.8) == c_roof(0.5, 0.8)
    with pytest.raises(DomainError):
        c_roof(0.0, 1.5)


def test_plane_refit_through_anchors():
    # plane a u + b z + c through (u, z, C) = (0, 1/3, 0), (1, 0, 0), (0, 1, 2/sqrt3), u = (1 - z) rbar
    anchors = np.array([[0.0, 1 / 3, 1.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
    coef = np.linalg.solve(anchors, [0.0, 0.0, 2 / np.sqrt(3)])
    rng = np.random.default_rng(3)
    for _ in range(200):
        r, z = rng.uniform(0, 1), rng.uniform()
        plane = coef @ [(1 - z) * r, z, 1.0]
        assert c_roof(r, z) == pytest.approx(max(plane, 0.0), abs=1e-12)


def test_zero_set_is_separable_region(rng):
    for _ in range(500):
        r, z = rng.uniform(-1, 1), rng.uniform()
        assert (c_roof(r, z) == 0.0) == (z <= z_sep_boundary(r) + 1e-15)


def test_affine_in_barycentric_weights(rng):
    """Midpoints of facet points in the entangled region map to midpoint values."""
    done = 0
    while done < 200:
        p = (rng.uniform(0, 1), rng.uniform(0.5, 1))
        q = (rng.uniform(0, 1), rng.uniform(0.5, 1))
        w = 0.5 * (barycentric(*p) + barycentric(*q))
        z = w[0]
        r = (w[1] - w[2]) / (1 - z)
        if min(c_roof(*p), c_roof(*q)) <= 0:
            continue
        assert c_roof(r, z) == pytest.approx(0.5 * (c_roof(*p) + c_roof(*q)), abs=1e-12)
        done += 1


def test_vectorized_matches_scalar(rng):
    r, z = rng.uniform(-1, 1, 100), rng.uniform(0, 1, 100)
    assert np.allclose(c_roof_array(r, z), [c_roof(a, b) for a, b in zip(r, z)], atol=1e-15)


def test_curve_values(small_surface):
    assert c_curve(0.4, 1.0, small_surface) == pytest.approx(2 / np.sqrt(3), abs=1e-12)
    assert c_curve(0.6, 0.0, small_surface) == pytest.approx(0.0, abs=1e-8)
    for z in small_surface.z:
        assert c_curve(1.0, z, small_surface) == pytest.approx(np.sqrt(4 * z / 3), abs=1e-8)


def test_plus_edge_slack(small_surface):
    rep = verify_plane(small_surface)
    i = np.flatnonzero(small_surface.rbar == 1.0)[0]
    for j, z in enumerate(small_surface.z):
        slack = np.sqrt(small_surface.values[i, j]) - c_roof(1.0, z)
        assert slack == pytest.approx(2 / np.sqrt(3) * (np.sqrt(z) - z), abs=1e-8)
    assert rep.ok and rep.min_slack >= -1e-8 and rep.nodes == small_surface.values.size


def test_corner_slack_is_zero(small_surface):
    for r, z in [(0.0, 1.0), (1.0, 0.0), (-1.0, 0.0)]:
        assert c_curve(r, z, small_surface) - c_roof(r, z) == pytest.approx(0.0, abs=1e-8)


def test_roof_squared_below_linear_entropy_roof(small_surface, small_envelope):
    for r in small_surface.rbar:
        for z in small_surface.z:
            assert c_roof(r, z) ** 2 <= small_envelope.evaluate((r, z)) + 1e-6


def test_violation_is_reported(small_surface):
    s = small_surface
    bad = s.values.copy()
    j = np.flatnonzero(np.isclose(s.z, 0.8))[0]
    i = np.flatnonzero(s.rbar == 0.0)[0]
    bad[i, j] = 0.0
    rep = verify_plane(Surface(s.rbar, s.z, bad, s.xi, s.converged, s.grad_norm))
    assert not rep.ok
    assert rep.argmin == (0.0, pytest.approx(0.8))
    assert len(rep.violations) == 1
    assert rep.as_dict()["violations"][0][:2] == [0.0, pytest.approx(0.8)]
