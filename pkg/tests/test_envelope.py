import numpy as np
import pytest
from scipy.optimize import linprog

from qutrit_roof.curve import Surface
from qutrit_roof.envelope import decomposition_witness, evaluate, lower_envelope, lower_envelope_points
from qutrit_roof.exceptions import DomainError, EnvelopeError
from qutrit_roof.pure import elin_pure, psi_sigma
from qutrit_roof.states import PHI_PROJ, RHO_PLUS, sigma, twirl, z_sep_boundary


def square_grid(n=11):
    g = np.linspace(-1, 1, n)
    u, v = np.meshgrid(g, g, indexing="ij")
    return np.column_stack([u.ravel(), v.ravel()])


def lp_envelope(pts, values, q):
    """Convex envelope at ``q`` as the LP min sum(l f) s.t. sum(l x) = q, l in the simplex."""
    a_eq = np.vstack([pts.T, np.ones(len(pts))])
    res = linprog(values, A_eq=a_eq, b_eq=[*q, 1.0], bounds=(0, None), method="highs")
    assert res.status == 0
    return res.fun


def mixture_from_witness(parts):
    rho = sum(w * twirl(np.outer(psi_sigma(f.rbar, f.z, xi), psi_sigma(f.rbar, f.z, xi))) for w, xi, f in parts)
    val = sum(w * elin_pure(psi_sigma(f.rbar, f.z, xi)) for w, xi, f in parts)
    return rho, val


# generic point sets ----------------------------------------------------------


def test_affine_function_is_its_own_envelope(rng):
    pts = square_grid()
    vals = 0.3 * pts[:, 0] - 1.2 * pts[:, 1] + 0.5
    env = lower_envelope_points(pts, vals)
    for p, v in zip(pts, vals):
        assert env.evaluate_plane(p) == pytest.approx(v, abs=1e-12)
    for q in rng.uniform(-1, 1, (50, 2)):
        assert env.evaluate_plane(q) == pytest.approx(0.3 * q[0] - 1.2 * q[1] + 0.5, abs=1e-12)


def test_clipped_saddle_matches_lp_oracle(rng):
    pts = square_grid()
    vals = np.maximum(0.0, pts[:, 0] ** 2 - pts[:, 1] ** 2)
    env = lower_envelope_points(pts, vals)
    for q in rng.uniform(-1, 1, (50, 2)):
        assert env.evaluate_plane(q) == pytest.approx(lp_envelope(pts, vals, q), abs=1e-9)


def test_random_surface_matches_lp_oracle(rng):
    pts = rng.uniform(-1, 1, (60, 2))
    pts = np.vstack([pts, [[-1, -1], [1, -1], [1, 1], [-1, 1]]])
    vals = rng.normal(size=len(pts))
    env = lower_envelope_points(pts, vals)
    for q in rng.uniform(-1, 1, (50, 2)):
        assert env.evaluate_plane(q) == pytest.approx(lp_envelope(pts, vals, q), abs=1e-9)
    assert env.midpoint_violation(rng) <= 1e-10


def test_duplicate_locations_keep_the_minimum():
    pts = np.array([[0, 0], [1, 0], [0, 1], [0, 0]], dtype=float)
    env = lower_envelope_points(pts, [1.0, 0.0, 0.0, -1.0])
    assert env.evaluate_plane((0.0, 0.0)) == -1.0


def test_collinear_input_raises():
    pts = np.column_stack([np.linspace(0, 1, 5), np.linspace(0, 2, 5)])
    with pytest.raises(EnvelopeError):
        lower_envelope_points(pts, np.zeros(5))
    with pytest.raises(EnvelopeError):
        lower_envelope_points(pts[:2], np.zeros(2))


def test_non_finite_values_raise():
    with pytest.raises(EnvelopeError):
        lower_envelope_points(square_grid(3), [0, 0, 0, 0, np.nan, 0, 0, 0, 0])


def test_outside_query_raises():
    env = lower_envelope_points(square_grid(3), np.zeros(9))
    with pytest.raises(DomainError):
        env.evaluate_plane((2.0, 0.0))


def test_incomplete_surface_raises(small_surface):
    s = small_surface
    half = s.half()
    partial = Surface(s.rbar[half], s.z, s.values[half], s.xi[half], s.converged[half], s.grad_norm[half])
    with pytest.raises(EnvelopeError):
        lower_envelope(partial)


def test_witness_needs_parameters():
    env = lower_envelope_points(square_grid(3), np.zeros(9))
    with pytest.raises(EnvelopeError):
        env.decomposition_witness((0.0, 0.0))


# facet envelope --------------------------------------------------------------


def test_envelope_below_samples(small_surface, small_envelope):
    rr, zz, vals, _ = small_surface.points()
    for r, z, v in zip(rr, zz, vals):
        assert evaluate(small_envelope, (r, z)) <= v + 1e-12


def test_envelope_convex(small_envelope, rng):
    assert small_envelope.midpoint_violation(rng, 2000) <= 1e-10


def test_envelope_mirror_symmetric(small_surface, small_envelope):
    for r in small_surface.rbar:
        for z in small_surface.z:
            assert evaluate(small_envelope, (r, z)) == pytest.approx(evaluate(small_envelope, (-r, z)), abs=1e-12)


def test_envelope_examples(small_surface, small_envelope):
    env = small_envelope
    assert evaluate(env, (0.0, 1.0)) == pytest.approx(4 / 3, abs=1e-12)
    assert evaluate(env, (0.5, 0.2)) == pytest.approx(0.0, abs=1e-12)
    # vertex queries return the stored value
    for v in env.vertices[:50]:
        assert env.evaluate_plane(env.points[v]) == pytest.approx(env.values[v], abs=1e-14)


def test_envelope_continuous_across_edges(small_envelope, rng):
    env = small_envelope
    for t in rng.integers(len(env.triangles), size=50):
        a, b = env.points[env.triangles[t][:2]]
        m = 0.5 * (a + b)
        inside = [np.dot(pl, [*m, 1.0]) for pl in env.planes[[t]]]
        assert env.evaluate_plane(m) == pytest.approx(inside[0], abs=1e-12)


def test_zero_region_is_separable_triangle(small_surface, small_envelope):
    # the fixture grid contains z = 1/3, and u + 3z = 1 is a straight border in plane coordinates
    step = small_surface.z[1] - small_surface.z[0]
    for r in small_surface.rbar:
        for z in small_surface.z:
            e = evaluate(small_envelope, (r, z))
            zs = z_sep_boundary(r)
            if z <= zs:
                assert e <= 1e-12
            elif z > zs + step:
                assert e > 1e-12


def test_witness_at_node_is_single(small_envelope):
    parts = decomposition_witness(small_envelope, (0.0, 1.0))
    assert len(parts) == 1 and parts[0][0] == 1.0


def test_witness_on_separable_border(small_envelope, rng):
    for r in rng.uniform(0, 1, 10):
        for _, xi, f in decomposition_witness(small_envelope, (r, z_sep_boundary(r))):
            assert elin_pure(psi_sigma(f.rbar, f.z, xi)) <= 1e-8


def test_witness_reconstructs_state(small_envelope, rng):
    for _ in range(100):
        r = rng.uniform(-1, 1)
        z = rng.uniform(0.0, 1.0)
        parts = decomposition_witness(small_envelope, (r, z))
        assert sum(w for w, *_ in parts) == pytest.approx(1.0, abs=1e-12)
        rho, val = mixture_from_witness(parts)
        assert np.max(np.abs(rho - sigma(r, z))) <= 1e-8
        assert val == pytest.approx(evaluate(small_envelope, (r, z)), abs=1e-8)
        assert np.trace(rho @ PHI_PROJ) == pytest.approx(z, abs=1e-8)
        assert np.trace(rho @ RHO_PLUS) == pytest.approx((1 + r) * (1 - z) / 6, abs=1e-8)


def test_refinement_monitor(small_envelope):
    """Doubling the grid lowers the envelope by at most a Lipschitz bound times the step."""
    from qutrit_roof.curve import GridSpec, sweep_grid

    fine = lower_envelope(sweep_grid(GridSpec(61, 61)))
    step = 1 / 30
    lipschitz = 4.0  # generous: the curve rises from 0 to 4/3 over a distance of at least 1/3 in z
    for r in np.linspace(0, 1, 11):
        for z in np.linspace(0, 1, 11):
            diff = evaluate(small_envelope, (r, z)) - evaluate(fine, (r, z))
            assert -1e-12 <= diff <= lipschitz * step
