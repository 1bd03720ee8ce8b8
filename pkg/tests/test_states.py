import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_tetra_points
from qutrit_roof import states as S
from qutrit_roof.exceptions import DomainError

PHI_COORDS = (np.sqrt(2.0 / 3.0), np.sqrt(2.0) / 3.0, 0.0)
PLUS_COORDS = (0.0, -1.0 / (3.0 * np.sqrt(2.0)), 1.0 / np.sqrt(6.0))

facet_points = st.tuples(st.floats(-1.0, 1.0), st.floats(0.0, 1.0))


def min_eig_pt(rho):
    return np.linalg.eigvalsh(S.partial_transpose(rho, "A")).min()


# rho_diamond -------------------------------------------------------------


def test_rho_diamond_origin_is_maximally_mixed():
    assert np.allclose(S.rho_diamond(0.0, 0.0, 0.0), np.eye(9) / 9, atol=1e-15)


def test_rho_diamond_phi_corner():
    assert np.allclose(S.rho_diamond(*PHI_COORDS), S.PHI_PROJ, atol=1e-14)


def test_rho_diamond_plus_corner():
    assert np.allclose(S.rho_diamond(*PLUS_COORDS), S.RHO_PLUS, atol=1e-14)


def test_rho_diamond_outside_raises_with_eigenvalue():
    with pytest.raises(DomainError) as info:
        S.rho_diamond(1.0, 0.0, 0.0)
    assert info.value.value < 0


def test_rho_diamond_commutes_with_cyclic_shift(rng):
    shift = np.kron(S.SHIFT, S.SHIFT)
    for p in random_tetra_points(rng, 200):
        rho = S.rho_diamond(*p)
        assert np.max(np.abs(rho @ shift - shift @ rho)) <= 1e-13


def test_rho_diamond_invariant_under_phase_twirl(rng):
    for p in random_tetra_points(rng, 20):
        rho = S.rho_diamond(*p)
        phases = np.exp(1j * rng.uniform(0, 2 * np.pi, size=3))
        v = np.kron(np.diag(phases), np.diag(phases.conj()))
        assert np.max(np.abs(v @ rho @ v.conj().T - rho)) <= 1e-14


# sigma and coordinates ----------------------------------------------------


@pytest.mark.parametrize("rbar", [-1.0, -0.3, 0.0, 0.7, 1.0])
def test_sigma_apex_is_phi(rbar):
    assert np.allclose(S.sigma(rbar, 1.0), S.PHI_PROJ, atol=1e-15)


def test_sigma_corners():
    assert np.allclose(S.sigma(1.0, 0.0), S.RHO_PLUS, atol=1e-15)
    expected = np.zeros(9)
    for j in range(3):
        for k in range(3):
            if j != k:
                expected[S.idx(j, k)] = 1 / 6
    assert np.allclose(S.sigma(0.0, 0.0), np.diag(expected), atol=1e-15)


def test_sigma_outside_raises():
    with pytest.raises(DomainError):
        S.sigma(1.5, 0.2)
    with pytest.raises(DomainError):
        S.sigma(0.0, -0.1)


@given(facet_points)
@settings(max_examples=200, deadline=None)
def test_sigma_matches_rho_diamond(p):
    rbar, z = p
    assert np.max(np.abs(S.sigma(rbar, z) - S.rho_diamond(*S.facet_to_tetra(rbar, z)))) <= 1e-14


def test_facet_to_tetra_vertices():
    assert np.allclose(S.facet_to_tetra(0.0, 1.0), PHI_COORDS, atol=1e-15)
    assert np.allclose(S.facet_to_tetra(1.0, 0.0), PLUS_COORDS, atol=1e-15)


def test_facet_to_tetra_is_barycentric():
    rbar, z = 0.5, 0.5
    minus = S.facet_to_tetra(-1.0, 0.0)
    w = np.array([z, (1 - z) * (1 + rbar) / 2, (1 - z) * (1 - rbar) / 2])
    expected = w @ np.array([PHI_COORDS, PLUS_COORDS, minus])
    assert np.allclose(S.facet_to_tetra(rbar, z), expected, atol=1e-15)


def test_plane_round_trip(rng):
    for _ in range(100):
        rbar, z = rng.uniform(-1, 1), rng.uniform(0, 0.999)
        back = S.plane_to_facet(*S.facet_to_plane(rbar, z))
        assert np.allclose(back, (rbar, z), atol=1e-12)


# distances and partial transpose -----------------------------------------


def test_hs_distance_examples():
    rho = S.sigma(0.3, 0.4)
    assert S.hs_distance(rho, rho) == 0.0
    assert S.hs_distance(S.PHI_PROJ, np.eye(9) / 9) == pytest.approx(np.sqrt(8 / 9), abs=1e-14)


def test_hs_distance_equals_coordinate_distance(rng):
    pts = random_tetra_points(rng, 200)
    for p, q in zip(pts[::2], pts[1::2]):
        direct = np.sqrt(np.trace((S.rho_diamond(*p) - S.rho_diamond(*q)) @ (S.rho_diamond(*p) - S.rho_diamond(*q))))
        assert S.hs_distance(S.rho_diamond(*p), S.rho_diamond(*q)) == pytest.approx(np.linalg.norm(p - q), abs=1e-12)
        assert direct == pytest.approx(np.linalg.norm(p - q), abs=1e-12)


def test_partial_transpose_diagonal_unchanged(rng):
    d = np.diag(rng.dirichlet(np.ones(9)))
    assert np.array_equal(S.partial_transpose(d, "A"), d)
    assert np.array_equal(S.partial_transpose(d, "B"), d)


def test_partial_transpose_phi_eigenvalue():
    flip = np.zeros((9, 9))
    for j in range(3):
        for k in range(3):
            flip[S.idx(j, k), S.idx(k, j)] = 1
    assert np.allclose(S.partial_transpose(S.PHI_PROJ, "A"), flip / 3, atol=1e-15)
    assert min_eig_pt(S.PHI_PROJ) == pytest.approx(-1 / 3, abs=1e-14)


def test_partial_transpose_block_structure(rng):
    for p in random_tetra_points(rng, 10):
        alpha, beta, gamma = S.family_parameters(*p)
        rho = S.rho_diamond(*p)
        pt = S.partial_transpose(rho, "A")
        assert np.allclose(np.diag(pt), np.diag(rho), atol=1e-15)
        for j in range(3):
            for k in range(3):
                if j != k:
                    # beta moves from (jj, kk) to (kj, jk)
                    assert pt[S.idx(k, j), S.idx(j, k)] == pytest.approx(beta, abs=1e-15)
                    assert pt[S.idx(j, j), S.idx(k, k)] == 0.0
        pair = sorted([pt[S.idx(0, 1), S.idx(0, 1)], pt[S.idx(1, 0), S.idx(1, 0)]])
        assert np.allclose(pair, sorted([1 / 9 - alpha / 2 + gamma, 1 / 9 - alpha / 2 - gamma]), atol=1e-15)


def test_partial_transpose_bad_subsystem():
    with pytest.raises(ValueError):
        S.partial_transpose(np.eye(9), "C")


# PPT criterion --------------------------------------------------------------


def test_is_ppt_examples():
    assert S.is_ppt(0.0, 0.0, 0.0)
    assert not S.is_ppt(*PHI_COORDS)
    assert S.is_ppt(*PLUS_COORDS)


def test_is_ppt_agrees_with_eigenvalues(rng):
    for p in random_tetra_points(rng, 1000):
        assert S.is_ppt(*p) == (min_eig_pt(S.rho_diamond(*p)) >= -S.PSD_TOL)


def test_ppt_margin_is_block_min_eigenvalue(rng):
    # spectrum of the partial transpose: the 2x2 blocks plus the jj diagonal 1/9 + alpha
    for p in random_tetra_points(rng, 100):
        alpha = S.family_parameters(*p)[0]
        expected = min(S.ppt_margin(*p), 1 / 9 + alpha)
        assert min_eig_pt(S.rho_diamond(*p)) == pytest.approx(expected, abs=1e-14)


def test_boundary_values():
    assert S.z_ppt_boundary(0.0) == pytest.approx(1 / 3, abs=1e-15)
    assert S.z_ppt_boundary(1.0) == pytest.approx(0.0, abs=1e-15)
    assert S.z_ppt_boundary(0.5) == pytest.approx((-0.75 + np.sqrt(3)) / 3.25, abs=1e-15)
    assert S.z_sep_boundary(0.0) == pytest.approx(1 / 3, abs=1e-15)
    assert S.z_sep_boundary(1.0) == 0.0
    assert S.z_sep_boundary(0.2) == pytest.approx(2 / 7, abs=1e-15)
    assert S.z_sep_boundary(-0.2) == S.z_sep_boundary(0.2)


def test_sep_boundary_solves_implicit_line(rng):
    for rbar in rng.uniform(0, 1, 50):
        z = S.z_sep_boundary(rbar)
        assert z == pytest.approx((1 - rbar * (1 - z)) / 3, abs=1e-15)


def test_ppt_boundary_matches_cone(rng):
    for rbar in rng.uniform(-1, 1, 50):
        zb = S.z_ppt_boundary(rbar)
        for dz, expect in ((-1e-6, True), (1e-6, False)):
            z = zb + dz
            if 0 <= z <= 1:
                assert S.is_ppt(*S.facet_to_tetra(rbar, z)) == expect


# classification and twirl -------------------------------------------------


def test_classify_examples():
    assert S.classify(0.5, 0.25) is S.RegionLabel.PPT_ENTANGLED
    assert S.classify(0.0, 0.2) is S.RegionLabel.SEPARABLE
    assert S.classify(0.0, 0.9) is S.RegionLabel.NPT_ENTANGLED
    assert S.classify(1.2, 0.5) is S.RegionLabel.NONPHYSICAL
    # boundary points take the lower label
    assert S.classify(0.0, 1 / 3) is S.RegionLabel.SEPARABLE
    assert S.classify(0.5, S.z_ppt_boundary(0.5)) is S.RegionLabel.PPT_ENTANGLED


def test_classify_mirror_symmetric():
    for rbar in np.linspace(0, 1, 41):
        for z in np.linspace(0, 1, 41):
            assert S.classify(rbar, z) == S.classify(-rbar, z)


def test_twirl_examples():
    assert np.allclose(S.twirl(S.PHI_PROJ), S.PHI_PROJ, atol=1e-15)
    e01 = np.outer(S.basis_ket(0, 1), S.basis_ket(0, 1))
    assert np.allclose(S.twirl(e01), S.RHO_PLUS, atol=1e-15)


def random_density(rng, rank=3):
    g = rng.normal(size=(9, rank)) + 1j * rng.normal(size=(9, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def test_twirl_properties(rng):
    for _ in range(50):
        rho = random_density(rng)
        t = S.twirl(rho)
        assert np.allclose(S.twirl(t), t, atol=1e-15)
        assert np.trace(t) == pytest.approx(1.0, abs=1e-14)
        S.check_density(t)
        assert np.allclose(S.fidelities(t), S.fidelities(rho), atol=1e-14)


def test_twirl_matches_group_average(rng):
    """Compare with an explicit average over shifts, a phase grid and conjugation."""
    rho = random_density(rng)
    shift = np.kron(S.SHIFT, S.SHIFT)
    grid = np.exp(2j * np.pi * np.arange(3) / 3)
    acc = np.zeros((9, 9), dtype=complex)
    n = 0
    for s in range(3):
        p = np.linalg.matrix_power(shift, s)
        for a in grid:
            for b in grid:
                phases = np.array([1.0, a, b])
                v = np.kron(np.diag(phases), np.diag(phases.conj())) @ p
                r = v @ rho @ v.conj().T
                acc += r + r.conj()
                n += 2
    avg = acc / n
    # the finite phase grid leaves (jk, kj) coherences, which the full torus kills
    mask = np.zeros((9, 9), dtype=bool)
    for i in range(9):
        mask[i, i] = True
    for j in range(3):
        for k in range(3):
            mask[S.idx(j, j), S.idx(k, k)] = True
    got = S.twirl(rho)
    assert np.allclose(got[mask], avg.real[mask], atol=1e-14)


def test_check_density_rejects():
    with pytest.raises(DomainError):
        S.check_density(np.eye(9))
    with pytest.raises(DomainError):
        S.check_density(np.eye(4) / 4)
    bad = np.eye(9) / 9
    bad[0, 1] = 0.1
    with pytest.raises(DomainError):
        S.check_density(bad)
