import numpy as np
import pytest

from qutrit_roof import kernels
from qutrit_roof.curve import objective

try:
    kernels.get_backend("cython")
    BACKENDS = ["python", "cython"]
except ImportError:  # fallback-only install
    BACKENDS = ["python"]


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("ndim", [2, 4])
def test_value_matches_pure_state_formula(backend, ndim, rng):
    mod = kernels.get_backend(backend)
    for _ in range(50):
        rbar, z = rng.uniform(-1, 1), rng.uniform()
        ang = rng.uniform(-np.pi, np.pi, ndim)
        xi = kernels.xi_from_angles(ang[None, :])[0]
        assert mod.elin_angles(rbar, z, ang) == pytest.approx(objective(rbar, z, xi), abs=1e-13)


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("ndim", [2, 4])
def test_gradient_matches_finite_differences(backend, ndim, rng):
    mod = kernels.get_backend(backend)
    h = 1e-6
    for _ in range(20):
        rbar, z = rng.uniform(-1, 1), rng.uniform()
        ang = rng.uniform(-np.pi, np.pi, ndim)
        _, g = mod.elin_angles_grad(rbar, z, ang)
        fd = [(mod.elin_angles(rbar, z, ang + h * e) - mod.elin_angles(rbar, z, ang - h * e)) / (2 * h) for e in np.eye(ndim)]
        assert np.allclose(g, fd, atol=1e-8)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernels not built")
@pytest.mark.parametrize("ndim", [2, 4])
def test_backend_parity(ndim, rng):
    py, cy = kernels.get_backend("python"), kernels.get_backend("cython")
    for rbar, z in [(0.0, 0.0), (0.5, 0.5), (0.9, 0.3), (-0.4, 0.7), (0.2, 0.25)]:
        ang = rng.uniform(-np.pi, np.pi, ndim)
        assert cy.elin_angles(rbar, z, ang) == pytest.approx(py.elin_angles(rbar, z, ang), abs=1e-14)
        assert np.allclose(cy.elin_angles_grad(rbar, z, ang)[1], py.elin_angles_grad(rbar, z, ang)[1], atol=1e-13)
        starts = rng.uniform(-np.pi, np.pi, (16, ndim))
        vp = py.minimize_angles(rbar, z, starts)[1]
        vc = cy.minimize_angles(rbar, z, starts)[1]
        assert vc == pytest.approx(vp, abs=1e-9)


def test_bad_angle_length():
    with pytest.raises(ValueError):
        kernels.elin_angles(0.0, 0.5, np.zeros(3))


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")
