"""Backend selection for the minimization kernels.

The compiled extension is used when it imports; otherwise the numpy
fallback. Set ``QUTRIT_ROOF_BACKEND=python`` to force the fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels
if os.environ.get("QUTRIT_ROOF_BACKEND", "").lower() != "python":
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:
        pass


def get_backend(name=None):
    """Return the kernel module ``"cython"``, ``"python"`` or the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")


elin_angles = _impl.elin_angles
elin_angles_grad = _impl.elin_angles_grad
minimize_angles = _impl.minimize_angles
xi_from_angles = _pykernels.xi_from_angles
