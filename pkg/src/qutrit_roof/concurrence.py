"""Concurrence roof on the facet.

On pure states ``C = sqrt(E_lin)``. The roof is the plane through the
anchor values ``C(0, 1/3) = C(1, 0) = 0`` and ``C(0, 1) = 2/sqrt(3)``,
cut off at zero; in plane coordinates it reads ``max(0, (3z - 1 + |u|)/sqrt(3))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .states import check_facet, z_sep_boundary

C_MAX = 2.0 / np.sqrt(3.0)
SLACK_TOL = 1e-8


def c_roof(rbar, z):
    """Exact concurrence roof ``max(0, [(3-|rbar|) z - (1-|rbar|)] / sqrt(3))``."""
    check_facet(rbar, z)
    a = abs(rbar)
    if z <= z_sep_boundary(a):
        return 0.0
    return max(0.0, ((3.0 - a) * z - (1.0 - a)) / np.sqrt(3.0))


def c_roof_array(rbar, z):
    rbar, z = np.broadcast_arrays(np.asarray(rbar, float), np.asarray(z, float))
    a = np.abs(rbar)
    return np.maximum(0.0, ((3.0 - a) * z - (1.0 - a)) / np.sqrt(3.0))


def c_curve(rbar, z, surface):
    """Concurrence characteristic curve ``sqrt(E_curve)`` at a surface node."""
    return float(np.sqrt(max(surface.value_at(rbar, z), 0.0)))


@dataclass
class PlaneReport:
    ok: bool
    min_slack: float
    argmin: tuple
    violations: list = field(default_factory=list)
    nodes: int = 0

    def as_dict(self):
        return {
            "ok": self.ok,
            "min_slack": self.min_slack,
            "argmin": list(self.argmin),
            "violations": [list(v) for v in self.violations],
            "nodes": self.nodes,
        }


def verify_plane(surface, tol=SLACK_TOL):
    """Check ``c_curve >= c_roof - tol`` at every node of ``surface``.

    A convex function that never exceeds the curve and touches it at the
    three anchors is the convexification over the sampled grid.
    """
    rr, zz = np.meshgrid(surface.rbar, surface.z, indexing="ij")
    slack = np.sqrt(np.maximum(surface.values, 0.0)) - c_roof_array(rr, zz)
    k = np.unravel_index(int(np.argmin(slack)), slack.shape)
    bad = np.argwhere(slack < -tol)
    viol = [(float(rr[i, j]), float(zz[i, j]), float(slack[i, j])) for i, j in bad]
    return PlaneReport(
        ok=not viol,
        min_slack=float(slack[k]),
        argmin=(float(rr[k]), float(zz[k])),
        violations=viol,
        nodes=int(slack.size),
    )
