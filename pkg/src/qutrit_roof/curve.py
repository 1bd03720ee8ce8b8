"""Characteristic curve: minimum pure-state linear entropy at fixed fidelities.

For every facet point (rbar, z) the ansatz ``psi_sigma(rbar, z, xi)`` is
minimized over real normalized ``xi``. Three modes are available:

``reduced2``
    two angles with ``c = a`` and ``f = d``; four sign branches per start.
``full4``
    four angles covering both unit spheres.
``hybrid`` (default)
    ``reduced2`` followed by a ``full4`` descent seeded from the reduced
    minimizer and a few random points; the smaller value wins.
"""

from __future__ import annotations

import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from . import kernels
from .pure import check_params, elin_pure, psi_sigma, swap_params
from .states import check_facet

MODES = ("reduced2", "full4", "hybrid")
ELIN_MAX = 4.0 / 3.0


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on ``rbar in [0, 1]`` and ``z in [0, 1]``.

    With ``mirrored`` the half ``rbar < 0`` is filled by the subsystem-swap
    symmetry; otherwise those nodes are minimized directly. Either way the
    resulting :class:`Surface` spans ``rbar in [-1, 1]`` with
    ``2 * rbar_count - 1`` columns.
    """

    rbar_count: int
    z_count: int
    mirrored: bool = True

    def __post_init__(self):
        if self.rbar_count < 2 or self.z_count < 2:
            raise ValueError("grid counts must be >= 2")

    def rbar_values(self):
        return np.linspace(0.0, 1.0, self.rbar_count)

    def z_values(self):
        return np.linspace(0.0, 1.0, self.z_count)

    def full_rbar_values(self):
        half = self.rbar_values()
        return np.concatenate([-half[:0:-1], half])

    @classmethod
    def parse(cls, text, mirrored=True):
        """Parse ``"NxM"`` (rbar count by z count)."""
        try:
            n, m = (int(v) for v in text.lower().split("x"))
        except ValueError as exc:
            raise ValueError(f"grid must look like NxM, got {text!r}") from exc
        return cls(n, m, mirrored)


@dataclass(frozen=True)
class MinimizerConfig:
    starts: int = 32
    max_iterations: int = 2000
    tolerance: float = 1e-12
    seed: int = 0
    mode: str = "hybrid"
    full_starts: int = 8
    grad_tol: float = 1e-7

    def __post_init__(self):
        if self.starts < 1:
            raise ValueError("starts must be >= 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")


@dataclass
class CurvePoint:
    rbar: float
    z: float
    value: float
    xi: np.ndarray
    mode: str
    converged: bool = True
    grad_norm: float = 0.0


def objective(rbar, z, xi):
    """Linear entropy of the ansatz state for real normalized ``xi``."""
    xi = check_params(np.asarray(xi, dtype=float))
    return elin_pure(psi_sigma(rbar, z, xi))


def reduced_angles_to_xi(angles):
    return kernels.xi_from_angles(np.asarray(angles, dtype=float)[None, :])[0]


def full_angles_to_xi(angles):
    return kernels.xi_from_angles(np.asarray(angles, dtype=float)[None, :])[0]


def xi_to_full_angles(xi):
    xi = np.asarray(xi, dtype=float)
    out = np.empty(4)
    for k, off in ((0, 0), (2, 3)):
        a, b, c = xi[off : off + 3]
        out[k] = np.arccos(np.clip(c, -1.0, 1.0))
        out[k + 1] = np.arctan2(b, a)
    return out


def xi_to_reduced_angles(xi):
    """Angles of ``xi`` in the reduced chart, or None if ``c != a`` or ``f != d``."""
    xi = np.asarray(xi, dtype=float)
    if abs(xi[0] - xi[2]) > 1e-9 or abs(xi[3] - xi[5]) > 1e-9:
        return None
    sq2 = np.sqrt(2.0)
    return np.array([np.arctan2(xi[0] * sq2, xi[1]), np.arctan2(xi[3] * sq2, xi[4])])


def _node_rng(seed, rbar, z):
    bits = struct.unpack("<2Q", struct.pack("<2d", float(rbar), float(z)))
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, *bits])


def _reduced_starts(rng, count):
    if count == 0:
        return np.empty((0, 2))
    base = rng.uniform(0.0, np.pi, size=(count, 2))
    # sign branches of (a = c, d = f): t -> -t flips sin, keeps cos
    signs = np.array([[1, 1], [-1, 1], [1, -1], [-1, -1]], dtype=float)
    return (base[:, None, :] * signs[None, :, :]).reshape(-1, 2)


def _full_starts(rng, count):
    if count == 0:
        return np.empty((0, 4))
    t = rng.uniform(0.0, np.pi, size=(count, 2))
    p = rng.uniform(-np.pi, np.pi, size=(count, 2))
    return np.column_stack([t[:, 0], p[:, 0], t[:, 1], p[:, 1]])


def _run(rbar, z, starts, cfg):
    best, value, gnorm, nm_ok, _ = kernels.minimize_angles(
        float(rbar), float(z), starts, cfg.max_iterations, cfg.tolerance
    )
    xi = kernels.xi_from_angles(best[None, :])[0]
    return value, xi, gnorm, nm_ok


def minimize_point(rbar, z, cfg=None, warm=None, rng=None, random_starts=True):
    """Minimize the ansatz linear entropy at one facet point.

    Parameters
    ----------
    rbar, z : float
        Facet coordinates.
    cfg : MinimizerConfig, optional
    warm : sequence of array_like, optional
        Extra starting parameter vectors ``xi`` (for instance neighbour
        minimizers); each is tried in every applicable chart.
    rng : numpy.random.Generator, optional
        Defaults to a generator keyed on ``(cfg.seed, rbar, z)``.
    random_starts : bool
        If False only ``warm`` seeds are descended from.

    Returns
    -------
    CurvePoint
        The best value found, its minimizer and a convergence flag. A point
        that fails the gradient test is flagged, not discarded.
    """
    cfg = cfg or MinimizerConfig()
    check_facet(rbar, z)
    rng = rng or _node_rng(cfg.seed, rbar, z)
    warm = [np.asarray(w, dtype=float) for w in (warm or [])]
    candidates = []

    if cfg.mode in ("reduced2", "hybrid"):
        starts = _reduced_starts(rng, cfg.starts if random_starts else 0)
        extra = [a for a in (xi_to_reduced_angles(w) for w in warm) if a is not None]
        if extra:
            starts = np.vstack([starts, np.array(extra)])
        if len(starts):
            candidates.append(_run(rbar, z, starts, cfg))

    if cfg.mode in ("full4", "hybrid"):
        count = 2 * cfg.starts if cfg.mode == "full4" else cfg.full_starts
        starts = _full_starts(rng, count if random_starts else 0)
        seeds = [xi_to_full_angles(c[1]) for c in candidates] + [xi_to_full_angles(w) for w in warm]
        if seeds:
            starts = np.vstack([np.array(seeds), starts])
        if len(starts):
            candidates.append(_run(rbar, z, starts, cfg))
    if not candidates:
        raise ValueError("no starting points: enable random starts or pass warm seeds")

    value, xi, gnorm, nm_ok = min(candidates, key=lambda c: c[0])
    value = float(min(max(value, 0.0), ELIN_MAX))
    return CurvePoint(
        float(rbar), float(z), value, xi, cfg.mode,
        converged=bool(gnorm <= cfg.grad_tol), grad_norm=float(gnorm),
    )


@dataclass
class Surface:
    """Characteristic-curve samples on a grid spanning ``rbar in [-1, 1]``.

    Arrays are indexed ``[i_rbar, i_z]``; ``xi`` has a trailing axis of 6.
    """

    rbar: np.ndarray
    z: np.ndarray
    values: np.ndarray
    xi: np.ndarray
    converged: np.ndarray
    grad_norm: np.ndarray
    spec: GridSpec | None = None
    cfg: MinimizerConfig | None = None
    meta: dict = field(default_factory=dict)

    @property
    def unconverged(self):
        idx = np.argwhere(~self.converged)
        return [(float(self.rbar[i]), float(self.z[j])) for i, j in idx]

    def node_index(self, rbar, z, tol=1e-12):
        i = np.flatnonzero(np.abs(self.rbar - rbar) <= tol)
        j = np.flatnonzero(np.abs(self.z - z) <= tol)
        if i.size == 0 or j.size == 0:
            raise KeyError(f"({rbar}, {z}) is not a grid node")
        return int(i[0]), int(j[0])

    def value_at(self, rbar, z):
        i, j = self.node_index(rbar, z)
        return float(self.values[i, j])

    def half(self):
        """Index slice of the columns with ``rbar >= 0``."""
        return slice(int(np.searchsorted(self.rbar, -1e-15)), None)

    def points(self):
        """Flattened ``(rbar, z, value, xi)`` for every node."""
        rr, zz = np.meshgrid(self.rbar, self.z, indexing="ij")
        return rr.ravel(), zz.ravel(), self.values.ravel(), self.xi.reshape(-1, 6)

    def config_dict(self):
        return {
            "grid": asdict(self.spec) if self.spec else None,
            "minimizer": asdict(self.cfg) if self.cfg else None,
        }


def mirror_half(rbar, z, values, xi, converged, grad_norm, spec=None, cfg=None, meta=None):
    """Surface over ``rbar in [-1, 1]`` from columns with ``rbar >= 0`` (first column ``rbar = 0``).

    The negative half follows from the subsystem swap ``rbar -> -rbar``.
    """
    rbar = np.asarray(rbar, dtype=float)
    if rbar[0] != 0.0 or np.any(np.diff(rbar) <= 0):
        raise ValueError("half-surface columns must start at rbar = 0 and increase")
    xi = np.asarray(xi, dtype=float)
    mx = np.concatenate([xi[:0:-1, :, 3:], xi[:0:-1, :, :3]], axis=2)

    def m(a):
        a = np.asarray(a)
        return np.concatenate([a[:0:-1], a], axis=0)

    return Surface(
        np.concatenate([-rbar[:0:-1], rbar]), np.asarray(z, dtype=float), m(values),
        np.concatenate([mx, xi], axis=0), m(converged).astype(bool), m(grad_norm), spec, cfg, dict(meta or {}),
    )


def _sweep_row(args):
    rbar, zs, cfg, warm_rows = args
    out = []
    for j, z in enumerate(zs):
        warm = warm_rows[j] if warm_rows is not None else None
        if warm is None:
            out.append(minimize_point(rbar, z, cfg))
        else:
            # warm pass: local descent from neighbour minimizers only
            out.append(_refine(rbar, z, cfg, warm))
    return out


def _refine(rbar, z, cfg, warm):
    if cfg.mode == "reduced2" and all(xi_to_reduced_angles(w) is None for w in warm):
        return None
    if not warm:
        return None
    return minimize_point(rbar, z, cfg, warm=warm, random_starts=False)


def _map(func, tasks, jobs):
    if jobs is None or jobs <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, tasks))


def sweep_grid(spec, cfg=None, jobs=1, warm_start=True):
    """Characteristic curve on every node of ``spec``.

    Pass one minimizes every node independently from seeded random starts;
    pass two re-descends from the four neighbours' pass-one minimizers. Each
    pass is a parallel map whose per-node work does not depend on worker
    count or order, so ``jobs`` never changes the result.
    """
    cfg = cfg or MinimizerConfig()
    zs = spec.z_values()
    full = spec.full_rbar_values()
    n_half = spec.rbar_count
    if spec.mirrored:
        cols = list(range(n_half - 1, 2 * n_half - 1))
    else:
        cols = list(range(2 * n_half - 1))

    first = _map(_sweep_row, [(full[c], zs, cfg, None) for c in cols], jobs)
    grid = {c: row for c, row in zip(cols, first)}

    if warm_start:
        def warm_rows(c):
            rows = []
            for j in range(len(zs)):
                w = []
                for dc, dj in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                    cc, jj = c + dc, j + dj
                    if 0 <= jj < len(zs):
                        if cc in grid:
                            w.append(grid[cc][jj].xi)
                        elif spec.mirrored and (2 * (n_half - 1) - cc) in grid:
                            w.append(swap_params(grid[2 * (n_half - 1) - cc][jj].xi))
                rows.append(w)
            return rows

        second = _map(_sweep_row, [(full[c], zs, cfg, warm_rows(c)) for c in cols], jobs)
        for c, row in zip(cols, second):
            for j, cand in enumerate(row):
                if cand is not None and cand.value < grid[c][j].value:
                    cand.mode = cfg.mode
                    cand.converged = cand.converged or grid[c][j].converged
                    grid[c][j] = cand

    ncol = 2 * n_half - 1
    values = np.zeros((ncol, len(zs)))
    xi = np.zeros((ncol, len(zs), 6))
    conv = np.zeros((ncol, len(zs)), dtype=bool)
    gnorm = np.zeros((ncol, len(zs)))
    for c in range(ncol):
        src, mirror = (c, False) if c in grid else (2 * (n_half - 1) - c, True)
        for j, pt in enumerate(grid[src]):
            values[c, j] = pt.value
            xi[c, j] = swap_params(pt.xi) if mirror else pt.xi
            conv[c, j] = pt.converged
            gnorm[c, j] = pt.grad_norm
    return Surface(full.copy(), zs.copy(), values, xi, conv, gnorm, spec, cfg)
