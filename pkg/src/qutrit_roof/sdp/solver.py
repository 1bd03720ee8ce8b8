"""Dense multi-block primal-dual interior-point SDP solver (real symmetric).

Solves the standard pair::

    (P)  minimize  <C, X>   s.t.  <A_i, X> = b_i,  X >= 0
    (D)  maximize  b^T y    s.t.  sum_i y_i A_i + Z = C,  Z >= 0

with block-diagonal ``X``, ``Z``. Search directions use Nesterov-Todd
scaling in a Mehrotra predictor-corrector loop from an infeasible start. The
Schur complement is kept in Gram form ``B B^T`` and factored by a QR
decomposition of ``B^T``, which avoids squaring its condition number.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from ..exceptions import SolverError

log = logging.getLogger(__name__)

DIVERGE = 1e10


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    MAX_ITER = "max_iter"
    NUMERICAL_TROUBLE = "numerical_trouble"
    INFEASIBLE = "infeasible"


@dataclass
class SdpProblem:
    """Block SDP data.

    ``C[k]`` is the ``n_k x n_k`` cost block and ``A[k]`` the stacked
    constraint blocks of shape ``(m, n_k, n_k)``.
    """

    C: list
    A: list
    b: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float)
        self.C = [np.asarray(c, dtype=float) for c in self.C]
        self.A = [np.asarray(a, dtype=float).reshape(self.b.size, c.shape[0], c.shape[0]) for a, c in zip(self.A, self.C)]
        if len(self.C) != len(self.A):
            raise SolverError("C and A must list the same blocks")
        for c, a in zip(self.C, self.A):
            if c.ndim != 2 or c.shape[0] != c.shape[1]:
                raise SolverError(f"cost block must be square, got {c.shape}")
            if np.max(np.abs(c - c.T), initial=0.0) > 1e-12 or np.max(np.abs(a - a.transpose(0, 2, 1)), initial=0.0) > 1e-12:
                raise SolverError("blocks must be symmetric")

    @property
    def m(self):
        return self.b.size

    @property
    def block_sizes(self):
        return [c.shape[0] for c in self.C]

    def to_json(self):
        """Serializable dump for offline cross-checking with other solvers."""
        return {
            "format": "qutrit-roof-sdp/1",
            "sense": "minimize <C,X> s.t. <A_i,X> = b_i, X psd (blocks)",
            "block_sizes": self.block_sizes,
            "b": self.b.tolist(),
            "C": [c.tolist() for c in self.C],
            "A": [a.tolist() for a in self.A],
            "meta": self.meta,
        }

    @classmethod
    def from_json(cls, data):
        return cls(C=data["C"], A=data["A"], b=data["b"], meta=data.get("meta", {}))


@dataclass
class SdpSolution:
    status: Status
    primal: float
    dual: float
    gap: float
    primal_residual: float
    dual_residual: float
    iterations: int
    residual_norm: float
    X: list
    y: np.ndarray
    Z: list
    history: list = field(default_factory=list)

    def summary(self):
        return {
            "status": self.status.value,
            "primal": self.primal,
            "dual": self.dual,
            "gap": self.gap,
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "iterations": self.iterations,
            "residual_norm": self.residual_norm,
            "history": self.history,
        }

    def dumps(self):
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def _ip(u, v):
    return sum(float(np.vdot(a, b)) for a, b in zip(u, v))


def _apply_A(prob, X):
    return sum(np.einsum("mij,ij->m", a, x) for a, x in zip(prob.A, X))


def _apply_At(prob, y):
    return [np.einsum("m,mij->ij", y, a) for a in prob.A]


def _max_step(L, D, frac):
    """Largest step (<= 1) keeping L L^T + a D positive definite, scaled by ``frac``."""
    t = sla.solve_triangular(L, D, lower=True)
    t = sla.solve_triangular(L, t.T, lower=True)
    lam = np.linalg.eigvalsh(0.5 * (t + t.T))[0]
    return 1.0 if lam >= 0 else min(1.0, -frac / lam)


def _nt_scaling(X, Z):
    """Per-block NT scaling: returns (G, Ginv, lam) with G^-1 X G^-T = G^T Z G = diag(lam)."""
    L = np.linalg.cholesky(X)
    R = np.linalg.cholesky(Z)
    U, s, Vt = np.linalg.svd(R.T @ L)
    G = L @ Vt.T / np.sqrt(s)
    Ginv = (np.sqrt(s)[:, None] * Vt) @ sla.solve_triangular(L, np.eye(L.shape[0]), lower=True)
    return G, Ginv, s, L, R


def _initial_point(prob):
    n_total = sum(prob.block_sizes)
    normA = [max((np.linalg.norm(a[i]) for a in prob.A), default=0.0) for i in range(prob.m)]
    xi = max(10.0, np.sqrt(n_total), n_total * max(((1 + abs(prob.b[i])) / (1 + normA[i]) for i in range(prob.m)), default=1.0))
    eta = max(10.0, np.sqrt(n_total), max(normA, default=0.0), max(np.linalg.norm(c) for c in prob.C))
    X = [xi * np.eye(n) for n in prob.block_sizes]
    Z = [eta * np.eye(n) for n in prob.block_sizes]
    return X, np.zeros(prob.m), Z


def solve_sdp(prob, tol=1e-9, feas_tol=1e-10, max_iter=200, step_frac=0.98, refine_steps=2):
    """Solve ``prob`` to absolute duality gap ``tol``.

    Returns an :class:`SdpSolution`; ``MAX_ITER`` and ``NUMERICAL_TROUBLE``
    carry the best iterate reached. ``residual_norm`` is the absolute
    ``||b - A(X)||_2`` of the returned primal iterate, needed to turn
    ``primal`` into a rigorous bound for the dual problem.
    """
    if prob.m == 0:
        # (P) minimizes <C,X> over the bare cone: bounded iff C >= 0
        lam = min(np.linalg.eigvalsh(c)[0] for c in prob.C)
        status = Status.OPTIMAL if lam >= -feas_tol else Status.INFEASIBLE
        zero = [np.zeros_like(c) for c in prob.C]
        return SdpSolution(status, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0.0, zero, np.zeros(0), [c.copy() for c in prob.C])

    n_total = sum(prob.block_sizes)
    X, y, Z = _initial_point(prob)
    normb = 1.0 + np.linalg.norm(prob.b)
    normC = 1.0 + np.sqrt(_ip(prob.C, prob.C))
    history = []
    status = Status.MAX_ITER
    best = None

    for it in range(max_iter + 1):
        rp = prob.b - _apply_A(prob, X)
        AtY = _apply_At(prob, y)
        Rd = [c - z - at for c, z, at in zip(prob.C, Z, AtY)]
        pobj = _ip(prob.C, X)
        dobj = float(prob.b @ y)
        mu = _ip(X, Z) / n_total
        pres = np.linalg.norm(rp) / normb
        dres = np.sqrt(_ip(Rd, Rd)) / normC
        gap = abs(pobj - dobj)
        history.append({"it": it, "pobj": pobj, "dobj": dobj, "gap": gap, "pres": pres, "dres": dres, "mu": mu})
        cur = (X, y, Z, pobj, dobj, gap, pres, dres, it, float(np.linalg.norm(rp)))
        if best is None or max(gap, pres, dres) < max(best[5], best[6], best[7]):
            best = cur
        if not np.isfinite(pobj + dobj + mu):
            status = Status.NUMERICAL_TROUBLE
            break
        if it > 0 and (abs(pobj) > DIVERGE or abs(dobj) > DIVERGE):
            # an unbounded objective on either side means the other side is infeasible
            status = Status.INFEASIBLE
            break
        if gap <= tol and _ip(X, Z) <= tol and pres <= feas_tol and dres <= feas_tol:
            status = Status.OPTIMAL
            best = cur
            break
        if it == max_iter:
            break

        try:
            scal = [_nt_scaling(x, z) for x, z in zip(X, Z)]
            W = [g @ g.T for g, *_ in scal]
            # Schur complement M = B B^T with rows B_i = vec(G^T A_i G); factor via QR of B^T
            B = np.concatenate(
                [(g.T @ a @ g).reshape(prob.m, -1) for (g, *_), a in zip(scal, prob.A)],
                axis=1,
            )
            Rfac = sla.qr(B.T, mode="r")[0][: prob.m]
            if np.min(np.abs(np.diag(Rfac))) <= 1e-14 * np.max(np.abs(np.diag(Rfac))):
                raise np.linalg.LinAlgError("singular Schur complement")
        except (np.linalg.LinAlgError, sla.LinAlgError, ValueError):
            status = Status.NUMERICAL_TROUBLE
            break

        WRdW = [w @ rd @ w for w, rd in zip(W, Rd)]

        def direction(Rc):
            GDG = []
            for (g, ginv, lam, *_), rc in zip(scal, Rc):
                D = 2.0 * rc / (lam[:, None] + lam[None, :])
                GDG.append(g @ D @ g.T)
            rhs = rp - _apply_A(prob, GDG) + _apply_A(prob, WRdW)
            dy = np.zeros(prob.m)
            # iterative refinement keeps A(dX) = rp accurate when M is ill-conditioned
            for _ in range(1 + refine_steps):
                dy = dy + sla.solve_triangular(Rfac, sla.solve_triangular(Rfac, rhs, trans="T"))
                dZ = [rd - at for rd, at in zip(Rd, _apply_At(prob, dy))]
                dX = [gdg - w @ dz @ w for gdg, w, dz in zip(GDG, W, dZ)]
                rhs = rp - _apply_A(prob, dX)
            dX = [0.5 * (d + d.T) for d in dX]
            dZ = [0.5 * (d + d.T) for d in dZ]
            return dX, dy, dZ

        def steps(dX, dZ, frac):
            ap = min(_max_step(s[3], d, frac) for s, d in zip(scal, dX))
            ad = min(_max_step(s[4], d, frac) for s, d in zip(scal, dZ))
            return ap, ad

        try:
            # predictor
            Rc_aff = [-np.diag(lam ** 2) for (_, _, lam, *_) in scal]
            dXa, dya, dZa = direction(Rc_aff)
            ap, ad = steps(dXa, dZa, 1.0)
            mu_aff = _ip([x + ap * d for x, d in zip(X, dXa)], [z + ad * d for z, d in zip(Z, dZa)]) / n_total
            sig = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0

            # corrector
            Rc = []
            for (g, ginv, lam, *_), dxa, dza in zip(scal, dXa, dZa):
                xt = ginv @ dxa @ ginv.T
                zt = g.T @ dza @ g
                corr = 0.5 * (xt @ zt + zt @ xt)
                Rc.append(sig * mu * np.eye(lam.size) - np.diag(lam ** 2) - corr)
            dX, dy, dZ = direction(Rc)
            ap, ad = steps(dX, dZ, step_frac)
        except (np.linalg.LinAlgError, sla.LinAlgError, ValueError):
            status = Status.NUMERICAL_TROUBLE
            break
        X = [x + ap * d for x, d in zip(X, dX)]
        Z = [z + ad * d for z, d in zip(Z, dZ)]
        y = y + ad * dy
        X = [0.5 * (x + x.T) for x in X]
        Z = [0.5 * (z + z.T) for z in Z]
        if max(ap, ad) < 1e-10:
            status = Status.NUMERICAL_TROUBLE
            break

    X, y, Z, pobj, dobj, gap, pres, dres, its, rnorm = best
    if status != Status.OPTIMAL:
        log.debug("SDP stopped with %s after %d iterations (gap %.2e)", status.value, its, gap)
    return SdpSolution(status, pobj, dobj, gap, pres, dres, its, rnorm, X, y, Z, history)
