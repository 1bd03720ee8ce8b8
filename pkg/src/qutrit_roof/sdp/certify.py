"""Two-copy symmetric-extension lower bound on the linear-entropy roof.

For any decomposition ``sigma = sum_i p_i |psi_i><psi_i|`` the operator
``omega = sum_i p_i (psi_i psi_i^T)^{(x)2}`` is supported on the symmetric
subspace of ``span(sigma)^{(x)2}``, has ``tr_2 omega = sigma`` and positive
partial transposes on every subset of the four subsystems
``A1, B1, A2, B2``. Its value ``tr(O omega)`` is the average linear entropy,
so minimizing over all such ``omega`` bounds the roof from below.

The variable is kept real symmetric (``sigma`` is real). The marginal
constraint is eliminated by writing ``X = X0 + sum_k y_k N_k`` over a basis
of its null space, which leaves an SDP in inequality form handed to
:func:`~qutrit_roof.sdp.solver.solve_sdp` as its dual.
"""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import linalg as sla

from ..exceptions import ConstraintError
from ..states import DIM, PHI, basis_ket, check_facet
from .solver import SdpProblem, Status, solve_sdp

log = logging.getLogger(__name__)

SUBSYSTEMS = ("A1", "B1", "A2", "B2")
DEFAULT_CUTS = (("A2", "B2"),)
BASES = ("range", "full")
RANGE_TOL = 1e-9
STEP_FRACTIONS = (0.98, 0.9, 0.75, 0.6, 0.5)
D2 = DIM * DIM


def _perm_operator(perm):
    """Permutation of the four qutrit factors: output factor ``k`` is input factor ``perm[k]``."""
    n = D2 * D2
    src = np.arange(n).reshape((DIM,) * 4)
    return np.eye(n)[src.transpose(perm).ravel()]


def build_elin_observable():
    """``O = 2 (1 - SWAP_{A1 A2} (x) 1_{B1 B2})`` on ``A1 B1 A2 B2``."""
    swap = _perm_operator((2, 1, 0, 3))
    return 2.0 * (np.eye(D2 * D2) - swap)


def parse_cuts(cuts):
    """Validate a cut list such as ``[("A2", "B2")]`` or ``"A2B2,B1B2"``."""
    if isinstance(cuts, str):
        cuts = [c for c in cuts.replace(";", ",").split(",") if c.strip()]
    out = []
    for cut in cuts:
        if isinstance(cut, str):
            cut = cut.strip().upper()
            labels = tuple(cut[i:i + 2] for i in range(0, len(cut), 2))
        else:
            labels = tuple(str(c).upper() for c in cut)
        bad = [c for c in labels if c not in SUBSYSTEMS]
        if not labels or bad:
            raise ConstraintError(f"invalid PPT cut {cut!r}; use labels from {', '.join(SUBSYSTEMS)}")
        if len(set(labels)) != len(labels):
            raise ConstraintError(f"repeated subsystem in PPT cut {cut!r}")
        out.append(tuple(sorted(labels, key=SUBSYSTEMS.index)))
    if not out:
        raise ConstraintError("at least one PPT cut is required")
    return tuple(dict.fromkeys(out))


def partial_transpose_4(op, cut):
    """Partial transpose of an ``81 x 81`` operator on the factors named in ``cut``."""
    t = op.reshape((DIM,) * 8)
    axes = list(range(8))
    for label in cut:
        k = SUBSYSTEMS.index(label)
        axes[k], axes[k + 4] = axes[k + 4], axes[k]
    return t.transpose(axes).reshape(D2 * D2, D2 * D2)


def _range_basis(rbar, z):
    """Orthonormal real basis of ``span(sigma)`` and the diagonal of ``sigma`` in it.

    ``sigma`` is diagonal in ``{Phi, |j j+1>, |j j-1>}``, so its support is
    read off from the weights rather than from a numerical rank decision.
    """
    wp = (1.0 - z) * (1.0 + rbar) / 6.0
    wm = (1.0 - z) * (1.0 - rbar) / 6.0
    cols, diag, pattern = [], [], []
    if z > 0:
        cols.append(PHI)
        diag.append(z)
    for w, shift in ((wp, 1), (wm, 2)):
        if w > 0:
            cols += [basis_ket(j, (j + shift) % DIM) for j in range(DIM)]
            diag += [w] * DIM
    pattern = (z > 0, wp > 0, wm > 0)
    return np.column_stack(cols), np.array(diag), pattern


def _sym_basis(k):
    """Columns: orthonormal basis of the symmetric subspace of ``R^k (x) R^k``."""
    cols = []
    for i in range(k):
        for j in range(i, k):
            v = np.zeros((k, k))
            v[i, j] += 1.0
            v[j, i] += 1.0
            cols.append((v / np.linalg.norm(v)).ravel())
    return np.array(cols).T


def _svec_basis(n):
    """Orthonormal basis of real symmetric ``n x n`` matrices (Frobenius product)."""
    mats = []
    for i in range(n):
        for j in range(i, n):
            e = np.zeros((n, n))
            if i == j:
                e[i, i] = 1.0
            else:
                e[i, j] = e[j, i] = 1.0 / np.sqrt(2.0)
            mats.append(e)
    return np.array(mats)


def _partial_trace_2(op, d):
    return np.einsum("iaja->ij", op.reshape(d, d, d, d))


@dataclass
class _Structure:
    """Node-independent data for one support pattern and cut set."""

    embed: np.ndarray          # 81 x n, columns span the variable space
    obj: np.ndarray            # n x n compressed observable
    nulls: np.ndarray          # (m, n, n) null-space basis of the marginal map
    marg_pinv: np.ndarray      # maps the k x k marginal (svec) to a particular X (svec)
    svec: np.ndarray           # (nsym, n, n)
    cut_maps: list             # per cut: (Q, images of nulls (m, q, q))
    k: int


def _compress_cut(embed, cut, basis_mats):
    imgs = np.array([partial_transpose_4(embed @ b @ embed.T, cut) for b in basis_mats])
    gram = np.einsum("nij,nkj->ik", imgs, imgs)
    w, v = np.linalg.eigh(0.5 * (gram + gram.T))
    q = v[:, w > RANGE_TOL * max(w.max(), 1.0)]
    return q


@lru_cache(maxsize=32)
def _structure(pattern, cuts, basis):
    rbar = 0.0 if pattern[1] and pattern[2] else (1.0 if pattern[1] else -1.0)
    z = 0.5 if pattern[0] else 0.0
    if not (pattern[1] or pattern[2]):
        z = 1.0
    R, _, _ = _range_basis(rbar, z)
    if basis == "full":
        R = np.eye(D2)
    k = R.shape[1]
    S = _sym_basis(k)
    embed = np.kron(R, R) @ S
    n = embed.shape[1]
    svec = _svec_basis(n)
    kb = _svec_basis(k)
    # marginal map in svec coordinates: (k(k+1)/2) x (n(n+1)/2)
    lift = np.einsum("ai,nij,bj->nab", S, svec, S)
    marg = np.array([_partial_trace_2(m, k) for m in lift])
    L = np.einsum("kab,nab->kn", kb, marg)
    nulls_v = sla.null_space(L, rcond=1e-12)
    nulls = np.einsum("nm,nij->mij", nulls_v, svec)
    pinv = np.linalg.pinv(L, rcond=1e-12)
    obj = embed.T @ build_elin_observable() @ embed
    cut_maps = []
    for cut in cuts:
        Q = _compress_cut(embed, cut, svec)
        imgs = np.array([Q.T @ partial_transpose_4(embed @ nm @ embed.T, cut) @ Q for nm in nulls])
        cut_maps.append((Q, imgs.reshape(len(nulls), Q.shape[1], Q.shape[1])))
    return _Structure(embed, 0.5 * (obj + obj.T), nulls, pinv, svec, cut_maps, k)


@dataclass
class Certificate:
    """SDP problem for one facet point plus what is needed to read the bound back."""

    problem: SdpProblem
    offset: float
    rbar: float
    z: float
    cuts: tuple
    basis: str
    meta: dict = field(default_factory=dict)

    @property
    def constraint_count(self):
        return self.meta["marginal_constraints"]


def build_certificate_problem(rbar, z, ppt_cuts=DEFAULT_CUTS, basis="range"):
    """Assemble the certificate SDP at ``(rbar, z)``.

    ``basis="range"`` restricts ``omega`` to the symmetric subspace of
    ``span(sigma)^{(x)2}``; ``basis="full"`` uses the symmetric subspace of
    ``(C^9)^{(x)2}`` and lets the marginal constraint enforce the support.
    """
    check_facet(rbar, z)
    cuts = parse_cuts(ppt_cuts)
    if basis not in BASES:
        raise ConstraintError(f"basis must be one of {BASES}, got {basis!r}")
    R, diag, pattern = _range_basis(rbar, z)
    st = _structure(pattern, cuts, basis)
    # the structure was built from the same support pattern, hence the same R
    target = R @ np.diag(diag) @ R.T if basis == "full" else np.diag(diag)
    kb = _svec_basis(st.k)
    t_svec = np.einsum("kab,ab->k", kb, target)
    x0 = np.einsum("n,nij->ij", st.marg_pinv @ t_svec, st.svec)
    c0 = float(np.vdot(st.obj, x0))
    g = np.einsum("ij,mij->m", st.obj, st.nulls)
    C = [x0]
    A = [-st.nulls]
    for cut, (Q, imgs) in zip(cuts, st.cut_maps):
        C.append(Q.T @ partial_transpose_4(st.embed @ x0 @ st.embed.T, cut) @ Q)
        A.append(-imgs)
    C = [0.5 * (c + c.T) for c in C]
    prob = SdpProblem(C=C, A=A, b=-g, meta={"rbar": rbar, "z": z, "cuts": ["".join(c) for c in cuts], "basis": basis, "offset": c0})
    meta = {
        "variable_dim": st.embed.shape[1],
        "marginal_constraints": st.k * (st.k + 1) // 2,
        "free_parameters": int(len(st.nulls)),
        "cut_block_dims": [Q.shape[1] for Q, _ in st.cut_maps],
    }
    return Certificate(prob, c0, float(rbar), float(z), cuts, basis, meta)


@dataclass
class BoundResult:
    rbar: float
    z: float
    bound: float
    rigorous: float
    upper: float
    status: str
    gap: float
    primal_residual: float
    dual_residual: float
    iterations: int

    @property
    def ok(self):
        return self.status == Status.OPTIMAL.value


def sdp_bound(rbar, z, ppt_cuts=DEFAULT_CUTS, basis="range", tol=1e-9, **solver_kw):
    """Lower bound on the roof at ``(rbar, z)``.

    ``bound`` is ``offset - <C, X>`` for the final primal iterate, valid up
    to the reported gap and residuals. ``rigorous`` absorbs the residual: any
    PSD ``X`` with ``r = b - A(X)`` gives ``min >= offset - <C, X> - |r^T y|``,
    and feasible extensions have ``tr X = 1`` with the null-space basis
    orthonormal and orthogonal to ``X0``, so ``||y||_2 <= 1``. ``upper`` is
    the objective of the extension found.
    """
    cert = build_certificate_problem(rbar, z, ppt_cuts, basis)
    schedule = solver_kw.pop("step_fractions", STEP_FRACTIONS)
    for frac in schedule:
        # degenerate nodes stall at long steps; shorter ones keep the primal residual down
        sol = solve_sdp(cert.problem, tol=tol, step_frac=frac, **solver_kw)
        if sol.status == Status.OPTIMAL:
            break
    return BoundResult(
        float(rbar), float(z), cert.offset - sol.primal, cert.offset - sol.primal - sol.residual_norm,
        cert.offset - sol.dual, sol.status.value, sol.gap, sol.primal_residual, sol.dual_residual, sol.iterations,
    )


def _bound_task(args):
    rbar, z, cuts, basis, tol = args
    try:
        return sdp_bound(rbar, z, cuts, basis, tol)
    except (np.linalg.LinAlgError, ValueError) as exc:
        log.warning("SDP failed at (%g, %g): %s", rbar, z, exc)
        nan = float("nan")
        return BoundResult(rbar, z, nan, nan, nan, Status.NUMERICAL_TROUBLE.value, nan, nan, nan, 0)


def certify_grid(envelope, rbar_values, z_values, ppt_cuts=DEFAULT_CUTS, tol=1e-9, jobs=1, basis="range", threshold=1e-9):
    """Compare the envelope with SDP lower bounds on a grid of facet nodes.

    Returns a dict with per-node rows and summary statistics. Nodes whose SDP
    did not reach ``OPTIMAL`` are listed under ``failures`` and excluded from
    the statistics.
    """
    cuts = parse_cuts(ppt_cuts)
    nodes = list(itertools.product([float(r) for r in rbar_values], [float(z) for z in z_values]))
    tasks = [(r, z, cuts, basis, tol) for r, z in nodes]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_bound_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        results = [_bound_task(t) for t in tasks]
    rows, failures = [], []
    for res in results:
        roof = envelope.evaluate((res.rbar, res.z))
        row = {
            "rbar": res.rbar,
            "z": res.z,
            "roof": roof,
            "sdp_bound": res.bound,
            "rigorous_bound": res.rigorous,
            "discrepancy": roof - res.bound,
            "status": res.status,
            "gap": res.gap,
            "iterations": res.iterations,
        }
        rows.append(row)
        if not res.ok:
            failures.append({"rbar": res.rbar, "z": res.z, "status": res.status})
    good = np.array([r["discrepancy"] for r in rows if r["status"] == Status.OPTIMAL.value])
    bounds = np.array([r["sdp_bound"] for r in rows if r["status"] == Status.OPTIMAL.value])
    summary = {
        "nodes": len(rows),
        "max_discrepancy": float(np.max(np.abs(good))) if good.size else None,
        "max_excess": float(np.max(-good)) if good.size else None,
        "frac_below_1e-9": float(np.mean(np.abs(good) < threshold)) if good.size else None,
        "min_bound": float(bounds.min()) if bounds.size else None,
        "failures": failures,
        "ppt_cuts": ["".join(c) for c in cuts],
        "basis": basis,
        "tol": tol,
    }
    return {"summary": summary, "nodes": rows}
