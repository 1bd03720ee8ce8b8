"""Pure-Python (numpy) fallback for ``_ckernels``.

Same functions and semantics; the multistart loop is vectorized across
starts instead of being run one start at a time, so results agree with the
compiled kernels to optimizer tolerance rather than bit for bit.
"""

from __future__ import annotations

import numpy as np

INV_SQ2 = 1.0 / np.sqrt(2.0)


def xi_from_angles(ang):
    ang = np.atleast_2d(np.asarray(ang, dtype=float))
    out = np.empty((ang.shape[0], 6))
    if ang.shape[1] == 2:
        s0, s1 = np.sin(ang[:, 0]) * INV_SQ2, np.sin(ang[:, 1]) * INV_SQ2
        out[:, 0], out[:, 1], out[:, 2] = s0, np.cos(ang[:, 0]), s0
        out[:, 3], out[:, 4], out[:, 5] = s1, np.cos(ang[:, 1]), s1
    else:
        for off, (t, p) in ((0, (ang[:, 0], ang[:, 1])), (3, (ang[:, 2], ang[:, 3]))):
            out[:, off] = np.sin(t) * np.cos(p)
            out[:, off + 1] = np.sin(t) * np.sin(p)
            out[:, off + 2] = np.cos(t)
    return out


def _dxi(ang):
    n, ndim = ang.shape
    jac = np.zeros((n, ndim, 6))
    if ndim == 2:
        for k in range(2):
            c = np.cos(ang[:, k]) * INV_SQ2
            jac[:, k, 3 * k] = c
            jac[:, k, 3 * k + 1] = -np.sin(ang[:, k])
            jac[:, k, 3 * k + 2] = c
    else:
        for k, off in ((0, 0), (2, 3)):
            t, p = ang[:, k], ang[:, k + 1]
            jac[:, k, off] = np.cos(t) * np.cos(p)
            jac[:, k, off + 1] = np.cos(t) * np.sin(p)
            jac[:, k, off + 2] = -np.sin(t)
            jac[:, k + 1, off] = -np.sin(t) * np.sin(p)
            jac[:, k + 1, off + 1] = np.sin(t) * np.cos(p)
    return jac


def _weights(rbar, z):
    w = max(1.0 - z, 0.0)
    return (
        np.sqrt(max(z, 0.0) / 3.0),
        np.sqrt(max(w * (1.0 + rbar) * 0.5, 0.0)),
        np.sqrt(max(w * (1.0 - rbar) * 0.5, 0.0)),
    )


def _coeff_matrix(rbar, z, xi):
    s0, wp, wm = _weights(rbar, z)
    m = np.zeros((xi.shape[0], 3, 3))
    m[:, 0, 0] = m[:, 1, 1] = m[:, 2, 2] = s0
    m[:, 0, 1] = wp * xi[:, 0]
    m[:, 2, 0] = wp * xi[:, 1]
    m[:, 1, 2] = wp * xi[:, 2]
    m[:, 1, 0] = wm * xi[:, 3]
    m[:, 0, 2] = wm * xi[:, 4]
    m[:, 2, 1] = wm * xi[:, 5]
    return m


def values(rbar, z, ang):
    m = _coeff_matrix(rbar, z, xi_from_angles(ang))
    rho = m @ m.transpose(0, 2, 1)
    tr = np.trace(rho, axis1=1, axis2=2)
    return 2.0 * (tr * tr - np.einsum("nij,nij->n", rho, rho))


def values_grad(rbar, z, ang):
    ang = np.atleast_2d(np.asarray(ang, dtype=float))
    m = _coeff_matrix(rbar, z, xi_from_angles(ang))
    rho = m @ m.transpose(0, 2, 1)
    tr = np.trace(rho, axis1=1, axis2=2)
    f = 2.0 * (tr * tr - np.einsum("nij,nij->n", rho, rho))
    g = 8.0 * (tr[:, None, None] * m - rho @ m)
    _, wp, wm = _weights(rbar, z)
    gxi = np.stack(
        [g[:, 0, 1] * wp, g[:, 2, 0] * wp, g[:, 1, 2] * wp, g[:, 1, 0] * wm, g[:, 0, 2] * wm, g[:, 2, 1] * wm],
        axis=1,
    )
    return f, np.einsum("nki,ni->nk", _dxi(ang), gxi)


def elin_angles(rbar, z, angles):
    angles = np.asarray(angles, dtype=float)
    if angles.shape not in ((2,), (4,)):
        raise ValueError("angles must have length 2 or 4")
    return float(values(rbar, z, angles[None, :])[0])


def elin_angles_grad(rbar, z, angles):
    angles = np.asarray(angles, dtype=float)
    if angles.shape not in ((2,), (4,)):
        raise ValueError("angles must have length 2 or 4")
    f, g = values_grad(rbar, z, angles[None, :])
    return float(f[0]), g[0]


def _nelder_mead(rbar, z, x0, step, max_iter, tol):
    n, ndim = x0.shape
    simplex = np.repeat(x0[:, None, :], ndim + 1, axis=1)
    for i in range(ndim):
        simplex[:, i + 1, i] += step
    fv = values(rbar, z, simplex.reshape(-1, ndim)).reshape(n, ndim + 1)
    active = np.ones(n, dtype=bool)
    iters = np.zeros(n, dtype=int)
    rows = np.arange(n)
    for _ in range(max_iter):
        order = np.argsort(fv, axis=1, kind="stable")
        simplex = simplex[rows[:, None], order]
        fv = fv[rows[:, None], order]
        spread = fv[:, -1] - fv[:, 0]
        xspread = np.max(np.abs(simplex[:, 1:] - simplex[:, :1]), axis=(1, 2))
        active &= ~((spread <= tol) & (xspread <= np.sqrt(tol)))
        if not active.any():
            break
        a = np.flatnonzero(active)
        iters[a] += 1
        s, f = simplex[a], fv[a]
        cen = s[:, :-1].mean(axis=1)
        worst = s[:, -1]
        xr = 2.0 * cen - worst
        fr = values(rbar, z, xr)
        xe = 3.0 * cen - 2.0 * worst
        fe = values(rbar, z, xe)
        outside = fr < f[:, -1]
        xc = np.where(outside[:, None], cen + 0.5 * (xr - cen), cen + 0.5 * (worst - cen))
        fc = values(rbar, z, xc)

        new_x, new_f = worst.copy(), f[:, -1].copy()
        expand = fr < f[:, 0]
        use_e = expand & (fe < fr)
        use_r = (expand & ~use_e) | (~expand & (fr < f[:, -2]))
        contract = ~expand & ~(fr < f[:, -2])
        use_c = contract & (fc < f[:, -1]) & (fc < fr)
        shrink = contract & ~use_c
        new_x[use_e], new_f[use_e] = xe[use_e], fe[use_e]
        new_x[use_r], new_f[use_r] = xr[use_r], fr[use_r]
        new_x[use_c], new_f[use_c] = xc[use_c], fc[use_c]
        s[:, -1], f[:, -1] = new_x, new_f
        if shrink.any():
            sh = s[shrink]
            sh[:, 1:] = sh[:, :1] + 0.5 * (sh[:, 1:] - sh[:, :1])
            f[shrink, 1:] = values(rbar, z, sh[:, 1:].reshape(-1, ndim)).reshape(-1, ndim)
            s[shrink] = sh
        simplex[a], fv[a] = s, f
    best = np.argmin(fv, axis=1)
    return simplex[rows, best], fv[rows, best], ~active


def _newton_polish(rbar, z, x, max_steps, eps=1e-5):
    x = x.copy()
    n, ndim = x.shape
    f, g = values_grad(rbar, z, x)
    live = np.ones(n, dtype=bool)
    eye = np.eye(ndim)
    for _ in range(max_steps):
        live &= np.linalg.norm(g, axis=1) >= 1e-13
        if not live.any():
            break
        a = np.flatnonzero(live)
        xa = x[a]
        h = np.empty((a.size, ndim, ndim))
        for j in range(ndim):
            dx = np.zeros(ndim)
            dx[j] = eps
            _, gp = values_grad(rbar, z, xa + dx)
            _, gm = values_grad(rbar, z, xa - dx)
            h[:, :, j] = (gp - gm) / (2.0 * eps)
        h = 0.5 * (h + h.transpose(0, 2, 1))
        lam = np.zeros(a.size)
        pending = np.ones(a.size, dtype=bool)
        xt_all = xa.copy()
        ft_all = f[a].copy()
        for _try in range(40):
            p = np.flatnonzero(pending)
            if p.size == 0:
                break
            hd = h[p] + lam[p, None, None] * eye
            # positive definiteness test via eigenvalues keeps the loop vectorized
            pd = np.linalg.eigvalsh(hd)[:, 0] > 0.0
            d = np.zeros((p.size, ndim))
            if pd.any():
                d[pd] = np.linalg.solve(hd[pd], g[a[p[pd]]][..., None])[..., 0]
            xt = xa[p] - d
            ft = values(rbar, z, xt)
            ok = pd & (ft <= f[a[p]])
            xt_all[p[ok]] = xt[ok]
            ft_all[p[ok]] = ft[ok]
            pending[p[ok]] = False
            lam[p[~ok]] = np.where(lam[p[~ok]] == 0.0, 1e-8, lam[p[~ok]] * 10.0)
        accepted = ~pending
        stuck = a[pending]
        live[stuck] = False
        acc = a[accepted]
        if acc.size:
            fold = f[acc].copy()
            x[acc] = xt_all[accepted]
            f_new, g_new = values_grad(rbar, z, x[acc])
            f[acc], g[acc] = f_new, g_new
            live[acc[fold - f_new <= 0.0]] = False
    return x, f, np.linalg.norm(g, axis=1)


def minimize_angles(rbar, z, starts, max_iter=2000, tol=1e-12, step=0.4, polish_steps=50):
    """Multistart Nelder-Mead + Newton polish over the rows of ``starts``.

    Returns ``(best_angles, best_value, gradient_norm, nm_converged, n_starts)``.
    """
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    if starts.shape[1] not in (2, 4):
        raise ValueError("starts must have 2 or 4 columns")
    if starts.shape[0] < 1:
        raise ValueError("at least one start is required")
    x, _, conv = _nelder_mead(rbar, z, starts, step, max_iter, tol)
    x, f, gn = _newton_polish(rbar, z, x, polish_steps)
    best = int(np.argmin(f))
    return x[best].copy(), float(f[best]), float(gn[best]), bool(conv[best]), starts.shape[0]
