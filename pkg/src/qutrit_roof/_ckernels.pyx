# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the characteristic-curve minimization.

Mirrors ``_pykernels`` function by function. Angles parametrize the
normalized real ansatz parameters:

* reduced (2 angles):  a = c = sin(t)/sqrt2, b = cos(t); d = f = sin(p)/sqrt2, e = cos(p)
* full (4 angles):     (a, b, c) = (sin t1 cos t2, sin t1 sin t2, cos t1), same for (d, e, f)
"""

from libc.math cimport sqrt, sin, cos, fabs

import numpy as np

cdef double INV_SQ2 = 0.7071067811865476
cdef int MAXDIM = 4


cdef inline void _xi_from_angles(const double* ang, int ndim, double* xi) noexcept nogil:
    cdef double s
    if ndim == 2:
        s = sin(ang[0]) * INV_SQ2
        xi[0] = s
        xi[1] = cos(ang[0])
        xi[2] = s
        s = sin(ang[1]) * INV_SQ2
        xi[3] = s
        xi[4] = cos(ang[1])
        xi[5] = s
    else:
        xi[0] = sin(ang[0]) * cos(ang[1])
        xi[1] = sin(ang[0]) * sin(ang[1])
        xi[2] = cos(ang[0])
        xi[3] = sin(ang[2]) * cos(ang[3])
        xi[4] = sin(ang[2]) * sin(ang[3])
        xi[5] = cos(ang[2])


cdef inline void _dxi_from_angles(const double* ang, int ndim, double* jac) noexcept nogil:
    # jac[k*6 + i] = d xi_i / d ang_k
    cdef int i
    for i in range(6 * ndim):
        jac[i] = 0.0
    if ndim == 2:
        jac[0] = cos(ang[0]) * INV_SQ2
        jac[1] = -sin(ang[0])
        jac[2] = jac[0]
        jac[6 + 3] = cos(ang[1]) * INV_SQ2
        jac[6 + 4] = -sin(ang[1])
        jac[6 + 5] = jac[6 + 3]
    else:
        jac[0] = cos(ang[0]) * cos(ang[1])
        jac[1] = cos(ang[0]) * sin(ang[1])
        jac[2] = -sin(ang[0])
        jac[6 + 0] = -sin(ang[0]) * sin(ang[1])
        jac[6 + 1] = sin(ang[0]) * cos(ang[1])
        jac[12 + 3] = cos(ang[2]) * cos(ang[3])
        jac[12 + 4] = cos(ang[2]) * sin(ang[3])
        jac[12 + 5] = -sin(ang[2])
        jac[18 + 3] = -sin(ang[2]) * sin(ang[3])
        jac[18 + 4] = sin(ang[2]) * cos(ang[3])


cdef inline void _fill_m(double rbar, double z, const double* xi, double* m) noexcept nogil:
    cdef double s0 = sqrt(z / 3.0) if z > 0.0 else 0.0
    cdef double w = 1.0 - z if z < 1.0 else 0.0
    cdef double wp = sqrt(w * (1.0 + rbar) * 0.5) if rbar > -1.0 else 0.0
    cdef double wm = sqrt(w * (1.0 - rbar) * 0.5) if rbar < 1.0 else 0.0
    m[0] = s0
    m[1] = wp * xi[0]
    m[2] = wm * xi[4]
    m[3] = wm * xi[3]
    m[4] = s0
    m[5] = wp * xi[2]
    m[6] = wp * xi[1]
    m[7] = wm * xi[5]
    m[8] = s0


cdef inline double _elin_m(const double* m) noexcept nogil:
    # 2[(tr rho)^2 - tr rho^2], rho = M M^T
    cdef double rho[9]
    cdef int i, j, k
    cdef double tr = 0.0, tr2 = 0.0, acc
    for i in range(3):
        for j in range(3):
            acc = 0.0
            for k in range(3):
                acc = acc + m[3 * i + k] * m[3 * j + k]
            rho[3 * i + j] = acc
    for i in range(3):
        tr = tr + rho[4 * i]
        for j in range(3):
            tr2 = tr2 + rho[3 * i + j] * rho[3 * i + j]
    return 2.0 * (tr * tr - tr2)


cdef inline double _value(double rbar, double z, const double* ang, int ndim) noexcept nogil:
    cdef double xi[6]
    cdef double m[9]
    _xi_from_angles(ang, ndim, xi)
    _fill_m(rbar, z, xi, m)
    return _elin_m(m)


cdef inline double _value_grad(double rbar, double z, const double* ang, int ndim, double* grad) noexcept nogil:
    cdef double xi[6]
    cdef double m[9]
    cdef double rho[9]
    cdef double g[9]
    cdef double gxi[6]
    cdef double jac[24]
    cdef int i, j, k
    cdef double tr = 0.0, tr2 = 0.0, acc, wp, wm, w
    _xi_from_angles(ang, ndim, xi)
    _fill_m(rbar, z, xi, m)
    for i in range(3):
        for j in range(3):
            acc = 0.0
            for k in range(3):
                acc = acc + m[3 * i + k] * m[3 * j + k]
            rho[3 * i + j] = acc
    for i in range(3):
        tr = tr + rho[4 * i]
        for j in range(3):
            tr2 = tr2 + rho[3 * i + j] * rho[3 * i + j]
    # dE/dM = 8 tr(rho) M - 8 rho M
    for i in range(3):
        for j in range(3):
            acc = 0.0
            for k in range(3):
                acc = acc + rho[3 * i + k] * m[3 * k + j]
            g[3 * i + j] = 8.0 * (tr * m[3 * i + j] - acc)
    w = 1.0 - z if z < 1.0 else 0.0
    wp = sqrt(w * (1.0 + rbar) * 0.5) if rbar > -1.0 else 0.0
    wm = sqrt(w * (1.0 - rbar) * 0.5) if rbar < 1.0 else 0.0
    gxi[0] = g[1] * wp
    gxi[1] = g[6] * wp
    gxi[2] = g[5] * wp
    gxi[3] = g[3] * wm
    gxi[4] = g[2] * wm
    gxi[5] = g[7] * wm
    _dxi_from_angles(ang, ndim, jac)
    for k in range(ndim):
        acc = 0.0
        for i in range(6):
            acc = acc + jac[6 * k + i] * gxi[i]
        grad[k] = acc
    return 2.0 * (tr * tr - tr2)


cdef int _nelder_mead(double rbar, double z, double* x, int ndim, double step,
                      int max_iter, double tol, double* fout) noexcept nogil:
    """Minimize in place from x; returns the number of iterations (max_iter+1 if not converged)."""
    cdef double simplex[5 * 4]
    cdef double fv[5]
    cdef double cen[4]
    cdef double xr[4]
    cdef double xe[4]
    cdef double xc[4]
    cdef double fr, fe, fc, tmp, spread, xspread
    cdef int n1 = ndim + 1
    cdef int i, j, k, it, order_lo, worst, second
    for i in range(n1):
        for j in range(ndim):
            simplex[i * 4 + j] = x[j]
        if i > 0:
            simplex[i * 4 + i - 1] += step
        fv[i] = _value(rbar, z, &simplex[i * 4], ndim)
    it = 0
    while it < max_iter:
        # insertion sort by value
        for i in range(1, n1):
            k = i
            while k > 0 and fv[k] < fv[k - 1]:
                tmp = fv[k]; fv[k] = fv[k - 1]; fv[k - 1] = tmp
                for j in range(ndim):
                    tmp = simplex[k * 4 + j]
                    simplex[k * 4 + j] = simplex[(k - 1) * 4 + j]
                    simplex[(k - 1) * 4 + j] = tmp
                k -= 1
        spread = fv[ndim] - fv[0]
        xspread = 0.0
        for i in range(1, n1):
            for j in range(ndim):
                tmp = fabs(simplex[i * 4 + j] - simplex[j])
                if tmp > xspread:
                    xspread = tmp
        if spread <= tol and xspread <= sqrt(tol):
            break
        worst = ndim
        second = ndim - 1
        for j in range(ndim):
            cen[j] = 0.0
            for i in range(ndim):
                cen[j] += simplex[i * 4 + j]
            cen[j] /= ndim
        for j in range(ndim):
            xr[j] = 2.0 * cen[j] - simplex[worst * 4 + j]
        fr = _value(rbar, z, xr, ndim)
        if fr < fv[0]:
            for j in range(ndim):
                xe[j] = 3.0 * cen[j] - 2.0 * simplex[worst * 4 + j]
            fe = _value(rbar, z, xe, ndim)
            if fe < fr:
                for j in range(ndim):
                    simplex[worst * 4 + j] = xe[j]
                fv[worst] = fe
            else:
                for j in range(ndim):
                    simplex[worst * 4 + j] = xr[j]
                fv[worst] = fr
        elif fr < fv[second]:
            for j in range(ndim):
                simplex[worst * 4 + j] = xr[j]
            fv[worst] = fr
        else:
            if fr < fv[worst]:
                for j in range(ndim):
                    xc[j] = cen[j] + 0.5 * (xr[j] - cen[j])
            else:
                for j in range(ndim):
                    xc[j] = cen[j] + 0.5 * (simplex[worst * 4 + j] - cen[j])
            fc = _value(rbar, z, xc, ndim)
            if fc < fv[worst] and fc < fr:
                for j in range(ndim):
                    simplex[worst * 4 + j] = xc[j]
                fv[worst] = fc
            else:
                for i in range(1, n1):
                    for j in range(ndim):
                        simplex[i * 4 + j] = simplex[j] + 0.5 * (simplex[i * 4 + j] - simplex[j])
                    fv[i] = _value(rbar, z, &simplex[i * 4], ndim)
        it += 1
    order_lo = 0
    for i in range(1, n1):
        if fv[i] < fv[order_lo]:
            order_lo = i
    for j in range(ndim):
        x[j] = simplex[order_lo * 4 + j]
    fout[0] = fv[order_lo]
    if it >= max_iter:
        return max_iter + 1
    return it


cdef int _cholesky_solve(double* a, double* b, int n) noexcept nogil:
    """Solve a x = b in place (b <- x) for SPD a; returns 0 on failure."""
    cdef double l[16]
    cdef int i, j, k
    cdef double s
    for i in range(n):
        for j in range(i + 1):
            s = a[i * n + j]
            for k in range(j):
                s -= l[i * 4 + k] * l[j * 4 + k]
            if i == j:
                if s <= 0.0:
                    return 0
                l[i * 4 + i] = sqrt(s)
            else:
                l[i * 4 + j] = s / l[j * 4 + j]
    for i in range(n):
        s = b[i]
        for k in range(i):
            s -= l[i * 4 + k] * b[k]
        b[i] = s / l[i * 4 + i]
    for i in range(n - 1, -1, -1):
        s = b[i]
        for k in range(i + 1, n):
            s -= l[k * 4 + i] * b[k]
        b[i] = s / l[i * 4 + i]
    return 1


cdef double _newton_polish(double rbar, double z, double* x, int ndim, double* fval,
                           int max_steps) noexcept nogil:
    """Damped Newton with finite-difference Hessian of the analytic gradient.

    Returns the final gradient norm; x and fval are updated in place.
    """
    cdef double g[4]
    cdef double gp[4]
    cdef double gm[4]
    cdef double h[16]
    cdef double hd[16]
    cdef double d[4]
    cdef double xt[4]
    cdef double f, ft, fold, lam, gn, eps = 1e-5
    cdef int it, i, j, ok, tries
    f = _value_grad(rbar, z, x, ndim, g)
    for it in range(max_steps):
        gn = 0.0
        for i in range(ndim):
            gn += g[i] * g[i]
        gn = sqrt(gn)
        if gn < 1e-13:
            break
        for j in range(ndim):
            for i in range(ndim):
                xt[i] = x[i]
            xt[j] = x[j] + eps
            _value_grad(rbar, z, xt, ndim, gp)
            xt[j] = x[j] - eps
            _value_grad(rbar, z, xt, ndim, gm)
            for i in range(ndim):
                h[i * ndim + j] = (gp[i] - gm[i]) / (2.0 * eps)
        for i in range(ndim):
            for j in range(i):
                h[i * ndim + j] = 0.5 * (h[i * ndim + j] + h[j * ndim + i])
                h[j * ndim + i] = h[i * ndim + j]
        lam = 0.0
        ok = 0
        for tries in range(40):
            for i in range(ndim * ndim):
                hd[i] = h[i]
            for i in range(ndim):
                hd[i * ndim + i] += lam
                d[i] = g[i]
            if _cholesky_solve(hd, d, ndim):
                for i in range(ndim):
                    xt[i] = x[i] - d[i]
                ft = _value(rbar, z, xt, ndim)
                if ft <= f:
                    ok = 1
                    break
            lam = 1e-8 if lam == 0.0 else lam * 10.0
        if not ok:
            break
        for i in range(ndim):
            x[i] = xt[i]
        fold = f
        f = _value_grad(rbar, z, x, ndim, g)
        if fold - f <= 0.0:
            break
    gn = 0.0
    for i in range(ndim):
        gn += g[i] * g[i]
    fval[0] = f
    return sqrt(gn)


def elin_angles(double rbar, double z, angles):
    """Objective value for one angle vector (length 2 or 4)."""
    cdef double[::1] a = np.ascontiguousarray(angles, dtype=np.float64)
    cdef int ndim = a.shape[0]
    if ndim != 2 and ndim != 4:
        raise ValueError("angles must have length 2 or 4")
    return _value(rbar, z, &a[0], ndim)


def elin_angles_grad(double rbar, double z, angles):
    cdef double[::1] a = np.ascontiguousarray(angles, dtype=np.float64)
    cdef int ndim = a.shape[0]
    if ndim != 2 and ndim != 4:
        raise ValueError("angles must have length 2 or 4")
    out = np.zeros(ndim)
    cdef double[::1] o = out
    f = _value_grad(rbar, z, &a[0], ndim, &o[0])
    return f, out


def minimize_angles(double rbar, double z, starts, int max_iter=2000, double tol=1e-12,
                    double step=0.4, int polish_steps=50):
    """Multistart Nelder-Mead + Newton polish over the rows of ``starts``.

    Returns ``(best_angles, best_value, gradient_norm, nm_converged, n_starts)``.
    """
    cdef double[:, ::1] s = np.ascontiguousarray(starts, dtype=np.float64)
    cdef int n = s.shape[0]
    cdef int ndim = s.shape[1]
    if ndim != 2 and ndim != 4:
        raise ValueError("starts must have 2 or 4 columns")
    if n < 1:
        raise ValueError("at least one start is required")
    cdef double x[4]
    cdef double bx[4]
    cdef double f, bf = 1e300, gn, bgn = 0.0
    cdef int i, j, its, bconv = 0
    with nogil:
        for i in range(n):
            for j in range(ndim):
                x[j] = s[i, j]
            its = _nelder_mead(rbar, z, x, ndim, step, max_iter, tol, &f)
            gn = _newton_polish(rbar, z, x, ndim, &f, polish_steps)
            if f < bf:
                bf = f
                bgn = gn
                bconv = 1 if its <= max_iter else 0
                for j in range(ndim):
                    bx[j] = x[j]
    best = np.array([bx[j] for j in range(ndim)])
    return best, bf, bgn, bool(bconv), n
