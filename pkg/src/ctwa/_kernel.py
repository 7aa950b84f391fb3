"""Compiled right-hand side and adaptive DOP853 integrator for cluster TWA.

The equations of motion are ``dx_p/dt = f_pqr g_q x_r`` with the Weyl gradient
``g = B + K x``.  Everything is flattened to global indices: ``K`` is given in
COO form (both orientations) and ``f`` as parallel arrays ``(ep, eq, er, ev)``.
"""

import os

import numba
import numpy as np
from numba import njit, prange
from scipy.integrate._ivp import dop853_coefficients as _dop

N_STAGES = _dop.N_STAGES
RK_A = np.ascontiguousarray(_dop.A[:N_STAGES, :N_STAGES])
RK_B = np.ascontiguousarray(_dop.B)
# the vector field is autonomous, so the stage times C are not needed
RK_E3 = np.ascontiguousarray(_dop.E3)
RK_E5 = np.ascontiguousarray(_dop.E5)

# The TBB layer is probed first by default and warns on old installs; OpenMP
# is present wherever numba wheels are.  An explicit user choice wins.
if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER = "omp"

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
ERR_EXP = -1.0 / 8.0

OK = 0
STEP_UNDERFLOW = 1
NON_FINITE = 2
TOO_MANY_STEPS = 3


@njit(cache=True)
def rhs(x, B, krow, kcol, kval, ep, eq, er, ev, g, dx):
    for i in range(B.shape[0]):
        g[i] = B[i]
    for k in range(kval.shape[0]):
        g[krow[k]] += kval[k] * x[kcol[k]]
    for i in range(dx.shape[0]):
        dx[i] = 0.0
    for k in range(ev.shape[0]):
        dx[ep[k]] += ev[k] * g[eq[k]] * x[er[k]]


@njit(cache=True)
def energy(x, B, krow, kcol, kval):
    e = 0.0
    for i in range(B.shape[0]):
        e += B[i] * x[i]
    for k in range(kval.shape[0]):
        e += 0.5 * kval[k] * x[krow[k]] * x[kcol[k]]
    return e


@njit(cache=True)
def _rms(v, scale):
    s = 0.0
    for i in range(v.shape[0]):
        r = v[i] / scale[i]
        s += r * r
    return np.sqrt(s / v.shape[0])


@njit(cache=True)
def _diagnostics(x, B, krow, kcol, kval, offsets, zidx, out):
    out[0] = energy(x, B, krow, kcol, kval)
    m = 0.0
    for i in range(zidx.shape[0]):
        m += x[zidx[i]]
    out[1] = m
    for c in range(offsets.shape[0] - 1):
        s = 0.0
        for i in range(offsets[c], offsets[c + 1]):
            s += x[i] * x[i]
        out[2 + c] = s


@njit(cache=True)
def integrate(x0, t_save, rtol, atol, max_steps,
              B, krow, kcol, kval, ep, eq, er, ev,
              record, offsets, zidx, out, diag):
    """Integrate one trajectory; writes ``x[record]`` at every save time into ``out``.

    ``diag[k]`` holds (H_W, sum of z components, Casimir per cluster) at save
    time ``k``.  Returns (status, number of RHS evaluations).
    """
    n = x0.shape[0]
    A, Bw, E3, E5 = RK_A, RK_B, RK_E3, RK_E5
    K = np.zeros((N_STAGES + 1, n))
    g = np.zeros(n)
    y = x0.copy()
    ytmp = np.empty(n)
    ynew = np.empty(n)
    f = np.empty(n)
    fnew = np.empty(n)
    scale = np.empty(n)
    err5 = np.empty(n)
    err3 = np.empty(n)
    nfev = 0

    t = t_save[0]
    for j in range(record.shape[0]):
        out[0, j] = y[record[j]]
    _diagnostics(y, B, krow, kcol, kval, offsets, zidx, diag[0])
    if t_save.shape[0] == 1:
        return OK, nfev

    rhs(y, B, krow, kcol, kval, ep, eq, er, ev, g, f)
    nfev += 1

    # initial step (Hairer, Norsett & Wanner II.4)
    for i in range(n):
        scale[i] = atol + abs(y[i]) * rtol
    d0 = _rms(y, scale)
    d1 = _rms(f, scale)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    for i in range(n):
        ytmp[i] = y[i] + h0 * f[i]
    rhs(ytmp, B, krow, kcol, kval, ep, eq, er, ev, g, fnew)
    nfev += 1
    for i in range(n):
        err5[i] = fnew[i] - f[i]
    d2 = _rms(err5, scale) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 8.0)
    h_abs = min(100.0 * h0, h1)

    steps = 0
    for k in range(1, t_save.shape[0]):
        target = t_save[k]
        while t < target:
            if steps >= max_steps:
                return TOO_MANY_STEPS, nfev
            min_step = 10.0 * abs(np.nextafter(t, np.inf) - t)
            rejected = False
            while True:
                if h_abs < min_step:
                    return STEP_UNDERFLOW, nfev
                h = h_abs
                clipped = False
                if t + h >= target:
                    h = target - t
                    clipped = True
                # stages
                for i in range(n):
                    K[0, i] = f[i]
                for s in range(1, N_STAGES):
                    for i in range(n):
                        acc = 0.0
                        for m in range(s):
                            acc += A[s, m] * K[m, i]
                        ytmp[i] = y[i] + h * acc
                    rhs(ytmp, B, krow, kcol, kval, ep, eq, er, ev, g, K[s])
                for i in range(n):
                    acc = 0.0
                    for m in range(N_STAGES):
                        acc += Bw[m] * K[m, i]
                    ynew[i] = y[i] + h * acc
                rhs(ynew, B, krow, kcol, kval, ep, eq, er, ev, g, fnew)
                nfev += N_STAGES
                for i in range(n):
                    K[N_STAGES, i] = fnew[i]
                finite = True
                for i in range(n):
                    if not np.isfinite(ynew[i]):
                        finite = False
                        break
                if not finite:
                    if h_abs < 1e-12:
                        return NON_FINITE, nfev
                    h_abs *= MIN_FACTOR
                    rejected = True
                    continue
                for i in range(n):
                    scale[i] = atol + max(abs(y[i]), abs(ynew[i])) * rtol
                    a5 = 0.0
                    a3 = 0.0
                    for m in range(N_STAGES + 1):
                        a5 += E5[m] * K[m, i]
                        a3 += E3[m] * K[m, i]
                    err5[i] = a5 / scale[i]
                    err3[i] = a3 / scale[i]
                e5 = 0.0
                e3 = 0.0
                for i in range(n):
                    e5 += err5[i] * err5[i]
                    e3 += err3[i] * err3[i]
                if e5 == 0.0 and e3 == 0.0:
                    err_norm = 0.0
                else:
                    err_norm = h * e5 / np.sqrt((e5 + 0.01 * e3) * n)
                if err_norm < 1.0:
                    if err_norm == 0.0:
                        factor = MAX_FACTOR
                    else:
                        factor = min(MAX_FACTOR, SAFETY * err_norm ** ERR_EXP)
                    if rejected:
                        factor = min(1.0, factor)
                    if clipped:
                        # a step shortened to land on a save time must not shrink h
                        h_abs = max(h_abs, h * factor)
                    else:
                        h_abs = h * factor
                    break
                h_abs = h * max(MIN_FACTOR, SAFETY * err_norm ** ERR_EXP)
                rejected = True
            steps += 1
            if clipped:
                t = target
            else:
                t = t + h
            for i in range(n):
                y[i] = ynew[i]
                f[i] = fnew[i]
        for j in range(record.shape[0]):
            out[k, j] = y[record[j]]
        _diagnostics(y, B, krow, kcol, kval, offsets, zidx, diag[k])
    return OK, nfev


@njit(cache=True, parallel=True)
def integrate_batch(X0, t_save, rtol, atol, max_steps,
                    B, krow, kcol, kval, ep, eq, er, ev,
                    record, offsets, zidx, out, diag, status, nfev):
    for m in prange(X0.shape[0]):
        st, nf = integrate(X0[m], t_save, rtol, atol, max_steps,
                           B, krow, kcol, kval, ep, eq, er, ev,
                           record, offsets, zidx, out[m], diag[m])
        status[m] = st
        nfev[m] = nf
