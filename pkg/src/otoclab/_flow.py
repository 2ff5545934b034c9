"""Numba kernels for the classical flow: adaptive DOP853 stepping, section
crossing location, Benettin tangent-dynamics Lyapunov accumulation.

The state vector is y = (p1, p2, q1, q2[, dp1, dp2, dq1, dq2]); the last
four components, present when tangent dynamics is on, carry the linearized
deviation vector.  Status codes: 0 = completed, 1 = truncated (phase-space
boundary or step-size underflow), 2 = early exit on a sustained chaotic
Lyapunov estimate.
"""

import numpy as np
from numba import njit

from ._dp853_tableau import A as _TA, B as _TB, E3 as _TE3, E5 as _TE5

N_STAGES = 12
STATUS_OK = 0
STATUS_TRUNCATED = 1
STATUS_EARLY_EXIT = 2

BOUNDARY_MARGIN = 1e-9  # truncate once s^2 > 2 - margin

_A = np.ascontiguousarray(_TA)
_B = np.ascontiguousarray(_TB)
_E3 = np.ascontiguousarray(_TE3)
_E5 = np.ascontiguousarray(_TE5)


@njit(cache=True, nogil=True)
def hamiltonian_nb(y, xi, eps):
    p1, p2, q1, q2 = y[0], y[1], y[2], y[3]
    s2 = p1 * p1 + p2 * p2 + q1 * q1 + q2 * q2
    P2 = p1 * p1 + p2 * p2
    L = p1 * q2 - q1 * p2
    r = 2.0 - s2
    if r < 0.0:
        r = 0.0
    return (1.0 - xi) * s2 / 2.0 - xi * (P2 * r + L * L) - eps * p2 * np.sqrt(r)


@njit(cache=True, nogil=True)
def gradient_nb(y, xi, eps, g):
    """g <- (dH/dp1, dH/dp2, dH/dq1, dH/dq2).

    The eps terms carry the sqrt(2 - s^2) singularity; with eps = 0 the
    flow is polynomial and must stay finite arbitrarily close to (or, from
    roundoff, marginally beyond) the s^2 = 2 boundary.
    """
    p1, p2, q1, q2 = y[0], y[1], y[2], y[3]
    s2 = p1 * p1 + p2 * p2 + q1 * q1 + q2 * q2
    P2 = p1 * p1 + p2 * p2
    L = p1 * q2 - q1 * p2
    r = 2.0 - s2
    c = 1.0 - xi
    g[0] = c * p1 - 2.0 * xi * (p1 * (r - P2) + L * q2)
    g[1] = c * p2 - 2.0 * xi * (p2 * (r - P2) - L * q1)
    g[2] = c * q1 + 2.0 * xi * (q1 * P2 + L * p2)
    g[3] = c * q2 + 2.0 * xi * (q2 * P2 - L * p1)
    if eps != 0.0:
        root = np.sqrt(max(r, 1e-18))
        g[0] += eps * p1 * p2 / root
        g[1] -= eps * (root - p2 * p2 / root)
        g[2] += eps * p2 * q1 / root
        g[3] += eps * p2 * q2 / root


@njit(cache=True, nogil=True)
def hessian_nb(y, xi, eps, h):
    """h <- 4x4 Hessian of H in (p1, p2, q1, q2)."""
    p1, p2, q1, q2 = y[0], y[1], y[2], y[3]
    s2 = p1 * p1 + p2 * p2 + q1 * q1 + q2 * q2
    P2 = p1 * p1 + p2 * p2
    L = p1 * q2 - q1 * p2
    r = 2.0 - s2
    c = 1.0 - xi
    h[0, 0] = c - 2.0 * xi * (r - P2 - 4.0 * p1 * p1 + q2 * q2)
    h[1, 1] = c - 2.0 * xi * (r - P2 - 4.0 * p2 * p2 + q1 * q1)
    h[2, 2] = c + 2.0 * xi * (P2 - p2 * p2)
    h[3, 3] = c + 2.0 * xi * (P2 - p1 * p1)
    h[0, 1] = 2.0 * xi * (4.0 * p1 * p2 + q1 * q2)
    h[0, 2] = 2.0 * xi * (2.0 * p1 * q1 + p2 * q2)
    h[0, 3] = 2.0 * xi * (p1 * q2 - L)
    h[1, 2] = 2.0 * xi * (p2 * q1 + L)
    h[1, 3] = 2.0 * xi * (2.0 * p2 * q2 + p1 * q1)
    h[2, 3] = 2.0 * xi * p1 * p2
    if eps != 0.0:
        u = 1.0 / np.sqrt(max(r, 1e-18))
        u3 = u * u * u
        h[0, 0] += eps * p2 * (u + p1 * p1 * u3)
        h[1, 1] += eps * (3.0 * p2 * u + p2 * p2 * p2 * u3)
        h[2, 2] += eps * p2 * (u + q1 * q1 * u3)
        h[3, 3] += eps * p2 * (u + q2 * q2 * u3)
        h[0, 1] += eps * p1 * (u + p2 * p2 * u3)
        h[0, 2] += eps * p1 * p2 * q1 * u3
        h[0, 3] += eps * p1 * p2 * q2 * u3
        h[1, 2] += eps * q1 * (u + p2 * p2 * u3)
        h[1, 3] += eps * q2 * (u + p2 * p2 * u3)
        h[2, 3] += eps * p2 * q1 * q2 * u3
    h[1, 0] = h[0, 1]
    h[2, 0] = h[0, 2]
    h[3, 0] = h[0, 3]
    h[2, 1] = h[1, 2]
    h[3, 1] = h[1, 3]
    h[3, 2] = h[2, 3]


@njit(cache=True, nogil=True)
def rhs_nb(y, xi, eps, ndim, out):
    """Hamiltonian vector field; with ndim == 8 also the tangent flow."""
    g = np.empty(4)
    gradient_nb(y, xi, eps, g)
    out[0] = -g[2]
    out[1] = -g[3]
    out[2] = g[0]
    out[3] = g[1]
    if ndim == 8:
        h = np.empty((4, 4))
        hessian_nb(y, xi, eps, h)
        for j in range(2):
            acc_p = 0.0
            acc_q = 0.0
            for k in range(4):
                acc_p -= h[2 + j, k] * y[4 + k]
                acc_q += h[j, k] * y[4 + k]
            out[4 + j] = acc_p
            out[6 + j] = acc_q


@njit(cache=True, nogil=True)
def _attempt_step(y, h, xi, eps, ndim, K, ynew, rtol, atol):
    """One trial DOP853 step of size h.  Fills K and ynew, returns the
    scaled error norm (accept when <= 1)."""
    ytmp = np.empty(8)
    for s in range(1, N_STAGES):
        for i in range(ndim):
            acc = 0.0
            for j in range(s):
                aj = _A[s, j]
                if aj != 0.0:
                    acc += aj * K[j, i]
            ytmp[i] = y[i] + h * acc
        rhs_nb(ytmp, xi, eps, ndim, K[s])
    for i in range(ndim):
        acc = 0.0
        for s in range(N_STAGES):
            bs = _B[s]
            if bs != 0.0:
                acc += bs * K[s, i]
        ynew[i] = y[i] + h * acc
    rhs_nb(ynew, xi, eps, ndim, K[N_STAGES])
    # error is controlled on the trajectory components only, so tangent
    # (deviation) scaling cannot influence the step sequence
    ncontrol = 4 if ndim > 4 else ndim
    err5sq = 0.0
    err3sq = 0.0
    for i in range(ncontrol):
        e5 = 0.0
        e3 = 0.0
        for s in range(N_STAGES + 1):
            e5 += _E5[s] * K[s, i]
            e3 += _E3[s] * K[s, i]
        sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
        e5 /= sc
        e3 /= sc
        err5sq += e5 * e5
        err3sq += e3 * e3
    if err5sq == 0.0 and err3sq == 0.0:
        return 0.0
    denom = err5sq + 0.01 * err3sq
    return abs(h) * err5sq / np.sqrt(denom * ncontrol)


@njit(cache=True, nogil=True)
def _single_step_to(y0, tau, xi, eps, K0, ndim):
    """State after one (non-adaptive) DOP853 step of size tau from y0.

    K0 must hold rhs(y0); used for locating section crossings inside an
    accepted step, where |tau| <= h keeps the O(tau^9) local error tiny.
    """
    K = np.empty((N_STAGES + 1, 8))
    for i in range(ndim):
        K[0, i] = K0[i]
    ytmp = np.empty(8)
    for s in range(1, N_STAGES):
        for i in range(ndim):
            acc = 0.0
            for j in range(s):
                aj = _A[s, j]
                if aj != 0.0:
                    acc += aj * K[j, i]
            ytmp[i] = y0[i] + tau * acc
        rhs_nb(ytmp, xi, eps, ndim, K[s])
    out = np.empty(8)
    for i in range(ndim):
        acc = 0.0
        for s in range(N_STAGES):
            bs = _B[s]
            if bs != 0.0:
                acc += bs * K[s, i]
        out[i] = y0[i] + tau * acc
    return out


@njit(cache=True, nogil=True)
def _locate_crossing(y0, h, xi, eps, K0, ndim, pidx):
    """Root of y[pidx](s * h) = 0 for s in (0, 1] by Illinois regula falsi.

    Works for either sign of h; each function evaluation is one fixed-size
    DOP853 step from y0.
    """
    sa = 0.0
    sb = 1.0
    fa = y0[pidx]
    yb = _single_step_to(y0, h, xi, eps, K0, ndim)
    fb = yb[pidx]
    ya = y0.copy()
    for it in range(64):
        if abs(fb) < 1e-12 or abs(fa) < 1e-12 or (sb - sa) < 1e-14:
            break
        # secant step on even iterations, guaranteed-progress bisection on odd
        sm = 0.5 * (sa + sb)
        if it % 2 == 0 and fb != fa:
            st = sb - fb * (sb - sa) / (fb - fa)
            if sa < st < sb:
                sm = st
        ym = _single_step_to(y0, sm * h, xi, eps, K0, ndim)
        fm = ym[pidx]
        if fm == 0.0:
            return sm * h, ym
        if fa * fm < 0.0:
            sb = sm
            fb = fm
            yb = ym
        else:
            sa = sm
            fa = fm
            ya = ym
    if abs(fb) <= abs(fa):
        return sb * h, yb
    return sa * h, ya


@njit(cache=True, nogil=True)
def evolve(
    y0,
    xi,
    eps,
    t_end,
    rtol,
    atol,
    tangent,
    renorm_interval,
    d0,
    section_pidx,
    orientation,
    crossings,
    lam_hist,
    early_threshold,
    early_min_time,
):
    """Integrate the flow from t=0 to t_end (t_end may be negative).

    crossings: preallocated (max_cross, 3) output, rows (t, c1, c2) where
    (c1, c2) are the in-plane coordinates (q2, p2) for the q1 = 0 plane or
    (q1, p1) for q2 = 0; section_pidx < 0 disables crossing detection.
    lam_hist: preallocated (max_hist, 2) output of (t, lambda(t)) samples at
    renormalization times (tangent runs only).
    early_threshold <= 0 disables the early-exit rule.

    Returns (status, t_final, y_final, log_sum, drift_max, n_cross, n_hist).
    """
    ndim = 8 if tangent else 4
    direction = 1.0 if t_end >= 0.0 else -1.0
    y = np.empty(8)
    for i in range(8):
        y[i] = 0.0
    for i in range(ndim):
        y[i] = y0[i]
    if tangent:
        nrm = 0.0
        for i in range(4):
            nrm += y[4 + i] * y[4 + i]
        nrm = np.sqrt(nrm)
        if nrm == 0.0:
            # default deviation direction
            y[4] = d0 * 0.5
            y[5] = d0 * 0.5
            y[6] = d0 * 0.5
            y[7] = d0 * 0.5
        else:
            for i in range(4):
                y[4 + i] = y[4 + i] / nrm * d0

    e0 = hamiltonian_nb(y, xi, eps)
    drift_max = 0.0
    K = np.empty((N_STAGES + 1, 8))
    ynew = np.empty(8)
    t = 0.0
    log_sum = 0.0
    n_cross = 0
    n_hist = 0
    max_cross = crossings.shape[0]
    max_hist = lam_hist.shape[0]
    next_renorm = renorm_interval * direction
    streak_start = -1.0
    status = STATUS_OK

    # initial step size from the local velocity scale
    rhs_nb(y, xi, eps, ndim, K[0])
    v = 0.0
    for i in range(4):
        v = max(v, abs(K[0, i]))
    h = direction * min(0.01 / max(v, 1e-3), 0.1)

    while (t_end - t) * direction > 0.0:
        if abs(h) > abs(t_end - t):
            h = t_end - t
        hit_renorm = False
        if tangent and renorm_interval > 0.0 and (next_renorm - (t + h)) * direction <= 0.0:
            h = next_renorm - t
            hit_renorm = True
        err = _attempt_step(y, h, xi, eps, ndim, K, ynew, rtol, atol)
        if not (err <= 1.0):  # also rejects a NaN error norm
            if np.isfinite(err):
                fac = 0.9 * err ** (-0.125)
                if fac < 0.2:
                    fac = 0.2
            else:
                fac = 0.2
            h *= fac
            if abs(h) < 1e-14 * max(1.0, abs(t)):
                status = STATUS_TRUNCATED
                break
            continue

        # the eps term is singular on s^2 = 2; without it the flow is
        # polynomial and only a genuine blow-up is fatal
        s2 = ynew[0] ** 2 + ynew[1] ** 2 + ynew[2] ** 2 + ynew[3] ** 2
        limit = 2.0 - BOUNDARY_MARGIN if eps != 0.0 else 2.0 + 1e-6
        if not (s2 <= limit):
            status = STATUS_TRUNCATED
            break

        # section crossing inside the accepted step
        if section_pidx >= 0:
            f0 = y[section_pidx]
            f1 = ynew[section_pidx]
            if f0 != 0.0 and f0 * f1 < 0.0 and n_cross < max_cross:
                tau, ycross = _locate_crossing(y, h, xi, eps, K[0], ndim, section_pidx)
                dcross = np.empty(8)
                rhs_nb(ycross, xi, eps, 4, dcross)
                speed = dcross[section_pidx]
                if orientation == 0 or speed * orientation > 0.0:
                    crossings[n_cross, 0] = t + tau
                    if section_pidx == 2:
                        crossings[n_cross, 1] = ycross[3]
                        crossings[n_cross, 2] = ycross[1]
                    else:
                        crossings[n_cross, 1] = ycross[2]
                        crossings[n_cross, 2] = ycross[0]
                    n_cross += 1

        t += h
        for i in range(ndim):
            y[i] = ynew[i]
        for i in range(ndim):
            K[0, i] = K[N_STAGES, i]  # FSAL-style reuse for crossing location

        drift = abs(hamiltonian_nb(y, xi, eps) - e0)
        if drift > drift_max:
            drift_max = drift

        if err == 0.0:
            fac = 6.0
        else:
            fac = 0.9 * err ** (-0.125)
            if fac > 6.0:
                fac = 6.0
            elif fac < 0.2:
                fac = 0.2
        h *= fac

        if tangent and hit_renorm:
            nrm = 0.0
            for i in range(4):
                nrm += y[4 + i] * y[4 + i]
            nrm = np.sqrt(nrm)
            if nrm > 0.0:
                log_sum += np.log(nrm / d0)
                for i in range(4):
                    y[4 + i] = y[4 + i] / nrm * d0
            lam_t = log_sum / abs(t)
            if n_hist < max_hist:
                lam_hist[n_hist, 0] = abs(t)
                lam_hist[n_hist, 1] = lam_t
                n_hist += 1
            if early_threshold > 0.0:
                if lam_t > early_threshold:
                    if streak_start < 0.0:
                        streak_start = abs(t)
                    elif abs(t) >= 10.0 * streak_start and abs(t) >= early_min_time:
                        status = STATUS_EARLY_EXIT
                        break
                else:
                    streak_start = -1.0
            next_renorm += renorm_interval * direction
            rhs_nb(y, xi, eps, ndim, K[0])  # tangent rescaled, refresh K[0]

    yout = np.empty(ndim)
    for i in range(ndim):
        yout[i] = y[i]
    return status, t, yout, log_sum, drift_max, n_cross, n_hist
