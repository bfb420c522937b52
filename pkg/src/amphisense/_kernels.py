"""Numerical kernels, built two ways.

Every kernel here has a numba build (explicit loops under ``@njit``) and a
numpy/scipy fallback.  The build is chosen once at import time by
``_accel.USE_NUMBA`` (numba installed and the AMPHISENSE_NUMBA env var not
set to 0/false/off/no).  Public names keep identical signatures and agree to
float rounding, so callers never branch and tests can cross-check the paths
by reimporting with the flag flipped.

Sequential recurrences (IIR filter scan, Newton continuation, oscillator
integration) are where numba pays; the fallbacks vectorize across elements
wherever the recurrence allows and loop in Python where it does not.
"""

import math

import numpy as np
from scipy import signal

from ._accel import USE_NUMBA, jit


# ---------------------------------------------------------------------------
# first-order low-pass scan
# ---------------------------------------------------------------------------

def _lowpass_scan_loops(x, alpha, out):
    n, k = x.shape
    for c in range(k):
        y = x[0, c]
        out[0, c] = y
        for i in range(1, n):
            y = y + alpha * (x[i, c] - y)
            out[i, c] = y


def _lowpass_scan_numpy(x, alpha):
    # y[n] = alpha x[n] + (1 - alpha) y[n-1], seeded so y[0] = x[0]
    b = np.array([alpha])
    a = np.array([1.0, alpha - 1.0])
    zi = (1.0 - alpha) * x[0][None, :]
    y, _ = signal.lfilter(b, a, x, axis=0, zi=zi)
    return y


def lowpass_scan(x: np.ndarray, alpha: float) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=float)
    if USE_NUMBA:
        out = np.empty_like(x)
        _lowpass_scan_loops(x, alpha, out)
        return out
    return _lowpass_scan_numpy(x, alpha)


# ---------------------------------------------------------------------------
# fin-magnet flux model and Newton inversion
# ---------------------------------------------------------------------------
# Unknowns q = (p_x, p_y, h_y); p_z is fixed, h_x = sqrt(1 - h_y^2), h_z = 0.
# The same scalar cores back both builds, so results match bit for bit.

def _flow_flux_core(px, py, hy, pz, n_t, out):
    hx = math.sqrt(max(1.0 - hy * hy, 0.0))
    r2 = px * px + py * py + pz * pz
    r = math.sqrt(r2)
    r5 = r2 * r2 * r
    m = hx * px + hy * py
    out[0] = n_t * (3.0 * m * px - r2 * hx) / r5
    out[1] = n_t * (3.0 * m * py - r2 * hy) / r5
    out[2] = n_t * (3.0 * m * pz) / r5


def _flow_jacobian(px, py, hy, pz, n_t, J):
    """Analytic Jacobian of the flux model w.r.t. (p_x, p_y, h_y)."""
    hx = math.sqrt(max(1.0 - hy * hy, 1e-12))
    r2 = px * px + py * py + pz * pz
    r = math.sqrt(r2)
    r5 = r2 * r2 * r
    r7 = r5 * r2
    m = hx * px + hy * py
    nx = 3.0 * m * px - r2 * hx
    ny = 3.0 * m * py - r2 * hy
    nz = 3.0 * m * pz
    # d/dp_x
    J[0, 0] = n_t * ((hx * px + 3.0 * m) / r5 - 5.0 * px * nx / r7)
    J[1, 0] = n_t * ((3.0 * hx * py - 2.0 * px * hy) / r5 - 5.0 * px * ny / r7)
    J[2, 0] = n_t * (3.0 * hx * pz / r5 - 5.0 * px * nz / r7)
    # d/dp_y
    J[0, 1] = n_t * ((3.0 * hy * px - 2.0 * py * hx) / r5 - 5.0 * py * nx / r7)
    J[1, 1] = n_t * ((hy * py + 3.0 * m) / r5 - 5.0 * py * ny / r7)
    J[2, 1] = n_t * (3.0 * hy * pz / r5 - 5.0 * py * nz / r7)
    # d/dh_y, through h_x as well
    dm = -hy / hx * px + py
    J[0, 2] = n_t * (3.0 * dm * px + r2 * hy / hx) / r5
    J[1, 2] = n_t * (3.0 * dm * py - r2) / r5
    J[2, 2] = n_t * (3.0 * dm * pz) / r5


def _solve3(J, f, s):
    """Cramer solve of J s = -f for a 3x3 system; returns False if singular."""
    a, b, c = J[0, 0], J[0, 1], J[0, 2]
    d, e, g = J[1, 0], J[1, 1], J[1, 2]
    h, i, k = J[2, 0], J[2, 1], J[2, 2]
    det = a * (e * k - g * i) - b * (d * k - g * h) + c * (d * i - e * h)
    if abs(det) < 1e-300:
        return False
    r0, r1, r2 = -f[0], -f[1], -f[2]
    s[0] = (r0 * (e * k - g * i) - b * (r1 * k - g * r2) + c * (r1 * i - e * r2)) / det
    s[1] = (a * (r1 * k - g * r2) - r0 * (d * k - g * h) + c * (d * r2 - r1 * h)) / det
    s[2] = (a * (e * r2 - r1 * i) - b * (d * r2 - r1 * h) + r0 * (d * i - e * h)) / det
    return True


def _flow_newton_core(bx, by, bz, pz, n_t, q, tol, max_iter):
    """Damped Newton on the flux residual; q is updated in place.

    Returns (residual_norm, converged).  Steps are backtracked until the
    residual drops; h_y is clamped inside (-1, 1) and the magnet is kept off
    the sensor origin so the model stays finite.
    """
    f = np.empty(3)
    fn_v = np.empty(3)
    J = np.empty((3, 3))
    s = np.empty(3)
    _flow_flux_core(q[0], q[1], q[2], pz, n_t, f)
    f[0] -= bx
    f[1] -= by
    f[2] -= bz
    fn = math.sqrt(f[0] * f[0] + f[1] * f[1] + f[2] * f[2])
    for _ in range(max_iter):
        if fn <= tol:
            return fn, True
        _flow_jacobian(q[0], q[1], q[2], pz, n_t, J)
        if not _solve3(J, f, s):
            return fn, False
        step = 1.0
        improved = False
        for _bt in range(30):
            q0 = q[0] + step * s[0]
            q1 = q[1] + step * s[1]
            q2 = q[2] + step * s[2]
            if q2 > 0.999999:
                q2 = 0.999999
            elif q2 < -0.999999:
                q2 = -0.999999
            if q0 * q0 + q1 * q1 + pz * pz < 0.0625:
                step *= 0.5
                continue
            _flow_flux_core(q0, q1, q2, pz, n_t, fn_v)
            fn_v[0] -= bx
            fn_v[1] -= by
            fn_v[2] -= bz
            fnn = math.sqrt(fn_v[0] * fn_v[0] + fn_v[1] * fn_v[1] + fn_v[2] * fn_v[2])
            if fnn < fn:
                q[0], q[1], q[2] = q0, q1, q2
                f[0], f[1], f[2] = fn_v[0], fn_v[1], fn_v[2]
                fn = fnn
                improved = True
                break
            step *= 0.5
        if not improved:
            return fn, False
    return fn, fn <= tol


def _flow_grid_seed(bx, by, bz, pz, n_t, rho, beta0, alpha0, q):
    """Best fin rotation of the guess pose on a coarse +-75 deg grid.

    The guess pose defines the physical one-parameter family (magnet on a
    circle of radius rho, magnetization co-rotating); seeding from it keeps
    Newton on the physical branch when several exact roots exist.
    """
    f = np.empty(3)
    best = np.inf
    n_grid = 151
    half = math.radians(75.0)
    for g in range(n_grid):
        th = -half + 2.0 * half * g / (n_grid - 1)
        px = rho * math.cos(beta0 + th)
        py = rho * math.sin(beta0 + th)
        hy = math.sin(alpha0 + th)
        if hy > 1.0:
            hy = 1.0
        elif hy < -1.0:
            hy = -1.0
        _flow_flux_core(px, py, hy, pz, n_t, f)
        resid = math.sqrt((f[0] - bx) ** 2 + (f[1] - by) ** 2 + (f[2] - bz) ** 2)
        if resid < best:
            best = resid
            q[0], q[1], q[2] = px, py, hy


def _flow_invert_one(bx, by, bz, pz, n_t, seed, rho, beta0, alpha0,
                     max_jump, trust_seed, tol, resid_accept, max_iter, q):
    """One flux fix: Newton from seed, falling back to a grid reseed.

    Newton with backtracking descends the residual norm, so a stall is the
    least-squares projection onto the model image; that point is accepted
    when its residual is within resid_accept (noisy flux generically lies a
    little off the image).  A root found from a trusted seed also has to stay
    within max_jump of it (stream continuity); cold seeds always go through
    the grid, which pins the result to the physical branch.  Distances weight
    h_y by rho so all three coordinates are mm-equivalent.
    """
    accept = resid_accept if resid_accept > tol else tol
    q[0], q[1], q[2] = seed[0], seed[1], seed[2]
    ra, ok_a = _flow_newton_core(bx, by, bz, pz, n_t, q, tol, max_iter)
    if trust_seed:
        d2 = (q[0] - seed[0]) ** 2 + (q[1] - seed[1]) ** 2 + (rho * (q[2] - seed[2])) ** 2
        if d2 <= max_jump * max_jump and ra <= accept:
            return ra, True
    qa0, qa1, qa2 = q[0], q[1], q[2]
    _flow_grid_seed(bx, by, bz, pz, n_t, rho, beta0, alpha0, q)
    rb, ok_b = _flow_newton_core(bx, by, bz, pz, n_t, q, tol, max_iter)
    if ok_b:
        return rb, True
    if ok_a and not trust_seed:
        # exact root from the caller's own seed; grid only stalled
        q[0], q[1], q[2] = qa0, qa1, qa2
        return ra, True
    if rb <= accept:
        return rb, True
    return rb, False


def _flow_newton_batch_core(B, pz, n_t, guess, max_jump, tol, resid_accept,
                            max_iter, sols, oks):
    """Continuation over a flux stream: each row warm-starts from the last fix."""
    rho = math.hypot(guess[0], guess[1])
    beta0 = math.atan2(guess[1], guess[0])
    alpha0 = math.asin(min(max(guess[2], -1.0), 1.0))
    warm = guess.copy()
    have_warm = False
    q = np.empty(3)
    for k in range(B.shape[0]):
        resid, ok = _flow_invert_one(
            B[k, 0], B[k, 1], B[k, 2], pz, n_t, warm, rho, beta0, alpha0,
            max_jump, have_warm, tol, resid_accept, max_iter, q,
        )
        sols[k, 0], sols[k, 1], sols[k, 2] = q[0], q[1], q[2]
        oks[k] = ok
        if ok:
            warm[0], warm[1], warm[2] = q[0], q[1], q[2]
            have_warm = True
        else:
            warm[0], warm[1], warm[2] = guess[0], guess[1], guess[2]
            have_warm = False


def _flow_flux_batch_loops(Q, pz, n_t, out):
    for k in range(Q.shape[0]):
        _flow_flux_core(Q[k, 0], Q[k, 1], Q[k, 2], pz, n_t, out[k])


def _flow_flux_batch_numpy(Q, pz, n_t):
    px, py, hy = Q[:, 0], Q[:, 1], Q[:, 2]
    hx = np.sqrt(np.maximum(1.0 - hy * hy, 0.0))
    r2 = px * px + py * py + pz * pz
    r5 = r2 * r2 * np.sqrt(r2)
    m = hx * px + hy * py
    out = np.empty_like(Q)
    out[:, 0] = n_t * (3.0 * m * px - r2 * hx) / r5
    out[:, 1] = n_t * (3.0 * m * py - r2 * hy) / r5
    out[:, 2] = n_t * (3.0 * m * pz) / r5
    return out


def flow_flux_into(px, py, hy, pz, n_t, out):
    _flow_flux_core(px, py, hy, pz, n_t, out)


def flow_flux_batch(Q: np.ndarray, pz: float, n_t: float) -> np.ndarray:
    Q = np.ascontiguousarray(Q, dtype=float)
    if USE_NUMBA:
        out = np.empty_like(Q)
        _flow_flux_batch_loops(Q, pz, n_t, out)
        return out
    return _flow_flux_batch_numpy(Q, pz, n_t)


def flow_newton(b, pz, n_t, guess, tol, max_iter):
    """Raw damped Newton from an explicit seed, no reseeding."""
    q = np.array(guess, dtype=float)
    resid, ok = _flow_newton_core(
        float(b[0]), float(b[1]), float(b[2]), pz, n_t, q, tol, int(max_iter)
    )
    return q, resid, bool(ok)


def flow_invert_one(b, pz, n_t, guess, max_jump, tol, resid_accept, max_iter):
    """Single inversion with the grid fallback; guess is a cold seed."""
    guess = np.asarray(guess, dtype=float)
    rho = math.hypot(guess[0], guess[1])
    beta0 = math.atan2(guess[1], guess[0])
    alpha0 = math.asin(min(max(guess[2], -1.0), 1.0))
    q = np.empty(3)
    resid, ok = _flow_invert_one(
        float(b[0]), float(b[1]), float(b[2]), pz, n_t, guess,
        rho, beta0, alpha0, max_jump, False, tol, resid_accept, int(max_iter), q,
    )
    return q, resid, bool(ok)


def flow_newton_batch(B, pz, n_t, guess, max_jump, tol, resid_accept, max_iter):
    B = np.ascontiguousarray(B, dtype=float)
    sols = np.empty_like(B)
    oks = np.zeros(B.shape[0], dtype=np.bool_)
    _flow_newton_batch_core(
        B, pz, n_t, np.asarray(guess, dtype=float), max_jump, tol, resid_accept,
        int(max_iter), sols, oks,
    )
    return sols, oks


# ---------------------------------------------------------------------------
# phase-oscillator network integration
# ---------------------------------------------------------------------------
# State per oscillator: phase phi and amplitude r.
#   dphi_i = omega_i + sum_j r_j W_ij sin(phi_j - phi_i - B_ij)
#   dr_i   = a_i (R_i - r_i)
# Amplitude-weighted coupling lets a unit pulled to r = 0 release its
# neighbours entirely.  Integrated with classic RK4.

def _cpg_deriv_loops(phi, r, omega, W, Bias, a, R, dphi, dr):
    n = phi.shape[0]
    for i in range(n):
        acc = 0.0
        for j in range(n):
            wij = W[i, j]
            if wij != 0.0:
                acc += r[j] * wij * math.sin(phi[j] - phi[i] - Bias[i, j])
        dphi[i] = omega[i] + acc
        dr[i] = a[i] * (R[i] - r[i])


def _cpg_step_loops(phi, r, omega, W, Bias, a, R, dt, out_phi, out_r):
    n = phi.shape[0]
    k1p = np.empty(n)
    k1r = np.empty(n)
    k2p = np.empty(n)
    k2r = np.empty(n)
    k3p = np.empty(n)
    k3r = np.empty(n)
    k4p = np.empty(n)
    k4r = np.empty(n)
    tp = np.empty(n)
    tr = np.empty(n)
    _cpg_deriv_loops(phi, r, omega, W, Bias, a, R, k1p, k1r)
    for i in range(n):
        tp[i] = phi[i] + 0.5 * dt * k1p[i]
        tr[i] = r[i] + 0.5 * dt * k1r[i]
    _cpg_deriv_loops(tp, tr, omega, W, Bias, a, R, k2p, k2r)
    for i in range(n):
        tp[i] = phi[i] + 0.5 * dt * k2p[i]
        tr[i] = r[i] + 0.5 * dt * k2r[i]
    _cpg_deriv_loops(tp, tr, omega, W, Bias, a, R, k3p, k3r)
    for i in range(n):
        tp[i] = phi[i] + dt * k3p[i]
        tr[i] = r[i] + dt * k3r[i]
    _cpg_deriv_loops(tp, tr, omega, W, Bias, a, R, k4p, k4r)
    for i in range(n):
        out_phi[i] = phi[i] + dt / 6.0 * (k1p[i] + 2.0 * k2p[i] + 2.0 * k3p[i] + k4p[i])
        out_r[i] = r[i] + dt / 6.0 * (k1r[i] + 2.0 * k2r[i] + 2.0 * k3r[i] + k4r[i])


def _cpg_rollout_loops(phi0, r0, omega, W, Bias, a, R, dt, n_steps, phis, rs):
    n = phi0.shape[0]
    phi = phi0.copy()
    r = r0.copy()
    np_ = np.empty(n)
    nr = np.empty(n)
    phis[0] = phi
    rs[0] = r
    for k in range(n_steps):
        _cpg_step_loops(phi, r, omega, W, Bias, a, R, dt, np_, nr)
        phi[:] = np_
        r[:] = nr
        phis[k + 1] = phi
        rs[k + 1] = r


def _cpg_deriv_numpy(phi, r, omega, W, Bias, a, R):
    D = phi[None, :] - phi[:, None] - Bias
    return omega + (W * np.sin(D)) @ r, a * (R - r)


def _cpg_step_numpy(phi, r, omega, W, Bias, a, R, dt):
    k1p, k1r = _cpg_deriv_numpy(phi, r, omega, W, Bias, a, R)
    k2p, k2r = _cpg_deriv_numpy(phi + 0.5 * dt * k1p, r + 0.5 * dt * k1r, omega, W, Bias, a, R)
    k3p, k3r = _cpg_deriv_numpy(phi + 0.5 * dt * k2p, r + 0.5 * dt * k2r, omega, W, Bias, a, R)
    k4p, k4r = _cpg_deriv_numpy(phi + dt * k3p, r + dt * k3r, omega, W, Bias, a, R)
    phi2 = phi + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
    r2 = r + dt / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
    return phi2, r2


def cpg_step(phi, r, omega, W, Bias, a, R, dt):
    if USE_NUMBA:
        out_phi = np.empty_like(phi)
        out_r = np.empty_like(r)
        _cpg_step_loops(phi, r, omega, W, Bias, a, R, dt, out_phi, out_r)
        return out_phi, out_r
    return _cpg_step_numpy(phi, r, omega, W, Bias, a, R, dt)


def cpg_rollout(phi0, r0, omega, W, Bias, a, R, dt, n_steps):
    n = phi0.shape[0]
    phis = np.empty((n_steps + 1, n))
    rs = np.empty((n_steps + 1, n))
    if USE_NUMBA:
        _cpg_rollout_loops(phi0, r0, omega, W, Bias, a, R, dt, n_steps, phis, rs)
        return phis, rs
    phi = phi0.copy()
    r = r0.copy()
    phis[0] = phi
    rs[0] = r
    for k in range(n_steps):
        phi, r = _cpg_step_numpy(phi, r, omega, W, Bias, a, R, dt)
        phis[k + 1] = phi
        rs[k + 1] = r
    return phis, rs


# ---------------------------------------------------------------------------
# numba build
# ---------------------------------------------------------------------------

if USE_NUMBA:
    _flow_flux_core = jit(_flow_flux_core)
    _flow_jacobian = jit(_flow_jacobian)
    _solve3 = jit(_solve3)
    _flow_newton_core = jit(_flow_newton_core)
    _flow_grid_seed = jit(_flow_grid_seed)
    _flow_invert_one = jit(_flow_invert_one)
    _flow_newton_batch_core = jit(_flow_newton_batch_core)
    _flow_flux_batch_loops = jit(_flow_flux_batch_loops)
    _lowpass_scan_loops = jit(_lowpass_scan_loops)
    _cpg_deriv_loops = jit(_cpg_deriv_loops)
    _cpg_step_loops = jit(_cpg_step_loops)
    _cpg_rollout_loops = jit(_cpg_rollout_loops)
