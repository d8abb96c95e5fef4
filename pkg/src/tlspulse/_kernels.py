"""Compiled inner loops: RK4 propagation, regression rows, MCWF sampling.

All kernels are deterministic functions of their inputs.  Parallel kernels
(prange) write only to per-row / per-trajectory output slots and perform no
cross-row reductions, so results are bit-identical for any thread count.

Basis convention: index 0 = ground, 1 = excited.  Density matrices are
vectorized as (rho_gg, rho_ge, rho_eg, rho_ee).  The drive enters through
per-step node arrays Omega(t_k) and Omega(t_k + dt/2); the closed-form pulse
is re-evaluated only inside jump-time bisection, where off-node times occur.
"""

from __future__ import annotations

import cmath
import math

import numpy as np
import numba
from numba import njit, prange

# workqueue is always available and keeps thread scheduling self-contained
numba.config.THREADING_LAYER = "workqueue"

# Channel tags shared with the trajectories module.
CH_RADIATIVE = 0
CH_PHONON = 1
CH_NOISE = 2

# Per-trajectory random budget: 1 initial threshold + 2 draws per jump.
RANDOMS_PER_TRAJECTORY = 96
MAX_JUMPS = (RANDOMS_PER_TRAJECTORY - 1) // 2

# Bisection iterations: halving dt seven times beats the dt/100 tolerance.
_BISECT_ITERS = 7


@njit(cache=True)
def _omega_at(t, peak, tau_p, alpha, phase, t_c):
    u = t - t_c
    env = peak * math.exp(-(u / tau_p) ** 2)
    return env * cmath.exp(1j * (-alpha * u * u - phase))


@njit(cache=True)
def _rk4_psi(g, e, om0, omh, om1, a0, ah, a1, gamma, gamma_d, b, h):
    """One RK4 step of the non-Hermitian two-component evolution."""
    k0 = gamma + gamma_d
    kg1 = -0.5j * om0.conjugate() * e
    ke1 = -0.5j * om0 * g - 0.5 * (k0 + b * a0) * e
    g2 = g + 0.5 * h * kg1
    e2 = e + 0.5 * h * ke1
    kg2 = -0.5j * omh.conjugate() * e2
    ke2 = -0.5j * omh * g2 - 0.5 * (k0 + b * ah) * e2
    g3 = g + 0.5 * h * kg2
    e3 = e + 0.5 * h * ke2
    kg3 = -0.5j * omh.conjugate() * e3
    ke3 = -0.5j * omh * g3 - 0.5 * (k0 + b * ah) * e3
    g4 = g + h * kg3
    e4 = e + h * ke3
    kg4 = -0.5j * om1.conjugate() * e4
    ke4 = -0.5j * om1 * g4 - 0.5 * (k0 + b * a1) * e4
    gn = g + (h / 6.0) * (kg1 + 2.0 * kg2 + 2.0 * kg3 + kg4)
    en = e + (h / 6.0) * (ke1 + 2.0 * ke2 + 2.0 * ke3 + ke4)
    return gn, en


@njit(cache=True)
def _rk4_psi_free(g, e, t, h, peak, tau_p, alpha, phase, t_c, gamma, gamma_d, b):
    """RK4 psi step of arbitrary size with the pulse evaluated in closed form."""
    om0 = _omega_at(t, peak, tau_p, alpha, phase, t_c)
    omh = _omega_at(t + 0.5 * h, peak, tau_p, alpha, phase, t_c)
    om1 = _omega_at(t + h, peak, tau_p, alpha, phase, t_c)
    a0 = om0.real * om0.real + om0.imag * om0.imag
    ah = omh.real * omh.real + omh.imag * omh.imag
    a1 = om1.real * om1.real + om1.imag * om1.imag
    return _rk4_psi(g, e, om0, omh, om1, a0, ah, a1, gamma, gamma_d, b, h)


@njit(cache=True)
def _rho_rhs(vgg, vge, veg, vee, om, aom2, gamma, gamma_d, b):
    """Master-equation right-hand side on the vectorized density matrix."""
    w = om.conjugate() * veg - om * vge
    kc = 0.5 * (gamma + gamma_d + b * aom2)
    hgg = -0.5j * w + gamma * vee
    hee = 0.5j * w - gamma * vee
    hge = -0.5j * om.conjugate() * (vee - vgg) - kc * vge
    heg = 0.5j * om * (vee - vgg) - kc * veg
    return hgg, hge, heg, hee


@njit(cache=True)
def _rk4_rho(vgg, vge, veg, vee, om0, omh, om1, a0, ah, a1, gamma, gamma_d, b, h):
    k1g, k1c, k1d, k1e = _rho_rhs(vgg, vge, veg, vee, om0, a0, gamma, gamma_d, b)
    k2g, k2c, k2d, k2e = _rho_rhs(
        vgg + 0.5 * h * k1g, vge + 0.5 * h * k1c,
        veg + 0.5 * h * k1d, vee + 0.5 * h * k1e,
        omh, ah, gamma, gamma_d, b,
    )
    k3g, k3c, k3d, k3e = _rho_rhs(
        vgg + 0.5 * h * k2g, vge + 0.5 * h * k2c,
        veg + 0.5 * h * k2d, vee + 0.5 * h * k2e,
        omh, ah, gamma, gamma_d, b,
    )
    k4g, k4c, k4d, k4e = _rho_rhs(
        vgg + h * k3g, vge + h * k3c, veg + h * k3d, vee + h * k3e,
        om1, a1, gamma, gamma_d, b,
    )
    s = h / 6.0
    return (
        vgg + s * (k1g + 2.0 * k2g + 2.0 * k3g + k4g),
        vge + s * (k1c + 2.0 * k2c + 2.0 * k3c + k4c),
        veg + s * (k1d + 2.0 * k2d + 2.0 * k3d + k4d),
        vee + s * (k1e + 2.0 * k2e + 2.0 * k3e + k4e),
    )


@njit(cache=True)
def rho_path(v0, om_full, om_half, gamma, gamma_d, b, dt):
    """Propagate a vectorized density matrix over the whole grid, storing it."""
    n = om_half.shape[0]
    out = np.empty((n + 1, 4), dtype=np.complex128)
    vgg, vge, veg, vee = v0[0], v0[1], v0[2], v0[3]
    out[0, 0] = vgg
    out[0, 1] = vge
    out[0, 2] = veg
    out[0, 3] = vee
    for k in range(n):
        om0 = om_full[k]
        omh = om_half[k]
        om1 = om_full[k + 1]
        a0 = om0.real * om0.real + om0.imag * om0.imag
        ah = omh.real * omh.real + omh.imag * omh.imag
        a1 = om1.real * om1.real + om1.imag * om1.imag
        vgg, vge, veg, vee = _rk4_rho(
            vgg, vge, veg, vee, om0, omh, om1, a0, ah, a1, gamma, gamma_d, b, dt
        )
        out[k + 1, 0] = vgg
        out[k + 1, 1] = vge
        out[k + 1, 2] = veg
        out[k + 1, 3] = vee
    return out


@njit(cache=True, parallel=True)
def regression_rows(inits, starts, ends, om_full, om_half,
                    gamma, gamma_d, b, dt, comp, out):
    """Propagate conditional operators from per-row start nodes to end nodes.

    Row i starts from inits[i] at grid node starts[i] and records the `comp`
    component (0=gg, 1=ge, 2=eg, 3=ee) at every node through ends[i] into
    out[i, 0:(ends[i] - starts[i] + 1)].  Rows are independent.
    """
    m = starts.shape[0]
    for i in prange(m):
        vgg = inits[i, 0]
        vge = inits[i, 1]
        veg = inits[i, 2]
        vee = inits[i, 3]
        if comp == 1:
            out[i, 0] = vge
        elif comp == 2:
            out[i, 0] = veg
        else:
            out[i, 0] = vee
        col = 0
        for k in range(starts[i], ends[i]):
            om0 = om_full[k]
            omh = om_half[k]
            om1 = om_full[k + 1]
            a0 = om0.real * om0.real + om0.imag * om0.imag
            ah = omh.real * omh.real + omh.imag * omh.imag
            a1 = om1.real * om1.real + om1.imag * om1.imag
            vgg, vge, veg, vee = _rk4_rho(
                vgg, vge, veg, vee, om0, omh, om1, a0, ah, a1,
                gamma, gamma_d, b, dt,
            )
            col += 1
            if comp == 1:
                out[i, col] = vge
            elif comp == 2:
                out[i, col] = veg
            else:
                out[i, col] = vee


@njit(cache=True, parallel=True)
def ground_reset_integrals(starts, i_end, om_full, om_half,
                           gamma, gamma_d, b, dt, tau_int, tail):
    """Streaming variant for the photon-pair engine.

    For each start node, propagate the ground-state-reset density matrix up to
    i_end and return the trapezoidal integral of its excited population over
    that segment (tau_int) plus the final excited population (tail), from which
    the drive-free exponential continuation follows analytically.
    """
    m = starts.shape[0]
    for i in prange(m):
        vgg = 1.0 + 0.0j
        vge = 0.0 + 0.0j
        veg = 0.0 + 0.0j
        vee = 0.0 + 0.0j
        acc = 0.0
        prev = 0.0
        for k in range(starts[i], i_end):
            om0 = om_full[k]
            omh = om_half[k]
            om1 = om_full[k + 1]
            a0 = om0.real * om0.real + om0.imag * om0.imag
            ah = omh.real * omh.real + omh.imag * omh.imag
            a1 = om1.real * om1.real + om1.imag * om1.imag
            vgg, vge, veg, vee = _rk4_rho(
                vgg, vge, veg, vee, om0, omh, om1, a0, ah, a1,
                gamma, gamma_d, b, dt,
            )
            cur = vee.real
            acc += 0.5 * (prev + cur) * dt
            prev = cur
        tau_int[i] = acc
        tail[i] = prev


@njit(cache=True)
def _bisect_jump(g, e, t_base, h_max, r, peak, tau_p, alpha, phase, t_c,
                 gamma, gamma_d, b):
    """Locate the norm-threshold crossing inside (t_base, t_base + h_max].

    The squared norm decays monotonically, so bisection on the substep size
    brackets the unique crossing; seven halvings reach h_max/128 < dt/100.
    Returns the substep h at the crossing.
    """
    lo = 0.0
    hi = h_max
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        gm, em = _rk4_psi_free(
            g, e, t_base, mid, peak, tau_p, alpha, phase, t_c, gamma, gamma_d, b
        )
        nm = gm.real * gm.real + gm.imag * gm.imag \
            + em.real * em.real + em.imag * em.imag
        if nm > r:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@njit(cache=True, parallel=True)
def mcwf_ensemble(randoms, om_full, om_half, i_end, n_steps, dt, t0,
                  peak, tau_p, alpha, phase, t_c, gamma, gamma_d, b,
                  path_stride, paths,
                  jump_t, jump_c, n_jumps, overflow):
    """Monte Carlo wave-function sampling of photon-jump records.

    Trajectory i consumes only randoms[i]: one initial threshold, then a
    channel draw and a fresh threshold per jump.  Inside the drive window
    (nodes [0, i_end]) the non-Hermitian evolution is integrated with gridded
    RK4 steps and norm-threshold bisection; past i_end the drive is negligible
    and jump times follow from the exact exponential no-jump decay.

    If path_stride > 0, the normalized conditional excited population is
    recorded at every path_stride-th grid node into paths[i].
    """
    n_traj = randoms.shape[0]
    budget = randoms.shape[1]
    t_end = t0 + n_steps * dt
    for i in prange(n_traj):
        cur = 0
        r = randoms[i, cur]
        cur += 1
        g = 1.0 + 0.0j
        e = 0.0 + 0.0j
        nj = 0
        bad = 0
        if path_stride > 0:
            paths[i, 0] = 0.0
        # --- gridded phase through the drive window ---
        k = 0
        while k < i_end:
            om0 = om_full[k]
            omh = om_half[k]
            om1 = om_full[k + 1]
            a0 = om0.real * om0.real + om0.imag * om0.imag
            ah = omh.real * omh.real + omh.imag * omh.imag
            a1 = om1.real * om1.real + om1.imag * om1.imag
            gp, ep = _rk4_psi(g, e, om0, omh, om1, a0, ah, a1,
                              gamma, gamma_d, b, dt)
            nrm = gp.real * gp.real + gp.imag * gp.imag \
                + ep.real * ep.real + ep.imag * ep.imag
            if nrm > r:
                g = gp
                e = ep
            else:
                # one or more jumps inside this step
                t_base = t0 + k * dt
                rem = dt
                while True:
                    h = _bisect_jump(g, e, t_base, rem, r, peak, tau_p, alpha,
                                     phase, t_c, gamma, gamma_d, b)
                    tj = t_base + h
                    if nj >= jump_t.shape[1] or cur + 2 > budget:
                        bad = 1
                        break
                    u = randoms[i, cur]
                    cur += 1
                    omj = _omega_at(tj, peak, tau_p, alpha, phase, t_c)
                    aj = omj.real * omj.real + omj.imag * omj.imag
                    tot = gamma + gamma_d + b * aj
                    jump_t[i, nj] = tj
                    x = u * tot
                    if x < gamma:
                        jump_c[i, nj] = CH_RADIATIVE
                        g = 1.0 + 0.0j
                        e = 0.0 + 0.0j
                    elif x < gamma + gamma_d:
                        jump_c[i, nj] = CH_NOISE
                        g = 0.0 + 0.0j
                        e = 1.0 + 0.0j
                    else:
                        jump_c[i, nj] = CH_PHONON
                        g = 0.0 + 0.0j
                        e = 1.0 + 0.0j
                    nj += 1
                    r = randoms[i, cur]
                    cur += 1
                    rem = rem - h
                    t_base = tj
                    if rem <= 1e-12 * dt:
                        break
                    gp, ep = _rk4_psi_free(g, e, t_base, rem, peak, tau_p,
                                           alpha, phase, t_c, gamma, gamma_d, b)
                    nrm = gp.real * gp.real + gp.imag * gp.imag \
                        + ep.real * ep.real + ep.imag * ep.imag
                    if nrm > r:
                        g = gp
                        e = ep
                        break
                if bad == 1:
                    break
            k += 1
            if path_stride > 0 and k % path_stride == 0:
                nrm = g.real * g.real + g.imag * g.imag \
                    + e.real * e.real + e.imag * e.imag
                pe = (e.real * e.real + e.imag * e.imag) / nrm
                paths[i, k // path_stride] = pe
        if bad == 1:
            overflow[i] = 1
            n_jumps[i] = nj
            continue
        # --- analytic drive-free phase ---
        kappa0 = gamma + gamma_d
        t_cur = t0 + i_end * dt
        next_store = i_end // path_stride + 1 if path_stride > 0 else 0
        while True:
            ag2 = g.real * g.real + g.imag * g.imag
            ae2 = e.real * e.real + e.imag * e.imag
            t_next = t_end + dt  # sentinel: no jump in window
            if ae2 > 0.0 and kappa0 > 0.0 and r > ag2:
                t_next = t_cur + math.log(ae2 / (r - ag2)) / kappa0
            seg_end = t_next if t_next < t_end else t_end
            if path_stride > 0:
                # conditional P_e along the no-jump segment
                while next_store * path_stride <= n_steps:
                    tn = t0 + next_store * path_stride * dt
                    if tn > seg_end + 1e-12 * dt:
                        break
                    if ae2 <= 0.0:
                        paths[i, next_store] = 0.0
                    elif kappa0 <= 0.0:
                        paths[i, next_store] = ae2 / (ag2 + ae2)
                    else:
                        x = math.exp(-kappa0 * (tn - t_cur))
                        paths[i, next_store] = ae2 * x / (ag2 + ae2 * x)
                    next_store += 1
            if t_next >= t_end:
                break
            if nj >= jump_t.shape[1] or cur + 2 > budget:
                bad = 1
                break
            u = randoms[i, cur]
            cur += 1
            jump_t[i, nj] = t_next
            if u * kappa0 < gamma:
                jump_c[i, nj] = CH_RADIATIVE
                g = 1.0 + 0.0j
                e = 0.0 + 0.0j
            else:
                jump_c[i, nj] = CH_NOISE
                g = 0.0 + 0.0j
                e = 1.0 + 0.0j
            nj += 1
            r = randoms[i, cur]
            cur += 1
            t_cur = t_next
        if bad == 1:
            overflow[i] = 1
        n_jumps[i] = nj
