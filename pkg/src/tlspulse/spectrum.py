"""Emission spectra of the scattered pulse from first-order coherences.

The regression theorem gives G1(t1, tau) = gamma <sigma^dag(t1+tau) sigma(t1)>
by propagating the conditional operator sigma*rho(t1) and reading gamma times
its ge component.  The pulse-integrated power spectrum is

    S(w) = (1/pi) * Re int dt1 int_0^inf dtau e^{i w tau} G1(t1, tau),

the two-sided transform folded with G1(t1, -tau) = G1*(t1, tau).  With this
normalization int S dw = E[n] up to grid truncation (Parseval).  Once the
drive is over the conditional coherence decays at (gamma + gamma_d)/2, so t1
rows outside the drive window and the tau tails of window rows are exact
exponentials and are assembled in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .lindblad import (RHO_GROUND, PropagationResult, SystemParams, TimeGrid,
                       drive_nodes, propagate)
from .pulse import PulseSpec, drive_amplitude, drive_support

_ROW_CHUNK = 256
_MATRIX_BYTES_CAP = 600_000_000
_OMEGA_CHUNK = 128


@dataclass
class G1Grid:
    """First-order coherence rows G1(t1, tau) on a uniform tau axis."""

    t1_axis: np.ndarray
    tau_axis: np.ndarray
    values: np.ndarray  # (n_rows, n_tau+1) complex128


@dataclass
class SpectrumResult:
    """Emission spectral density against angular frequency from resonance."""

    omega_axis: np.ndarray
    s_of_omega: np.ndarray
    detector_linewidth: float
    expected_n: float | None = None


def default_omega_axis(gamma: float, half_range: float = 40.0,
                       n_points: int = 2001) -> np.ndarray:
    """Frequency axis resolving both the natural linewidth and 1/tau_fwhm."""
    return np.linspace(-half_range * gamma, half_range * gamma, n_points)


def lorentzian(omega_axis: np.ndarray, fwhm: float,
               weight: float = 1.0) -> np.ndarray:
    """Unit-area Lorentzian of the given FWHM, scaled by weight."""
    half = 0.5 * fwhm
    return weight * half / math.pi / (omega_axis**2 + half * half)


def _sigma_rho_inits(rho_path: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """Conditional operators sigma*rho(t1): rows (rho_eg, rho_ee, 0, 0)."""
    inits = np.zeros((nodes.size, 4), dtype=np.complex128)
    inits[:, 0] = rho_path[nodes, 1, 0]
    inits[:, 1] = rho_path[nodes, 1, 1]
    return inits


def g1_grid(params: SystemParams, spec: PulseSpec, grid: TimeGrid,
            tau_max: float | None = None,
            t1_nodes: np.ndarray | None = None,
            result: PropagationResult | None = None) -> G1Grid:
    """Numeric G1 rows for the requested t1 grid nodes.

    Defaults to the drive window (or, for a driveless run, the whole grid
    thinned to at most 2048 rows).  Every row is integrated numerically over
    the full tau axis; the drive beyond the grid end is evaluated in closed
    form so rows may extend past it.
    """
    if params.gamma <= 0.0:
        raise ValueError("g1_grid needs gamma > 0")
    if tau_max is None:
        tau_max = 10.0 * params.tau_e
    if result is None or result.rho_of_t is None:
        result = propagate(RHO_GROUND, params, spec, grid, store_states=True)
    if t1_nodes is None:
        if spec.area > 0.0:
            lo, hi = drive_support(spec, 5.0)
            t1_nodes = np.arange(grid.index_at(lo), grid.index_at(hi) + 1)
        else:
            stride = max(1, grid.n_steps // 2047)
            t1_nodes = np.arange(0, grid.n_steps + 1, stride)
    t1_nodes = np.asarray(t1_nodes, dtype=np.int64)
    n_tau = max(1, int(round(tau_max / grid.dt)))
    if t1_nodes.size * (n_tau + 1) * 16 > _MATRIX_BYTES_CAP:
        raise MemoryError(
            "requested G1 grid exceeds the matrix cap; thin t1_nodes or "
            "reduce tau_max"
        )
    # extended axis so rows may run past the propagation grid
    n_ext = int(t1_nodes.max()) + n_tau
    times_ext = grid.t_start + grid.dt * np.arange(n_ext + 1)
    om_full = np.ascontiguousarray(drive_amplitude(spec, times_ext))
    om_half = np.ascontiguousarray(
        drive_amplitude(spec, times_ext[:-1] + 0.5 * grid.dt))
    inits = _sigma_rho_inits(result.rho_of_t, t1_nodes)
    values = np.empty((t1_nodes.size, n_tau + 1), dtype=np.complex128)
    for c0 in range(0, t1_nodes.size, _ROW_CHUNK):
        c1 = min(c0 + _ROW_CHUNK, t1_nodes.size)
        starts = t1_nodes[c0:c1]
        ends = starts + n_tau
        out = np.zeros((c1 - c0, n_tau + 1), dtype=np.complex128)
        _kernels.regression_rows(
            inits[c0:c1], starts, ends, om_full, om_half,
            params.gamma, params.gamma_d, params.phonon_b, grid.dt, 1, out,
        )
        values[c0:c1] = out
    return G1Grid(
        t1_axis=grid.times[t1_nodes],
        tau_axis=grid.dt * np.arange(n_tau + 1),
        values=params.gamma * values,
    )


def _fold_spectrum(gbar: np.ndarray, tau_axis: np.ndarray,
                   omega_axis: np.ndarray,
                   detector_linewidth: float) -> np.ndarray:
    """S(w) = (1/pi) Re int dtau e^{i w tau} gbar(tau), trapezoid weights."""
    if detector_linewidth > 0.0:
        gbar = gbar * np.exp(-0.5 * detector_linewidth * tau_axis)
    dt = tau_axis[1] - tau_axis[0]
    w = np.full(tau_axis.size, dt)
    w[0] = 0.5 * dt
    w[-1] = 0.5 * dt
    weighted = w * gbar
    out = np.empty(omega_axis.size)
    for c0 in range(0, omega_axis.size, _OMEGA_CHUNK):
        c1 = min(c0 + _OMEGA_CHUNK, omega_axis.size)
        phase = np.exp(1j * omega_axis[c0:c1, None] * tau_axis[None, :])
        out[c0:c1] = np.einsum("wk,k->w", phase, weighted).real
    out /= math.pi
    # tau truncation can leave harmless ~1e-5-relative negatives; anything
    # larger would mean a broken fold
    floor = -1e-3 * out.max() if out.size else 0.0
    if out.min() < floor:
        raise ValueError(
            f"spectral density reached {out.min():.3e}; assembly is inconsistent"
        )
    return np.maximum(out, 0.0)


def emission_spectrum(g1: G1Grid, omega_axis: np.ndarray,
                      detector_linewidth: float = 0.0) -> SpectrumResult:
    """Spectrum of the supplied G1 rows (t1-integrated, then transformed).

    Transforms exactly the rows present in g1; use pulse_spectrum for the
    complete observable including the post-window free-decay contribution.
    """
    gbar = np.trapezoid(g1.values, x=g1.t1_axis, axis=0)
    s = _fold_spectrum(gbar, g1.tau_axis, omega_axis, detector_linewidth)
    return SpectrumResult(omega_axis=omega_axis, s_of_omega=s,
                          detector_linewidth=detector_linewidth)


def pulse_spectrum(params: SystemParams, spec: PulseSpec, grid: TimeGrid,
                   tau_max: float | None = None,
                   omega_axis: np.ndarray | None = None,
                   detector_linewidth: float = 0.0,
                   result: PropagationResult | None = None) -> SpectrumResult:
    """Complete emission spectrum of one pulse cycle.

    Assembles gbar(tau) = int dt1 G1(t1, tau) from numeric rows inside the
    drive window plus the exact exponential continuation for tau past the
    window and for t1 in the decay tail, then folds to S(w).
    """
    if params.gamma <= 0.0:
        raise ValueError("pulse_spectrum needs gamma > 0")
    if tau_max is None:
        tau_max = 10.0 * params.tau_e
    if result is None or result.rho_of_t is None:
        result = propagate(RHO_GROUND, params, spec, grid, store_states=True)
    dt = grid.dt
    n_tau = max(1, int(round(tau_max / dt)))
    tau_axis = dt * np.arange(n_tau + 1)
    kappa0 = params.gamma + params.gamma_d
    decay = np.exp(-0.5 * kappa0 * tau_axis)
    gbar = np.zeros(n_tau + 1, dtype=np.complex128)

    if spec.area > 0.0:
        lo, hi = drive_support(spec, 5.0)
        i0, i_end = grid.index_at(lo), grid.index_at(hi)
    else:
        i0 = i_end = 0
    if i_end > i0:
        om_full, om_half = drive_nodes(spec, grid)
        nodes = np.arange(i0, i_end + 1, dtype=np.int64)
        w_t1 = np.full(nodes.size, dt)
        w_t1[0] = 0.5 * dt
        w_t1[-1] = 0.5 * dt
        inits = _sigma_rho_inits(result.rho_of_t, nodes)
        width = i_end - i0 + 1
        for c0 in range(0, nodes.size, _ROW_CHUNK):
            c1 = min(c0 + _ROW_CHUNK, nodes.size)
            starts = nodes[c0:c1]
            ends = np.full(c1 - c0, i_end, dtype=np.int64)
            out = np.zeros((c1 - c0, width), dtype=np.complex128)
            _kernels.regression_rows(
                inits[c0:c1], starts, ends, om_full, om_half,
                params.gamma, params.gamma_d, params.phonon_b, dt, 1, out,
            )
            for j in range(c1 - c0):
                n_num = min(i_end - starts[j], n_tau) + 1
                wj = w_t1[c0 + j]
                gbar[:n_num] += wj * out[j, :n_num]
                if n_num <= n_tau:
                    tail = out[j, n_num - 1]
                    gbar[n_num:] += wj * tail * decay[1:n_tau - n_num + 2]
    # decay-tail rows t1 > window end: G1 = gamma * P_e(t1) * exp(-kappa0 tau/2)
    pe_tail = result.pe_of_t[i_end:]
    c_tail = float(np.trapezoid(pe_tail, dx=dt))
    gbar += c_tail * decay
    gbar *= params.gamma

    if omega_axis is None:
        omega_axis = default_omega_axis(params.gamma)
    s = _fold_spectrum(gbar, tau_axis, omega_axis, detector_linewidth)
    return SpectrumResult(omega_axis=omega_axis, s_of_omega=s,
                          detector_linewidth=detector_linewidth,
                          expected_n=result.expected_n)


def spectral_quartiles(res: SpectrumResult) -> tuple[float, float, float]:
    """(q25, q75, interquartile width) of the spectral power distribution."""
    cum = np.concatenate(
        ([0.0], np.cumsum(np.diff(res.omega_axis)
                          * 0.5 * (res.s_of_omega[1:] + res.s_of_omega[:-1])))
    )
    total = cum[-1]
    q25 = float(np.interp(0.25 * total, cum, res.omega_axis))
    q75 = float(np.interp(0.75 * total, cum, res.omega_axis))
    return q25, q75, q75 - q25


def spectral_fwhm(res: SpectrumResult) -> float:
    """Full width at half maximum via linear interpolation of the crossings."""
    s = res.s_of_omega
    w = res.omega_axis
    k_peak = int(s.argmax())
    half = 0.5 * s[k_peak]
    left = right = None
    for k in range(k_peak, 0, -1):
        if s[k - 1] < half <= s[k]:
            frac = (half - s[k - 1]) / (s[k] - s[k - 1])
            left = w[k - 1] + frac * (w[k] - w[k - 1])
            break
    for k in range(k_peak, w.size - 1):
        if s[k] >= half > s[k + 1]:
            frac = (s[k] - half) / (s[k] - s[k + 1])
            right = w[k] + frac * (w[k + 1] - w[k])
            break
    if left is None or right is None:
        raise ValueError("half-maximum crossings not bracketed by the axis")
    return right - left
