"""Two-time photon correlations via the quantum regression theorem.

G2(t1, t1+tau) = gamma^2 <sigma^dag(t1) sigma^dag(t1+tau) sigma(t1+tau) sigma(t1)>
is computed by propagating rho to t1, applying the collapse map
rho -> sigma rho sigma^dag (which for a two-level emitter is P_e(t1) |g><g|),
propagating the conditional state forward, and reading gamma^2 times its
excited population.  The conditional re-excitation vanishes once the drive is
over, so t1 rows live inside the drive window; beyond the window the
conditional population decays exactly exponentially and rows are continued in
closed form.

Pair-density conventions (two-photon truncation, P3 negligible):
  p2(t1, tau) = G2(t1, tau)/2 is the symmetric two-sided joint density, whose
  plane integral is P2.  The marginals carry first-emission semantics:
  p2_of_t1 = int_0^inf G2 dtau (pair triggered at t1) and
  p2_of_tau = int G2 dt1 (waiting time tau), each integrating to P2.
  The density of pair-member emissions at t (either photon of the pair) is
  p2_of_t1(t) + [second-photon arrival density](t); subtracting it from
  gamma*P_e(t) gives the exclusive single-photon density p1, so that
  int p1 = P1 and P1 + 2*P2 = E[n].
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DegenerateDistributionError, RegimeViolationError
from .lindblad import (RHO_GROUND, PropagationResult, SystemParams, TimeGrid,
                       drive_nodes, propagate)
from .pulse import PulseSpec, drive_support

# chunk of t1 rows materialized at once (memory cap for the row kernels)
_ROW_CHUNK = 512


@dataclass
class CorrelationGrid:
    """G2 on the (t1, tau) grid plus derived photon-pair densities.

    t1_axis is the full propagation axis; the matrix rows cover the drive
    window given by window_start/window_stop indices into t1_axis.  tau runs
    from 0 to tau_max in grid steps.  g2_values has rate^2 units; p2_joint is
    g2_values/2.  Marginals follow the conventions in the module docstring.
    """

    t1_axis: np.ndarray
    tau_axis: np.ndarray
    window_start: int
    window_stop: int                      # exclusive, row i <-> node window_start+i
    g2_values: np.ndarray                 # (n_rows, n_tau+1) float64
    expected_n: float
    pe_of_t: np.ndarray
    tail_mass_fraction: float             # estimated pair mass beyond tau_max
    p2_of_t1: np.ndarray | None = None    # full axis, first-of-pair density
    p2_of_tau: np.ndarray | None = None
    p2_total: float | None = None
    pair_emission_density: np.ndarray | None = None  # full axis, both photons
    p1_of_t1: np.ndarray | None = None    # full axis
    p1_total: float | None = None
    p1_min: float | None = None

    @property
    def p2_joint(self) -> np.ndarray:
        return 0.5 * self.g2_values

    @property
    def window_times(self) -> np.ndarray:
        return self.t1_axis[self.window_start:self.window_stop]

    def clipped_g2(self) -> np.ndarray:
        """Output view with floating-point noise clipped at zero."""
        return np.clip(self.g2_values, 0.0, None)


@dataclass(frozen=True)
class G2Summary:
    """Pulse-integrated second-order coherence."""

    g2_zero: float
    e_n: float
    e_n_n_minus_1: float


def _window_indices(spec: PulseSpec, grid: TimeGrid) -> tuple[int, int]:
    """Grid-node range [i0, i1] carrying non-negligible drive."""
    if spec.area <= 0.0:
        return (0, 0)
    lo, hi = drive_support(spec, 5.0)
    return (grid.index_at(lo), grid.index_at(hi))


def _conditional_rows(params: SystemParams, spec: PulseSpec, grid: TimeGrid,
                      i0: int, i_end: int):
    """Ground-reset conditional populations for every t1 node in [i0, i_end].

    Returns (rows, tails): rows[i, k] is the conditional excited population at
    node i0+i+k (numeric up to node i_end), tails[i] its value at i_end.
    Memory-chunked; rows beyond their numeric span stay zero.
    """
    om_full, om_half = drive_nodes(spec, grid)
    starts = np.arange(i0, i_end + 1, dtype=np.int64)
    m = starts.size
    width = i_end - i0 + 1
    rows = np.zeros((m, width), dtype=np.float64)
    init = np.zeros(4, dtype=np.complex128)
    init[0] = 1.0
    for c0 in range(0, m, _ROW_CHUNK):
        c1 = min(c0 + _ROW_CHUNK, m)
        chunk = starts[c0:c1]
        ends = np.full(c1 - c0, i_end, dtype=np.int64)
        out = np.zeros((c1 - c0, i_end - chunk[0] + 1), dtype=np.complex128)
        inits = np.broadcast_to(init, (c1 - c0, 4)).copy()
        _kernels.regression_rows(
            inits, chunk, ends, om_full, om_half,
            params.gamma, params.gamma_d, params.phonon_b, grid.dt, 3, out,
        )
        for j in range(c1 - c0):
            n_vals = i_end - chunk[j] + 1
            rows[c0 + j, :n_vals] = out[j, :n_vals].real
    tails = np.array([rows[i, i_end - starts[i]] for i in range(m)])
    return rows, tails


def g2_grid(params: SystemParams, spec: PulseSpec, grid: TimeGrid,
            tau_max: float | None = None,
            result: PropagationResult | None = None) -> CorrelationGrid:
    """Glauber G2 over the (t1, tau) grid, t1 in the drive window.

    tau_max defaults to 10 excited-state lifetimes.  Rows are numeric while
    the drive lasts and exact exponentials afterwards.  Negative values from
    floating-point noise are kept for integration and clipped only on output.
    """
    if params.gamma <= 0.0:
        raise ValueError("g2_grid needs gamma > 0")
    if tau_max is None:
        tau_max = 10.0 * params.tau_e
    if tau_max < 3.0 * params.tau_e:
        warnings.warn("tau_max below 3 lifetimes truncates the pair density",
                      stacklevel=2)
    if result is None:
        result = propagate(RHO_GROUND, params, spec, grid, store_states=False)
    pe = result.pe_of_t
    i0, i_end = _window_indices(spec, grid)
    n_tau = max(1, int(round(tau_max / grid.dt)))
    g2 = np.zeros((i_end - i0 + 1, n_tau + 1), dtype=np.float64)
    tail_mass = 0.0
    total_mass = 0.0
    if spec.area > 0.0:
        rows, tails = _conditional_rows(params, spec, grid, i0, i_end)
        scale = params.gamma**2 * pe[i0:i_end + 1]
        decay = np.exp(-params.gamma * grid.dt * np.arange(n_tau + 1))
        for i in range(rows.shape[0]):
            n_num = min(i_end - (i0 + i), n_tau) + 1
            g2[i, :n_num] = scale[i] * rows[i, :n_num]
            if n_num <= n_tau:
                # drive-free continuation: pure exponential decay
                g2[i, n_num:] = scale[i] * tails[i] * decay[1:n_tau - n_num + 2]
        # pair mass beyond tau_max per row: tails decay exponentially
        w = _trapezoid_weights(rows.shape[0]) * grid.dt
        for i in range(rows.shape[0]):
            k_end = i_end - (i0 + i)
            beyond = (n_tau - k_end) * grid.dt
            tail_mass += w[i] * scale[i] * tails[i] / params.gamma \
                * math.exp(-params.gamma * max(beyond, 0.0))
        total_mass = float(np.trapezoid(np.trapezoid(g2, dx=grid.dt, axis=1),
                                        dx=grid.dt)) + tail_mass
        if total_mass > 0.0 and tail_mass > 1e-3 * total_mass:
            warnings.warn(
                f"tau_max={tau_max:g} truncates {tail_mass / total_mass:.2%} "
                "of the pair density", stacklevel=2,
            )
    frac = tail_mass / total_mass if total_mass > 0.0 else 0.0
    return CorrelationGrid(
        t1_axis=grid.times,
        tau_axis=grid.dt * np.arange(n_tau + 1),
        window_start=i0,
        window_stop=i_end + 1,
        g2_values=g2,
        expected_n=result.expected_n,
        pe_of_t=pe,
        tail_mass_fraction=frac,
    )


def _trapezoid_weights(n: int) -> np.ndarray:
    w = np.ones(n)
    if n > 1:
        w[0] = 0.5
        w[-1] = 0.5
    return w


def p2_from_g2(corr: CorrelationGrid) -> CorrelationGrid:
    """Fill the pair densities and marginals from the stored G2 matrix."""
    dt = float(corr.t1_axis[1] - corr.t1_axis[0])
    n_full = corr.t1_axis.size
    p2_t1 = np.zeros(n_full)
    p2_t1[corr.window_start:corr.window_stop] = np.trapezoid(
        corr.g2_values, dx=dt, axis=1
    )
    p2_tau = np.trapezoid(corr.g2_values, dx=dt, axis=0)
    p2_total = float(np.trapezoid(p2_t1, dx=dt))

    # arrival density of the second photon of each pair on the full axis
    second = np.zeros(n_full)
    w = _trapezoid_weights(corr.window_stop - corr.window_start) * dt
    n_tau = corr.tau_axis.size
    for i in range(corr.window_stop - corr.window_start):
        j0 = corr.window_start + i
        n_fit = min(n_tau, n_full - j0)
        second[j0:j0 + n_fit] += w[i] * corr.g2_values[i, :n_fit]
    corr.p2_of_t1 = p2_t1
    corr.p2_of_tau = p2_tau
    corr.p2_total = p2_total
    corr.pair_emission_density = p2_t1 + second
    return corr


P1_NEGATIVE_TOLERANCE = -1e-6


def p1_density(params: SystemParams, spec: PulseSpec, grid: TimeGrid,
               corr: CorrelationGrid, check: bool = True) -> np.ndarray:
    """Exclusive single-photon density p1(t) = gamma*P_e(t) - pair density.

    A dip below -1e-6 signals non-negligible three-photon emission, outside
    the pair-truncation model; by default that regime raises (never clips).
    With check=False the density is stored anyway and the caller is expected
    to inspect corr.p1_min (maps at even-pi areas carry this contamination).
    """
    if corr.pair_emission_density is None:
        p2_from_g2(corr)
    p1 = params.gamma * corr.pe_of_t - corr.pair_emission_density
    corr.p1_of_t1 = p1
    corr.p1_total = float(np.trapezoid(p1, dx=grid.dt))
    corr.p1_min = float(p1.min())
    if check and corr.p1_min < P1_NEGATIVE_TOLERANCE:
        k = int(p1.argmin())
        raise RegimeViolationError(
            f"p1 reaches {corr.p1_min:.3e} at t={corr.t1_axis[k]:.4g}: "
            "three-photon emission is not negligible here"
        )
    return p1


def g2_zero(params: SystemParams, spec: PulseSpec, grid: TimeGrid,
            tau_max: float | None = None,
            result: PropagationResult | None = None) -> G2Summary:
    """Pulse-integrated g2[0] = E[n(n-1)] / E[n]^2 from the regression engine.

    E[n(n-1)] = 2 * iint_{tau>0} G2 dt1 dtau, accumulated in streaming form
    (no matrix storage): numeric trapezoids inside the drive window plus the
    exact exponential remainder, truncated at tau_max.
    """
    if params.gamma <= 0.0:
        raise ValueError("g2_zero needs gamma > 0")
    if tau_max is None:
        tau_max = 10.0 * params.tau_e
    if result is None:
        result = propagate(RHO_GROUND, params, spec, grid, store_states=False)
    e_n = result.expected_n
    if e_n <= 0.0:
        raise DegenerateDistributionError("E[n] = 0: g2[0] undefined")
    i0, i_end = _window_indices(spec, grid)
    om_full, om_half = drive_nodes(spec, grid)
    starts = np.arange(i0, i_end + 1, dtype=np.int64)
    tau_int = np.zeros(starts.size)
    tails = np.zeros(starts.size)
    _kernels.ground_reset_integrals(
        starts, i_end, om_full, om_half,
        params.gamma, params.gamma_d, params.phonon_b, grid.dt, tau_int, tails,
    )
    # exponential remainder from the window edge out to t1 + tau_max
    remain = np.maximum(
        (starts - i_end).astype(np.float64) * grid.dt + tau_max, 0.0
    )
    tau_int = tau_int + tails / params.gamma \
        * (1.0 - np.exp(-params.gamma * remain))
    per_t1 = params.gamma**2 * result.pe_of_t[i0:i_end + 1] * tau_int
    e_fact = 2.0 * float(np.trapezoid(per_t1, dx=grid.dt))
    return G2Summary(g2_zero=e_fact / e_n**2, e_n=e_n, e_n_n_minus_1=e_fact)
