"""Monte Carlo wave-function unraveling: jump records and photocounting.

Trajectories are sampled with norm-threshold jump detection on the shared
fixed-step grid.  Randomness comes from a counter-based Philox stream keyed by
the master seed; trajectory i consumes only its own block of draws, so results
are bit-reproducible for any execution order or thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DegenerateDistributionError
from .lindblad import SystemParams, TimeGrid, check_step_size, drive_nodes
from .pulse import PulseSpec, drive_support

CHANNEL_NAMES = ("radiative", "phonon", "noise")


@dataclass(frozen=True)
class JumpRecord:
    """Jump times and channels of one trajectory.

    seed/index identify the random block: the record is reproducible from
    (seed, index) alone for fixed physics inputs.  photon_count is the number
    of radiative jumps; sigma^dag-sigma jumps (phonon, noise) are recorded but
    are not photodetections.
    """

    seed: int
    index: int
    jump_times: np.ndarray
    jump_channels: np.ndarray  # int8 tags, see CHANNEL_NAMES
    photon_count: int

    def channel_names(self) -> tuple[str, ...]:
        return tuple(CHANNEL_NAMES[c] for c in self.jump_channels)


@dataclass
class PhotocountResult:
    """Photocount distribution P_n with purities and factorial moments."""

    counts_histogram: dict[int, int]
    p_n: dict[int, float]
    purities: dict[int, float]
    std_err_p_n: dict[int, float]
    expected_n: float
    expected_n_stderr: float
    n_trajectories: int
    master_seed: int
    e_n_n_minus_1: float
    g2_zero: float | None          # None when E[n] = 0
    g2_zero_stderr: float | None

    def p(self, n: int) -> float:
        return self.p_n.get(n, 0.0)

    def stderr(self, n: int) -> float:
        if n in self.std_err_p_n:
            return self.std_err_p_n[n]
        # unobserved count: use the 1/N posterior scale instead of zero
        return 1.0 / self.n_trajectories


def purity(p_n: dict[int, float]) -> dict[int, float]:
    """Photon-number purities: P_n renormalized over the non-vacuum part."""
    emitting = sum(p for n, p in p_n.items() if n > 0)
    if emitting <= 0.0:
        raise DegenerateDistributionError(
            "all-vacuum photocount distribution has no purities"
        )
    return {n: p / emitting for n, p in p_n.items() if n > 0}


def _trajectory_randoms(master_seed: int, n_trajectories: int) -> np.ndarray:
    """Per-trajectory random blocks from one counter-based Philox stream."""
    gen = np.random.Generator(np.random.Philox(key=np.uint64(master_seed)))
    return gen.random((n_trajectories, _kernels.RANDOMS_PER_TRAJECTORY))


def _run_ensemble(params: SystemParams, spec: PulseSpec, grid: TimeGrid,
                  randoms: np.ndarray, path_stride: int = 0):
    check_step_size(params, spec, grid)
    om_full, om_half = drive_nodes(spec, grid)
    i_end = grid.index_at(drive_support(spec, 5.0)[1]) if spec.area > 0.0 else 0
    n = randoms.shape[0]
    jump_t = np.zeros((n, _kernels.MAX_JUMPS), dtype=np.float64)
    jump_c = np.zeros((n, _kernels.MAX_JUMPS), dtype=np.int8)
    n_jumps = np.zeros(n, dtype=np.int64)
    overflow = np.zeros(n, dtype=np.int8)
    if path_stride > 0:
        paths = np.zeros((n, grid.n_steps // path_stride + 1), dtype=np.float64)
    else:
        paths = np.zeros((n, 1), dtype=np.float64)
    _kernels.mcwf_ensemble(
        randoms, om_full, om_half, i_end, grid.n_steps, grid.dt, grid.t_start,
        spec.peak_amplitude, spec.tau_p, spec.chirp_alpha, spec.carrier_phase,
        spec.center_time, params.gamma, params.gamma_d, params.phonon_b,
        path_stride, paths, jump_t, jump_c, n_jumps, overflow,
    )
    if overflow.any():
        raise RuntimeError(
            f"{int(overflow.sum())} trajectories exceeded the jump budget "
            f"({_kernels.MAX_JUMPS}); this regime is outside the sampler's design"
        )
    return jump_t, jump_c, n_jumps, paths


def sample_trajectory(params: SystemParams, spec: PulseSpec, grid: TimeGrid,
                      seed: int, index: int = 0, path_stride: int = 0):
    """One jump record, deterministically keyed by (seed, index).

    With path_stride > 0 also returns (times, conditional P_e) sampled every
    path_stride grid nodes; otherwise the second element is None.
    """
    randoms = _trajectory_randoms(seed, index + 1)[index:index + 1]
    jump_t, jump_c, n_jumps, paths = _run_ensemble(
        params, spec, grid, randoms, path_stride=path_stride
    )
    k = int(n_jumps[0])
    record = JumpRecord(
        seed=seed,
        index=index,
        jump_times=jump_t[0, :k].copy(),
        jump_channels=jump_c[0, :k].copy(),
        photon_count=int((jump_c[0, :k] == _kernels.CH_RADIATIVE).sum()),
    )
    if path_stride > 0:
        times = grid.times[::path_stride]
        return record, (times, paths[0])
    return record, None


def ensemble_photon_counts(params: SystemParams, spec: PulseSpec,
                           grid: TimeGrid, n_trajectories: int,
                           master_seed: int) -> np.ndarray:
    """Radiative jump count of every trajectory in the ensemble."""
    if n_trajectories < 1:
        raise ValueError("n_trajectories must be >= 1")
    randoms = _trajectory_randoms(master_seed, n_trajectories)
    jump_t, jump_c, n_jumps, _ = _run_ensemble(params, spec, grid, randoms)
    idx = np.arange(_kernels.MAX_JUMPS)[None, :]
    radiative = (jump_c == _kernels.CH_RADIATIVE) & (idx < n_jumps[:, None])
    return radiative.sum(axis=1).astype(np.int64)


def mean_conditional_pe(params: SystemParams, spec: PulseSpec, grid: TimeGrid,
                        n_trajectories: int, master_seed: int,
                        path_stride: int = 8):
    """Ensemble mean of the normalized conditional excited population."""
    randoms = _trajectory_randoms(master_seed, n_trajectories)
    _, _, _, paths = _run_ensemble(params, spec, grid, randoms,
                                   path_stride=path_stride)
    return grid.times[::path_stride], paths.mean(axis=0)


def photocount_distribution(params: SystemParams, spec: PulseSpec,
                            grid: TimeGrid, n_trajectories: int,
                            master_seed: int) -> PhotocountResult:
    """Aggregate the photocount distribution P_n over the ensemble."""
    counts = ensemble_photon_counts(params, spec, grid, n_trajectories,
                                    master_seed)
    n = int(n_trajectories)
    hist = np.bincount(counts)
    counts_histogram = {k: int(c) for k, c in enumerate(hist) if c > 0}
    p_n = {k: c / n for k, c in counts_histogram.items()}
    std_err = {k: math.sqrt(p * (1.0 - p) / n) for k, p in p_n.items()}
    mean_n = float(counts.mean())
    mean_n_err = float(counts.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    fact = counts.astype(np.float64) * (counts - 1.0)
    e_fact = float(fact.mean())
    if mean_n > 0.0:
        g2 = e_fact / mean_n**2
        # delta-method error for the ratio X/Y^2 with X=n(n-1), Y=n
        if n > 1:
            var_x = fact.var(ddof=1)
            var_y = counts.var(ddof=1)
            cov = float(np.cov(fact, counts.astype(np.float64))[0, 1])
            var_g = (var_x / mean_n**4
                     + 4.0 * e_fact**2 * var_y / mean_n**6
                     - 4.0 * e_fact * cov / mean_n**5) / n
            g2_err = math.sqrt(max(var_g, 0.0))
        else:
            g2_err = 0.0
    else:
        g2 = None
        g2_err = None
    try:
        pur = purity(p_n)
    except DegenerateDistributionError:
        pur = {}
    return PhotocountResult(
        counts_histogram=counts_histogram,
        p_n=p_n,
        purities=pur,
        std_err_p_n=std_err,
        expected_n=mean_n,
        expected_n_stderr=mean_n_err,
        n_trajectories=n,
        master_seed=master_seed,
        e_n_n_minus_1=e_fact,
        g2_zero=g2,
        g2_zero_stderr=g2_err,
    )


def two_photon_events(params: SystemParams, spec: PulseSpec, grid: TimeGrid,
                      n_trajectories: int, master_seed: int) -> np.ndarray:
    """(t1, tau) of the radiative pair for every exactly-two-photon trajectory.

    Independent histogram oracle for the regression-theorem pair densities.
    """
    randoms = _trajectory_randoms(master_seed, n_trajectories)
    jump_t, jump_c, n_jumps, _ = _run_ensemble(params, spec, grid, randoms)
    idx = np.arange(_kernels.MAX_JUMPS)[None, :]
    live = idx < n_jumps[:, None]
    radiative = (jump_c == _kernels.CH_RADIATIVE) & live
    two = radiative.sum(axis=1) == 2
    out = np.empty((int(two.sum()), 2), dtype=np.float64)
    rows = np.nonzero(two)[0]
    for j, i in enumerate(rows):
        tt = jump_t[i][radiative[i]]
        out[j, 0] = tt[0]
        out[j, 1] = tt[1] - tt[0]
    return out
