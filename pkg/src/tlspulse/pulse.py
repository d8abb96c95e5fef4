"""Chirped Gaussian drive pulses for a resonantly driven two-level emitter.

The drive is parametrized by its integrated area A = int |Omega(t)| dt, the
intensity FWHM of the Gaussian envelope, and an optional quadratic-phase chirp
expressed as a fractional bandwidth increase.  All functions here are pure and
safe to call from any thread.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

# tau_p = tau_fwhm / sqrt(2 ln 2): tau_fwhm is the FWHM of the *intensity*
# envelope exp(-2 t^2 / tau_p^2).
_FWHM_TO_TAUP = 1.0 / math.sqrt(2.0 * math.log(2.0))


def chirp_parameter(delta_bw: float, tau_p: float) -> float:
    """Quadratic chirp rate alpha (1/time^2) for a fractional bandwidth increase.

    alpha = sqrt(2*delta_bw + delta_bw^2) / tau_p^2, monotone in delta_bw.
    """
    if delta_bw < 0.0:
        raise ValueError(f"delta_bw must be >= 0, got {delta_bw}")
    if tau_p <= 0.0:
        raise ValueError(f"tau_p must be > 0, got {tau_p}")
    return math.sqrt(2.0 * delta_bw + delta_bw * delta_bw) / (tau_p * tau_p)


@dataclass(frozen=True)
class PulseSpec:
    """Gaussian pulse with optional chirp.

    area                integrated |Omega| in radians
    tau_fwhm            intensity FWHM of the envelope (> 0)
    chirp_bw_fraction   fractional bandwidth increase from the chirp (>= 0)
    carrier_phase       constant carrier phase in radians
    center_time         envelope peak position on the simulation axis
    """

    area: float
    tau_fwhm: float
    chirp_bw_fraction: float = 0.0
    carrier_phase: float = 0.0
    center_time: float = 0.0

    def __post_init__(self) -> None:
        if self.tau_fwhm <= 0.0:
            raise ValueError(f"tau_fwhm must be > 0, got {self.tau_fwhm}")
        if self.area < 0.0:
            raise ValueError(f"area must be >= 0, got {self.area}")
        if self.chirp_bw_fraction < 0.0:
            raise ValueError(
                f"chirp_bw_fraction must be >= 0, got {self.chirp_bw_fraction}"
            )

    @property
    def tau_p(self) -> float:
        """Gaussian width parameter; the field envelope is exp(-u^2/tau_p^2)."""
        return self.tau_fwhm * _FWHM_TO_TAUP

    @property
    def chirp_alpha(self) -> float:
        """Quadratic phase rate of the chirp (1/time^2)."""
        return chirp_parameter(self.chirp_bw_fraction, self.tau_p)

    @property
    def peak_amplitude(self) -> float:
        """|Omega| at the envelope peak: A / sqrt(pi tau_p^2)."""
        return self.area / math.sqrt(math.pi * self.tau_p * self.tau_p)

    def with_area(self, area: float) -> "PulseSpec":
        return PulseSpec(
            area=area,
            tau_fwhm=self.tau_fwhm,
            chirp_bw_fraction=self.chirp_bw_fraction,
            carrier_phase=self.carrier_phase,
            center_time=self.center_time,
        )

    def with_tau_fwhm(self, tau_fwhm: float) -> "PulseSpec":
        return PulseSpec(
            area=self.area,
            tau_fwhm=tau_fwhm,
            chirp_bw_fraction=self.chirp_bw_fraction,
            carrier_phase=self.carrier_phase,
            center_time=self.center_time,
        )


def drive_amplitude(spec: PulseSpec, t):
    """Complex Rabi amplitude Omega(t) of the drive.

    Omega(t) = A/sqrt(pi tau_p^2) * exp(-u^2/tau_p^2)
               * exp(-i alpha u^2) * exp(-i phi),   u = t - center_time.

    |Omega(t)| is independent of chirp and carrier phase.  Accepts scalars or
    arrays; returns matching shape.
    """
    u = np.asarray(t, dtype=np.float64) - spec.center_time
    envelope = spec.peak_amplitude * np.exp(-((u / spec.tau_p) ** 2))
    phase = -spec.chirp_alpha * u * u - spec.carrier_phase
    out = envelope * np.exp(1j * phase)
    if np.ndim(t) == 0:
        return complex(out)
    return out


def accumulated_area(spec: PulseSpec, t):
    """Pulse area absorbed up to time t: int_{-inf}^{t} |Omega| dt'.

    Tends to spec.area as t -> +inf; equals area/2 at the envelope peak.
    """
    u = (np.asarray(t, dtype=np.float64) - spec.center_time) / spec.tau_p
    out = 0.5 * spec.area * (1.0 + erf(u))
    if np.ndim(t) == 0:
        return float(out)
    return out


def drive_support(spec: PulseSpec, n_widths: float = 5.0) -> tuple[float, float]:
    """Interval outside which the drive is negligible (n_widths Gaussian widths).

    At the default 5 tau_p the area outside the window is ~1.5e-12 of the total.
    """
    half = n_widths * spec.tau_p
    return (spec.center_time - half, spec.center_time + half)
