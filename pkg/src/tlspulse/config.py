"""Experiment configuration: parsing, validation, canonical serialization.

Configs are plain JSON trees.  Times may be given in simulation units
(1/gamma) or, when time_unit_ps is set, as strings with a "ps"/"ns" suffix
converted at the parse boundary.  Areas accept "<x>pi" strings.  Parsing is
canonicalizing: parse(serialize(parse(x))) == parse(x).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .lindblad import SystemParams, TimeGrid
from .pulse import PulseSpec

SCAN_VARIABLES = ("area", "tau_fwhm")


def parse_quantity(value, time_unit_ps: float | None = None) -> float:
    """Number, or a string like '2pi', '0.5pi', '80ps', '1.3/ns', '2e-3/GHz'.

    Suffixed time strings need time_unit_ps; rate strings '/ns' and '/GHz'
    (per-nanosecond) are converted to 1/time in simulation units.
    """
    if isinstance(value, (int, float)):
        return float(value)
    s = str(value).strip().lower().replace(" ", "")
    if s.endswith("pi"):
        head = s[:-2]
        return (float(head) if head not in ("", "+", "-") else float(head + "1")) * math.pi
    if s.endswith("/ns"):
        if time_unit_ps is None:
            raise ValueError(f"rate string {value!r} needs time_unit_ps")
        return float(s[:-3]) * 1e-3 * time_unit_ps  # 1/ns -> 1/ps -> sim rate
    if s.endswith("/ghz"):
        # a coefficient of |Omega|^2 has time dimension: 1/GHz = 1 ns
        if time_unit_ps is None:
            raise ValueError(f"time string {value!r} needs time_unit_ps")
        return float(s[:-4]) * 1e3 / time_unit_ps
    if s.endswith("ps"):
        if time_unit_ps is None:
            raise ValueError(f"time string {value!r} needs time_unit_ps")
        return float(s[:-2]) / time_unit_ps
    if s.endswith("ns"):
        if time_unit_ps is None:
            raise ValueError(f"time string {value!r} needs time_unit_ps")
        return float(s[:-2]) * 1e3 / time_unit_ps
    return float(s)


@dataclass(frozen=True)
class RunSettings:
    """Sampling and output knobs shared by all commands."""

    n_trajectories: int = 100_000
    master_seed: int = 12345
    tau_max: float | None = None        # None: 10 excited-state lifetimes
    omega_half_range: float = 40.0      # spectrum axis: +- this, in gamma units
    omega_points: int = 2001
    detector_linewidth: float = 0.0
    map_stride: int = 8                 # decimation of emitted (t1, tau) maps
    allow_regime_violation: bool = False

    def __post_init__(self) -> None:
        if self.n_trajectories < 1:
            raise ValueError("n_trajectories must be >= 1")
        if self.master_seed < 0 or self.master_seed > 2**64 - 1:
            raise ValueError("master_seed must fit in 64 bits")
        if self.omega_points < 3:
            raise ValueError("omega_points must be >= 3")
        if self.map_stride < 1:
            raise ValueError("map_stride must be >= 1")


@dataclass(frozen=True)
class ScanSettings:
    variable: str
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.variable not in SCAN_VARIABLES:
            raise ValueError(f"scan variable must be one of {SCAN_VARIABLES}")
        if len(self.values) == 0:
            raise ValueError("scan values must be non-empty")


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemParams
    pulse: PulseSpec
    run: RunSettings = field(default_factory=RunSettings)
    grid: TimeGrid | None = None
    scan: ScanSettings | None = None
    time_unit_ps: float | None = None
    label: str = ""


def parse_config(data: dict | str | Path) -> ExperimentConfig:
    """Build a validated config from a JSON tree, JSON text, or file path."""
    if isinstance(data, Path) or (isinstance(data, str) and not data.lstrip().startswith("{")):
        data = json.loads(Path(data).read_text(encoding="utf-8"))
    elif isinstance(data, str):
        data = json.loads(data)
    if not isinstance(data, dict):
        raise ValueError("config must be a JSON object")
    unit = data.get("time_unit_ps")
    if unit is not None:
        unit = float(unit)

    def q(v):
        return parse_quantity(v, unit)

    sys_d = dict(data.get("system", {}))
    system = SystemParams(
        gamma=q(sys_d.get("gamma", 1.0)),
        gamma_d=q(sys_d.get("gamma_d", 0.0)),
        phonon_b=q(sys_d.get("phonon_b", 0.0)),
    )
    pul_d = dict(data.get("pulse", {}))
    pulse = PulseSpec(
        area=q(pul_d.get("area", math.pi)),
        tau_fwhm=q(pul_d.get("tau_fwhm", 0.1)),
        chirp_bw_fraction=float(pul_d.get("chirp_bw_fraction", 0.0)),
        carrier_phase=q(pul_d.get("carrier_phase", 0.0)),
        center_time=q(pul_d.get("center_time", 0.0)),
    )
    grid_d = data.get("grid")
    grid = None
    if grid_d:
        grid = TimeGrid(t_start=q(grid_d["t_start"]), t_end=q(grid_d["t_end"]),
                        dt=q(grid_d["dt"]))
    run_d = dict(data.get("run", {}))
    tau_max = run_d.get("tau_max")
    run = RunSettings(
        n_trajectories=int(run_d.get("n_trajectories", 100_000)),
        master_seed=int(run_d.get("master_seed", 12345)),
        tau_max=q(tau_max) if tau_max is not None else None,
        omega_half_range=float(run_d.get("omega_half_range", 40.0)),
        omega_points=int(run_d.get("omega_points", 2001)),
        detector_linewidth=q(run_d.get("detector_linewidth", 0.0)),
        map_stride=int(run_d.get("map_stride", 8)),
        allow_regime_violation=bool(run_d.get("allow_regime_violation", False)),
    )
    scan_d = data.get("scan")
    scan = None
    if scan_d:
        if set(scan_d) - {"variable", "values"}:
            raise ValueError("scan accepts exactly {variable, values}")
        scan = ScanSettings(
            variable=str(scan_d["variable"]),
            values=tuple(q(v) for v in scan_d["values"]),
        )
    return ExperimentConfig(system=system, pulse=pulse, run=run, grid=grid,
                            scan=scan, time_unit_ps=unit,
                            label=str(data.get("label", "")))


def serialize_config(config: ExperimentConfig) -> dict:
    """Canonical JSON tree (all quantities as plain numbers in sim units)."""
    out = {
        "system": asdict(config.system),
        "pulse": asdict(config.pulse),
        "run": asdict(config.run),
    }
    if config.grid is not None:
        out["grid"] = asdict(config.grid)
    if config.scan is not None:
        out["scan"] = {"variable": config.scan.variable,
                       "values": list(config.scan.values)}
    if config.time_unit_ps is not None:
        out["time_unit_ps"] = config.time_unit_ps
    if config.label:
        out["label"] = config.label
    return out
