"""Command-line front end: scan drivers and deterministic data emission.

Every run writes its tables plus a manifest.json echoing the full config and
the sha256 of each emitted file.  Outputs are byte-identical for identical
(config, seed) regardless of --threads.

Exit codes: 0 success, 2 config error, 3 numerical-guard failure,
4 regime violation (negative single-photon density).
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import (ExperimentConfig, ScanSettings, parse_config,
                     parse_quantity, serialize_config)
from .correlations import g2_grid, g2_zero, p1_density, p2_from_g2
from .errors import RegimeViolationError, StepSizeError
from .lindblad import default_grid, rabi_scan
from .output import RunManifest, write_table
from .presets import base_config, repro_recipes
from .pulse import PulseSpec
from .spectrum import lorentzian, pulse_spectrum
from .trajectories import photocount_distribution, sample_trajectory


def _set_threads(n: int) -> int:
    import numba

    n_eff = max(1, min(n, numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n_eff)
    return n_eff


def _grid_for(config: ExperimentConfig, pulse: PulseSpec):
    if config.grid is not None:
        return config.grid
    return default_grid(config.system, pulse)


def _scan_areas(config: ExperimentConfig, default: tuple[float, ...]):
    if config.scan is not None:
        if config.scan.variable != "area":
            raise ValueError("this command scans pulse area")
        return config.scan.values
    return default


def cmd_rabi(config: ExperimentConfig, out_dir: Path, fmt: str,
             manifest: RunManifest, stem: str = "rabi") -> None:
    areas = _scan_areas(config, tuple(np.arange(0.0, 6.0001, 0.05) * math.pi))
    points = rabi_scan(config.system, config.pulse, areas)
    rows = [(p.area, p.pe_ideal, p.expected_n) for p in points]
    manifest.add(write_table(out_dir / stem,
                             ["area_rad", "pe_ideal", "expected_n"], rows, fmt))


def cmd_photocounts(config: ExperimentConfig, out_dir: Path, fmt: str,
                    manifest: RunManifest, stem: str = "photocounts") -> None:
    areas = _scan_areas(config, (config.pulse.area,))
    rows = []
    for area in areas:
        pulse = config.pulse.with_area(area)
        grid = _grid_for(config, pulse)
        pc = photocount_distribution(config.system, pulse, grid,
                                     config.run.n_trajectories,
                                     config.run.master_seed)
        rows.append((
            area,
            pc.p(0), pc.p(1), pc.p(2), pc.p(3),
            pc.purities.get(1, float("nan")),
            pc.purities.get(2, float("nan")),
            pc.purities.get(3, float("nan")),
            pc.stderr(0), pc.stderr(1), pc.stderr(2), pc.stderr(3),
        ))
    header = ["area_rad", "p0", "p1", "p2", "p3", "pi1", "pi2", "pi3",
              "p0_stderr", "p1_stderr", "p2_stderr", "p3_stderr"]
    manifest.add(write_table(out_dir / stem, header, rows, fmt))


def cmd_correlations(config: ExperimentConfig, out_dir: Path, fmt: str,
                     manifest: RunManifest, stem: str = "correlations") -> None:
    pulse = config.pulse
    grid = _grid_for(config, pulse)
    corr = g2_grid(config.system, pulse, grid, tau_max=config.run.tau_max)
    p2_from_g2(corr)
    p1_density(config.system, pulse, grid, corr, check=False)
    stride = config.run.map_stride
    p2 = corr.p2_joint
    rows = []
    w_times = corr.window_times
    for i in range(0, w_times.size, stride):
        for k in range(0, corr.tau_axis.size, stride):
            rows.append((w_times[i], corr.tau_axis[k], max(p2[i, k], 0.0)))
    manifest.add(write_table(out_dir / f"{stem}_p2_map",
                             ["t1", "tau", "p2_joint"], rows, fmt))
    full_t = corr.t1_axis
    rows = [(full_t[k], max(corr.p1_of_t1[k], 0.0), corr.p2_of_t1[k])
            for k in range(0, full_t.size, stride)]
    manifest.add(write_table(out_dir / f"{stem}_marginals_t1",
                             ["t1", "p1", "p2_t1"], rows, fmt))
    rows = [(corr.tau_axis[k], corr.p2_of_tau[k])
            for k in range(0, corr.tau_axis.size, stride)]
    manifest.add(write_table(out_dir / f"{stem}_marginals_tau",
                             ["tau", "p2_tau"], rows, fmt))
    if corr.p1_min is not None and corr.p1_min < -1e-6:
        msg = (f"regime violation: p1 reaches {corr.p1_min:.3e}; "
               "three-photon emission is not negligible at this area")
        if not config.run.allow_regime_violation:
            raise RegimeViolationError(msg)
        print(f"warning: {msg} (maps emitted; negative densities clipped)",
              file=sys.stderr)


def cmd_g2scan(config: ExperimentConfig, out_dir: Path, fmt: str,
               manifest: RunManifest, stem: str = "g2scan") -> None:
    scan = config.scan or ScanSettings("area", (config.pulse.area,))
    rows = []
    for v in scan.values:
        if scan.variable == "area":
            pulse = config.pulse.with_area(v)
        else:
            pulse = config.pulse.with_tau_fwhm(v)
        if pulse.area <= 0.0:
            raise ValueError("g2scan needs area > 0 (g2[0] undefined at 0)")
        grid = _grid_for(config, pulse)
        s = g2_zero(config.system, pulse, grid, tau_max=config.run.tau_max)
        rows.append((v, s.g2_zero, s.e_n, 1.0))
    header = [
        "area_rad" if scan.variable == "area" else "tau_fwhm",
        "g2_zero", "expected_n", "g2_laser",
    ]
    manifest.add(write_table(out_dir / stem, header, rows, fmt))


def cmd_spectrum(config: ExperimentConfig, out_dir: Path, fmt: str,
                 manifest: RunManifest, stem: str = "spectrum") -> None:
    areas = _scan_areas(
        config, (2 * math.pi, 4 * math.pi, 6 * math.pi))
    gamma = config.system.gamma
    omega = np.linspace(-config.run.omega_half_range * gamma,
                        config.run.omega_half_range * gamma,
                        config.run.omega_points)
    columns = [omega]
    header = ["omega"]
    for area in areas:
        pulse = config.pulse.with_area(area)
        grid = _grid_for(config, pulse)
        sp = pulse_spectrum(config.system, pulse, grid,
                            tau_max=config.run.tau_max, omega_axis=omega,
                            detector_linewidth=config.run.detector_linewidth)
        columns.append(sp.s_of_omega)
        header.append(f"s_area_{area / math.pi:g}pi".replace(".", "p"))
    columns.append(lorentzian(omega, gamma))
    header.append("s_natural")
    rows = list(zip(*columns))
    manifest.add(write_table(out_dir / stem, header, rows, fmt))


def cmd_trajectory(config: ExperimentConfig, out_dir: Path, fmt: str,
                   manifest: RunManifest, stem: str = "trajectory") -> None:
    pulse = config.pulse
    grid = _grid_for(config, pulse)
    record, path = sample_trajectory(config.system, pulse, grid,
                                     seed=config.run.master_seed,
                                     path_stride=8)
    times, pe = path
    manifest.add(write_table(out_dir / stem, ["t", "conditional_pe"],
                             list(zip(times, pe)), fmt))
    rows = [(float(t), record.channel_names()[i])
            for i, t in enumerate(record.jump_times)]
    manifest.add(write_table(out_dir / f"{stem}_jumps",
                             ["time", "channel"], rows, fmt))


_COMMANDS = {
    "rabi": cmd_rabi,
    "photocounts": cmd_photocounts,
    "correlations": cmd_correlations,
    "g2scan": cmd_g2scan,
    "spectrum": cmd_spectrum,
    "trajectory": cmd_trajectory,
}


def _apply_overrides(config: ExperimentConfig,
                     args: argparse.Namespace) -> ExperimentConfig:
    run = config.run
    if args.seed is not None:
        run = replace(run, master_seed=args.seed)
    if args.trajectories is not None:
        run = replace(run, n_trajectories=args.trajectories)
    config = replace(config, run=run)
    if getattr(args, "area", None) is not None:
        config = replace(
            config,
            pulse=config.pulse.with_area(
                parse_quantity(args.area, config.time_unit_ps)),
        )
    if getattr(args, "tau_fwhm", None) is not None:
        config = replace(
            config,
            pulse=config.pulse.with_tau_fwhm(
                parse_quantity(args.tau_fwhm, config.time_unit_ps)),
        )
    return config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tlspulse",
        description="Photon statistics of a pulse-driven two-level emitter",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config file")
    common.add_argument("--preset", choices=["ideal", "experimental"],
                        default="ideal", help="base parameter set")
    common.add_argument("--out", type=Path, default=Path("."),
                        help="output directory")
    common.add_argument("--seed", type=int, help="master seed override")
    common.add_argument("--trajectories", type=int,
                        help="Monte Carlo sample size override")
    common.add_argument("--threads", type=int, default=1,
                        help="compute threads (affects speed only)")
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--area", help="pulse area, e.g. 2pi")
    common.add_argument("--tau-fwhm", dest="tau_fwhm",
                        help="pulse length (intensity FWHM)")
    for name in _COMMANDS:
        sub.add_parser(name, parents=[common])
    rp = sub.add_parser("repro", parents=[common],
                        help="reproduce a figure's data")
    rp.add_argument("figure", choices=sorted(repro_recipes().keys()))
    return parser


def _run(command: str, config: ExperimentConfig, out_dir: Path, fmt: str,
         figure: str = "", stem: str | None = None) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(command=command, config=serialize_config(config),
                           out_dir=out_dir, figure=figure)
    if stem is None:
        _COMMANDS[command](config, out_dir, fmt, manifest)
    else:
        _COMMANDS[command](config, out_dir, fmt, manifest, stem=stem)
    manifest.write(__version__)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _set_threads(args.threads)
        if args.command == "repro":
            runs = repro_recipes()[args.figure]
            for command, config, stem in runs:
                config = _apply_overrides(config, args)
                _run(command, config, args.out, args.format,
                     figure=args.figure, stem=stem)
        else:
            if args.config is not None:
                config = parse_config(args.config)
            else:
                config = base_config(args.preset)
            config = _apply_overrides(config, args)
            _run(args.command, config, args.out, args.format)
    except (ValueError, KeyError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (StepSizeError, MemoryError) as exc:
        print(f"numerical guard: {exc}", file=sys.stderr)
        return 3
    except RegimeViolationError as exc:
        print(f"regime violation: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
