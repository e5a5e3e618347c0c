"""Command-line entry point: ``nvapor {spectrum,groupindex,pulse,doppler}``.

Every run writes its data file(s) plus ``<out>.manifest.json`` recording the
resolved parameters and grids.  CSV values use 17 significant digits so that
identical invocations give identical bytes.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import asdict
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .core import NvaporError, SystemParams, build_params, load_config
from .doppler import DopplerConfig, doppler_average, doppler_sweep_G
from .linear_response import susceptibility
from .observables import sweep_contour, sweep_G, sweep_G1
from .pulse import PulseSpec, delay_to_group_index, propagate

log = logging.getLogger("nvapor")

SPECTRUM_HEADER = ("delta_over_gamma", "re_rho_pi", "im_rho_pi", "re_chi", "im_chi")
DOPPLER_SPECTRUM_HEADER = ("delta_over_gamma", "re_avg_rho_pi", "im_avg_rho_pi", "re_avg_chi", "im_avg_chi")


class _Formatter(logging.Formatter):
    COLORS = {"WARNING": "\033[33m", "ERROR": "\033[31m", "INFO": "\033[36m"}

    def __init__(self, color: bool):
        super().__init__("%(levelname)s %(message)s")
        self.color = color

    def format(self, record):
        text = super().format(record)
        code = self.COLORS.get(record.levelname)
        if self.color and code:
            return f"{code}{text}\033[0m"
        return text


def _setup_logging(verbose: bool) -> None:
    handler = logging.StreamHandler(sys.stderr)
    color = sys.stderr.isatty() and not os.environ.get("NVAPOR_NO_COLOR")
    handler.setFormatter(_Formatter(color))
    root = logging.getLogger("nvapor")
    root.handlers[:] = [handler]
    root.setLevel(logging.INFO if verbose else logging.WARNING)


def fmt(x: float) -> str:
    if x is None or not math.isfinite(x):
        return ""
    return format(float(x), ".17g")


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[float]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_manifest(out: Path, command: str, params: SystemParams, grids: dict, outputs: list[Path], extra=None) -> Path:
    manifest = {
        "subcommand": command,
        "params": params.to_dict(),
        "grids": grids,
        "outputs": [str(p) for p in outputs],
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    if extra:
        manifest.update(extra)
    path = out.with_name(out.name + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_warnings(out: Path, lines: list[str]) -> Path | None:
    if not lines:
        return None
    path = out.with_name(out.name + ".warnings.txt")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    for line in lines:
        log.warning(line)
    return path


@contextmanager
def _mapper(jobs: int):
    if jobs <= 1:
        yield map
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        yield lambda fn, items: pool.map(fn, items, chunksize=4)


def _linspace(parser, lo: float, hi: float, steps: int, what: str) -> np.ndarray:
    if steps < 2:
        parser.error(f"{what}: need at least 2 grid steps, got {steps}")
    if not hi > lo:
        parser.error(f"{what}: max must exceed min")
    return np.linspace(lo, hi, steps)


def resolve_params(args, parser) -> SystemParams:
    config = load_config(args.config) if args.config else {}
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            parser.error(f"--set expects KEY=VALUE, got {item!r}")
        try:
            config[key.strip()] = float(value)
        except ValueError:
            try:
                config[key.strip()] = complex(value.replace(" ", ""))
            except ValueError:
                parser.error(f"--set {key}: not a number: {value!r}")
    if args.G is not None:
        config["G1"] = config["G2"] = args.G
    if args.G1 is not None:
        config["G1"] = args.G1
    if args.G2 is not None:
        config["G2"] = args.G2
    if args.Delta is not None:
        config["Delta"] = args.Delta
    if args.density is not None:
        config["N_density"] = args.density
    return build_params(config)


def _doppler_config(args) -> DopplerConfig:
    return DopplerConfig(omega_D=args.omega_D, n_nodes=args.nodes, cutoff=args.cutoff, method=args.quadrature)


def _spectrum_rows(spec):
    for d, rho, chi in zip(spec.delta, spec.rho_pi, spec.chi):
        yield d, rho.real, rho.imag, chi.real, chi.imag


def _pole_lines(spec) -> list[str]:
    return [f"pole at delta = {fmt(d)} gamma" for d, bad in zip(spec.delta, spec.pole) if bad]


def cmd_spectrum(args, parser) -> int:
    params = resolve_params(args, parser)
    grid = _linspace(parser, args.delta_min, args.delta_max, args.steps, "delta grid")
    out = Path(args.out or "spectrum.csv")
    extra = {}
    if args.doppler:
        cfg = _doppler_config(args)
        spec = doppler_average(params, cfg, grid)
        extra["doppler"] = asdict(cfg)
    else:
        spec = susceptibility(params, grid)
    write_csv(out, SPECTRUM_HEADER, _spectrum_rows(spec))
    notes = _pole_lines(spec) + ([spec.meta["warning"]] if "warning" in spec.meta else [])
    warn_path = write_warnings(out, notes)
    grids = {"delta": [args.delta_min, args.delta_max, args.steps]}
    outputs = [out] + ([warn_path] if warn_path else [])
    write_manifest(out, "spectrum", params, grids, outputs, extra)
    return 0


def _sweep_rows(result):
    for x, p in zip(result.grid, result.points):
        yield x, p.n_g, 1.0 / p.n_g if p.ok and p.n_g != 0 else float("nan")


def _flag_lines(points, label) -> list[str]:
    return [f"{label}: {p.flag}" for p in points if not p.ok]


def cmd_groupindex(args, parser) -> int:
    params = resolve_params(args, parser)
    grid = _linspace(parser, args.min, args.max, args.steps, "G grid")
    out = Path(args.out or "groupindex.csv")
    grids = {"G": [args.min, args.max, args.steps], "mode": args.sweep}
    summary: dict = {}
    with _mapper(args.jobs) as mapper:
        if args.sweep == "G":
            res = sweep_G(params, grid, mapper=mapper)
            write_csv(out, ("G_over_gamma", "n_g", "v_g_over_c"), _sweep_rows(res))
            summary = {"crossings": res.crossings}
            notes = _flag_lines(res.points, "G sweep")
        elif args.sweep == "G1":
            if args.G2 is None:
                parser.error("--sweep G1 requires --G2")
            res = sweep_G1(params, grid, args.G2, mapper=mapper)
            write_csv(out, ("G1_over_gamma", "n_g", "v_g_over_c"), _sweep_rows(res))
            summary = {"crossings": res.crossings, "valley": res.valley}
            notes = _flag_lines(res.points, "G1 sweep")
        else:
            g2 = grid
            if args.G2_steps is not None:
                lo = args.min if args.G2_min is None else args.G2_min
                hi = args.max if args.G2_max is None else args.G2_max
                g2 = _linspace(parser, lo, hi, args.G2_steps, "G2 grid")
            grids["G2"] = [float(g2[0]), float(g2[-1]), len(g2)]
            res = sweep_contour(params, grid, g2, mapper=mapper)
            rows = ((a, b, res.n_g[i, j]) for i, a in enumerate(res.G1_grid) for j, b in enumerate(res.G2_grid))
            write_csv(out, ("G1_over_gamma", "G2_over_gamma", "n_g"), rows)
            summary = {"argmin": list(res.argmin), "minimum": res.minimum}
            notes = [f"contour point flagged at G1={fmt(a)}, G2={fmt(b)}"
                     for i, a in enumerate(res.G1_grid) for j, b in enumerate(res.G2_grid) if res.flags[i, j]]
    warn_path = write_warnings(out, notes)
    write_manifest(out, "groupindex", params, grids, [out] + ([warn_path] if warn_path else []), {"summary": summary})
    return 0


def cmd_pulse(args, parser) -> int:
    params = resolve_params(args, parser)
    spec = PulseSpec(sigma=args.sigma, L=args.length, half_width=args.window, n_samples=args.samples)
    trace = propagate(params, spec)
    stem = Path(args.out or "pulse")
    vac = stem.with_name(stem.name + "_vacuum.csv")
    med = stem.with_name(stem.name + "_medium.csv")
    summ = stem.with_name(stem.name + "_summary.json")
    write_csv(vac, ("tau_s", "envelope"), zip(trace.tau, trace.envelope_vacuum))
    write_csv(med, ("tau_s", "envelope"), zip(trace.tau, trace.envelope_medium))
    summary = {"delay_s": trace.delay, "n_g_from_delay": delay_to_group_index(trace.delay, spec.L)}
    summ.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    warn_path = write_warnings(stem, trace.notes)
    grids = {"time": {"half_width_over_sigma": spec.half_width, "samples": spec.n_samples}}
    outputs = [vac, med, summ] + ([warn_path] if warn_path else [])
    write_manifest(stem, "pulse", params, grids, outputs, {"pulse": {"sigma": spec.sigma, "L": spec.L}})
    return 0


def cmd_doppler(args, parser) -> int:
    params = resolve_params(args, parser)
    cfg = _doppler_config(args)
    extra = {"doppler": asdict(cfg)}
    if args.what == "spectrum":
        grid = _linspace(parser, args.delta_min, args.delta_max, args.steps, "delta grid")
        out = Path(args.out or "doppler_spectrum.csv")
        spec = doppler_average(params, cfg, grid)
        write_csv(out, DOPPLER_SPECTRUM_HEADER, _spectrum_rows(spec))
        notes = _pole_lines(spec) + ([spec.meta["warning"]] if "warning" in spec.meta else [])
        grids = {"delta": [args.delta_min, args.delta_max, args.steps]}
    else:
        grid = _linspace(parser, args.min, args.max, args.g_steps, "G grid")
        out = Path(args.out or "doppler_groupindex.csv")
        with _mapper(args.jobs) as mapper:
            res = doppler_sweep_G(params, cfg, grid, mapper=mapper)
        write_csv(out, ("G_over_gamma", "avg_n_g", "v_g_over_c"), _sweep_rows(res))
        notes = _flag_lines(res.points, "Doppler G sweep")
        grids = {"G": [args.min, args.max, args.g_steps]}
        extra["summary"] = {"crossings": res.crossings}
    warn_path = write_warnings(out, notes)
    write_manifest(out, "doppler", params, grids, [out] + ([warn_path] if warn_path else []), extra)
    return 0


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat 'key = number' parameter file")
    common.add_argument("--out", help="output path (stem for pulse)")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="parallel sweep workers")
    common.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any parameter field")
    common.add_argument("--G", type=float, help="equal drive amplitude G1 = G2 (gamma)")
    common.add_argument("--G1", type=float, help="drive amplitude on 1-4 (gamma)")
    common.add_argument("--G2", type=float, help="drive amplitude on 2-3 (gamma)")
    common.add_argument("--Delta", type=float, help="control detuning (gamma)")
    common.add_argument("--density", type=float, help="atomic density N (m^-3)")
    common.add_argument("-v", "--verbose", action="store_true")
    return common


def _add_delta_grid(p):
    p.add_argument("--delta-min", type=float, default=-6.0)
    p.add_argument("--delta-max", type=float, default=6.0)
    p.add_argument("--steps", type=int, default=1201)


def _add_doppler(p):
    p.add_argument("--omega-D", dest="omega_D", type=float, default=324.0, help="Doppler width (gamma)")
    p.add_argument("--nodes", type=int, default=200)
    p.add_argument("--cutoff", type=float, default=8.0)
    p.add_argument("--quadrature", choices=("sinh", "hermite"), default="sinh")


def _add_G_grid(p, lo=0.1, hi=3.0, steps=30):
    p.add_argument("--min", type=float, default=lo)
    p.add_argument("--max", type=float, default=hi)
    p.add_argument("--steps", type=int, default=steps)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nvapor", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common_parser()

    p = sub.add_parser("spectrum", parents=[common], help="rho_pi / chi_pi versus probe detuning")
    _add_delta_grid(p)
    p.add_argument("--doppler", action="store_true", help="velocity-average the spectrum")
    _add_doppler(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("groupindex", parents=[common], help="group-index sweeps and contours")
    p.add_argument("--sweep", choices=("G", "G1", "contour"), default="G")
    _add_G_grid(p)
    p.add_argument("--G2-min", type=float)
    p.add_argument("--G2-max", type=float)
    p.add_argument("--G2-steps", type=int)
    p.set_defaults(func=cmd_groupindex)

    p = sub.add_parser("pulse", parents=[common], help="Gaussian pulse through the medium")
    p.add_argument("--sigma", type=float, default=2 * math.pi * 5e3, help="spectral width (rad/s)")
    p.add_argument("--length", type=float, default=0.01, help="medium length L (m)")
    p.add_argument("--window", type=float, default=8.0, help="time half-window in units of 1/sigma")
    p.add_argument("--samples", type=int, default=2**14)
    p.set_defaults(func=cmd_pulse)

    p = sub.add_parser("doppler", parents=[common], help="Doppler-averaged spectra and group index")
    p.add_argument("--what", choices=("spectrum", "groupindex"), default="groupindex")
    _add_delta_grid(p)
    p.add_argument("--min", type=float, default=1.0)
    p.add_argument("--max", type=float, default=8.0)
    p.add_argument("--G-steps", dest="g_steps", type=int, default=29)
    _add_doppler(p)
    p.set_defaults(func=cmd_doppler)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose)
    try:
        return args.func(args, parser)
    except NvaporError as exc:
        log.error(str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
