"""Command-line entry point: ``lidarfog {coeffs,curves,power,simulate}``.

Exit codes: 0 success, 2 usage or invalid parameters, 3 I/O or malformed
input, 4 quadrature accuracy failure, 5 simulate finished with failed files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from lidarfog import __version__, fogsim, mie, optics, pointcloud_io, psd
from lidarfog.channel import DEFAULT_N_SIMPSON, CrossoverModel, HardTarget, PulseConfig, power_table
from lidarfog.errors import AccuracyError, DomainError, LidarFogError, MalformedFileError, PresetLookupError
from lidarfog.units import UM

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_ACCURACY = 4
EXIT_PARTIAL = 5

MANIFEST_SCHEMA_VERSION = "1.0"

# Options a --config file may set, with built-in defaults. Flags win over the
# file, the file wins over these.
DEFAULTS = {
    "preset": "strong_advection",
    "mode": "distribution",
    "alpha": None,
    "beta": None,
    "step_um": optics.QuadratureSettings.step_um,
    "format": "csv",
    "output": None,
    "input": None,
    "pattern": "**/*.bin",
    "seed": 0,
    "workers": None,
    "manifest": None,
    "range_step": 0.1,
    "noise_floor": 0.005,
    "intensity_scale": 100.0,
    "jitter": True,
    "n_simpson": DEFAULT_N_SIMPSON,
    "r_full": 10.0,
    "tau_h": 10e-9,
    "r0": 30.0,
    "intensity": 1.0,
    "r_min": 0.0,
    "r_max": None,
    "points": 1001,
    "d_min_um": 0.1,
    "d_max_um": 100.0,
}


class UsageError(LidarFogError):
    pass


def _add_optics_args(p):
    p.add_argument("--preset", default=None, help=f"one of: {', '.join(psd.PRESETS)}")
    p.add_argument("--mode", choices=optics.MODES, default=None, help="beta from the distribution or from MOR")
    p.add_argument("--alpha", type=float, default=None, help="explicit attenuation [1/m]; needs --beta")
    p.add_argument("--beta", type=float, default=None, help="explicit backscattering [1/m]; needs --alpha")
    p.add_argument("--step-um", dest="step_um", type=float, default=None, help="diameter grid step [um]")


def _add_channel_args(p):
    p.add_argument("--n-simpson", dest="n_simpson", type=int, default=None)
    p.add_argument("--r-full", dest="r_full", type=float, default=None, help="crossover full-overlap range [m]")
    p.add_argument("--tau-h", dest="tau_h", type=float, default=None, help="half-power pulse width [s]")


def build_parser():
    parser = argparse.ArgumentParser(prog="lidarfog", description="Advection fog simulation for LiDAR scans.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", default=None, help="JSON file of option defaults; flags override it")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    # also accepted after the subcommand; SUPPRESS keeps the top-level value
    common.add_argument("--config", default=argparse.SUPPRESS, help=argparse.SUPPRESS)

    p = sub.add_parser("coeffs", parents=[common], help="fog attenuation/backscattering coefficients")
    p.add_argument("--all", action="store_true", help="every reference coefficient row")
    _add_optics_args(p)
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--output", default=None, help="file to write (default stdout)")

    p = sub.add_parser("curves", parents=[common], help="efficiency and size-distribution curves as CSV")
    p.add_argument("--output", default=None, help="directory for the CSV files")
    p.add_argument("--d-min-um", dest="d_min_um", type=float, default=None)
    p.add_argument("--d-max-um", dest="d_max_um", type=float, default=None)
    p.add_argument("--points", type=int, default=None)

    p = sub.add_parser("power", parents=[common], help="received-power curves as CSV")
    _add_optics_args(p)
    _add_channel_args(p)
    p.add_argument("--r0", type=float, default=None, help="target range [m]")
    p.add_argument("--intensity", type=float, default=None, help="clear-weather intensity of the target")
    p.add_argument("--r-min", dest="r_min", type=float, default=None)
    p.add_argument("--r-max", dest="r_max", type=float, default=None)
    p.add_argument("--points", type=int, default=None)
    p.add_argument("--output", default=None, help="file to write (default stdout)")

    p = sub.add_parser("simulate", parents=[common], help="fog every scan of a KITTI velodyne dataset")
    p.add_argument("--input", default=None, help="dataset root")
    p.add_argument("--output", default=None, help="destination root (tree is mirrored)")
    p.add_argument("--pattern", default=None, help="glob relative to --input")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None, help="parallel files (default: CPU count)")
    p.add_argument("--manifest", default=None, help="manifest path (default OUTPUT/manifest.json)")
    _add_optics_args(p)
    _add_channel_args(p)
    p.add_argument("--range-step", dest="range_step", type=float, default=None)
    p.add_argument("--noise-floor", dest="noise_floor", type=float, default=None)
    p.add_argument("--intensity-scale", dest="intensity_scale", type=float, default=None)
    p.add_argument("--no-jitter", dest="jitter", action="store_const", const=False, default=None)
    return parser


def _load_config(path):
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except OSError:
        raise
    except ValueError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    unknown = sorted(set(data) - set(DEFAULTS))
    if unknown:
        raise UsageError(f"config {path}: unknown keys {', '.join(unknown)}")
    return data


def resolve(args):
    """Merge flags over the config file over built-in defaults."""
    conf = _load_config(args.config)
    merged = {}
    for key, default in DEFAULTS.items():
        flag = getattr(args, key, None)
        merged[key] = flag if flag is not None else conf.get(key, default)
    merged["command"] = args.command
    merged["all"] = getattr(args, "all", False)
    # an explicit preset, from either source, suppresses the default --all
    merged["preset_given"] = getattr(args, "preset", None) is not None or "preset" in conf
    return argparse.Namespace(**merged)


def _quad(cfg):
    return optics.QuadratureSettings(step_um=cfg.step_um)


def _optics_from(cfg):
    if (cfg.alpha is None) != (cfg.beta is None):
        raise UsageError("--alpha and --beta must be given together")
    if cfg.alpha is not None:
        return optics.FogOptics(alpha=cfg.alpha, beta=cfg.beta, source="explicit")
    return optics.preset_optics(cfg.preset, cfg.mode, quad=_quad(cfg))


def _write_text(text, output):
    if output is None:
        sys.stdout.write(text)
        return
    path = Path(output)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def cmd_coeffs(cfg):
    if cfg.all and cfg.preset_given:
        raise UsageError("--all and --preset are mutually exclusive")
    if cfg.all or not (cfg.preset_given or cfg.alpha is not None):
        rows = optics.table_rows(quad=_quad(cfg))
    else:
        rows = [_optics_from(cfg)]
    if cfg.format == "json":
        doc = {"schema_version": MANIFEST_SCHEMA_VERSION, "rows": [r.to_dict() for r in rows]}
        text = json.dumps(doc, indent=2) + "\n"
    else:
        text = optics.to_csv(rows)
    _write_text(text, cfg.output)
    return EXIT_OK


def _csv_text(header, columns):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in zip(*columns):
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def cmd_curves(cfg):
    if cfg.output is None:
        raise UsageError("curves needs --output DIR")
    if cfg.points < 2:
        raise UsageError("--points must be >= 2")
    if not 0 < cfg.d_min_um < cfg.d_max_um:
        raise UsageError("need 0 < d_min_um < d_max_um")
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    d = np.linspace(cfg.d_min_um, cfg.d_max_um, cfg.points)
    q = mie.efficiency_table(d * UM)
    (out / "efficiency.csv").write_text(_csv_text(("D_um", "Q_ext", "Q_sca", "Q_back"), (d, *q.T)))

    for name, preset in psd.PRESETS.items():
        n = psd.density(preset.psd, d)
        (out / f"psd_{name}.csv").write_text(_csv_text(("D_um", "r_um", "N_per_cm3_um"), (d, 0.5 * d, n)))
    return EXIT_OK


def cmd_power(cfg):
    fog = _optics_from(cfg)
    pulse = PulseConfig(tau_h=cfg.tau_h)
    target = HardTarget.from_intensity(cfg.r0, cfg.intensity, pulse)
    r_max = cfg.r_max if cfg.r_max is not None else cfg.r0 + pulse.pulse_length + 5.0
    if not r_max > cfg.r_min or cfg.points < 2:
        raise UsageError("need r_max > r_min and --points >= 2")
    grid = np.linspace(cfg.r_min, r_max, cfg.points)
    table = power_table(grid, target, fog, CrossoverModel(r_full=cfg.r_full), pulse, cfg.n_simpson)
    _write_text(_csv_text(("R_m", "P_clear", "P_hard", "P_soft", "P_total"), table.T), cfg.output)
    return EXIT_OK


def file_seed(seed, rel_path):
    """Per-file seed from the run seed and the file's relative path."""
    ss = np.random.SeedSequence([int(seed), zlib.crc32(rel_path.encode())])
    return int(ss.generate_state(1, np.uint64)[0])


def _fog_config(cfg, fog):
    return fogsim.FogSimConfig(
        optics=fog,
        crossover=CrossoverModel(r_full=cfg.r_full),
        pulse=PulseConfig(tau_h=cfg.tau_h),
        range_grid_step=cfg.range_step,
        noise_floor=cfg.noise_floor,
        seed=cfg.seed,
        scatter_intensity_scale=cfg.intensity_scale,
        n_simpson=cfg.n_simpson,
        jitter=bool(cfg.jitter),
    )


def _process_file(record, in_root, out_root, base):
    rel = record.path.relative_to(in_root).as_posix()
    seed = file_seed(base.seed, rel)
    entry = {"input": rel, "output": rel, "seed": seed}
    try:
        cloud = pointcloud_io.read_kitti_bin(record.path)
        result = fogsim.augment_cloud(cloud, replace(base, seed=seed), workers=1)
        written = pointcloud_io.write_kitti_bin(out_root / rel, result.kitti_points())
    except (OSError, LidarFogError) as exc:
        entry.update(status="failed", error=str(exc))
        return entry
    s = result.summary
    entry.update(
        status="ok",
        points_in=s["points"],
        points_out=written.point_count,
        retained=s["retained"],
        scattered=s["scattered"],
        dropped=s["dropped"],
        checksum=written.checksum,
    )
    return entry


def cmd_simulate(cfg):
    start = time.perf_counter()
    if cfg.input is None or cfg.output is None:
        raise UsageError("simulate needs --input and --output")
    in_root, out_root = Path(cfg.input), Path(cfg.output)
    if not in_root.is_dir():
        raise FileNotFoundError(f"input root {in_root} does not exist or is not a directory")
    if out_root.resolve() == in_root.resolve():
        raise UsageError("--output must differ from --input")
    workers = cfg.workers if cfg.workers is not None else (os.cpu_count() or 1)
    if workers < 1:
        raise UsageError("--workers must be >= 1")

    # everything that can fail on configuration happens before output is touched
    base = _fog_config(cfg, _optics_from(cfg))
    records, skipped = pointcloud_io.enumerate_dataset(in_root, cfg.pattern)

    if workers == 1 or len(records) <= 1:
        entries = [_process_file(r, in_root, out_root, base) for r in records]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(lambda r: _process_file(r, in_root, out_root, base), records))
    for s in skipped:
        rel = s.path.relative_to(in_root).as_posix()
        entries.append({"input": rel, "output": None, "seed": file_seed(base.seed, rel), "status": "failed", "error": s.reason})
    entries.sort(key=lambda e: e["input"])

    ok = [e for e in entries if e["status"] == "ok"]
    totals = {k: sum(e[k] for e in ok) for k in ("points_in", "points_out", "retained", "scattered", "dropped")}
    totals.update(files=len(entries), files_ok=len(ok), files_failed=len(entries) - len(ok))
    manifest = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "tool": {"name": "lidarfog", "version": __version__},
        "input_root": str(in_root),
        "output_root": str(out_root),
        "pattern": cfg.pattern,
        "seed": int(base.seed),
        "workers": int(workers),
        "optics": base.optics.to_dict(),
        "config": _jsonable(base.to_dict()),
        "config_hash": base.config_hash(),
        "totals": totals,
        "files": entries,
        "elapsed_s": time.perf_counter() - start,
    }
    manifest_path = Path(cfg.manifest) if cfg.manifest else out_root / "manifest.json"
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    return EXIT_PARTIAL if totals["files_failed"] else EXIT_OK


def _jsonable(obj):
    return json.loads(json.dumps(obj, default=repr))


COMMANDS = {"coeffs": cmd_coeffs, "curves": cmd_curves, "power": cmd_power, "simulate": cmd_simulate}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        return COMMANDS[cfg.command](cfg)
    except (UsageError, PresetLookupError, DomainError) as exc:
        print(f"lidarfog {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AccuracyError as exc:
        print(f"lidarfog {args.command}: accuracy error: {exc}", file=sys.stderr)
        return EXIT_ACCURACY
    except (OSError, MalformedFileError) as exc:
        print(f"lidarfog {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
