"""Command-line entry point.

    weakammeter run|ensemble|sweep|transmission|selftest --config PATH
                [--out DIR] [--seed U64] [--threads N]

``--config`` also accepts ``preset:<name>`` for a bundled preset.  Every
command writes its tables plus ``metadata.toml`` (version, command, resolved
config) and ``config.toml`` (the same config, re-runnable) into the output
directory.  On failure a JSON error record goes to stderr and to
``error.json`` in the output directory, and the exit status is nonzero.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .config import ConfigError, load_config, preset_path
from .grid import gaussian_packet
from .potentials import make_double_barrier, transmission_on_grid, transmission_transfer_matrix
from .selftest import run_selftest
from .trajectory import TransportSetup, iv_sweep, run_ensemble, run_trajectory
from .units import AU_VOLT_PER_VOLT, HARTREE_PER_EV

COMMANDS = ("run", "ensemble", "sweep", "transmission", "selftest")

EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser():
    p = argparse.ArgumentParser(
        prog="weakammeter",
        description="Wavepacket transport through a double barrier under sequential "
                    "weak measurement of the total current.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True,
                   help="TOML config file, or preset:<name> (e.g. preset:rtd_reference)")
    p.add_argument("--out", help="output directory (overrides [output] dir)")
    p.add_argument("--seed", type=_u64, help="base seed (overrides [measurement] seed)")
    p.add_argument("--threads", type=_positive, help="worker threads for ensembles")
    return p


def _resolve(args):
    src = args.config
    path = preset_path(src.split(":", 1)[1]) if src.startswith("preset:") else Path(src)
    if not path.exists():
        raise ConfigError(f"config file {str(path)!r} not found")
    cfg = load_config(path)
    return cfg.with_overrides(seed=args.seed, threads=args.threads, out_dir=args.out)


def _setup(cfg, stepper=None):
    return TransportSetup(cfg.grid, cfg.device, cfg.packet, stepper or cfg.stepper, cfg.measurement)


def cmd_run(cfg, out):
    profile = make_double_barrier(cfg.grid, cfg.device, cfg.bias)
    rec = run_trajectory(gaussian_packet(cfg.grid, cfg.packet), profile, cfg.stepper,
                         cfg.measurement, cfg.t_end, measure=cfg.measure, stream=0,
                         snapshot_times=cfg.snapshot_times)
    io.write_trajectory(out, rec)
    return {"transmitted": rec.transmitted, "reflected": rec.reflected,
            "n_measurements": len(rec.times)}


def cmd_ensemble(cfg, out):
    profile = make_double_barrier(cfg.grid, cfg.device, cfg.bias)
    res = run_ensemble(gaussian_packet(cfg.grid, cfg.packet), profile, cfg.stepper,
                       cfg.measurement, cfg.t_end, cfg.n_trajectories,
                       measure=cfg.measure, threads=cfg.threads)
    io.write_ensemble(out, res)
    return {"n_trajectories": res.n_trajectories,
            "mean_transmitted": float(np.mean([r.transmitted for r in res.records]))}


def cmd_sweep(cfg, out):
    pts = iv_sweep(cfg.sweep.biases, _setup(cfg, cfg.sweep_stepper()), measure=cfg.measure,
                   n_trajectories=cfg.n_trajectories, threads=cfg.threads,
                   coverage=cfg.sweep.coverage)
    io.write_iv(out, pts)
    return {"n_biases": len(pts)}


def cmd_transmission(cfg, out):
    bias = cfg.bias if cfg.transmission.bias is None else cfg.transmission.bias
    E = cfg.transmission.energies()
    T, R = transmission_transfer_matrix(cfg.device, bias, E, cfg.mass)
    Tg, _ = transmission_on_grid(make_double_barrier(cfg.grid, cfg.device, bias), E, cfg.mass)
    io.write_transmission(out, E, T, R, Tg)
    i = int(np.argmax(T))
    return {"bias_V": bias / AU_VOLT_PER_VOLT, "peak_energy_eV": float(E[i] / HARTREE_PER_EV),
            "peak_T": float(T[i])}


def cmd_selftest(cfg, out):
    results = run_selftest()
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}".rstrip())
    io.write_csv(Path(out) / "selftest.csv", ["check", "passed", "detail"], results)
    failed = [name for name, ok, _ in results if not ok]
    if failed:
        raise RuntimeError(f"{len(failed)} selftest check(s) failed: {', '.join(failed)}")
    return {"checks": len(results)}


HANDLERS = {"run": cmd_run, "ensemble": cmd_ensemble, "sweep": cmd_sweep,
            "transmission": cmd_transmission, "selftest": cmd_selftest}


def _error(kind, exc, command, out=None):
    record = {"error": kind, "type": type(exc).__name__, "message": str(exc), "command": command}
    key = getattr(exc, "key", None)
    if key:
        record["key"] = key
    text = json.dumps(record, sort_keys=True)
    print(text, file=sys.stderr)
    if out is not None:
        try:
            Path(out).mkdir(parents=True, exist_ok=True)
            (Path(out) / "error.json").write_text(text + "\n")
        except OSError:
            pass


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve(args)
    except (ConfigError, OSError) as exc:
        _error("config", exc, args.command, args.out)
        return EXIT_CONFIG
    out = Path(cfg.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        results = HANDLERS[args.command](cfg, out)
        io.write_config(out, cfg)
        io.write_metadata(out, args.command, cfg, results)
    except Exception as exc:
        _error("runtime", exc, args.command, out)
        return EXIT_RUNTIME
    return 0


if __name__ == "__main__":
    sys.exit(main())
