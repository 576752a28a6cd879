"""CSV and metadata writers.

Floats are written with ``repr`` so that every value survives a round trip
and identical runs give byte-identical files.
"""

import csv
from pathlib import Path

import tomli_w

from . import __version__
from .config import to_dict
from .units import HARTREE_PER_EV, AU_TIME_PER_FS, BOHR_PER_NM, AU_VOLT_PER_VOLT


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def write_csv(path, header, rows):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path):
    """(header, rows as lists of floats)."""
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [[float(v) for v in row] for row in r]


def provenance_config(cfg):
    """Resolved config without execution-only settings (output dir, thread count)."""
    doc = to_dict(cfg)
    doc.pop("output", None)
    doc["ensemble"].pop("threads", None)
    return doc


def write_metadata(out_dir, command, cfg, extra=None):
    doc = {"tool": "weakammeter", "version": __version__, "command": command}
    if extra:
        doc["results"] = extra
    doc["config"] = provenance_config(cfg)
    path = Path(out_dir) / "metadata.toml"
    path.write_text(tomli_w.dumps(doc))
    return path


def write_config(out_dir, cfg):
    """Re-runnable config (atomic units) next to the artifacts."""
    path = Path(out_dir) / "config.toml"
    path.write_text(tomli_w.dumps(provenance_config(cfg)))
    return path


# --- per-command tables -------------------------------------------------------

def write_trajectory(out_dir, record):
    out_dir = Path(out_dir)
    values = record.values if record.measured else [float("nan")] * len(record.times)
    rows = [(t, t / AU_TIME_PER_FS, v, e) for t, v, e in zip(record.times, values, record.expectations)]
    write_csv(out_dir / "trajectory.csv", ["time_au", "time_fs", "outcome_au", "expectation_au"], rows)
    write_csv(out_dir / "masses.csv", ["time_au", "reflected", "in_device", "transmitted"],
              record.masses.tolist())
    for i, snap in enumerate(record.snapshots):
        x = snap.grid.x
        rows = zip(x, x / BOHR_PER_NM, snap.density, snap.psi.real, snap.psi.imag)
        write_csv(out_dir / f"snapshot_{i:03d}.csv",
                  ["x_bohr", "x_nm", "density", "re_psi", "im_psi"], rows)
    return out_dir


def write_ensemble(out_dir, result):
    out_dir = Path(out_dir)
    rows = zip(result.times, result.times / AU_TIME_PER_FS, result.mean, result.stderr)
    write_csv(out_dir / "ensemble.csv", ["time_au", "time_fs", "mean_au", "stderr_au"], rows)
    rows = [(r.stream, r.reflected, r.in_device, r.transmitted) for r in result.records]
    write_csv(out_dir / "trajectories.csv", ["stream", "reflected", "in_device", "transmitted"], rows)
    return out_dir


def write_iv(out_dir, points, name="iv.csv"):
    rows = [(p.bias / AU_VOLT_PER_VOLT, p.bias, p.current, p.stderr, p.n_trajectories,
             p.transmitted, p.t_start, p.t_stop, p.measured) for p in points]
    return write_csv(Path(out_dir) / name,
                     ["bias_V", "bias_au", "current_au", "stderr_au", "n_trajectories",
                      "transmitted", "t_start_au", "t_stop_au", "measured"], rows)


def write_transmission(out_dir, energies, T, R, T_grid):
    rows = zip(energies / HARTREE_PER_EV, energies, T, R, T_grid)
    return write_csv(Path(out_dir) / "transmission.csv",
                     ["energy_eV", "energy_au", "T", "R", "T_grid"], rows)
