"""Probability density with and without the ammeter at two instants.

Runs the reference preset once unmeasured and once measured (stream 0),
writes ``density.csv`` (x in nm, both densities at each snapshot) and, when
matplotlib is available, ``snapshots.png``.

    python demos/snapshots.py [--out demo_out/snapshots] [--stream N]
"""

import numpy as np

from _common import out_dir, parser, pyplot
from weakammeter.config import load_preset
from weakammeter.grid import fidelity, gaussian_packet
from weakammeter.io import write_csv
from weakammeter.potentials import make_double_barrier
from weakammeter.trajectory import run_trajectory
from weakammeter.units import AU_TIME_PER_FS, BOHR_PER_NM


def main():
    p = parser(__doc__.splitlines()[0], "demo_out/snapshots")
    p.add_argument("--stream", type=int, default=0)
    args = p.parse_args()
    out = out_dir(args.out)

    cfg = load_preset()
    psi0 = gaussian_packet(cfg.grid, cfg.packet)
    prof = make_double_barrier(cfg.grid, cfg.device, cfg.bias)
    runs = {measure: run_trajectory(psi0, prof, cfg.stepper, cfg.measurement, cfg.t_end,
                                    measure=measure, stream=args.stream,
                                    snapshot_times=cfg.snapshot_times)
            for measure in (False, True)}
    x_nm = cfg.grid.x / BOHR_PER_NM
    cols, header = [x_nm], ["x_nm"]
    for i, t in enumerate(cfg.snapshot_times):
        tag = f"{t / AU_TIME_PER_FS:g}fs"
        for measure, label in ((False, "unmeasured"), (True, "measured")):
            cols.append(runs[measure].snapshots[i].density)
            header.append(f"{label}_{tag}")
    write_csv(out / "density.csv", header, np.column_stack(cols).tolist())

    f = fidelity(runs[True].final_state, runs[False].final_state)
    print(f"final-state fidelity measured vs unmeasured: {f:.6f}")
    print(f"transmitted: unmeasured {runs[False].transmitted:.4f}, measured {runs[True].transmitted:.4f}")

    plt = pyplot()
    if plt is None:
        return
    fig, axes = plt.subplots(len(cfg.snapshot_times), 1, figsize=(7, 5), sharex=True)
    for i, ax in enumerate(np.atleast_1d(axes)):
        ax.plot(x_nm, cols[1 + 2 * i], label="unmeasured")
        ax.plot(x_nm, cols[2 + 2 * i], "--", label="measured")
        ax.axvspan(cfg.device.device_start / BOHR_PER_NM, cfg.device.device_end / BOHR_PER_NM,
                   color="0.85")
        ax.set_ylabel(f"|psi|^2 at {header[1 + 2 * i].split('_')[1]}")
        ax.legend()
    ax.set_xlabel("x (nm)")
    fig.tight_layout()
    fig.savefig(out / "snapshots.png", dpi=120)


if __name__ == "__main__":
    main()
