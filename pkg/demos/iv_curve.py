"""Unmeasured and measured I-V characteristics of the reference device.

Writes ``iv_unmeasured.csv`` and ``iv_measured.csv`` (same columns as the
``weakammeter sweep`` command), prints the peak-to-valley ratios and, when
matplotlib is available, saves ``iv.png``.  The default 200 trajectories per
bias take about half an hour on one core; use ``--trajectories`` for a
quick look.

    python demos/iv_curve.py [--out demo_out/iv] [--trajectories 200] [--threads 1]
"""

import numpy as np

from _common import out_dir, parser, pyplot
from weakammeter.config import load_preset
from weakammeter.io import write_iv
from weakammeter.trajectory import TransportSetup, iv_sweep, ndc_pair, peak_to_valley
from weakammeter.units import AU_VOLT_PER_VOLT


def main():
    p = parser(__doc__.splitlines()[0], "demo_out/iv")
    p.add_argument("--trajectories", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    args = p.parse_args()
    out = out_dir(args.out)

    cfg = load_preset()
    m_traj = args.trajectories or cfg.n_trajectories
    setup = TransportSetup(cfg.grid, cfg.device, cfg.packet, cfg.sweep_stepper(), cfg.measurement)
    kw = dict(threads=args.threads, coverage=cfg.sweep.coverage)
    free = iv_sweep(cfg.sweep.biases, setup, measure=False, **kw)
    meas = iv_sweep(cfg.sweep.biases, setup, measure=True, n_trajectories=m_traj, **kw)
    write_iv(out, free, "iv_unmeasured.csv")
    write_iv(out, meas, "iv_measured.csv")

    v = np.array(cfg.sweep.biases) / AU_VOLT_PER_VOLT
    # electron current is negative; plot its magnitude
    i0 = -np.array([pt.current for pt in free])
    i1 = -np.array([pt.current for pt in meas])
    se = np.array([pt.stderr for pt in meas])
    for name, cur in (("unmeasured", i0), ("measured", i1)):
        print(f"{name:>10}: PVR {peak_to_valley(cur):.2f}, NDC pair {ndc_pair(cur)}")

    plt = pyplot()
    if plt is None:
        return
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(v, i0, "o-", label="unmeasured")
    ax.errorbar(v, i1, yerr=se, fmt="s--", capsize=3, label=f"measured (M = {m_traj})")
    ax.set_xlabel("bias (V)")
    ax.set_ylabel("|I| (a.u.)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out / "iv.png", dpi=120)


if __name__ == "__main__":
    main()
