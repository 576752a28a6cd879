"""Collapse of a split packet onto one branch under a sharp current measurement.

A 2 nm packet is sent through the reference device until its reflected and
transmitted parts have separated.  The split state is then measured ten
times per trajectory with sigma_k = k0/4.  The first reading selects a branch
and all later readings keep its sign.

    python demos/collapse.py [--trajectories 100]
"""

import argparse

import numpy as np

from weakammeter.config import load_preset
from weakammeter.grid import WavepacketSpec, gaussian_packet
from weakammeter.povm import MeasurementConfig
from weakammeter.potentials import make_double_barrier
from weakammeter.propagator import evolve
from weakammeter.trajectory import region_masses, run_trajectory
from weakammeter.units import nm


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--trajectories", type=int, default=100)
    args = p.parse_args()

    cfg = load_preset()
    tau = cfg.measurement.tau
    spec = WavepacketSpec(-nm(15), nm(2), cfg.packet.k0, cfg.mass)
    prof = make_double_barrier(cfg.grid, cfg.device)
    n_sep = int(np.ceil(nm(45) / spec.velocity / tau))
    split = evolve(gaussian_packet(cfg.grid, spec), prof, n_sep * tau, cfg.stepper.dt)
    refl, _, trans = region_masses(split, cfg.device.device_start, cfg.device.device_end)
    print(f"before measuring: R = {refl:.3f}, T = {trans:.3f}")

    meas = MeasurementConfig(spec.k0 / 4, tau, cfg.measurement.L_x, seed=cfg.measurement.seed)
    rows = []
    for i in range(args.trajectories):
        rec = run_trajectory(split, prof, cfg.stepper, meas, 10 * tau, stream=i)
        rows.append(np.sign(rec.values))
        if i < 8:
            print(f"trajectory {i}: " + "".join("+" if s > 0 else "-" for s in rows[-1])
                  + f"   T after = {rec.transmitted:.3f}")
    signs = np.array(rows)
    consistent = np.mean(np.all(signs == signs[:, [0]], axis=1))
    print(f"reflected branch chosen in {np.mean(signs[:, 0] > 0):.2f} of trajectories "
          f"(R = {refl:.3f}); sign-consistent trajectories: {consistent:.2f}")


if __name__ == "__main__":
    main()
