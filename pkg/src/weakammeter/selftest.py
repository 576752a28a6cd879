"""Fast invariant checks on small grids, run by ``weakammeter selftest``.

Each check returns ``(name, passed, detail)``; the whole suite takes a few
seconds.
"""

import numpy as np

from .grid import (Wavefunction, WavepacketSpec, from_momentum, gaussian_packet, make_grid,
                   to_momentum)
from .potentials import (DeviceSpec, make_double_barrier, rectangular_barrier_transmission,
                         transmission_piecewise, transmission_transfer_matrix, zero_potential)
from .povm import (MeasurementConfig, apply_weak_operator, expectation_current, gamma_q_volume,
                   povm_completeness_check)
from .propagator import Propagator, StepperConfig, energy
from .trajectory import outcome_rng, run_trajectory
from .units import ev, nm


def _small_setup():
    grid = make_grid(1024, -400.0, 400.0)
    spec = WavepacketSpec(-150.0, 20.0, 1.0)
    return grid, spec, gaussian_packet(grid, spec)


def check_parseval():
    grid, _, wf = _small_setup()
    g = to_momentum(wf)
    err = abs(np.sum(np.abs(g) ** 2) * grid.dk - np.sum(np.abs(wf.psi) ** 2) * grid.dx)
    back = np.max(np.abs(from_momentum(grid, g).psi - wf.psi))
    return "spectral transform: Parseval and round trip", err < 1e-10 and back < 1e-12, \
        f"parseval {err:.2e}, round trip {back:.2e}"


def check_norm():
    grid, _, wf = _small_setup()
    device = DeviceSpec(0.3, 3.0, 5.0, 0.0)
    prof = make_double_barrier(grid, device)
    psi = wf.psi.copy()
    Propagator(prof, 0.05).advance(psi, 0.0, 2000)
    drift = abs(np.sum(np.abs(psi) ** 2) * grid.dx - 1.0)
    return "propagator: norm drift over 2000 steps", drift < 1e-10, f"{drift:.2e}"


def check_free_packet():
    grid, spec, wf = _small_setup()
    dt, steps = 0.05, 1000
    psi = wf.psi.copy()
    Propagator(zero_potential(grid), dt).advance(psi, 0.0, steps)
    t = dt * steps
    d = np.abs(psi) ** 2 * grid.dx
    mean = np.sum(d * grid.x)
    width = np.sqrt(np.sum(d * (grid.x - mean) ** 2))
    exact_mean = spec.x0 + spec.k0 * t
    exact_width = np.sqrt(spec.sigma_x ** 2 + t ** 2 / (4 * spec.sigma_x ** 2))
    err = max(abs(mean / exact_mean - 1), abs(width / exact_width - 1))
    return "propagator: free Gaussian centre and width", err < 1e-6, f"rel err {err:.2e}"


def check_energy():
    grid, _, wf = _small_setup()
    prof = make_double_barrier(grid, DeviceSpec(0.3, 3.0, 5.0, 0.0))
    e0 = energy(wf, prof)
    psi = wf.psi.copy()
    Propagator(prof, 0.05).advance(psi, 0.0, 6000)
    e1 = energy(Wavefunction(grid, psi), prof)
    rel = abs(e1 / e0 - 1)
    return "propagator: energy before/after scattering", rel < 1e-8, f"rel drift {rel:.2e}"


def check_transfer_matrix():
    E = np.linspace(ev(0.01), ev(0.49), 200)
    device = DeviceSpec(ev(0.5), nm(0.4), nm(0.4), 0.0)
    T, R = transmission_transfer_matrix(device, 0.0, E)
    unit = np.max(np.abs(T + R - 1))
    T1, _ = transmission_piecewise(E, [0.0, nm(0.4)], [ev(0.5)])
    closed = np.max(np.abs(T1 - rectangular_barrier_transmission(E, ev(0.5), nm(0.4))))
    return "transfer matrix: T + R = 1 and single-barrier closed form", \
        unit < 1e-10 and closed < 1e-10, f"|T+R-1| {unit:.2e}, closed form {closed:.2e}"


def check_povm():
    grid, _, wf = _small_setup()
    cfg = MeasurementConfig(0.05, 1.0, 100.0)
    comp = povm_completeness_check(cfg, grid.k)
    out = apply_weak_operator(wf, expectation_current(wf, 100.0), cfg)
    nerr = abs(out.norm() - 1)
    return "POVM: completeness and post-measurement norm", comp < 1e-10 and nerr < 1e-10, \
        f"completeness {comp:.2e}, norm {nerr:.2e}"


def check_current_forms():
    grid, _, wf = _small_setup()
    a = expectation_current(wf, 100.0)
    b = gamma_q_volume(wf, 100.0)
    rel = abs(a - b) / abs(a)
    return "current: momentum expectation equals volume form", rel < 1e-6, f"rel {rel:.2e}"


def check_determinism():
    grid, _, wf = _small_setup()
    prof = make_double_barrier(grid, DeviceSpec(0.3, 3.0, 5.0, 0.0))
    meas = MeasurementConfig(0.2, 0.5, 100.0, seed=7)
    st = StepperConfig.from_period(0.5, 5)
    a = run_trajectory(wf, prof, st, meas, 50.0, stream=3)
    b = run_trajectory(wf, prof, st, meas, 50.0, rng=outcome_rng(7, 3))
    same = np.array_equal(a.values, b.values) and np.array_equal(a.final_state.psi, b.final_state.psi)
    return "trajectory: same seed and stream give identical records", same, ""


CHECKS = (check_parseval, check_norm, check_free_packet, check_energy, check_transfer_matrix,
          check_povm, check_current_forms, check_determinism)


def run_selftest():
    results = []
    for check in CHECKS:
        try:
            name, ok, detail = check()
        except Exception as exc:  # a crashing check is a failing check
            name, ok, detail = check.__name__, False, f"{type(exc).__name__}: {exc}"
        results.append((name, bool(ok), detail))
    return results
