"""Measured trajectories: unitary evolution interleaved with Gaussian current POVMs.

Every ``tau`` the state is transformed to momentum space, an ammeter reading
is drawn from its outcome distribution and the Gaussian filter centred on
that reading is applied.  Each trajectory owns a counter-based random stream
(Philox keyed by ``(seed, stream)``), so records do not depend on how the
ensemble is scheduled across threads.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List

import numpy as np
from scipy import fft as sfft
from scipy.special import ndtri

from .grid import Grid, Wavefunction, WavepacketSpec, gaussian_packet, psi_to_momentum
from .potentials import DeviceSpec, make_double_barrier
from .povm import (CurrentOutcome, ImpossibleOutcomeError, MeasurementConfig, UNDERFLOW,
                   current_eigenvalue, displacement_term)
from .propagator import Propagator, StepperConfig, n_steps


def outcome_rng(seed, stream=0):
    """Independent Philox generator for trajectory ``stream`` of base ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream)])))


@dataclass
class Snapshot:
    time: float
    psi: np.ndarray
    grid: Grid

    @property
    def density(self):
        return np.abs(self.psi) ** 2

    @property
    def momentum_density(self):
        return np.abs(psi_to_momentum(self.grid, self.psi)) ** 2


@dataclass
class TrajectoryRecord:
    """Time series of one (possibly unmeasured) trajectory.

    ``expectations`` holds the pre-measurement expectation of the total
    current at every measurement time; ``outcomes`` the sampled readings
    (empty when measurement is disabled).  ``masses`` rows are
    (time, reflected, in_device, transmitted).
    """

    times: np.ndarray
    outcomes: List[CurrentOutcome]
    expectations: np.ndarray
    final_state: Wavefunction
    masses: np.ndarray
    snapshots: List[Snapshot] = field(default_factory=list)
    seed: int = 0
    stream: int = 0
    measured: bool = True

    @property
    def values(self):
        return np.array([o.value for o in self.outcomes])

    @property
    def readings(self):
        """Instrument readings if measured, otherwise the expectations."""
        return self.values if self.measured else self.expectations

    @property
    def reflected(self):
        return float(self.masses[-1, 1])

    @property
    def in_device(self):
        return float(self.masses[-1, 2])

    @property
    def transmitted(self):
        return float(self.masses[-1, 3])


def region_masses(wf, x_start, x_end):
    """(reflected, in_device, transmitted) probabilities around [x_start, x_end)."""
    d = np.abs(wf.psi) ** 2 * wf.grid.dx
    x = wf.grid.x
    left = x < x_start
    right = x >= x_end
    refl = float(d[left].sum())
    trans = float(d[right].sum())
    return refl, float(d.sum()) - refl - trans, trans


def run_trajectory(psi0, profile, stepper, measurement, t_end, *, measure=True,
                   stream=0, rng=None, snapshot_times=(), t0=0.0, mask=None):
    """Alternate ``tau`` of unitary evolution with one measurement until ``t_end``.

    Parameters
    ----------
    psi0 : Wavefunction
        Normalised initial state (not modified).
    profile : PotentialProfile
    stepper : StepperConfig
        ``measurement.tau`` must be an integer multiple of ``stepper.dt``.
    measurement : MeasurementConfig
        Also sets the recording cadence when ``measure`` is False.
    t_end : float
        Duration, an integer multiple of ``tau``.
    measure : bool
        If False the same cadence records expectations only and the state
        evolves unitarily.
    stream : int
        Random stream index under ``measurement.seed``; ignored if ``rng`` is given.
    snapshot_times : sequence of float
        Times (relative to ``t0``) at which to store the state, rounded to
        the nearest step.  A snapshot coinciding with a measurement is taken
        after it.
    """
    grid = psi0.grid
    dt = stepper.dt
    tau = measurement.tau
    substeps = n_steps(tau, dt, "tau")
    n_meas = n_steps(t_end, tau, "t_end")
    if substeps == 0:
        raise ValueError("tau must be at least one step")
    prop = Propagator(profile, dt, psi0.mass, mask)
    if rng is None:
        rng = outcome_rng(measurement.seed, stream)

    snap_steps = sorted({int(round(t / dt)) for t in snapshot_times})
    total_steps = n_meas * substeps
    if snap_steps and (snap_steps[0] < 0 or snap_steps[-1] > total_steps):
        raise ValueError("snapshot times must lie within [0, t_end]")
    boundaries = sorted(set(snap_steps) | {m * substeps for m in range(n_meas + 1)})

    k = grid.k
    gscale = grid.dx ** 2 / (2.0 * np.pi) * grid.dk
    eigen = current_eigenvalue(k, measurement.L_x, psi0.mass)
    sigma_i = measurement.sigma_current(psi0.mass)
    x_start, x_end = profile.device_start, profile.device_end

    psi = psi0.psi.copy()
    times = np.empty(n_meas)
    expectations = np.empty(n_meas)
    outcomes = []
    snapshots = []
    masses = []
    snap_set = set(snap_steps)

    def record_masses(t):
        masses.append((t,) + region_masses(Wavefunction(grid, psi, psi0.mass), x_start, x_end))

    record_masses(t0)
    if 0 in snap_set:
        snapshots.append(Snapshot(t0, psi.copy(), grid))

    done = 0
    for target in boundaries[1:]:
        prop.advance(psi, t0 + done * dt, target - done)
        done = target
        t = t0 + done * dt
        if done % substeps == 0:
            m = done // substeps - 1
            # raw DFT; |g|^2 = w * gscale and the phase of g cancels on the way back
            F = sfft.fft(psi)
            w = F.real ** 2 + F.imag ** 2
            norm_sq = w.sum() * gscale
            disp = 0.0
            if profile.time_dependent:
                disp = displacement_term(measurement.epsilon, measurement.L_x, profile.dbias_dt(t))
            times[m] = t
            expectations[m] = float(np.dot(eigen, w) * gscale / norm_sq) + disp
            if measure:
                cdf = np.cumsum(w)
                u = rng.random() * cdf[-1]
                idx = min(int(np.searchsorted(cdf, u, side="right")), k.size - 1)
                value = eigen[idx] + sigma_i / np.sqrt(2.0) * rng.standard_normal()
                filt = np.exp(-((eigen - value) ** 2) / (2.0 * sigma_i ** 2))
                filtered = float(np.dot(w, filt * filt) * gscale)
                if not filtered > UNDERFLOW:
                    raise ImpossibleOutcomeError(
                        f"filtered norm^2 {filtered:.3g} underflows at t = {t:.6g}")
                F *= filt * (1.0 / np.sqrt(filtered))
                psi[:] = sfft.ifft(F, overwrite_x=True)
                outcomes.append(CurrentOutcome(float(value) + disp, float(t)))
        if done in snap_set:
            snapshots.append(Snapshot(t, psi.copy(), grid))
            record_masses(t)
    if not masses or masses[-1][0] != t0 + done * dt:
        record_masses(t0 + done * dt)

    return TrajectoryRecord(
        times=times,
        outcomes=outcomes,
        expectations=expectations,
        final_state=Wavefunction(grid, psi, psi0.mass),
        masses=np.array(masses),
        snapshots=snapshots,
        seed=int(measurement.seed),
        stream=int(stream),
        measured=measure,
    )


@dataclass
class EnsembleResult:
    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    records: List[TrajectoryRecord]

    @property
    def n_trajectories(self):
        return len(self.records)


def _mean_stderr(samples):
    # samples: (M, T) in fixed stream order, so the reduction is schedule independent
    samples = np.asarray(samples, dtype=float)
    mean = samples.mean(axis=0)
    if samples.shape[0] > 1:
        stderr = samples.std(axis=0, ddof=1) / np.sqrt(samples.shape[0])
    else:
        stderr = np.full_like(mean, np.nan)
    return mean, stderr


def run_ensemble(psi0, profile, stepper, measurement, t_end, n_trajectories, *,
                 measure=True, threads=1, first_stream=0, **kwargs):
    """Run ``n_trajectories`` independent streams and average their readings.

    Stream ``i`` uses seed ``(measurement.seed, first_stream + i)``; results
    are gathered in stream order whatever the thread count.
    """
    if n_trajectories < 1:
        raise ValueError("need at least one trajectory")

    def one(i):
        return run_trajectory(psi0, profile, stepper, measurement, t_end,
                              measure=measure, stream=first_stream + i, **kwargs)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(one, range(n_trajectories)))
    else:
        records = [one(i) for i in range(n_trajectories)]
    mean, stderr = _mean_stderr([r.readings for r in records])
    return EnsembleResult(records[0].times.copy(), mean, stderr, records)


# --- I-V characteristics ------------------------------------------------------

@dataclass(frozen=True)
class TransportSetup:
    """Everything needed to send one packet through a biased device."""

    grid: Grid
    device: DeviceSpec
    packet: WavepacketSpec
    stepper: StepperConfig
    measurement: MeasurementConfig

    def profile(self, bias=0.0):
        return make_double_barrier(self.grid, self.device, bias)

    def initial_state(self):
        return gaussian_packet(self.grid, self.packet)


@dataclass(frozen=True)
class IVPoint:
    bias: float
    current: float
    stderr: float
    n_trajectories: int
    transmitted: float
    t_start: float
    t_stop: float
    measured: bool


def transit_window(packet, device, tau, coverage=0.99):
    """Measurement-time window during which ``coverage`` of the packet reaches the device.

    Uses free flight at the group velocity: the window opens when the leading
    (1 - coverage)/2 quantile reaches the device entrance and closes when the
    trailing quantile has reached its exit.  Returns ``(t_start, t_stop)``,
    both multiples of ``tau``.
    """
    if not 0 < coverage < 1:
        raise ValueError("coverage must lie in (0, 1)")
    v = packet.velocity
    if v <= 0:
        raise ValueError("the packet must move towards the device")
    z = float(ndtri(0.5 + 0.5 * coverage))
    t_arrive = (device.device_start - packet.x0 - z * packet.sigma_x) / v
    t_leave = (device.device_end - packet.x0 + z * packet.sigma_x) / v
    start = max(1, int(np.ceil(t_arrive / tau)))
    stop = max(start, int(np.ceil(t_leave / tau)))
    return start * tau, stop * tau


def _window_mean(record, t_start, t_stop):
    sel = (record.times >= t_start - 1e-9) & (record.times <= t_stop + 1e-9)
    return float(np.mean(record.readings[sel]))


def iv_point(setup, bias, *, measure=True, n_trajectories=200, threads=1, coverage=0.99):
    profile = setup.profile(bias)
    psi0 = setup.initial_state()
    t_start, t_stop = transit_window(setup.packet, setup.device, setup.measurement.tau, coverage)
    m = n_trajectories if measure else 1
    ens = run_ensemble(psi0, profile, setup.stepper, setup.measurement, t_stop, m,
                       measure=measure, threads=threads)
    per_traj = np.array([_window_mean(r, t_start, t_stop) for r in ens.records])
    current = float(per_traj.mean())
    stderr = float(per_traj.std(ddof=1) / np.sqrt(m)) if m > 1 else 0.0
    transmitted = float(np.mean([r.transmitted for r in ens.records]))
    return IVPoint(float(bias), current, stderr, m, transmitted, t_start, t_stop, measure)


def iv_sweep(biases, setup, *, measure=True, n_trajectories=200, threads=1, coverage=0.99):
    """Window-averaged current at each bias.

    With ``measure=False`` a single unitary run per bias is averaged
    (the standard error is then zero).
    """
    biases = list(biases)
    if not biases:
        raise ValueError("bias list is empty")
    return [iv_point(setup, b, measure=measure, n_trajectories=n_trajectories,
                     threads=threads, coverage=coverage) for b in biases]


def local_extrema(values):
    """Indices of local maxima and minima of a sampled curve on a closed interval.

    A sample is a local maximum if no neighbour exceeds it and at least one
    neighbour is strictly smaller (endpoints have a single neighbour);
    minima likewise.
    """
    y = np.asarray(values, dtype=float)
    n = y.size
    maxima, minima = [], []
    for i in range(n):
        nb = [y[j] for j in (i - 1, i + 1) if 0 <= j < n]
        if not nb:
            continue
        if all(y[i] >= v for v in nb) and any(y[i] > v for v in nb):
            maxima.append(i)
        if all(y[i] <= v for v in nb) and any(y[i] < v for v in nb):
            minima.append(i)
    return maxima, minima


def ndc_pair(currents):
    """(i_peak, i_valley) of the deepest drop of |I| from a local maximum to a later local minimum.

    Biases are assumed sorted in increasing order.  Returns ``None`` when
    |I| never falls between a local maximum and a later local minimum, i.e.
    the curve has no negative-differential-conductance region on this grid.
    """
    y = np.abs(np.asarray(currents, dtype=float))
    maxima, minima = local_extrema(y)
    best = None
    for i in maxima:
        for j in minima:
            if j > i and y[j] < y[i] and y[j] > 0:
                r = y[i] / y[j]
                if best is None or r > best[0]:
                    best = (r, i, j)
    return None if best is None else best[1:]


def peak_to_valley(currents):
    """|I_peak| / |I_valley| for the pair from :func:`ndc_pair`; 1.0 without an NDC region."""
    pair = ndc_pair(currents)
    if pair is None:
        return 1.0
    y = np.abs(np.asarray(currents, dtype=float))
    return float(y[pair[0]] / y[pair[1]])
