"""Double-barrier device potentials and a transfer-matrix transmission oracle.

Sign convention: a positive bias ``V`` lowers the drain (right) side, so the
potential energy is 0 left of the device, drops linearly across it and is
``-V`` beyond it.  Electrons injected from the left are accelerated towards
the drain.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .grid import Grid


@dataclass(frozen=True)
class DeviceSpec:
    """Two rectangular barriers of equal height/width around a well.

    ``well_width = 0`` merges the barriers into a single one of width
    ``2 * barrier_width``.
    """

    barrier_height: float
    barrier_width: float
    well_width: float
    device_start: float

    def __post_init__(self):
        if not self.barrier_height > 0:
            raise ValueError("barrier_height must be positive")
        if not self.barrier_width > 0:
            raise ValueError("barrier_width must be positive")
        if not self.well_width >= 0:
            raise ValueError("well_width must be non-negative")

    @property
    def length(self):
        return 2.0 * self.barrier_width + self.well_width

    @property
    def device_end(self):
        return self.device_start + self.length

    def segments(self):
        """Edges and heights of the zero-bias piecewise-constant profile."""
        s, b, w = self.device_start, self.barrier_width, self.well_width
        if w == 0:
            return np.array([s, s + 2 * b]), np.array([self.barrier_height])
        edges = np.array([s, s + b, s + b + w, s + 2 * b + w])
        heights = np.array([self.barrier_height, 0.0, self.barrier_height])
        return edges, heights


@dataclass(frozen=True)
class BiasRamp:
    """Bias rising linearly from ``v_start`` to ``v_end`` over ``[0, t_ramp]``."""

    v_start: float
    v_end: float
    t_ramp: float

    def __post_init__(self):
        if not self.t_ramp > 0:
            raise ValueError("t_ramp must be positive")

    def value(self, t):
        frac = min(max(t / self.t_ramp, 0.0), 1.0)
        return self.v_start + (self.v_end - self.v_start) * frac

    def slope(self, t):
        if 0.0 <= t < self.t_ramp:
            return (self.v_end - self.v_start) / self.t_ramp
        return 0.0


@dataclass(frozen=True)
class PotentialProfile:
    """Potential energy on a grid: static barriers plus a (possibly ramped) bias drop.

    ``barriers`` holds the zero-bias samples and ``drop`` the dimensionless
    shape of the bias drop (0 at the source side, 1 at the drain side).
    """

    grid: Grid
    barriers: np.ndarray
    drop: np.ndarray
    bias: float = 0.0
    bias_ramp: Optional[BiasRamp] = None
    device_start: float = 0.0
    device_end: float = 0.0

    def __post_init__(self):
        for name in ("barriers", "drop"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (self.grid.n_points,):
                raise ValueError(f"{name} must match the grid")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def time_dependent(self):
        return self.bias_ramp is not None

    def bias_at(self, t):
        if self.bias_ramp is None:
            return self.bias
        return self.bias_ramp.value(t)

    def dbias_dt(self, t):
        if self.bias_ramp is None:
            return 0.0
        return self.bias_ramp.slope(t)

    def at(self, t):
        """Potential samples at time ``t``."""
        return self.barriers - self.bias_at(t) * self.drop

    @property
    def v(self):
        """Potential at t = 0 (the steady potential when no ramp is set)."""
        return self.at(0.0)

    def with_bias(self, bias):
        return PotentialProfile(self.grid, self.barriers, self.drop, bias, None,
                                self.device_start, self.device_end)


def zero_potential(grid):
    z = np.zeros(grid.n_points)
    return PotentialProfile(grid, z, z, 0.0, None, grid.x_min, grid.x_min)


def custom_potential(grid, v):
    """Static profile from arbitrary samples (no bias, no device region)."""
    v = np.asarray(v, dtype=float)
    return PotentialProfile(grid, v, np.zeros_like(v), 0.0, None, grid.x_min, grid.x_min)


def make_double_barrier(grid, device, bias=0.0, bias_ramp=None):
    """Sample the double-barrier device onto ``grid`` at the grid points.

    Each grid point is the midpoint of its cell ``[x_j - dx/2, x_j + dx/2)``.
    """
    if device.device_start < grid.x_min or device.device_end > grid.x_max:
        raise ValueError("device does not fit inside the grid")
    x = grid.x
    edges, heights = device.segments()
    barriers = np.zeros(grid.n_points)
    for lo, hi, h in zip(edges[:-1], edges[1:], heights):
        barriers[(x >= lo) & (x < hi)] = h
    drop = np.clip((x - device.device_start) / device.length, 0.0, 1.0)
    return PotentialProfile(grid, barriers, drop, float(bias), bias_ramp,
                            device.device_start, device.device_end)


# --- transfer matrices ------------------------------------------------------

def transmission_piecewise(energies, edges, values, v_left=0.0, v_right=0.0, mass=1.0):
    """Transmission and reflection of a piecewise-constant potential.

    Parameters
    ----------
    energies : float or array
        Total energies (Ha).
    edges : array, shape (n+1,)
        Segment boundaries (bohr).
    values : array, shape (n,)
        Potential on each segment (Ha).
    v_left, v_right : float
        Asymptotic lead potentials.

    Returns
    -------
    T, R : arrays shaped like ``energies``
    """
    energies = np.asarray(energies, dtype=float)
    scalar = energies.ndim == 0
    E = np.atleast_1d(energies)
    edges = np.asarray(edges, dtype=float)
    values = np.asarray(values, dtype=float)
    if edges.shape != (values.size + 1,):
        raise ValueError("need len(edges) == len(values) + 1")
    if np.any(np.diff(edges) < 0):
        raise ValueError("edges must be non-decreasing")
    floor = max(v_left, v_right)
    if np.any(E <= floor):
        raise ValueError(
            f"energy must exceed both lead band bottoms ({floor:.6g} Ha); "
            "the asymptotic wave would be evanescent")

    k_left = np.sqrt(2.0 * mass * (E - v_left))
    k_right = np.sqrt(2.0 * mass * (E - v_right))

    # propagate (psi, psi') across each segment
    P = np.zeros((E.size, 2, 2), dtype=complex)
    P[:, 0, 0] = P[:, 1, 1] = 1.0
    for L, v in zip(np.diff(edges), values):
        if L == 0:
            continue
        k = np.sqrt(2.0 * mass * (E - v) + 0j)
        c = np.cos(k * L)
        kl = k * L
        # sin(kL)/k without 0/0 at the band edge
        s_over_k = L * np.sinc(kl / np.pi)
        seg = np.empty_like(P)
        seg[:, 0, 0] = c
        seg[:, 0, 1] = s_over_k
        seg[:, 1, 0] = -k * np.sin(kl)
        seg[:, 1, 1] = c
        P = seg @ P

    # left: psi = e^{ikx} + r e^{-ikx}; right: psi = t e^{ik'x}
    a = P[:, :, 0] + 1j * k_left[:, None] * P[:, :, 1]
    b = P[:, :, 0] - 1j * k_left[:, None] * P[:, :, 1]
    # a + r b = t (1, i k_right)
    det = -b[:, 0] * 1j * k_right + b[:, 1]
    r = (a[:, 0] * 1j * k_right - a[:, 1]) / det
    t = a[:, 0] + r * b[:, 0]
    T = (k_right / k_left) * np.abs(t) ** 2
    R = np.abs(r) ** 2
    if scalar:
        return float(T[0]), float(R[0])
    return T, R


def device_segments(device, bias=0.0, slices=64):
    """Piecewise-constant description of the continuous device.

    Without bias the three segments are exact; with bias every region is cut
    into ``slices`` pieces sampled at their midpoints.
    """
    edges, heights = device.segments()
    if bias == 0.0:
        return edges, heights
    new_edges = [edges[0]]
    new_vals = []
    for lo, hi, h in zip(edges[:-1], edges[1:], heights):
        e = np.linspace(lo, hi, slices + 1)
        mid = 0.5 * (e[1:] + e[:-1])
        new_vals.append(h - bias * (mid - device.device_start) / device.length)
        new_edges.extend(e[1:])
    return np.array(new_edges), np.concatenate(new_vals)


def transmission_transfer_matrix(device, bias, energies, mass=1.0, slices=64):
    """(T, R) of the continuous device geometry at the given energies."""
    edges, values = device_segments(device, bias, slices)
    return transmission_piecewise(energies, edges, values, 0.0, -bias, mass)


def grid_segments(profile, bias=None):
    """Cells of the sampled profile that differ from the lead potentials.

    Cell j spans ``[x_j - dx/2, x_j + dx/2)`` and carries the sample at x_j;
    this is the potential the propagator actually sees.
    """
    grid = profile.grid
    bias = profile.bias if bias is None else bias
    v = profile.barriers - bias * profile.drop
    v_left, v_right = 0.0, -bias
    x = grid.x
    mid = 0.5 * (profile.device_start + profile.device_end)
    lead = np.where(x < mid, v_left, v_right)
    active = np.nonzero(v != lead)[0]
    if active.size == 0:
        return np.array([x[0], x[0]]), np.array([0.0]), v_left, v_right
    i0, i1 = active[0], active[-1]
    edges = np.concatenate([x[i0:i1 + 1] - 0.5 * grid.dx, [x[i1] + 0.5 * grid.dx]])
    return edges, v[i0:i1 + 1], v_left, v_right


def transmission_on_grid(profile, energies, mass=1.0, bias=None):
    """Transfer-matrix (T, R) of the grid-sampled staircase profile."""
    edges, values, v_left, v_right = grid_segments(profile, bias)
    return transmission_piecewise(energies, edges, values, v_left, v_right, mass)


def rectangular_barrier_transmission(energy, height, width, mass=1.0):
    """Closed-form transmission of one rectangular barrier, 0 < E < V0."""
    E = np.asarray(energy, dtype=float)
    kappa = np.sqrt(2.0 * mass * (height - E))
    # general-mass form; reduces to 1 + V0^2 sinh^2(ka) / (4E(V0-E)) for m = 1
    return 1.0 / (1.0 + height ** 2 * np.sinh(kappa * width) ** 2 / (4.0 * E * (height - E)))
