"""Symmetric split-operator propagation of the 1D Schrodinger equation.

One step applies ``exp(-i V dt/2) exp(-i K dt) exp(-i V dt/2)`` with the
kinetic factor diagonal in the discrete-Fourier basis.  Time-dependent
potentials are sampled once per step, at its midpoint.
"""

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .grid import Wavefunction


@dataclass(frozen=True)
class StepperConfig:
    dt: float

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    @classmethod
    def from_period(cls, tau, substeps=16):
        """dt = tau / substeps, so that measurements fall on step boundaries."""
        if int(substeps) != substeps or substeps < 1:
            raise ValueError("substeps must be a positive integer")
        return cls(tau / int(substeps))


def check_aliasing(grid, dt, mass=1.0):
    """Raise if the kinetic phase at the Nyquist wavevector reaches pi."""
    phase = dt * grid.k_max ** 2 / (2.0 * mass)
    if phase >= np.pi:
        raise ValueError(
            f"dt = {dt:.6g} aliases the kinetic phase at the Nyquist wavevector "
            f"(dt*k_max^2/2m = {phase:.4g} >= pi); reduce dt or coarsen the grid")


def n_steps(t_span, dt, what="t_span"):
    """Number of whole steps in ``t_span``; raises if it is not a multiple of dt."""
    if t_span < 0:
        raise ValueError(f"{what} must be non-negative")
    n = int(round(t_span / dt))
    if abs(n * dt - t_span) > 1e-9 * max(1.0, abs(t_span)):
        raise ValueError(f"{what} = {t_span!r} is not an integer multiple of dt = {dt!r}")
    return n


class Propagator:
    """Reusable split-operator stepper for one (profile, dt, mass).

    Works in place on a complex array ``psi``; the public :func:`step` and
    :func:`evolve` wrap it and return fresh Wavefunctions.
    """

    def __init__(self, profile, dt, mass=1.0, mask=None):
        self.grid = profile.grid
        self.profile = profile
        self.dt = float(dt)
        self.mass = float(mass)
        check_aliasing(self.grid, self.dt, self.mass)
        self.kinetic = np.exp(-1j * self.dt * self.grid.k ** 2 / (2.0 * self.mass))
        self.mask = None if mask is None else np.asarray(mask, dtype=float)
        self._half_static = None
        if not profile.time_dependent:
            self._half_static = np.exp(-0.5j * self.dt * profile.v)

    def half_potential(self, t):
        if self._half_static is not None:
            return self._half_static
        return np.exp(-0.5j * self.dt * self.profile.at(t + 0.5 * self.dt))

    def advance(self, psi, t0, steps):
        """Advance ``psi`` (array, modified in place) by ``steps`` steps from t0."""
        static = self._half_static
        kinetic = self.kinetic
        for i in range(steps):
            half = static if static is not None else self.half_potential(t0 + i * self.dt)
            psi *= half
            phi = sfft.fft(psi, overwrite_x=True)
            phi *= kinetic
            psi[:] = sfft.ifft(phi, overwrite_x=True)
            psi *= half
            if self.mask is not None:
                psi *= self.mask
        return psi


def step(wf, profile, dt, t=0.0):
    """One split-operator step of length ``dt`` starting at time ``t``."""
    prop = Propagator(profile, dt, wf.mass)
    psi = wf.psi.copy()
    prop.advance(psi, t, 1)
    return Wavefunction(wf.grid, psi, wf.mass)


def evolve(wf, profile, t_span, dt, t0=0.0, mask=None):
    """Evolve ``wf`` over ``t_span`` (an integer multiple of ``dt``)."""
    steps = n_steps(t_span, dt)
    prop = Propagator(profile, dt, wf.mass, mask)
    psi = wf.psi.copy()
    prop.advance(psi, t0, steps)
    return Wavefunction(wf.grid, psi, wf.mass)


def energy(wf, profile, t=0.0):
    """<H> = <K> + <V> at time ``t``, normalised by the state norm."""
    g = sfft.fft(wf.psi)
    kin = np.sum(np.abs(g) ** 2 * wf.grid.k ** 2) / (2.0 * wf.mass) / np.sum(np.abs(g) ** 2)
    dens = np.abs(wf.psi) ** 2
    pot = np.sum(dens * profile.at(t)) / np.sum(dens)
    return float(kin + pot)


def position_moments(wf):
    """Mean and variance of |psi|^2."""
    d = wf.density()
    d = d / d.sum()
    mean = float(np.sum(d * wf.grid.x))
    var = float(np.sum(d * (wf.grid.x - mean) ** 2))
    return mean, var
