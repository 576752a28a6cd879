"""Uniform 1D grids, wavefunctions and Gaussian wavepackets.

Position samples are ``x_j = x_min + j*dx`` with ``dx = (x_max - x_min)/N``
(periodic, ``x_max`` excluded).  The momentum amplitude is the discretised
continuum transform

    g(k_m) = dx/sqrt(2 pi) * sum_j psi_j exp(-i k_m x_j)

so that ``sum |g|^2 dk == sum |psi|^2 dx`` holds exactly (Parseval).
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import fft as sfft
from scipy.special import ndtr


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid and its discrete-Fourier dual.

    Parameters
    ----------
    n_points : int
        Number of samples, a power of two >= 2.
    x_min, x_max : float
        Domain limits in bohr.
    """

    n_points: int
    x_min: float
    x_max: float

    def __post_init__(self):
        n = self.n_points
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 2 or n & (n - 1):
            raise ValueError(f"n_points must be a power of two >= 2, got {n!r}")
        if not np.isfinite(self.x_min) or not np.isfinite(self.x_max) or self.x_max <= self.x_min:
            raise ValueError(f"degenerate interval [{self.x_min}, {self.x_max}]")

    @property
    def length(self):
        return self.x_max - self.x_min

    @property
    def dx(self):
        return self.length / self.n_points

    @property
    def dk(self):
        return 2.0 * np.pi / (self.n_points * self.dx)

    @property
    def k_max(self):
        """Nyquist wavevector."""
        return np.pi / self.dx

    @cached_property
    def x(self):
        x = self.x_min + self.dx * np.arange(self.n_points)
        x.flags.writeable = False
        return x

    @cached_property
    def k(self):
        """Wavevectors in FFT ordering."""
        k = 2.0 * np.pi * sfft.fftfreq(self.n_points, d=self.dx)
        k.flags.writeable = False
        return k

    @cached_property
    def _phase(self):
        # accounts for x_min != 0 in the transform convention
        p = self.dx / np.sqrt(2.0 * np.pi) * np.exp(-1j * self.k * self.x_min)
        p.flags.writeable = False
        return p

    def index_range(self, x_a, x_b):
        """Boolean mask of grid points with ``x_a <= x <= x_b``."""
        return (self.x >= x_a) & (self.x <= x_b)


def make_grid(n_points, x_min, x_max):
    return Grid(int(n_points) if not isinstance(n_points, bool) else n_points,
                float(x_min), float(x_max))


@dataclass
class Wavefunction:
    """Position-space amplitudes of a single particle of mass ``mass``.

    A Wavefunction is owned by one trajectory; operations in this package
    return new instances rather than mutating their inputs.
    """

    grid: Grid
    psi: np.ndarray
    mass: float = 1.0

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=complex)
        if self.psi.shape != (self.grid.n_points,):
            raise ValueError(
                f"psi has shape {self.psi.shape}, grid expects ({self.grid.n_points},)")
        if not self.mass > 0:
            raise ValueError("mass must be positive")

    def norm(self):
        return float(np.sqrt(np.sum(np.abs(self.psi) ** 2) * self.grid.dx))

    def normalized(self):
        return Wavefunction(self.grid, self.psi / self.norm(), self.mass)

    def density(self):
        return np.abs(self.psi) ** 2

    def copy(self):
        return Wavefunction(self.grid, self.psi.copy(), self.mass)

    def mass_between(self, x_a, x_b):
        """Probability on grid points with ``x_a <= x < x_b``."""
        x = self.grid.x
        sel = (x >= x_a) & (x < x_b)
        return float(np.sum(np.abs(self.psi[sel]) ** 2) * self.grid.dx)


def overlap(a, b):
    """Inner product <a|b> on the shared grid."""
    if a.grid != b.grid:
        raise ValueError("wavefunctions live on different grids")
    return complex(np.vdot(a.psi, b.psi) * a.grid.dx)


def fidelity(a, b):
    """|<a|b>|^2 / (<a|a><b|b>)."""
    return abs(overlap(a, b)) ** 2 / (a.norm() ** 2 * b.norm() ** 2)


def to_momentum(wf):
    """Momentum amplitudes g(k) on ``wf.grid.k`` (FFT ordering)."""
    return psi_to_momentum(wf.grid, wf.psi)


def from_momentum(grid, g, mass=1.0):
    """Inverse of :func:`to_momentum`."""
    g = np.asarray(g, dtype=complex)
    if g.shape != (grid.n_points,):
        raise ValueError(f"g has shape {g.shape}, grid expects ({grid.n_points},)")
    return Wavefunction(grid, momentum_to_psi(grid, g), mass)


def psi_to_momentum(grid, psi):
    return grid._phase * sfft.fft(psi)


def momentum_to_psi(grid, g):
    return sfft.ifft(g / grid._phase)


def momentum_density(wf):
    """|g(k)|^2, normalised so that ``sum(...) * dk`` is the state norm."""
    return np.abs(to_momentum(wf)) ** 2


@dataclass(frozen=True)
class WavepacketSpec:
    """Gaussian packet |psi|^2 ~ exp(-(x - x0)^2 / (2 sigma_x^2)), carrier k0."""

    x0: float
    sigma_x: float
    k0: float
    mass: float = 1.0

    def __post_init__(self):
        if not self.sigma_x > 0:
            raise ValueError("sigma_x must be positive")
        if not self.mass > 0:
            raise ValueError("mass must be positive")

    @property
    def sigma_k(self):
        """Standard deviation of |g(k)|^2."""
        return 1.0 / (2.0 * self.sigma_x)

    @property
    def velocity(self):
        return self.k0 / self.mass


def wavevector_for_energy(energy, mass=1.0):
    """Carrier wavevector sqrt(2 m E) of a packet with kinetic energy ``energy``."""
    if energy < 0:
        raise ValueError("energy must be non-negative")
    return float(np.sqrt(2.0 * mass * energy))


def tail_mass(grid, spec):
    """Analytic probability of the ideal Gaussian lying outside the grid."""
    lo = ndtr((grid.x_min - spec.x0) / spec.sigma_x)
    hi = ndtr((spec.x0 - grid.x_max) / spec.sigma_x)
    return float(lo + hi)


TAIL_TOLERANCE = 1e-8


def gaussian_packet(grid, spec):
    """Normalised Gaussian wavepacket on ``grid``.

    Raises ``ValueError`` if more than ``1e-8`` of the ideal packet's
    probability falls outside the domain.
    """
    outside = tail_mass(grid, spec)
    if outside > TAIL_TOLERANCE:
        raise ValueError(
            f"wavepacket does not fit the grid: tail mass outside domain {outside:.3g} > 1e-8")
    x = grid.x
    psi = np.exp(-((x - spec.x0) ** 2) / (4.0 * spec.sigma_x ** 2) + 1j * spec.k0 * x)
    return Wavefunction(grid, psi, spec.mass).normalized()


def absorbing_mask(grid, width, strength=1.0):
    """cos^2-ramp mask, 1 in the interior, dropping towards both edges.

    ``width`` is the ramp length in bohr at each edge; ``strength`` in (0, 1]
    is the fraction removed at the outermost point per application.
    """
    if width <= 0 or 2 * width >= grid.length:
        raise ValueError("absorber width must be positive and less than half the domain")
    x = grid.x
    d = np.minimum(x - grid.x_min, grid.x_max - x)
    mask = np.ones(grid.n_points)
    edge = d < width
    mask[edge] = 1.0 - strength * np.cos(0.5 * np.pi * d[edge] / width) ** 2
    return mask
