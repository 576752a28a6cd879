"""Total-current eigenvalues, expectation values and the Gaussian current POVM.

For a single electron (charge q = -1, mass m) between electrodes a distance
``L_x`` apart, the total-current operator is diagonal in momentum with
eigenvalue ``I(k) = -k / (m L_x)``.  The ammeter is modelled by the Gaussian
operators

    W_I = (1/C) sum_k exp(-(I(k) - I)^2 / (2 sigma_I^2)) |k><k|,

with continuous outcomes I and ``C^2 = sigma_I sqrt(pi)`` so that
``int dI W_I W_I = 1``.  The measurement strength is configured as a
wavevector width ``sigma_k`` and converted through ``sigma_I = sigma_k / (m L_x)``.
"""

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .grid import from_momentum, psi_to_momentum, to_momentum

ELECTRON_CHARGE = -1.0


@dataclass(frozen=True)
class MeasurementConfig:
    """Ammeter parameters, all in atomic units.

    Attributes
    ----------
    sigma_k : float
        Gaussian strength as a wavevector width (bohr^-1).
    tau : float
        Time between consecutive measurements.
    L_x : float
        Length of the integration volume along the transport direction.
    seed : int
        Base seed of the outcome random stream.
    epsilon : float
        Permittivity entering the displacement-current term.
    """

    sigma_k: float
    tau: float
    L_x: float
    seed: int = 0
    epsilon: float = 1.0

    def __post_init__(self):
        if not self.sigma_k > 0:
            raise ValueError("sigma_k must be positive")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not self.L_x > 0:
            raise ValueError("L_x must be positive")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")

    def sigma_current(self, mass=1.0):
        """Width of the POVM Gaussians in current units."""
        return self.sigma_k / (mass * self.L_x)


@dataclass(frozen=True)
class CurrentOutcome:
    value: float
    time: float = 0.0


def current_eigenvalue(k, L_x, mass=1.0, charge=ELECTRON_CHARGE):
    """Single-particle total-current eigenvalue q k / (m L_x)."""
    I = charge * np.asarray(k, dtype=float) / (mass * L_x)
    return float(I) if I.ndim == 0 else I


def multi_particle_eigenvalue(k_list, q_list, m_list, L_x):
    """(1/L_x) sum_i q_i k_i / m_i for one momentum configuration."""
    if not (len(k_list) == len(q_list) == len(m_list)):
        raise ValueError("k_list, q_list and m_list must have equal length")
    return float(sum(q * k / m for k, q, m in zip(k_list, q_list, m_list)) / L_x)


def degenerate_configurations(k_values, n_particles, L_x, charge=ELECTRON_CHARGE, mass=1.0):
    """Group every ordered momentum configuration by its total-current eigenvalue.

    Brute-force enumeration meant for a handful of particles and k values;
    eigenvalues are rounded to 12 significant digits to form the groups.
    """
    from itertools import product

    groups = {}
    for conf in product(k_values, repeat=n_particles):
        value = multi_particle_eigenvalue(conf, [charge] * n_particles, [mass] * n_particles, L_x)
        key = float(f"{value:.12g}")
        groups.setdefault(key, []).append(conf)
    return groups


def expectation_current(wf, L_x):
    """sum_k I(k) |g(k)|^2 dk for a normalised state."""
    g2 = np.abs(to_momentum(wf)) ** 2
    I = current_eigenvalue(wf.grid.k, L_x, wf.mass)
    return float(np.sum(I * g2) * wf.grid.dk)


def gamma_q_volume(wf, L_x, omega=None, charge=ELECTRON_CHARGE):
    """Volume form of the particle term of the total current.

    Re[(1/L_x) int_Omega psi* (-i q/m) d/dx psi dx] with a spectral
    derivative; ``omega = (x_a, x_b)`` defaults to the whole grid.
    """
    grid = wf.grid
    if omega is None:
        sel = slice(None)
    else:
        x_a, x_b = omega
        if x_a < grid.x_min or x_b > grid.x_max or x_b <= x_a:
            raise ValueError(f"integration volume {omega} lies outside the grid")
        sel = grid.index_range(x_a, x_b)
    dpsi = sfft.ifft(1j * grid.k * sfft.fft(wf.psi))
    integrand = np.conj(wf.psi[sel]) * (-1j * charge / wf.mass) * dpsi[sel]
    return float(np.real(np.sum(integrand)) * grid.dx / L_x)


def displacement_term(epsilon, L_x, dvbias_dt):
    """Displacement contribution -(epsilon / L_x) dV_bias/dt."""
    return -(epsilon / L_x) * dvbias_dt


def normalization_constant_sq(sigma_current):
    """C^2 = sigma_I sqrt(pi) for continuous outcomes."""
    return sigma_current * np.sqrt(np.pi)


def sample_outcome(wf, config, rng, time=0.0):
    """Draw one ammeter reading from prob(I) for the state ``wf``.

    prob(I) = (1/C^2) sum_k exp(-(I(k) - I)^2 / sigma_I^2) |g(k)|^2 dk is a
    mixture of normals, so a momentum bin is picked with weight |g|^2 dk and
    the reading is drawn from Normal(I(k), sigma_I / sqrt(2)).
    """
    weights = np.abs(to_momentum(wf)) ** 2
    return _sample_from_weights(weights, wf.grid.k, wf.mass, config, rng, time)


def _sample_from_weights(weights, k, mass, config, rng, time=0.0):
    cdf = np.cumsum(weights)
    u = rng.random() * cdf[-1]
    idx = min(int(np.searchsorted(cdf, u, side="right")), k.size - 1)
    mean = current_eigenvalue(k[idx], config.L_x, mass)
    sigma = config.sigma_current(mass)
    value = mean + sigma / np.sqrt(2.0) * rng.standard_normal()
    return CurrentOutcome(float(value), float(time))


def sample_outcomes(wf, config, rng, size):
    """``size`` independent single-shot readings on copies of ``wf`` (no state update)."""
    weights = np.abs(to_momentum(wf)) ** 2
    cdf = np.cumsum(weights)
    u = rng.random(size) * cdf[-1]
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), weights.size - 1)
    means = current_eigenvalue(wf.grid.k, config.L_x, wf.mass)[idx]
    sigma = config.sigma_current(wf.mass)
    return means + sigma / np.sqrt(2.0) * rng.standard_normal(size)


def weak_filter(k, outcome_value, config, mass=1.0):
    """exp(-(I(k) - I)^2 / (2 sigma_I^2)) on the wavevectors ``k``."""
    sigma = config.sigma_current(mass)
    I = current_eigenvalue(k, config.L_x, mass)
    return np.exp(-((I - outcome_value) ** 2) / (2.0 * sigma ** 2))


UNDERFLOW = 1e-300


class ImpossibleOutcomeError(ArithmeticError):
    """The filtered state has (numerically) zero norm."""


def apply_weak_operator(wf, outcome, config):
    """Post-measurement state W_I|psi> / ||W_I|psi>||."""
    value = outcome.value if isinstance(outcome, CurrentOutcome) else float(outcome)
    g = to_momentum(wf)
    g = g * weak_filter(wf.grid.k, value, config, wf.mass)
    norm_sq = float(np.sum(np.abs(g) ** 2) * wf.grid.dk)
    if not norm_sq > UNDERFLOW:
        raise ImpossibleOutcomeError(
            f"filtered norm^2 {norm_sq:.3g} underflows; outcome {value:.6g} is "
            "incompatible with the state at this sigma")
    return from_momentum(wf.grid, g / np.sqrt(norm_sq), wf.mass)


def outcome_density(values, weights, eigenvalues, sigma_current):
    """Brute-force prob(I) at the given outcome values.

    ``weights`` are the bin probabilities |g(k)|^2 dk (summing to one) and
    ``eigenvalues`` the matching I(k).
    """
    values = np.asarray(values, dtype=float)
    c2 = normalization_constant_sq(sigma_current)
    diff = eigenvalues[None, :] - values[:, None]
    return np.exp(-diff ** 2 / sigma_current ** 2) @ weights / c2


def povm_completeness_check(config, k_grid, mass=1.0, order=200):
    """Max deviation of int dI exp(-(I(k)-I)^2/sigma_I^2) / C^2 from one.

    The outcome integral over ``[I(k) - 10 sigma_I, I(k) + 10 sigma_I]`` is
    evaluated by Gauss-Legendre quadrature independently for every k.
    """
    sigma = config.sigma_current(mass)
    c2 = normalization_constant_sq(sigma)
    nodes, w = np.polynomial.legendre.leggauss(order)
    centers = current_eigenvalue(np.asarray(k_grid, dtype=float), config.L_x, mass)
    half = 10.0 * sigma
    outcomes = centers[:, None] + half * nodes[None, :]
    vals = np.exp(-((centers[:, None] - outcomes) ** 2) / sigma ** 2)
    integrals = half * (vals @ w) / c2
    return float(np.max(np.abs(integrals - 1.0)))


def momentum_weights(grid, psi):
    """Bin probabilities |g(k)|^2 dk of an (arbitrary-norm) array."""
    g = psi_to_momentum(grid, psi)
    return np.abs(g) ** 2 * grid.dk
