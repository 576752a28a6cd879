"""Split-operator wavepacket transport with a sequential Gaussian POVM ammeter."""

__version__ = "0.1.0"
