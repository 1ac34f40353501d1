"""Simulated topological protection of photon correlations and polarisation entanglement in SSH waveguide chains."""

__version__ = "0.1.0"
