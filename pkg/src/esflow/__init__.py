"""Entropy-stable spectral collocation solver for the 3-D compressible
Navier-Stokes equations on curvilinear hexahedral meshes, with
positivity-preserving flux limiting and sensor-driven artificial
dissipation."""

__version__ = "0.1.0"
