"""Spectral Galerkin simulation of the stochastic Navier-Stokes equations."""

__version__ = "0.1.0"
