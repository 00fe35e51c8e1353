"""Simulation and analysis toolkit for NV-driven 13C dynamic nuclear polarization in diamond."""

__version__ = "0.1.0"
