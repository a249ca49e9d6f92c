"""Simulation and analysis toolkit for a dual-pantograph skin-stretch guidance handle."""

__version__ = "0.1.0"
