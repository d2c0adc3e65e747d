"""Simulation and analysis of photon-number statistics of pulsed twin beams."""

__version__ = "0.1.0"
