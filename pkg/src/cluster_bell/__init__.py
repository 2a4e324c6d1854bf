"""Stabilizer and Bell-inequality analysis of the two-photon six-qubit cluster state."""

__version__ = "0.1.0"
