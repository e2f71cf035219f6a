"""Coherent Kapitza-Dirac diffraction in a confined ponderomotive potential."""
__version__ = "0.1.0"
