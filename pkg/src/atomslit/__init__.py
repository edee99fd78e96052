"""Simulation and analysis of an atomic triple-slit (Sorkin) interference test."""

__version__ = "0.1.0"
