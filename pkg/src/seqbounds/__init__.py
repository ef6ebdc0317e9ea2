"""Generalization-bound toolkit for sequence-to-sequence, local and hybrid forecasting."""

__version__ = "0.1.0"
