"""Desk-scale neonatal ward monitoring stack."""

__version__ = "0.1.0"
