"""Decentralized grid-Bayesian learning with KL-driven neighbor selection."""

__version__ = "0.1.0"
