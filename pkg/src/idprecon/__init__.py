"""Mechanisms for individual, group and bootstrap relaxations of differential
privacy, and the reconstruction attacks that defeat them."""

__version__ = "0.1.0"
