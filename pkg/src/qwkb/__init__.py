"""Asymptotics of q-difference and eps-difference equations."""

__version__ = "0.1.0"
