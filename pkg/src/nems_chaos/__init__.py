"""Kicked nanocantilever coupled to an NV-centre spin: classical map, exact spin evolution, chaos diagnostics."""

__version__ = "0.1.0"
