"""Netlist-to-layout design automation flow for AQFP superconducting
circuits: majority synthesis, path balancing, row placement, channel
routing, layout generation and design rule checking."""

__version__ = "0.1.0"
