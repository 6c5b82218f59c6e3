"""Frequency-space division for multi-reader backscatter networks: RF kernels,
tag behaviour, reader frequency assignment, channel model and a packet-level
network simulator."""

__version__ = "0.1.0"
