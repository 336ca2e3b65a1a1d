"""Library and simulator for signature aggregation of VANET warning messages."""

__version__ = "0.1.0"
