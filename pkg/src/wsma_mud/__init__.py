"""Link-level simulation and multiuser detection for WSMA-based uplink NOMA."""

__version__ = "0.1.0"
