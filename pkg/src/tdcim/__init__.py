"""Time-domain compute-in-memory simulator for 2-FeFET XOR/AND cells, with an HDC workload."""

__version__ = "0.1.0"
