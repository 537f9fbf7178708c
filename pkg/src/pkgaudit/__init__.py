"""Supply-chain risk auditing for package-registry metadata snapshots."""

__version__ = "0.1.0"
