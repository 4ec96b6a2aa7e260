"""Proof-of-work identity management: CCom and ECCom protocol simulation."""

__version__ = "0.1.0"
