"""Commutativity gadgets, solution groups and quantum homomorphism checks for finite structures."""

__version__ = "0.1.0"
