"""Refined multiparty session types: projection, CFSMs, bounded metatheory checks and code generation."""
__version__ = "0.1.0"
