"""Reading protocol files: tokenising, parsing and lowering to core global types."""
from .desugar import desugar, load_global, parse_protocol, validate
from .parser import Module, ProtocolDecl, parse_expr, parse_global, parse_local, parse_module, parse_refinement

__all__ = ["desugar", "load_global", "parse_protocol", "validate", "Module", "ProtocolDecl", "parse_expr",
           "parse_global", "parse_local", "parse_module", "parse_refinement"]
