"""Core syntax: expressions, refinement types, session types and contexts."""
