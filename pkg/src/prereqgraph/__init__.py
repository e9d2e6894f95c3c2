"""Prerequisite chain learning with relational (variational) graph
autoencoders over a heterogeneous concept-resource graph."""

__version__ = "0.1.0"
