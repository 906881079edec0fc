"""Homogeneous bipartite graphs: finite tools, a staged construction, and oracles."""

__version__ = "0.1.0"
