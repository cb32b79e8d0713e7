"""Partitioning and scheduling workbench for dataflow DAGs on heterogeneous clusters."""

__version__ = "0.1.0"
