"""Score-based causal discovery over ancestral graphs with latent variables."""

from .graph import ARROW, CIRCLE, TAIL, GraphError, Mark, MixedGraph
from .tabular import CategoricalTable, load_table, write_table

__all__ = ["ARROW", "CIRCLE", "TAIL", "GraphError", "Mark", "MixedGraph", "CategoricalTable", "load_table", "write_table"]
