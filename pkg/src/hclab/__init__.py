"""hclab: exact and Monte Carlo tools for the hard-core model on regular
bipartite graphs, with checks of entropy, expansion and chessboard
inequalities at desk scale."""

__version__ = "0.1.0"

from .graphs import BipartiteGraph, TorusSpec, build_torus, cycle, hypercube, complete_bipartite  # noqa: E402
from .hardcore import partition_bruteforce, partition_transfer_torus, exact_distribution  # noqa: E402
from .report import CheckReport, ConstantFit  # noqa: E402

__all__ = [
    "BipartiteGraph",
    "TorusSpec",
    "build_torus",
    "cycle",
    "hypercube",
    "complete_bipartite",
    "partition_bruteforce",
    "partition_transfer_torus",
    "exact_distribution",
    "CheckReport",
    "ConstantFit",
]
