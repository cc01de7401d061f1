"""Labeled-graph generation: canonical DFS codes, sequence model, metrics.

The package re-exports the compiled module's surface:

- ``Graph`` plus transaction-format I/O (``parse_graphs``, ``format_graphs``,
  ``load_graphs``, ``save_graphs``)
- canonicalization (``canonical_code``, ``reduced_code``, ``certificate``,
  ``is_isomorphic``, ``graph_from_reduced``)
- corpus preparation (``augment_with_degree``, ``split_corpus``,
  ``sample_subgraphs``)
- the sequence model (``train_model``, ``load_model``, ``Model``)
- metrics (``descriptor``, ``mmd``, ``nspdk_kernel``, ``evaluate``)
"""

from ._ggrx import (
    GgrxError,
    Graph,
    Model,
    augment_with_degree,
    canonical_code,
    certificate,
    descriptor,
    evaluate,
    format_graphs,
    graph_from_reduced,
    is_isomorphic,
    load_graphs,
    load_model,
    mmd,
    nspdk_kernel,
    parse_graphs,
    reduced_code,
    sample_subgraphs,
    save_graphs,
    split_corpus,
    train_model,
)

__all__ = [
    "GgrxError",
    "Graph",
    "Model",
    "augment_with_degree",
    "canonical_code",
    "certificate",
    "descriptor",
    "evaluate",
    "format_graphs",
    "graph_from_reduced",
    "is_isomorphic",
    "load_graphs",
    "load_model",
    "mmd",
    "nspdk_kernel",
    "parse_graphs",
    "reduced_code",
    "sample_subgraphs",
    "save_graphs",
    "split_corpus",
    "train_model",
]
