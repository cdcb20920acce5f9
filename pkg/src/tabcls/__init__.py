"""Benchmark toolkit for table-to-class annotation.

Ingests class-annotated entity-table corpora, encodes each table into a
fixed-dimensional vector with a frozen table encoder, trains a small MLP
classifier on top, and evaluates with stratified K-fold macro-F1.
"""

__version__ = "0.1.0"
