"""Lightweight botnet detection for edge-assisted IoT networks.

Zeek flow ingestion, reproducible preprocessing, three from-scratch tree
ensembles (random forest, second-order boosting, histogram/GOSS/EFB
boosting), evaluation under clean and Gaussian-corrupted data, and a
compact serialized-model streaming classifier.
"""

__version__ = "0.1.0"
