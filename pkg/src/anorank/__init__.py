"""Anomaly ranking for sparse binary behavior matrices.

Attention-gated autoencoder scoring, six binary similarity measures,
a similarity-guided active-learning loop, nDCG evaluation, and an
analyst-facing oracle service.
"""

from anorank.binvec import BinaryMatrix, GroundTruth, SynthConfig, generate_synthetic
from anorank.simsearch import SimilarityMetric, parse_metric, similarity
from anorank.active_loop import LoopConfig, Strategy, ground_truth_oracle, run_loop
from anorank.evalkit import dcg, idcg, ndcg

__version__ = "0.1.0"

__all__ = [
    "BinaryMatrix",
    "GroundTruth",
    "SynthConfig",
    "generate_synthetic",
    "SimilarityMetric",
    "parse_metric",
    "similarity",
    "LoopConfig",
    "Strategy",
    "ground_truth_oracle",
    "run_loop",
    "dcg",
    "idcg",
    "ndcg",
    "__version__",
]
