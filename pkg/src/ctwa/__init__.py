"""Cluster truncated Wigner dynamics for disordered long-range XXZ chains."""

from .algebra import OperatorBasis, ResourceError, build_basis, structure_constants
from .clustering import Clustering, make_clustering, naive_clusters, rg_pair_clusters
from .disorder import ConfigurationError, DisorderRealization, ModelParams, make_realization
from .dynamics import TimeGrid, evolve, run_ensemble, single_cluster_mst
from .exact import ed_evolve, pair_oracle
from .hamiltonian import ClusterHamiltonian, project
from .observables import (EnsembleResult, ObservableSeries, average_pair_renyi,
                          disorder_average, renyi2_pair, staggered_magnetization)
from .sampling import ProductState, neel_state

__all__ = [
    "Clustering", "ClusterHamiltonian", "ConfigurationError", "DisorderRealization",
    "EnsembleResult", "ModelParams", "ObservableSeries", "OperatorBasis", "ProductState",
    "ResourceError", "TimeGrid", "average_pair_renyi", "build_basis", "disorder_average",
    "ed_evolve", "evolve", "make_clustering", "make_realization", "naive_clusters",
    "neel_state", "pair_oracle", "project", "renyi2_pair", "rg_pair_clusters",
    "run_ensemble", "single_cluster_mst", "staggered_magnetization", "structure_constants",
]
