"""Partitions of a spin chain into clusters."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Clustering:
    clusters: tuple[tuple[int, ...], ...]
    max_cluster_size: int

    def __post_init__(self):
        members = [i for c in self.clusters for i in c]
        n = len(members)
        if sorted(members) != list(range(n)):
            raise ValueError("clusters must partition 0..N-1")
        for c in self.clusters:
            if not 1 <= len(c) <= self.max_cluster_size:
                raise ValueError(f"cluster {c} violates size bound {self.max_cluster_size}")
            if list(c) != sorted(c):
                raise ValueError(f"cluster {c} is not sorted")

    @property
    def n_spins(self) -> int:
        return sum(len(c) for c in self.clusters)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.clusters)

    def locate(self) -> tuple[np.ndarray, np.ndarray]:
        """Per spin: (cluster index, position inside its cluster)."""
        which = np.empty(self.n_spins, dtype=np.int64)
        slot = np.empty(self.n_spins, dtype=np.int64)
        for c, members in enumerate(self.clusters):
            for k, i in enumerate(members):
                which[i] = c
                slot[i] = k
        return which, slot

    def to_json(self) -> str:
        return json.dumps({"clusters": [list(c) for c in self.clusters],
                           "max_cluster_size": self.max_cluster_size})

    @classmethod
    def from_json(cls, text: str) -> "Clustering":
        d = json.loads(text)
        return cls(tuple(tuple(c) for c in d["clusters"]), d["max_cluster_size"])


def make_clustering(clusters) -> Clustering:
    cl = tuple(tuple(sorted(int(i) for i in c)) for c in clusters)
    return Clustering(cl, max(len(c) for c in cl))


def naive_clusters(n_spins: int, cluster_size: int) -> Clustering:
    """Consecutive blocks of ``cluster_size`` spins; the last block may be shorter."""
    if cluster_size < 1:
        raise ValueError(f"cluster_size must be >= 1, got {cluster_size}")
    cl = tuple(tuple(range(s, min(s + cluster_size, n_spins)))
               for s in range(0, n_spins, cluster_size))
    return Clustering(cl, cluster_size)


def rg_pair_clusters(couplings) -> Clustering:
    """Greedy strongest-bond pairing.

    Repeatedly pairs the two unclustered spins with the largest ``|J_ij|``; ties
    go to the lexicographically smallest ``(i, j)``.  No couplings are
    renormalized between steps.  An odd leftover spin becomes a singleton.
    """
    J = np.abs(np.asarray(couplings, dtype=np.float64))
    n = J.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    w = J[iu, ju]
    # stable sort on -w keeps (i, j) lexicographic order among equal weights
    order = np.argsort(-w, kind="stable")
    free = np.ones(n, dtype=bool)
    pairs = []
    for k in order:
        i, j = iu[k], ju[k]
        if free[i] and free[j]:
            pairs.append((int(i), int(j)))
            free[i] = free[j] = False
            if len(pairs) == n // 2:
                break
    clusters = pairs + [(int(i),) for i in np.nonzero(free)[0]]
    clusters.sort(key=lambda c: c[0])
    return Clustering(tuple(clusters), 2 if n > 1 else 1)
