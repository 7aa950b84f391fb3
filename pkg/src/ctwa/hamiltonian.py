"""The XXZ Hamiltonian rewritten in cluster operator bases.

Classical variables carry Pauli normalisation, so every spin term
``J_ij (s_i^x s_j^x + s_i^y s_j^y + Delta s_i^z s_j^z)`` contributes ``J_ij/4``
(or ``Delta J_ij/4``) to the field of a shared cluster or to the bilinear
coupling between two clusters.

Phase points are flat vectors: cluster ``c`` occupies
``x[offsets[c]:offsets[c + 1]]`` in the order of its :class:`OperatorBasis`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .algebra import DEFAULT_MAX_CLUSTER, OperatorBasis, build_basis
from .clustering import Clustering
from .disorder import DisorderRealization


@dataclass(frozen=True)
class ClusterHamiltonian:
    clustering: Clustering
    bases: dict[int, OperatorBasis] = field(repr=False)
    fields: tuple[np.ndarray, ...] = field(repr=False)
    # (ci, cj) with ci < cj  ->  {(p, q): J_pq}
    couplings: dict[tuple[int, int], dict[tuple[int, int], float]] = field(repr=False)
    offsets: np.ndarray = field(repr=False)

    @property
    def n_vars(self) -> int:
        return int(self.offsets[-1])

    def basis(self, c: int) -> OperatorBasis:
        return self.bases[len(self.clustering.clusters[c])]

    def split(self, x: np.ndarray) -> list[np.ndarray]:
        return [x[..., a:b] for a, b in zip(self.offsets[:-1], self.offsets[1:])]

    @property
    def field_vector(self) -> np.ndarray:
        return np.concatenate(self.fields)

    def coupling_coo(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Symmetric global coupling ``K`` (both orientations) so ``dH/dx = B + K x``."""
        rows, cols, vals = [], [], []
        for (ci, cj), block in self.couplings.items():
            oi, oj = self.offsets[ci], self.offsets[cj]
            for (p, q), v in block.items():
                rows += [oi + p, oj + q]
                cols += [oj + q, oi + p]
                vals += [v, v]
        return (np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64),
                np.array(vals, dtype=np.float64))

    def coupling_matrix(self) -> sp.csr_matrix:
        r, c, v = self.coupling_coo()
        return sp.csr_matrix((v, (r, c)), shape=(self.n_vars, self.n_vars))


def project(realization: DisorderRealization, clustering: Clustering,
            n_max: int = DEFAULT_MAX_CLUSTER) -> ClusterHamiltonian:
    J = realization.couplings
    delta = realization.params.delta
    n = J.shape[0]
    if clustering.n_spins != n:
        raise ValueError("clustering does not partition the realization's spins")
    bases = {s: build_basis(s, n_max) for s in set(clustering.sizes)}
    which, slot = clustering.locate()
    fields = [np.zeros(bases[len(c)].size) for c in clustering.clusters]
    couplings: dict[tuple[int, int], dict[tuple[int, int], float]] = {}
    for i in range(n):
        for j in range(i + 1, n):
            Jij = J[i, j]
            coefs = (0.25 * Jij, 0.25 * Jij, 0.25 * (delta * Jij))
            ci, cj = which[i], which[j]
            for axis, v in zip((1, 2, 3), coefs):
                if v == 0.0:
                    continue
                if ci == cj:
                    b = bases[len(clustering.clusters[ci])]
                    fields[ci][b.pair_index(slot[i], axis, slot[j], axis)] += v
                else:
                    (a, ka), (c, kc) = sorted([(ci, slot[i]), (cj, slot[j])])
                    p = bases[len(clustering.clusters[a])].site_index(ka, axis)
                    q = bases[len(clustering.clusters[c])].site_index(kc, axis)
                    block = couplings.setdefault((int(a), int(c)), {})
                    block[(p, q)] = block.get((p, q), 0.0) + v
    sizes = [bases[len(c)].size for c in clustering.clusters]
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    return ClusterHamiltonian(clustering, bases, tuple(fields), couplings, offsets)


def weyl_gradient(h: ClusterHamiltonian, x: np.ndarray) -> np.ndarray:
    """``dH_W/dx`` for a flat phase point (or a stack of them on the last axis)."""
    x = np.asarray(x, dtype=np.float64)
    K = h.coupling_matrix()
    return h.field_vector + (K @ x.T).T


def weyl_energy(h: ClusterHamiltonian, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    K = h.coupling_matrix()
    return x @ h.field_vector + 0.5 * np.einsum("...i,...i->...", x, (K @ x.T).T)


def global_word(h: ClusterHamiltonian, c: int, p: int) -> np.ndarray:
    """Letter codes on all N spins of basis operator ``p`` of cluster ``c``."""
    word = np.zeros(h.clustering.n_spins, dtype=np.int8)
    members = h.clustering.clusters[c]
    word[list(members)] = h.basis(c).codes[p]
    return word


def pauli_word_operator(word) -> sp.csr_matrix:
    """Sparse matrix of a global Pauli word; spin 0 is the most significant bit."""
    word = np.asarray(word)
    n = len(word)
    dim = 2 ** n
    states = np.arange(dim, dtype=np.int64)
    flip = 0
    phase = np.ones(dim, dtype=np.complex128)
    for i, a in enumerate(word):
        bit = (states >> (n - 1 - i)) & 1
        sign = 1 - 2 * bit
        if a == 1:
            flip |= 1 << (n - 1 - i)
        elif a == 2:
            flip |= 1 << (n - 1 - i)
            phase *= 1j * sign
        elif a == 3:
            phase *= sign
    # column = input state, row = output state
    return sp.csr_matrix((phase, (states ^ flip, states)), shape=(dim, dim))


def to_dense(h: ClusterHamiltonian) -> np.ndarray:
    """Dense operator ``sum B_p X_p + sum J_pq X_p X_q`` on the full Hilbert space."""
    n = h.clustering.n_spins
    dim = 2 ** n
    H = sp.csr_matrix((dim, dim), dtype=np.complex128)
    for c, B in enumerate(h.fields):
        for p in np.nonzero(B)[0]:
            H = H + B[p] * pauli_word_operator(global_word(h, c, p))
    for (ci, cj), block in h.couplings.items():
        for (p, q), v in block.items():
            word = global_word(h, ci, p) + global_word(h, cj, q)
            H = H + v * pauli_word_operator(word)
    return H.toarray()
