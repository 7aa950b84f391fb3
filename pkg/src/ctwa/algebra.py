"""Pauli-string operator basis for spin clusters and its structure constants.

Words are stored as integer codes per site, ``0=I, 1=X, 2=Y, 3=Z``.  With this
encoding the letter part of a single-site product is the bitwise XOR of the
codes, and the phase is ``+i`` for cyclic pairs (XY, YZ, ZX) and ``-i`` for
anti-cyclic ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LETTERS = "IXYZ"
DEFAULT_MAX_CLUSTER = 6


class ResourceError(RuntimeError):
    """Raised when a requested size exceeds a configured resource cap."""


def _recursive_labels(n: int) -> list[str]:
    if n == 1:
        return ["X", "Y", "Z"]
    rest = _recursive_labels(n - 1)
    pad = "I" * (n - 1)
    return ([a + pad for a in "XYZ"]
            + ["I" + w for w in rest]
            + [a + w for a in "XYZ" for w in rest])


@dataclass(frozen=True)
class OperatorBasis:
    """Trace-orthogonal Pauli strings of an ``n``-spin cluster, identity excluded.

    ``codes[p, k]`` is the letter code of operator ``p`` on cluster site ``k``;
    ``index_of`` maps a base-4 word key (site 0 most significant) to ``p``.
    """

    n: int
    labels: tuple[str, ...]
    codes: np.ndarray = field(repr=False)
    index_of: np.ndarray = field(repr=False)

    @property
    def dim_hilbert(self) -> int:
        return 2 ** self.n

    @property
    def size(self) -> int:
        return len(self.labels)

    def index(self, word) -> int:
        """Basis index of a word given as a string (``"XIZ"``) or code sequence."""
        if isinstance(word, str):
            word = [LETTERS.index(c) for c in word]
        if len(word) != self.n:
            raise ValueError(f"word {word!r} has wrong length for n={self.n}")
        idx = int(self.index_of[word_key(word)])
        if idx < 0:
            raise ValueError("the identity word is not part of the basis")
        return idx

    def site_index(self, site: int, axis: int) -> int:
        """Index of the single-site operator ``sigma^axis`` (1..3) on ``site``."""
        word = [0] * self.n
        word[site] = axis
        return self.index(word)

    def pair_index(self, i: int, a: int, j: int, b: int) -> int:
        """Index of ``sigma_i^a sigma_j^b`` for two distinct cluster sites."""
        word = [0] * self.n
        word[i] = a
        word[j] = b
        return self.index(word)


def word_key(codes) -> int:
    key = 0
    for c in codes:
        key = 4 * key + int(c)
    return key


def build_basis(n: int, n_max: int = DEFAULT_MAX_CLUSTER) -> OperatorBasis:
    """Operator basis of an ``n``-spin cluster in recursive order.

    The order is ``(X_1 (x) 1, 1 (x) X_{n-1}, X_1 (x) X_{n-1})``; for two spins
    this gives X1, Y1, Z1, X2, Y2, Z2, XX, XY, XZ, YX, YY, YZ, ZX, ZY, ZZ.
    """
    if n < 1:
        raise ValueError(f"cluster size must be >= 1, got {n}")
    if n > n_max:
        raise ResourceError(f"cluster size {n} exceeds the configured maximum {n_max}")
    labels = _recursive_labels(n)
    codes = np.array([[LETTERS.index(c) for c in w] for w in labels], dtype=np.int8)
    weights = 4 ** np.arange(n - 1, -1, -1, dtype=np.int64)
    keys = codes.astype(np.int64) @ weights
    index_of = np.full(4 ** n, -1, dtype=np.int64)
    index_of[keys] = np.arange(len(labels))
    return OperatorBasis(n=n, labels=tuple(labels), codes=codes, index_of=index_of)


def multiply_words(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Product of Pauli words ``a @ b`` (broadcasting over leading axes).

    Returns ``(codes, k)`` such that ``P_a P_b = i**k P_codes`` with ``k`` in 0..3.
    """
    a = np.asarray(a, dtype=np.int8)
    b = np.asarray(b, dtype=np.int8)
    both = (a != 0) & (b != 0) & (a != b)
    cyclic = ((b.astype(np.int16) - a) % 3) == 1
    k = np.where(both, np.where(cyclic, 1, 3), 0).sum(axis=-1) % 4
    return a ^ b, k


@dataclass(frozen=True)
class StructureConstants:
    """Sparse ``f_pqr`` with ``[X_p, X_q] = i f_pqr X_r``, sorted by ``q``.

    Entries for gradient index ``q`` live in ``slice(qptr[q], qptr[q+1])``.
    Values are stored as small integers (always +-2 for Pauli strings).
    """

    n_ops: int
    p: np.ndarray
    q: np.ndarray
    r: np.ndarray
    value: np.ndarray
    qptr: np.ndarray

    def __len__(self) -> int:
        return len(self.value)

    def for_q(self, q: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        s = slice(self.qptr[q], self.qptr[q + 1])
        return self.p[s], self.r[s], self.value[s]

    def as_dict(self) -> dict[tuple[int, int, int], int]:
        return {(int(a), int(b), int(c)): int(v)
                for a, b, c, v in zip(self.p, self.q, self.r, self.value)}

    def dump(self, basis: OperatorBasis) -> str:
        """Plain-text listing of the nonzero entries, one per line."""
        lines = [f"{basis.labels[a]} {basis.labels[b]} {basis.labels[c]} {v:+d}"
                 for a, b, c, v in zip(self.p, self.q, self.r, self.value)]
        return "\n".join(lines)


def structure_constants(basis: OperatorBasis, q_subset=None) -> StructureConstants:
    """Nonzero structure constants, computed from Pauli-word multiplication.

    ``q_subset`` restricts the second index to the given basis indices, which is
    all the equations of motion need when the gradient has sparse support.
    """
    n_ops = basis.size
    qs = np.arange(n_ops) if q_subset is None else np.unique(np.asarray(q_subset, dtype=np.int64))
    weights = 4 ** np.arange(basis.n - 1, -1, -1, dtype=np.int64)
    ps, qq, rs, vs = [], [], [], []
    counts = np.zeros(n_ops, dtype=np.int64)
    for q in qs:
        prod, k = multiply_words(basis.codes, basis.codes[q])
        # X_p X_q = i^k X_w; commutator nonzero only for odd k, then f = 2 i^k / i
        anti = (k % 2) == 1
        if not anti.any():
            continue
        p_idx = np.nonzero(anti)[0]
        r_idx = basis.index_of[prod[anti].astype(np.int64) @ weights]
        val = np.where(k[anti] == 1, 2, -2).astype(np.int8)
        ps.append(p_idx)
        qq.append(np.full(len(p_idx), q, dtype=np.int64))
        rs.append(r_idx)
        vs.append(val)
        counts[q] = len(p_idx)
    if ps:
        p_arr, q_arr, r_arr = (np.concatenate(v) for v in (ps, qq, rs))
        v_arr = np.concatenate(vs)
    else:
        p_arr = q_arr = r_arr = np.zeros(0, dtype=np.int64)
        v_arr = np.zeros(0, dtype=np.int8)
    qptr = np.concatenate([[0], np.cumsum(counts)])
    return StructureConstants(n_ops, p_arr, q_arr, r_arr, v_arr, qptr)
