"""Initial phase points for product states: Gaussian and discrete Wigner sampling."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import OperatorBasis, multiply_words
from .clustering import Clustering

PSD_TOL = 1e-9


@dataclass(frozen=True)
class ProductState:
    """Unit Bloch vector per spin; ``bloch[i] = (x, y, z)``."""

    bloch: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bloch, dtype=np.float64)
        if b.ndim != 2 or b.shape[1] != 3:
            raise ValueError("bloch must have shape (N, 3)")
        if np.any(np.abs(np.linalg.norm(b, axis=1) - 1.0) > 1e-12):
            raise ValueError("Bloch vectors must have unit norm")
        object.__setattr__(self, "bloch", b)

    @property
    def n_spins(self) -> int:
        return len(self.bloch)


def neel_state(n_spins: int) -> ProductState:
    """``|up down up down ...>`` in chain order."""
    z = np.where(np.arange(n_spins) % 2 == 0, 1.0, -1.0)
    return ProductState(np.column_stack([np.zeros(n_spins), np.zeros(n_spins), z]))


def _site_tables(vectors: np.ndarray) -> np.ndarray:
    """Rows ``(1, v_x, v_y, v_z)``, indexed by letter code."""
    return np.column_stack([np.ones(len(vectors)), vectors])


def word_values(basis: OperatorBasis, site_vectors: np.ndarray) -> np.ndarray:
    """Product over sites of the per-site component selected by each word letter.

    For quantum product states this is ``<X_p>``; for discrete samples it is the
    phase-point vector built from the single-spin vectors.
    """
    table = _site_tables(np.asarray(site_vectors, dtype=np.float64))
    out = np.ones(basis.size)
    for k in range(basis.n):
        out *= table[k, basis.codes[:, k]]
    return out


def cluster_phase_point(spins: np.ndarray, clustering: Clustering,
                        bases: dict[int, OperatorBasis]) -> np.ndarray:
    """Flat phase point whose multi-site components are products of site vectors."""
    parts = [word_values(bases[len(c)], spins[list(c)]) for c in clustering.clusters]
    return np.concatenate(parts)


# -- Gaussian moment matching --------------------------------------------------

@dataclass(frozen=True)
class GaussianParams:
    means: tuple[np.ndarray, ...]
    covariances: tuple[np.ndarray, ...] = field(repr=False)
    factors: tuple[np.ndarray, ...] = field(repr=False)

    @property
    def mean(self) -> np.ndarray:
        return np.concatenate(self.means)


def _cluster_moments(basis: OperatorBasis, vectors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    table = _site_tables(vectors)
    mu = word_values(basis, vectors)
    m2 = np.empty((basis.size, basis.size))
    for q in range(basis.size):
        prod, k = multiply_words(basis.codes, basis.codes[q])
        val = np.ones(basis.size)
        for s in range(basis.n):
            val *= table[s, prod[:, s]]
        # (X_q X_r + X_r X_q)/2 vanishes for anticommuting pairs
        m2[:, q] = np.where(k % 2 == 0, np.where(k == 0, 1.0, -1.0) * val, 0.0)
    return mu, m2


def gaussian_params(state: ProductState, clustering: Clustering,
                    bases: dict[int, OperatorBasis]) -> GaussianParams:
    """Per-cluster Gaussian matching ``<X_q>`` and ``<{X_q, X_r}>/2`` exactly."""
    means, covs, factors = [], [], []
    for c in clustering.clusters:
        basis = bases[len(c)]
        mu, m2 = _cluster_moments(basis, state.bloch[list(c)])
        cov = m2 - np.outer(mu, mu)
        w, V = np.linalg.eigh(cov)
        if w.min() < -PSD_TOL:
            raise RuntimeError(f"covariance not PSD (min eigenvalue {w.min():.3e})")
        means.append(mu)
        covs.append(cov)
        factors.append(V * np.sqrt(np.clip(w, 0.0, None)))
    return GaussianParams(tuple(means), tuple(covs), tuple(factors))


def sample_gaussian(params: GaussianParams, rng: np.random.Generator) -> np.ndarray:
    parts = [mu + A @ rng.standard_normal(len(mu))
             for mu, A in zip(params.means, params.factors)]
    return np.concatenate(parts)


# -- discrete sampling ---------------------------------------------------------

def rotation_to(direction) -> np.ndarray:
    """Rotation ``Rz(phi) Ry(theta)`` taking +z to ``direction``."""
    x, y, z = direction
    # arctan2 keeps small tilts that arccos(z) rounds away near the poles
    theta = np.arctan2(np.hypot(x, y), z)
    phi = np.arctan2(y, x)
    ct, st, cp, sp_ = np.cos(theta), np.sin(theta), np.cos(phi), np.sin(phi)
    ry = np.array([[ct, 0.0, st], [0.0, 1.0, 0.0], [-st, 0.0, ct]])
    rz = np.array([[cp, -sp_, 0.0], [sp_, cp, 0.0], [0.0, 0.0, 1.0]])
    R = rz @ ry
    R[np.abs(R) < 1e-15] = 0.0
    return R


def sample_discrete_spins(state: ProductState, rng: np.random.Generator) -> np.ndarray:
    """One discrete phase point per spin, shape ``(N, 3)``.

    In the frame aligned with the Bloch vector the longitudinal component is 1
    and both transverse components are independent uniform +-1, which is the
    equal mixture over both phase-point sets.
    """
    n = state.n_spins
    aligned = np.ones((n, 3))
    aligned[:, :2] = 2.0 * rng.integers(0, 2, size=(n, 2)) - 1.0
    out = np.empty_like(aligned)
    for i, b in enumerate(state.bloch):
        if b[0] == 0.0 and b[1] == 0.0:
            # axis-aligned along z: skip the rotation so values stay exactly +-1
            out[i] = aligned[i] if b[2] > 0 else aligned[i] * (-1.0, 1.0, -1.0)
        else:
            out[i] = rotation_to(b) @ aligned[i]
    return out


def sample_discrete(state: ProductState, clustering: Clustering,
                    bases: dict[int, OperatorBasis], rng: np.random.Generator) -> np.ndarray:
    return cluster_phase_point(sample_discrete_spins(state, rng), clustering, bases)
