"""Random spin placement on a 1D lattice and power-law couplings."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np


class ConfigurationError(ValueError):
    """Invalid model or run parameters."""


# Stream tags for SeedSequence spawn keys.  A stream is identified by
# (tag, disorder index[, trajectory index]) under the run's master seed.
DISORDER_STREAM = 0
TRAJECTORY_STREAM = 1


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent random stream addressed by ``key`` under ``seed``.

    Streams depend only on (seed, key), never on execution order.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def disorder_stream(seed: int, disorder_index: int) -> np.random.Generator:
    return stream(seed, DISORDER_STREAM, disorder_index)


def trajectory_stream(seed: int, disorder_index: int, traj_index: int) -> np.random.Generator:
    return stream(seed, TRAJECTORY_STREAM, disorder_index, traj_index)


@dataclass(frozen=True)
class ModelParams:
    n_spins: int
    lattice_len: int
    alpha: float
    delta: float
    j0: float = 1.0

    def __post_init__(self):
        if self.n_spins < 1:
            raise ConfigurationError(f"n_spins must be positive, got {self.n_spins}")
        if self.lattice_len < self.n_spins:
            raise ConfigurationError(
                f"n_spins={self.n_spins} exceeds lattice_len={self.lattice_len}")
        if self.alpha < 0:
            raise ConfigurationError(f"alpha must be non-negative, got {self.alpha}")

    @property
    def filling(self) -> float:
        return self.n_spins / self.lattice_len

    @classmethod
    def from_filling(cls, n_spins: int, filling: float, alpha: float, delta: float,
                     j0: float = 1.0) -> "ModelParams":
        if not 0 < filling <= 1:
            raise ConfigurationError(f"filling must lie in (0, 1], got {filling}")
        return cls(n_spins, int(round(n_spins / filling)), alpha, delta, j0)


@dataclass(frozen=True)
class DisorderRealization:
    params: ModelParams
    positions: np.ndarray
    couplings: np.ndarray
    seed: int | None = None
    index: int | None = None

    @property
    def n_spins(self) -> int:
        return self.params.n_spins

    def to_json(self) -> str:
        return json.dumps({
            "params": asdict(self.params),
            "positions": [int(p) for p in self.positions],
            "seed": self.seed,
            "index": self.index,
        })

    @classmethod
    def from_json(cls, text: str) -> "DisorderRealization":
        d = json.loads(text)
        params = ModelParams(**d["params"])
        pos = np.array(d["positions"], dtype=np.int64)
        return cls(params, pos, build_couplings(pos, params), d.get("seed"), d.get("index"))


def sample_positions(params: ModelParams, rng: np.random.Generator) -> np.ndarray:
    """``n_spins`` distinct sites drawn uniformly from ``range(lattice_len)``, sorted."""
    n, L = params.n_spins, params.lattice_len
    if n > L:
        raise ConfigurationError(f"cannot place {n} spins on {L} sites")
    # partial Fisher-Yates: the first n slots end up a uniform n-subset
    sites = np.arange(L, dtype=np.int64)
    for k in range(n):
        j = k + int(rng.integers(L - k))
        sites[k], sites[j] = sites[j], sites[k]
    return np.sort(sites[:n])


def build_couplings(positions, params: ModelParams) -> np.ndarray:
    """Symmetric ``J_ij = j0 |r_i - r_j|^-alpha`` with zero diagonal (open chain)."""
    r = np.asarray(positions, dtype=np.float64)
    dist = np.abs(r[:, None] - r[None, :])
    np.fill_diagonal(dist, 1.0)
    J = params.j0 * dist ** (-params.alpha)
    np.fill_diagonal(J, 0.0)
    return J


def make_realization(params: ModelParams, seed: int, index: int = 0) -> DisorderRealization:
    """Realization number ``index`` derived from the master ``seed``."""
    pos = sample_positions(params, disorder_stream(seed, index))
    return DisorderRealization(params, pos, build_couplings(pos, params), seed, index)


def realization_from_positions(positions, params: ModelParams) -> DisorderRealization:
    pos = np.asarray(positions, dtype=np.int64)
    if len(pos) != params.n_spins:
        raise ConfigurationError("number of positions does not match n_spins")
    if np.any(np.diff(pos) <= 0):
        raise ConfigurationError("positions must be strictly increasing")
    return DisorderRealization(params, pos, build_couplings(pos, params))
