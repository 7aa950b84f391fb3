"""Staggered magnetisation, two-site Renyi-2 entropies and ensemble statistics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .disorder import ConfigurationError


@dataclass
class ObservableSeries:
    times: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        self.stderr = np.asarray(self.stderr, dtype=np.float64)
        if not (len(self.times) == len(self.values) == len(self.stderr)):
            raise ValueError("times, values and stderr must have equal lengths")

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("time,mean,stderr\n")
            for t, v, e in zip(self.times, self.values, self.stderr):
                fh.write(f"{t:.17g},{v:.17g},{e:.17g}\n")

    @classmethod
    def from_csv(cls, path, metadata=None) -> "ObservableSeries":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1], data[:, 2], dict(metadata or {}))


@dataclass
class EnsembleResult:
    """Accumulated first moments of single-site components and pair correlators.

    ``sum_corr[k, p, a, b]`` is the sum over trajectories of
    ``sigma_i^a sigma_j^b`` for ``(i, j) = pairs[p]`` at save time ``k``; the
    axes ``a, b`` run over x, y, z.  Exact results set ``n_traj = 0`` and store
    expectation values directly in the ``sum_*`` fields.
    """

    times: np.ndarray
    n_spins: int
    pairs: np.ndarray
    sum_single: np.ndarray
    sum_corr: np.ndarray
    sum_single2: np.ndarray | None = None
    sum_corr2: np.ndarray | None = None
    sum_mst: np.ndarray | None = None
    sum_mst2: np.ndarray | None = None
    n_traj: int = 0
    n_failed: int = 0
    mst_traj: np.ndarray | None = None
    batches: list | None = None
    drifts: dict | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def exact(self) -> bool:
        return self.n_traj == 0

    @property
    def _norm(self) -> float:
        return 1.0 if self.exact else float(self.n_traj)

    @property
    def mean_single(self) -> np.ndarray:
        return self.sum_single / self._norm

    @property
    def mean_corr(self) -> np.ndarray:
        return self.sum_corr / self._norm

    def _stderr(self, s1, s2):
        if self.exact or s2 is None:
            return np.zeros_like(s1)
        n = self.n_traj
        mean = s1 / n
        var = np.clip(s2 / n - mean ** 2, 0.0, None) * n / max(n - 1, 1)
        return np.sqrt(var / n)

    @property
    def stderr_single(self) -> np.ndarray:
        return self._stderr(self.sum_single, self.sum_single2)

    @property
    def stderr_corr(self) -> np.ndarray:
        return self._stderr(self.sum_corr, self.sum_corr2)

    def pair_index(self, i: int, j: int) -> int:
        i, j = min(i, j), max(i, j)
        n = self.n_spins
        return i * n - i * (i + 1) // 2 + (j - i - 1)

    @classmethod
    def merge(cls, parts: list["EnsembleResult"]) -> "EnsembleResult":
        """Ordered reduction of partial sums (order fixed by the list)."""
        first = parts[0]

        def total(name):
            vals = [getattr(p, name) for p in parts]
            return None if vals[0] is None else np.sum(np.stack(vals), axis=0)

        mst = [p.mst_traj for p in parts]
        drifts = None
        if first.drifts is not None:
            drifts = {k: np.concatenate([p.drifts[k] for p in parts]) for k in first.drifts}
        return cls(first.times, first.n_spins, first.pairs,
                   total("sum_single"), total("sum_corr"),
                   total("sum_single2"), total("sum_corr2"),
                   total("sum_mst"), total("sum_mst2"),
                   sum(p.n_traj for p in parts), sum(p.n_failed for p in parts),
                   None if mst[0] is None else np.concatenate(mst),
                   None, drifts, dict(first.metadata))


def all_pairs(n: int) -> np.ndarray:
    i, j = np.triu_indices(n, k=1)
    return np.column_stack([i, j])


def staggered_sign(n: int) -> np.ndarray:
    return np.where(np.arange(n) % 2 == 0, 1.0, -1.0)


def staggered_magnetization(result: EnsembleResult) -> ObservableSeries:
    """``sum_i (-1)^i <sigma_i^z> / N`` with spins in chain order."""
    n = result.n_spins
    values = result.mean_single[:, :, 2] @ staggered_sign(n) / n
    if result.sum_mst is not None and not result.exact:
        stderr = result._stderr(result.sum_mst, result.sum_mst2)
    else:
        # component variances, ignoring cross-spin covariance
        se = result.stderr_single[:, :, 2]
        stderr = np.sqrt((se ** 2).sum(axis=1)) / n
    return ObservableSeries(result.times, values, stderr,
                            {**result.metadata, "observable": "mst"})


def _renyi_from_moments(si, sj, cij):
    total = 1.0 + (si ** 2).sum(-1) + (sj ** 2).sum(-1) + (cij ** 2).sum((-2, -1))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(total > 0, 2.0 - np.log2(total), np.nan)


def renyi2_pair(result: EnsembleResult, i: int, j: int) -> np.ndarray:
    """Plug-in Renyi-2 entropy of spins ``i, j`` from mean Pauli correlators."""
    if i == j:
        raise ValueError("need two distinct sites")
    p = result.pair_index(i, j)
    c = result.mean_corr[:, p]
    if i > j:
        c = np.swapaxes(c, -1, -2)
    return _renyi_from_moments(result.mean_single[:, i], result.mean_single[:, j], c)


def _average_renyi(mean_single, mean_corr, pairs):
    si = mean_single[:, pairs[:, 0]]
    sj = mean_single[:, pairs[:, 1]]
    return _renyi_from_moments(si, sj, mean_corr).mean(axis=1)


def average_pair_renyi(result: EnsembleResult) -> ObservableSeries:
    """Unweighted mean of the pair entropy over all ``N(N-1)/2`` pairs."""
    values = _average_renyi(result.mean_single, result.mean_corr, result.pairs)
    if result.batches:
        per = batch_renyi_values(result)
        stderr = per.std(axis=0, ddof=1) / np.sqrt(len(per)) if len(per) > 1 \
            else np.full_like(values, np.nan)
    elif result.exact:
        stderr = np.zeros_like(values)
    else:
        stderr = np.full_like(values, np.nan)
    return ObservableSeries(result.times, values, stderr,
                            {**result.metadata, "observable": "renyi2_avg"})


def renyi_plugin_bias(result: EnsembleResult) -> np.ndarray:
    """Estimated finite-ensemble bias of the pair-averaged plug-in entropy.

    Squaring a sample mean adds its variance on average, so with ``M``
    trajectories the purity is overestimated by ``sum var / M`` and the plug-in
    entropy comes out low.  Returns ``plug-in - corrected`` per save time
    (non-positive); zero for exact results.
    """
    if result.exact:
        return np.zeros(len(result.times))
    m = result.n_traj
    if m < 2 or result.sum_single2 is None or result.sum_corr2 is None:
        return np.full(len(result.times), np.nan)

    def var_of_mean(s1, s2):
        mu = s1 / m
        return np.clip(s2 / m - mu ** 2, 0.0, None) / (m - 1)

    vs = var_of_mean(result.sum_single, result.sum_single2)
    vc = var_of_mean(result.sum_corr, result.sum_corr2)
    p = result.pairs
    si, sj, c = result.mean_single[:, p[:, 0]], result.mean_single[:, p[:, 1]], result.mean_corr
    plug = 1.0 + (si ** 2).sum(-1) + (sj ** 2).sum(-1) + (c ** 2).sum((-2, -1))
    excess = vs[:, p[:, 0]].sum(-1) + vs[:, p[:, 1]].sum(-1) + vc.sum((-2, -1))
    corrected = np.maximum(plug - excess, 1e-300)
    return (np.log2(corrected) - np.log2(plug)).mean(axis=1)


def batch_renyi_values(result: EnsembleResult) -> np.ndarray:
    """Average pair entropy evaluated separately on every stored batch, ``(n_batches, K)``."""
    if not result.batches:
        raise ConfigurationError("result carries no batch records")
    return np.array([_average_renyi(s / n, c / n, result.pairs)
                     for n, s, c in result.batches])


def batch_std(values, batch_size: int, statistic=None, times=None) -> ObservableSeries:
    """Spread of Monte Carlo estimates across trajectories or batches.

    ``values`` has trajectories on axis 0.  Without ``statistic`` (linear
    observables) this is the standard deviation of single-trajectory values;
    otherwise ``statistic`` is evaluated on each batch of ``batch_size``
    consecutive trajectories and the deviation is taken across batches.
    """
    values = np.asarray(values, dtype=np.float64)
    m = values.shape[0]
    if batch_size < 1 or m % batch_size != 0:
        raise ConfigurationError(f"batch_size={batch_size} does not divide {m} trajectories")
    if statistic is None:
        std = values.std(axis=0, ddof=1)
    else:
        batches = values.reshape(m // batch_size, batch_size, *values.shape[1:])
        std = np.array([statistic(b) for b in batches]).std(axis=0, ddof=1)
    if times is None:
        times = np.arange(std.shape[0], dtype=np.float64)
    return ObservableSeries(times, std, np.zeros_like(std), {"observable": "batch_std",
                                                            "batch_size": batch_size})


def disorder_average(series: list[ObservableSeries]) -> ObservableSeries:
    """Pointwise mean over realizations with the standard error of that mean."""
    if not series:
        raise ConfigurationError("no series to average")
    times = series[0].times
    for s in series[1:]:
        if s.times.shape != times.shape or not np.array_equal(s.times, times):
            raise ConfigurationError("time grids differ between realizations")
    vals = np.stack([s.values for s in series])
    n = len(series)
    stderr = vals.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros_like(vals[0])
    meta = {**series[0].metadata, "n_disorder": n}
    return ObservableSeries(times, vals.mean(axis=0), stderr, meta)
