"""Classical cluster equations of motion and trajectory ensembles."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numba
import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from . import _kernel
from .algebra import DEFAULT_MAX_CLUSTER, StructureConstants, structure_constants
from .clustering import Clustering
from .disorder import ConfigurationError, DisorderRealization, trajectory_stream
from .hamiltonian import ClusterHamiltonian, project
from .observables import EnsembleResult, all_pairs, staggered_sign
from .sampling import (ProductState, cluster_phase_point, gaussian_params,
                       sample_discrete_spins, sample_gaussian, word_values)

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_CHUNK = 100
MAX_STEPS = 10_000_000


@dataclass(frozen=True)
class TimeGrid:
    times: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        if t.ndim != 1 or len(t) == 0 or t[0] < 0 or np.any(np.diff(t) <= 0):
            raise ConfigurationError("save times must be non-negative and strictly increasing")
        object.__setattr__(self, "times", t)

    def __len__(self):
        return len(self.times)

    @classmethod
    def linear(cls, t_max: float, n_points: int) -> "TimeGrid":
        return cls(np.linspace(0.0, t_max, n_points))

    @classmethod
    def log(cls, t_max: float, n_points: int, t_min: float = 0.1) -> "TimeGrid":
        """``n_points`` log-spaced times in ``[t_min, t_max]`` with ``t = 0`` prepended."""
        return cls(np.concatenate([[0.0], np.geomspace(t_min, t_max, n_points)]))


@dataclass(frozen=True)
class CompiledModel:
    """Flat arrays consumed by the compiled integrator."""

    h: ClusterHamiltonian
    B: np.ndarray
    krow: np.ndarray
    kcol: np.ndarray
    kval: np.ndarray
    ep: np.ndarray
    eq: np.ndarray
    er: np.ndarray
    ev: np.ndarray
    zidx: np.ndarray
    single_idx: np.ndarray  # (N, 3) global index of sigma_i^a
    pair_idx: dict = field(repr=False)  # pair number -> (3, 3) global indices, same cluster only

    @property
    def n_vars(self) -> int:
        return self.h.n_vars


def gradient_support(h: ClusterHamiltonian, krow: np.ndarray) -> list[np.ndarray]:
    """Per cluster, the basis indices where ``dH_W/dx`` can be nonzero."""
    coupled = set(krow.tolist())
    out = []
    for c, B in enumerate(h.fields):
        off = h.offsets[c]
        idx = {int(p) for p in np.nonzero(B)[0]}
        idx |= {i - off for i in coupled if off <= i < h.offsets[c + 1]}
        out.append(np.array(sorted(idx), dtype=np.int64))
    return out


def compile_model(h: ClusterHamiltonian,
                  f: dict[int, StructureConstants] | None = None) -> CompiledModel:
    """Flatten ``h`` and the structure constants restricted to the gradient support.

    ``f`` optionally supplies precomputed constants per cluster size; they are
    filtered to the support, otherwise only the needed entries are computed.
    """
    krow, kcol, kval = h.coupling_coo()
    support = gradient_support(h, krow)
    cache: dict = {}
    ep, eq, er, ev = [], [], [], []
    for c, qs in enumerate(support):
        basis = h.basis(c)
        key = (basis.n, tuple(qs))
        if key not in cache:
            if f is not None and basis.n in f:
                full = f[basis.n]
                parts = [full.for_q(q) for q in qs]
                cache[key] = [(p, np.full(len(p), q), r, v) for (p, r, v), q in zip(parts, qs)]
            else:
                sc = structure_constants(basis, q_subset=qs)
                cache[key] = [(sc.p, sc.q, sc.r, sc.value)]
        off = h.offsets[c]
        for p, q, r, v in cache[key]:
            ep.append(p + off)
            eq.append(q + off)
            er.append(r + off)
            ev.append(v.astype(np.float64))
    cat = (lambda xs, dt: np.concatenate(xs).astype(dt) if xs else np.zeros(0, dt))
    clustering = h.clustering
    which, slot = clustering.locate()
    n = clustering.n_spins
    single = np.array([[h.offsets[which[i]] + h.basis(which[i]).site_index(slot[i], a)
                        for a in (1, 2, 3)] for i in range(n)], dtype=np.int64)
    pair_idx = {}
    for k, (i, j) in enumerate(all_pairs(n)):
        if which[i] == which[j]:
            b = h.basis(which[i])
            off = h.offsets[which[i]]
            pair_idx[k] = np.array([[off + b.pair_index(slot[i], a, slot[j], bb)
                                     for bb in (1, 2, 3)] for a in (1, 2, 3)], dtype=np.int64)
    return CompiledModel(h, h.field_vector.astype(np.float64), krow, kcol, kval,
                         cat(ep, np.int64), cat(eq, np.int64), cat(er, np.int64),
                         cat(ev, np.float64), single[:, 2].copy(), single, pair_idx)


def eom_rhs(model: CompiledModel, x: np.ndarray) -> np.ndarray:
    """``dx/dt`` at a single phase point."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    g = np.empty_like(x)
    dx = np.empty_like(x)
    _kernel.rhs(x, model.B, model.krow, model.kcol, model.kval,
                model.ep, model.eq, model.er, model.ev, g, dx)
    return dx


@dataclass
class Trajectory:
    times: np.ndarray
    x: np.ndarray
    energy: np.ndarray
    magnetization: np.ndarray
    casimir: np.ndarray  # (K, n_clusters)
    status: int
    nfev: int

    @property
    def failed(self) -> bool:
        return self.status != _kernel.OK

    @property
    def energy_drift(self) -> float:
        return float(np.max(np.abs(self.energy - self.energy[0])) / max(1.0, abs(self.energy[0])))

    @property
    def casimir_drift(self) -> float:
        c0 = self.casimir[0]
        return float(np.max(np.abs(self.casimir - c0) / np.maximum(1.0, np.abs(c0))))

    @property
    def magnetization_drift(self) -> float:
        return float(np.max(np.abs(self.magnetization - self.magnetization[0])))


def _run_batch(model: CompiledModel, X0: np.ndarray, times: np.ndarray, tol: float,
               record: np.ndarray):
    m = X0.shape[0]
    n_clusters = len(model.h.offsets) - 1
    out = np.zeros((m, len(times), len(record)))
    diag = np.zeros((m, len(times), 2 + n_clusters))
    status = np.zeros(m, dtype=np.int64)
    nfev = np.zeros(m, dtype=np.int64)
    _kernel.integrate_batch(np.ascontiguousarray(X0, dtype=np.float64), times, tol, tol,
                            MAX_STEPS, model.B, model.krow, model.kcol, model.kval,
                            model.ep, model.eq, model.er, model.ev, record,
                            model.h.offsets, model.zidx, out, diag, status, nfev)
    return out, diag, status, nfev


def evolve(h: ClusterHamiltonian | CompiledModel, x0, grid: TimeGrid,
           tol: float = DEFAULT_TOL, f: dict[int, StructureConstants] | None = None) -> Trajectory:
    """Integrate ``dx_p/dt = f_pqr (dH_W/dx_q) x_r`` from ``x0`` over ``grid``."""
    if tol <= 0:
        raise ConfigurationError("tolerance must be positive")
    model = h if isinstance(h, CompiledModel) else compile_model(h, f)
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (model.n_vars,):
        raise ConfigurationError(f"phase point has shape {x0.shape}, expected ({model.n_vars},)")
    record = np.arange(model.n_vars, dtype=np.int64)
    out, diag, status, nfev = _run_batch(model, x0[None], grid.times, tol, record)
    return Trajectory(grid.times, out[0], diag[0, :, 0], diag[0, :, 1], diag[0, :, 2:],
                      int(status[0]), int(nfev[0]))


# -- ensembles -----------------------------------------------------------------

SAMPLERS = ("gaussian", "discrete")


def make_sampler(kind: str, state: ProductState, h: ClusterHamiltonian):
    if kind == "discrete":
        return lambda rng: cluster_phase_point(sample_discrete_spins(state, rng),
                                               h.clustering, h.bases)
    if kind == "gaussian":
        params = gaussian_params(state, h.clustering, h.bases)
        return lambda rng: sample_gaussian(params, rng)
    raise ConfigurationError(f"unknown sampler {kind!r}; expected one of {SAMPLERS}")


def _record_layout(model: CompiledModel):
    n = model.single_idx.shape[0]
    rec = [model.single_idx.ravel()]
    same = sorted(model.pair_idx)
    rec += [model.pair_idx[k].ravel() for k in same]
    return np.concatenate(rec).astype(np.int64), n, same


def _chunk_moments(model, out, n, same, pairs):
    m, K, _ = out.shape
    single = out[:, :, :3 * n].reshape(m, K, n, 3)
    corr = single[:, :, pairs[:, 0], :, None] * single[:, :, pairs[:, 1], None, :]
    base = 3 * n
    for k_idx, k in enumerate(same):
        corr[:, :, k] = out[:, :, base + 9 * k_idx: base + 9 * (k_idx + 1)].reshape(m, K, 3, 3)
    return single, corr


def run_ensemble(realization: DisorderRealization, clustering: Clustering, sampler: str,
                 state: ProductState, grid: TimeGrid, n_traj: int, seed: int, *,
                 tol: float = DEFAULT_TOL, batch_size: int | None = None,
                 store_trajectories: bool = False, workers: int = 1,
                 chunk_size: int = DEFAULT_CHUNK, n_max: int = DEFAULT_MAX_CLUSTER,
                 model: CompiledModel | None = None) -> EnsembleResult:
    """Sample, evolve and accumulate ``n_traj`` trajectories of one realization.

    Trajectory ``m`` draws from the stream ``(seed, disorder index, m)`` and the
    work is split into fixed chunks whose partial sums are reduced in order, so
    the output does not depend on ``workers``.  With ``batch_size`` the chunks
    are batches and their partial sums are kept for batch statistics.
    """
    if n_traj < 1:
        raise ConfigurationError("n_traj must be >= 1")
    if state.n_spins != realization.n_spins:
        raise ConfigurationError("initial state and realization differ in N")
    if batch_size is not None:
        if n_traj % batch_size:
            raise ConfigurationError(f"batch_size={batch_size} does not divide n_traj={n_traj}")
        chunk_size = batch_size
    if model is None:
        model = compile_model(project(realization, clustering, n_max))
    h = model.h
    draw = make_sampler(sampler, state, h)
    record, n, same = _record_layout(model)
    pairs = all_pairs(n)
    sign = staggered_sign(n) / n
    times = grid.times
    d_index = realization.index or 0
    if workers > 1:
        numba.set_num_threads(min(workers, numba.config.NUMBA_NUM_THREADS))

    parts, batches = [], []
    for start in range(0, n_traj, chunk_size):
        ids = range(start, min(start + chunk_size, n_traj))
        X0 = np.stack([draw(trajectory_stream(seed, d_index, m)) for m in ids])
        out, diag, status, _ = _run_batch(model, X0, times, tol, record)
        ok = status == _kernel.OK
        if not ok.all():
            log.warning("%d of %d trajectories failed (status %s) in realization %d",
                        int((~ok).sum()), len(ok), np.unique(status[~ok]).tolist(), d_index)
        out, diag = out[ok], diag[ok]
        single, corr = _chunk_moments(model, out, n, same, pairs)
        mst = single[:, :, :, 2] @ sign
        e, mz, cas = diag[:, :, 0], diag[:, :, 1], diag[:, :, 2:]
        drifts = {
            "energy": np.max(np.abs(e - e[:, :1]), axis=1) / np.maximum(1.0, np.abs(e[:, 0])),
            "casimir": np.max(np.abs(cas - cas[:, :1]) / np.maximum(1.0, np.abs(cas[:, :1])),
                              axis=(1, 2)) if cas.shape[2] else np.zeros(len(e)),
            "magnetization": np.max(np.abs(mz - mz[:, :1]), axis=1),
        }
        part = EnsembleResult(times, n, pairs, single.sum(0), corr.sum(0),
                              (single ** 2).sum(0), (corr ** 2).sum(0),
                              mst.sum(0), (mst ** 2).sum(0), int(ok.sum()), int((~ok).sum()),
                              mst if store_trajectories else None, None, drifts)
        parts.append(part)
        if batch_size is not None:
            batches.append((int(ok.sum()), part.sum_single, part.sum_corr))
    result = EnsembleResult.merge(parts)
    result.batches = batches or None
    result.metadata = {"sampler": sampler, "clusters": [list(c) for c in clustering.clusters],
                       "n_traj": n_traj, "seed": seed, "disorder_index": d_index, "tol": tol}
    if result.n_failed:
        log.warning("%d failed trajectories excluded", result.n_failed)
    return result


# -- whole-system cluster ----------------------------------------------------

def linear_flow_generator(h: ClusterHamiltonian) -> sp.csr_matrix:
    """``L`` with ``dx/dt = L x`` for a single cluster (no inter-cluster terms).

    ``L_pr = sum_q f_pqr B_q``, using only the ``q`` where ``B_q != 0``.
    """
    if len(h.clustering.clusters) != 1:
        raise ConfigurationError("linear flow requires a single whole-system cluster")
    basis = h.basis(0)
    B = h.fields[0]
    qs = np.nonzero(B)[0]
    sc = structure_constants(basis, q_subset=qs)
    vals = sc.value.astype(np.float64) * B[sc.q]
    return sp.csr_matrix((vals, (sc.p, sc.r)), shape=(basis.size, basis.size))


def single_cluster_mst(realization: DisorderRealization, state: ProductState, grid: TimeGrid,
                       n_traj: int, seed: int, chunk_size: int = 500,
                       n_max: int = 8) -> np.ndarray:
    """Per-trajectory staggered magnetisation, shape ``(n_traj, K)``, for discrete
    sampling with the whole system as one cluster.

    With a single cluster the Weyl flow is linear, so the observable is carried
    backwards instead: ``M(t) = (exp(L^T t) c) . x0``.  Avoids one
    ``4^N``-dimensional integration per trajectory.
    """
    n = realization.n_spins
    clustering = Clustering((tuple(range(n)),), n)
    h = project(realization, clustering, n_max)
    basis = h.basis(0)
    L = linear_flow_generator(h)
    c = np.zeros(basis.size)
    sign = staggered_sign(n) / n
    for i in range(n):
        c[basis.site_index(i, 3)] = sign[i]
    t = grid.times
    coeffs = np.empty((len(t), basis.size))
    coeffs[0] = c
    LT = L.T.tocsr()
    for k in range(1, len(t)):
        coeffs[k] = expm_multiply(LT * (t[k] - t[k - 1]), coeffs[k - 1])
    d_index = realization.index or 0
    out = np.empty((n_traj, len(t)))
    for start in range(0, n_traj, chunk_size):
        ids = range(start, min(start + chunk_size, n_traj))
        X0 = np.stack([word_values(basis, sample_discrete_spins(state, trajectory_stream(seed, d_index, m)))
                       for m in ids])
        out[start:start + len(ids)] = X0 @ coeffs.T
    return out
