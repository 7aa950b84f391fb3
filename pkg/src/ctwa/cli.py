"""Batch runner: method x disorder x trajectory sweeps driven by a TOML config.

Example config::

    [model]
    n_spins = 12
    filling = 0.1          # or lattice_len = 120
    alpha = 1.0
    delta = 0.0

    [method]
    name = "dctwa"         # dtwa | gctwa | dctwa | ed
    clustering = "rg"      # rg | naive
    cluster_size = 2       # naive clustering only

    [run]
    n_disorder = 10
    n_traj = 500
    seed = 1
    batch_size = 100       # optional, enables batch_std

    [grid]
    kind = "log"           # log | linear
    t_max = 100.0
    n_points = 60

    observables = ["mst", "renyi2_avg"]
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import sys
from dataclasses import dataclass
from importlib import metadata as _md
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .algebra import ResourceError
from .clustering import naive_clusters, rg_pair_clusters
from .disorder import ConfigurationError, ModelParams, make_realization
from .dynamics import DEFAULT_TOL, TimeGrid, run_ensemble
from .exact import MAX_ED_SPINS, ed_evolve
from .observables import (ObservableSeries, average_pair_renyi, batch_renyi_values,
                          batch_std, disorder_average, renyi2_pair,
                          staggered_magnetization)
from .sampling import neel_state

log = logging.getLogger("ctwa")

METHODS = ("dtwa", "gctwa", "dctwa", "ed")
OBSERVABLES = ("mst", "renyi2_avg", "renyi2_pairs", "batch_std")
_SAMPLER_OF = {"gctwa": "gaussian", "dctwa": "discrete", "dtwa": "discrete"}


def _version() -> str:
    try:
        return _md.version("artifact")
    except _md.PackageNotFoundError:
        return "0+unknown"


@dataclass
class RunConfig:
    model: ModelParams
    method: str
    clustering: str
    cluster_size: int
    sampler: str | None
    n_disorder: int
    n_traj: int
    seed: int
    grid_kind: str
    t_max: float
    n_points: int
    t_min: float
    observables: tuple[str, ...]
    batch_size: int | None
    tol: float
    threads: int
    output_dir: Path

    def grid(self) -> TimeGrid:
        if self.grid_kind == "log":
            return TimeGrid.log(self.t_max, self.n_points, self.t_min)
        return TimeGrid.linear(self.t_max, self.n_points)

    def record(self) -> dict:
        """Everything that determines the outputs (not threads or output_dir)."""
        m = self.model
        return {
            "model": {"n_spins": m.n_spins, "lattice_len": m.lattice_len, "alpha": m.alpha,
                      "delta": m.delta, "j0": m.j0},
            "method": {"name": self.method, "clustering": self.clustering,
                       "cluster_size": self.cluster_size, "sampler": self.sampler},
            "run": {"n_disorder": self.n_disorder, "n_traj": self.n_traj, "seed": self.seed,
                    "batch_size": self.batch_size, "tol": self.tol},
            "grid": {"kind": self.grid_kind, "t_max": self.t_max, "n_points": self.n_points,
                     "t_min": self.t_min},
            "observables": list(self.observables),
        }


def _need(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigurationError(f"missing field '{where}.{key}'")
    return section[key]


def parse_config(raw: dict, *, seed=None, threads=None, output=None, method=None) -> RunConfig:
    """Validate a config mapping; keyword overrides mirror the CLI flags."""
    raw = copy.deepcopy(raw)
    if "config" in raw and "model" not in raw:
        raw = raw["config"]  # a metadata record
    model = _need(raw, "model", "<root>")
    meth = raw.get("method", {})
    run = raw.get("run", {})
    grid = raw.get("grid", {})
    try:
        n = int(_need(model, "n_spins", "model"))
        if "lattice_len" in model:
            params = ModelParams(n, int(model["lattice_len"]), float(model.get("alpha", 1.0)),
                                 float(model.get("delta", 0.0)), float(model.get("j0", 1.0)))
        else:
            params = ModelParams.from_filling(n, float(_need(model, "filling", "model")),
                                              float(model.get("alpha", 1.0)),
                                              float(model.get("delta", 0.0)),
                                              float(model.get("j0", 1.0)))
    except ConfigurationError as exc:
        raise ConfigurationError(f"model: {exc}") from None

    name = method or meth.get("name", "dctwa")
    if name not in METHODS:
        raise ConfigurationError(f"field 'method.name' must be one of {METHODS}, got {name!r}")
    clustering = meth.get("clustering", "naive")
    if clustering not in ("naive", "rg"):
        raise ConfigurationError(f"field 'method.clustering' must be 'naive' or 'rg', got {clustering!r}")
    size = int(meth.get("cluster_size", 2 if clustering == "rg" else 1))
    sampler = meth.get("sampler")
    if name == "ed":
        sampler = None
        if n > MAX_ED_SPINS:
            raise ResourceError(f"field 'model.n_spins'={n} exceeds the exact-evolution cap {MAX_ED_SPINS}")
    else:
        expected = _SAMPLER_OF[name]
        if sampler is not None and sampler != expected:
            raise ConfigurationError(f"field 'method.sampler'={sampler!r} conflicts with method {name!r}")
        sampler = expected
        if name == "dtwa":
            clustering, size = "naive", 1
        if size < 1:
            raise ConfigurationError("field 'method.cluster_size' must be >= 1")
        if clustering == "rg":
            size = 2

    n_disorder = int(run.get("n_disorder", 1))
    n_traj = int(run.get("n_traj", 1000))
    if n_disorder < 1:
        raise ConfigurationError("field 'run.n_disorder' must be >= 1")
    if n_traj < 1:
        raise ConfigurationError("field 'run.n_traj' must be >= 1")
    seed_v = int(seed if seed is not None else run.get("seed", 0))
    if not 0 <= seed_v < 2 ** 64:
        raise ConfigurationError("field 'run.seed' must be an unsigned 64-bit integer")
    batch = run.get("batch_size")
    batch = None if batch is None else int(batch)
    obs = tuple(raw.get("observables", ["mst", "renyi2_avg"]))
    for o in obs:
        if o not in OBSERVABLES:
            raise ConfigurationError(f"field 'observables' has unknown entry {o!r}")
    if "batch_std" in obs and name != "ed":
        if batch is None:
            raise ConfigurationError("field 'run.batch_size' is required for batch_std")
        if batch < 1 or n_traj % batch:
            raise ConfigurationError(f"field 'run.batch_size'={batch} must divide run.n_traj={n_traj}")
    kind = grid.get("kind", "log")
    if kind not in ("log", "linear"):
        raise ConfigurationError(f"field 'grid.kind' must be 'log' or 'linear', got {kind!r}")
    t_max = float(grid.get("t_max", 100.0))
    n_points = int(grid.get("n_points", 60))
    t_min = float(grid.get("t_min", 0.1))
    if t_max <= 0 or n_points < 1 or (kind == "log" and not 0 < t_min < t_max):
        raise ConfigurationError("field 'grid' has an invalid time range")
    return RunConfig(params, name, clustering, size, sampler, n_disorder, n_traj, seed_v,
                     kind, t_max, n_points, t_min, obs, batch,
                     float(run.get("tol", DEFAULT_TOL)),
                     int(threads if threads is not None else run.get("threads", 1)),
                     Path(output if output is not None else raw.get("output_dir", "ctwa_output")))


def load_config(path, **overrides) -> RunConfig:
    path = Path(path)
    text = path.read_bytes()
    if path.suffix == ".json":
        raw = json.loads(text)
    else:
        raw = tomllib.loads(text.decode())
    return parse_config(raw, **overrides)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def run(cfg: RunConfig) -> dict:
    """Execute the sweep and write results; returns the metadata record."""
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    grid = cfg.grid()
    state = neel_state(cfg.model.n_spins)
    collected: dict[str, list[ObservableSeries]] = {}
    failed = []
    for d in range(cfg.n_disorder):
        real = make_realization(cfg.model, cfg.seed, d)
        rdir = out / f"realization_{d:04d}"
        rdir.mkdir(exist_ok=True)
        if cfg.method == "ed":
            res = ed_evolve(real, state, grid)
            clusters = None
        else:
            cl = rg_pair_clusters(real.couplings) if cfg.clustering == "rg" else \
                naive_clusters(cfg.model.n_spins, cfg.cluster_size)
            clusters = [list(c) for c in cl.clusters]
            want_batches = "batch_std" in cfg.observables
            res = run_ensemble(real, cl, cfg.sampler, state, grid, cfg.n_traj, cfg.seed,
                               tol=cfg.tol, batch_size=cfg.batch_size if want_batches else None,
                               store_trajectories=want_batches, workers=cfg.threads)
            failed.append(res.n_failed)
        _write_json(rdir / "realization.json",
                    {**json.loads(real.to_json()), "clusters": clusters})
        series = {}
        if "mst" in cfg.observables:
            series["mst"] = staggered_magnetization(res)
        if "renyi2_avg" in cfg.observables:
            series["renyi2_avg"] = average_pair_renyi(res)
        if "renyi2_pairs" in cfg.observables:
            for i, j in res.pairs:
                v = renyi2_pair(res, int(i), int(j))
                series[f"renyi2_pair_{i}_{j}"] = ObservableSeries(grid.times, v, np.zeros_like(v))
        if "batch_std" in cfg.observables and cfg.method != "ed":
            s = batch_std(res.mst_traj, 1, times=grid.times)
            series["mst_batch_std"] = s
            per = batch_renyi_values(res)
            series["renyi2_avg_batch_std"] = ObservableSeries(
                grid.times, per.std(axis=0, ddof=1) if len(per) > 1 else np.zeros(len(grid)),
                np.zeros(len(grid)))
        for name, s in series.items():
            s.to_csv(rdir / f"{name}.csv")
            collected.setdefault(name, []).append(s)
    for name, lst in collected.items():
        disorder_average(lst).to_csv(out / f"{name}.csv")
    meta = {"config": cfg.record(), "tool": "ctwa", "version": _version(),
            "failed_trajectories": failed, "n_failed_total": int(sum(failed))}
    _write_json(out / "metadata.json", meta)
    return meta


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ctwa-run", description=__doc__.splitlines()[0])
    p.add_argument("--config", required=True, help="TOML config or a metadata.json to replay")
    p.add_argument("--seed", type=int, help="override run.seed")
    p.add_argument("--threads", type=int, help="worker threads (results do not depend on it)")
    p.add_argument("--output", help="output directory")
    p.add_argument("--method", choices=METHODS, help="override method.name")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, seed=args.seed, threads=args.threads,
                          output=args.output, method=args.method)
        meta = run(cfg)
    except (ConfigurationError, ResourceError, OSError, tomllib.TOMLDecodeError) as exc:
        print(f"ctwa-run: error: {exc}", file=sys.stderr)
        return 2
    if meta["n_failed_total"]:
        log.warning("%d trajectories failed", meta["n_failed_total"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
