import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from ctwa.cli import load_config, main, parse_config
from ctwa.disorder import ConfigurationError
from ctwa.exact import pair_oracle_main
from ctwa.observables import ObservableSeries

BASE = """
observables = {obs}
[model]
n_spins = {n}
filling = {filling}
alpha = 1.0
delta = 0.0
[method]
name = "{method}"
clustering = "{clustering}"
cluster_size = {size}
[run]
n_disorder = {nd}
n_traj = {nt}
seed = 17
batch_size = {batch}
[grid]
kind = "log"
t_max = {tmax}
n_points = {npts}
"""


def write_config(tmp_path, name="run.toml", **kw):
    opts = dict(obs='["mst", "renyi2_avg"]', n=6, filling=0.1, method="dctwa", clustering="rg",
                size=2, nd=2, nt=40, batch=10, tmax=20.0, npts=10)
    opts.update(kw)
    p = tmp_path / name
    p.write_text(BASE.format(**opts))
    return p


def outputs(d: Path):
    return {p.relative_to(d).as_posix(): p.read_bytes() for p in sorted(d.rglob("*")) if p.is_file()}


def test_replay_reproduces_every_byte(tmp_path):
    cfg = write_config(tmp_path, obs='["mst", "renyi2_avg", "renyi2_pairs", "batch_std"]')
    assert main(["--config", str(cfg), "--output", str(tmp_path / "a")]) == 0
    meta = tmp_path / "a" / "metadata.json"
    assert main(["--config", str(meta), "--output", str(tmp_path / "b"), "--threads", "3"]) == 0
    a, b = outputs(tmp_path / "a"), outputs(tmp_path / "b")
    assert a == b
    assert "renyi2_pair_0_1.csv" in a and "mst_batch_std.csv" in a
    assert "realization_0001/realization.json" in a


def test_dtwa_equals_singleton_dctwa(tmp_path):
    cfg = write_config(tmp_path, clustering="naive", size=1)
    main(["--config", str(cfg), "--output", str(tmp_path / "dc")])
    main(["--config", str(cfg), "--output", str(tmp_path / "dt"), "--method", "dtwa"])
    a, b = outputs(tmp_path / "dc"), outputs(tmp_path / "dt")
    assert a.keys() == b.keys()
    for k in a:
        if k != "metadata.json":
            assert a[k] == b[k], k


def test_methods_share_disorder(tmp_path):
    cfg = write_config(tmp_path)
    for m in ("dctwa", "gctwa", "ed"):
        main(["--config", str(cfg), "--output", str(tmp_path / m), "--method", m])
    pos = {m: json.loads((tmp_path / m / "realization_0001" / "realization.json").read_text())["positions"]
           for m in ("dctwa", "gctwa", "ed")}
    assert pos["dctwa"] == pos["gctwa"] == pos["ed"]


def test_ed_pair_matches_oracle(tmp_path):
    cfg = write_config(tmp_path, n=2, filling=1.0, method="ed", nd=1, tmax=30.0, npts=40)
    assert main(["--config", str(cfg), "--output", str(tmp_path / "o")]) == 0
    s = ObservableSeries.from_csv(tmp_path / "o" / "mst.csv")
    np.testing.assert_allclose(s.values, pair_oracle_main(1.0, s.times), atol=1e-12)


def test_desk_scale_quench_relaxes(tmp_path):
    cfg = write_config(tmp_path, n=12, nd=4, nt=100, tmax=100.0, npts=30)
    assert main(["--config", str(cfg), "--output", str(tmp_path / "o")]) == 0
    s = ObservableSeries.from_csv(tmp_path / "o" / "mst.csv")
    assert s.values[0] == 1.0
    assert abs(s.values[-1]) < 0.25
    meta = json.loads((tmp_path / "o" / "metadata.json").read_text())
    assert meta["n_failed_total"] == 0


@pytest.mark.parametrize("edit, field", [
    ({"method": {"name": "qmc"}}, "method.name"),
    ({"method": {"name": "gctwa", "sampler": "discrete"}}, "method.sampler"),
    ({"run": {"n_traj": 0}}, "run.n_traj"),
    ({"run": {"n_traj": 10, "batch_size": 3}}, "run.batch_size"),
    ({"model": {"n_spins": 6}}, "model.filling"),
    ({"grid": {"kind": "cubic"}}, "grid.kind"),
    ({"observables": ["entropy"]}, "observables"),
])
def test_config_errors_name_the_field(edit, field):
    raw = {"model": {"n_spins": 6, "filling": 0.1}, "observables": ["mst", "batch_std"],
           "run": {"batch_size": 10, "n_traj": 40}}
    for k, v in edit.items():
        raw[k] = v
    with pytest.raises(ConfigurationError, match=field.replace(".", r"\.")):
        parse_config(raw)


def test_main_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text('[model]\nn_spins = 20\nfilling = 0.5\n[method]\nname = "ed"\n')
    assert main(["--config", str(bad), "--output", str(tmp_path / "o")]) != 0
    assert "model.n_spins" in capsys.readouterr().err


def test_overrides(tmp_path):
    cfg = load_config(write_config(tmp_path), seed=5, method="gctwa", output=tmp_path / "x")
    assert cfg.seed == 5 and cfg.sampler == "gaussian" and cfg.output_dir == tmp_path / "x"


def test_module_entry_point(tmp_path):
    cfg = write_config(tmp_path, n=2, filling=1.0, method="ed", nd=1)
    r = subprocess.run([sys.executable, "-m", "ctwa", "--config", str(cfg), "--output",
                        str(tmp_path / "o")], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "o" / "metadata.json").exists()
