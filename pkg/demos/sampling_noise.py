# Trajectory-to-trajectory spread of Gaussian versus discrete cluster sampling.
#
# Both samplers give the same averages, but the discrete one reaches them with
# less scatter.  We look at one disorder shot split into consecutive pairs.

import numpy as np

from ctwa import ModelParams, TimeGrid, make_realization, naive_clusters, neel_state, run_ensemble
from ctwa.observables import batch_renyi_values, batch_std

shot = make_realization(ModelParams.from_filling(16, 0.1, alpha=1.0, delta=0.0), 5)
grid = TimeGrid.log(100.0, 30)
clusters = naive_clusters(16, 2)

spread = {}
for sampler in ("gaussian", "discrete"):
    res = run_ensemble(shot, clusters, sampler, neel_state(16), grid, 2000, seed=5,
                       batch_size=100, store_trajectories=True)
    mst_std = batch_std(res.mst_traj, 1, times=grid.times).values
    renyi_std = batch_renyi_values(res).std(axis=0, ddof=1)
    spread[sampler] = (mst_std[1:].mean(), renyi_std[1:].mean())
    print(f"{sampler:9s} mean std of M^st {spread[sampler][0]:.4f}, "
          f"of batch S2 {spread[sampler][1]:.4f}")

ratio = np.array(spread["discrete"]) / np.array(spread["gaussian"])
print(f"discrete / gaussian: M^st {ratio[0]:.3f}, S2 {ratio[1]:.3f}")
