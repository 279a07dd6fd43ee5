"""
Monte Carlo paths
=================

Simulated clocks and states checked against the analytic correlation.
"""

import math

from fracpearson.correlation import corr_time_changed
from fracpearson.pearson import PearsonModel
from fracpearson.simulate import SimConfig, empirical_corr, simulate_ensemble
from fracpearson.subordinator import StableMixture, mean_inverse

ou = PearsonModel(0.0, -1.0, 1.0)
mix = StableMixture([0.3, 0.8], [0.5, 0.5])
cfg = SimConfig(n_paths=5000, observation_times=(0.5, 1.0, 2.0, 5.0), seed=7)
ens = simulate_ensemble(ou, mix, cfg)

e1 = ens.column(1.0, "E")
print(f"E[E(1)]: mc {e1.mean():.4f} +- {e1.std() / math.sqrt(e1.size):.4f}, exact {mean_inverse(mix, 1.0):.4f}")
for t, s in [(1.0, 0.5), (2.0, 1.0), (5.0, 1.0)]:
    est, se = empirical_corr(ens, t, s)
    exact = corr_time_changed(ou, mix, t, s)
    print(f"corr({t:g},{s:g}): mc {est:.4f} +- {se:.4f}, exact {exact:.4f}, z {(est - exact) / se:+.2f}")

# path i depends only on (seed, i); a bigger ensemble extends a smaller one
more = simulate_ensemble(ou, mix, SimConfig(n_paths=6000, observation_times=cfg.observation_times, seed=7))
print("prefix reproduced:", bool((more.X[:5000] == ens.X).all()))
