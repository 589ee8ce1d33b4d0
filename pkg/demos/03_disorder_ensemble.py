# Disorder ensemble: scatter of per-realization delta[rho_1] around the
# disorder-averaged delta[xi_1]. Individual realizations spread widely while
# the averaged state changes much less - averaging over disorder partially
# washes out realization-specific structure but adds classical mixing.
import csv
import os

import numpy as np

from htcsim.ensemble import EnsembleConfig, run_ensemble, summarize
from htcsim.model import HTCParams, InitialStateSpec

NU = 0.3
T = 2 * np.pi / NU
params = HTCParams(n_molecules=6, nu=NU, huang_rhys_lambda=0.4,
                   disorder_w=0.5, n_max_vib=8)
cfg = EnsembleConfig(
    params=params,
    initial=InitialStateSpec(kind="molecule", index=1),
    engine="mps",
    times=(T / 2, T),
    n_realizations=12,
    master_seed=7,
    engine_options={"dt": T / 100, "chi_max": 48, "alarm_threshold": 1e-6},
)

print(f"running {cfg.n_realizations} disorder realizations (mps) ...")
result = run_ensemble(cfg)
summary = summarize(result)

per_real = summary["delta_rho1"][:, -1]
print(f"\nat t = T:")
print(f"  delta[xi_1] (averaged state)    = {summary['delta_xi1'][-1]:.5f}")
print(f"  mean of per-realization deltas  = {per_real.mean():.5f}")
print(f"  scatter (std)                   = {per_real.std():.5f}  "
      f"({100 * per_real.std() / per_real.mean():.0f}% of the mean)")
print("  realization deltas:",
      " ".join(f"{d:.4f}" for d in sorted(per_real)))

out = os.path.join(os.path.dirname(__file__), "03_disorder_scatter.csv")
with open(out, "w", newline="") as fh:
    w = csv.writer(fh)
    w.writerow(["realization", "seed", "delta_rho1_at_T"])
    for rec, d in zip(result.records, summary["delta_rho1"][:, -1]):
        w.writerow([rec.index, rec.seed, f"{d:.10g}"])
print("wrote", out)
