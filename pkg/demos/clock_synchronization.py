"""
Synchronizing drifting clocks
=============================

Five sensors run clocks at rates gamma_i. Each scales its reading by a
controlled drift alpha_i; writing y_i = gamma_i * alpha_i turns clock
agreement into consensus on y with per-agent gains gamma_i.
"""

import numpy as np

from etconsensus import BENCHMARK_GAMMA, ClockModel, network, run_clock_sync, validate_and_derive, virtual_clocks

g = network("net1")
model = ClockModel.create(BENCHMARK_GAMMA)
print("drifts", model.gamma, "initial y", model.y0, "mean", model.y0.mean())

for lam in (1.0, 0.0):
    law = validate_and_derive(g, lam, 0.5)
    run = run_clock_sync(g, law, model, horizon=50.0)
    rep = run.report
    print(f"{law.kind}: y spread {rep.initial_spread:.3f} -> {rep.final_spread:.2e}, "
          f"virtual clocks differ by {rep.virtual_spread:.2e} s at t=50")

# the gains differ, so the plain mean of y is not kept; sum(y_i / gamma_i) is
inv = 1 / model.gamma
print("predicted common rate", inv @ model.y0 / inv.sum(), "reached", run.trace.x_final.mean())

t = np.array([0.0, 5.0, 20.0, 50.0])
local, virtual, _ = virtual_clocks(run.trace, model.gamma, t)
for row_t, l, v in zip(t, local, virtual):
    print(f"t={row_t:5.1f}  local clocks {np.round(l, 2)}  virtual clocks {np.round(v, 4)}")
