"""
Trading broadcasts against speed
================================

Larger sigma tolerates more error before a broadcast. This sweeps sigma for
both pure laws with random clock drifts drawn from (0.7, 1.3), the same ten
drift vectors in every cell, and prints the cell averages.
"""

import tempfile

from etconsensus import cli

scenario = cli.parse_scenario({
    "name": "ring_sweep",
    "network": "net2",
    "mode": "clocksync",
    "law": {"lambda": 0, "sigma": 0.5},
    "sweep": {"sigma": [0.1, 0.3, 0.5, 0.7, 0.9], "lambda": [0, 1]},
    "mc_runs": 10,
    "seed": 0,
    "horizon": 50,
})

with tempfile.TemporaryDirectory() as out:
    table = cli.sweep_command(scenario, out)

print(f"{'sigma':>5} {'law':>5} {'N_e':>8} {'T_con':>7} {'energy':>8}")
for cell in table:
    print(f"{cell['sigma']:5.1f} {cell['law']:>5} {cell['n_events']:8.1f} {cell['t_con']:7.3f} {cell['energy']:8.2f}")
