"""
A single quantum-jump trajectory
================================

One realization of the driven qubit: two undriven cycles, eight drive cycles
and an undriven tail.  Between jumps the excited population follows damped
Rabi oscillations; each photon exchange projects the state onto an eigenstate.
"""

from pathlib import Path

import numpy as np

from qjwork import DriveProtocol, ModelParams
from qjwork.emit import plot_trace, write_trace
from qjwork.figures import single_trace
from qjwork.model import TWO_PI

out = Path(__file__).with_name("out")

# Detailed balance fixes the absorption rate from the emission rate and beta.
params = ModelParams.from_detailed_balance(gamma_down=0.1, beta_hbar_omega0=1.0)
protocol = DriveProtocol(lambda0=0.1, n_cycles=8)
print(f"gamma_up = {params.gamma_up:.5f}, drive lasts {protocol.duration:.2f}")

tr = single_trace(params, protocol, dt=TWO_PI / 1000, seed=3, sample_every=10)
print(f"initial state {tr.initial}")
for ev in tr.jumps:
    print(f"  t = {ev.time:8.3f}  {ev.kind}")

# The population is continuous in time except at jumps.
print("largest sample-to-sample change:", np.max(np.abs(np.diff(tr.pop_e))))

write_trace(out / "trace.csv", tr.times, tr.pop_e, tr.jumps)
plot_trace(out / "trace.svg", tr.times, tr.pop_e, tr.jumps, tr.drive_window)
print("wrote", out / "trace.svg")
