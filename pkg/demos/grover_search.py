"""Unstructured search as one cooling transition.

Marking n0 of 2^N words with zero cost and coupling every word to every
other through the uniform-superposition projector reduces the dynamics to a
two-level oscillation between "not a solution" and "a solution + photon".
The photon click tells you the search is done, and the transfer time scales
as 2^(N/2) - the square-root speedup.

Run:  python3 demos/grover_search.py
"""

import numpy as np

from qcool import CoolingConfig, CoolingModel, GroverProblem, grover_model, grover_rate
from qcool.protocol import run_trajectory

LAM = 0.0025

print(f"{'N':>3} {'n0':>3} {'rate (exact)':>13} {'~ lam sqrt(n0)/2^(N/2)':>22} "
      f"{'transfer time':>14}")
for N in (4, 6, 8, 10):
    for n0 in (1, 2):
        exact, approx = grover_rate(N, n0, LAM)
        print(f"{N:>3} {n0:>3} {exact:>13.4e} {approx:>22.4e} {np.pi/(2*exact):>14.1f}")

# run the actual protocol on N = 8, one marked word: a single cycle at the
# optimal duration should click and leave the register on the solution
N, marked = 8, 37
model = CoolingModel.build(grover_model(GroverProblem(N, frozenset({marked})), LAM))
rate, _ = grover_rate(N, 1, LAM)
cfg = CoolingConfig(
    max_cycles=3,
    seed=11,
    cycle_duration=np.pi / (2 * rate),
    initial_state=("uniform",),
    quiet_cycles_to_stop=0,
)
traj = run_trajectory(model, cfg)
print(f"\nN={N}, marked word {marked}, cycle duration pi/(2*rate) = "
      f"{np.pi/(2*rate):.1f}")
for i, o in enumerate(traj.outcomes):
    print(f"cycle {i}: photon={'yes' if o.detected else 'no ':<3} "
          f"cost={o.post_energy:.4f}  solution weight={o.ground_population:.4f}")
