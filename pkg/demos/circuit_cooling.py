"""Running a gate circuit by cooling a clock ladder.

Each circuit step t is tagged with a clock level at energy T - t; the
transition term applies gate t+1 while hopping the clock forward, releasing
one quantum into the cavity.  Detecting the photon each cycle walks the
register through the circuit; after T clicks the program register holds the
circuit output.

Run:  python3 demos/circuit_cooling.py
"""

from qcool import CompiledCircuit
from qcool.experiments import circuit_experiment

BELL_PLUS = CompiledCircuit(2, (
    ("H", (0,)),
    ("CNOT", (0, 1)),
    ("T", (1,)),
    ("H", (1,)),
    ("X", (0,)),
))

result = circuit_experiment(BELL_PLUS, lam=0.02, seed=5)
T = result["n_steps"]
print(f"{T}-step circuit, coupling 0.02, cycle duration pi/(2*0.02)")
print(f"{'cycle':>5} {'photon':>6}  clock populations")
for rec in result["records"]:
    pops = " ".join(f"{v:.2f}" for v in rec["clock_populations"])
    print(f"{rec['cycle']:>5} {'yes' if rec['detected'] else 'no':>6}  [{pops}]")
print(f"\ndetections: {result['detections']} (one per circuit step)")
print(f"heating events (clock stepped back): {len(result['heating_events'])}")
print(f"fidelity vs direct gate application: {result['fidelity']:.6f}")
