"""High-order transfer through intermediate levels: curve collapse.

A ladder of n+1 levels couples neighbors with strength lam.  When the two
end levels are degenerate and the interior sits higher, population moves end
to end through virtual intermediate states at the single-path rate
lam**n / prod |E0 - E_j|.  Plotting the end-level population against time
rescaled by that rate makes every order fall on one curve.

Run:  python3 demos/chain_collapse.py
Writes PNG plots next to this script when matplotlib is available.
"""

from pathlib import Path

import numpy as np

from qcool import ChainProblem, chain_rate, collapse_metric, omega_flat, omega_triangle
from qcool.analysis import simulate_chain_curve

OUT = Path(__file__).parent / "output"
LAM = 0.1


def family(profile, orders):
    print(f"\n{profile} profile, coupling {LAM}")
    print(f"{'n':>3} {'product formula':>16} {'dynamical rate':>16} {'peak':>7} {'at tau':>7}")
    curves = []
    for n in orders:
        curve = simulate_chain_curve(ChainProblem(n, profile), LAM)
        curves.append(curve)
        formula = omega_flat(n, LAM) if profile == "flat" else omega_triangle(n, LAM)
        k = int(np.argmax(curve.population))
        print(
            f"{n:>3} {formula:>16.3e} {chain_rate(profile, n, LAM):>16.3e} "
            f"{curve.population[k]:>7.3f} {curve.tau[k]:>7.2f}"
        )
    print(f"collapse metric (max pointwise spread): {collapse_metric(curves):.4f}")
    return curves


def maybe_plot(curves, profile):
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return
    OUT.mkdir(exist_ok=True)
    fig, ax = plt.subplots(figsize=(5, 3.2))
    for c in curves:
        ax.plot(c.tau, c.population, label=f"n={c.n}")
    ax.set_xlabel("rescaled time  t * rate / pi")
    ax.set_ylabel("end-level population")
    ax.set_title(f"{profile} profile, coupling {LAM}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = OUT / f"chain_collapse_{profile}.png"
    fig.savefig(path, dpi=150)
    print(f"wrote {path}")


if __name__ == "__main__":
    flat = family("flat", [2, 3, 4, 5, 6])
    maybe_plot(flat, "flat")
    tri = family("triangle", [2, 4, 6, 8, 10])
    maybe_plot(tri, "triangle")
