"""Experiment drivers behind the command-line runner.

Each driver is a pure function of its parameters returning plain data, so
tests and the CLI share one code path.
"""

from __future__ import annotations

import numpy as np

from .analysis import (
    chain_rate,
    first_maximum_time,
    grover_rate,
    omega_flat,
    omega_triangle,
    simulate_chain_curve,
    collapse_metric,
)
from .core import EvolutionEngine, StateVector, evolve
from .model import basis_index
from .problems import (
    ChainProblem,
    CompiledCircuit,
    FactoringProblem,
    GroverProblem,
    circuit_model,
    clock_register_width,
    factoring_model,
    grover_model,
)
from .protocol import (
    CoolingConfig,
    CoolingModel,
    run_cycle,
    run_trajectories,
    stats_from_trajectories,
    _embed_zero_photon,
)


# ---------------------------------------------------------------------------
# chain curves
# ---------------------------------------------------------------------------

def chain_experiment(profile: str, n_values, lam: float) -> dict:
    """Population curves for a family of chain orders plus the collapse metric.

    Curves are rescaled by the dynamical single-path rate (`chain_rate`);
    the closed-form product predictions are reported alongside.
    """
    curves = []
    predictions = []
    for n in n_values:
        p = ChainProblem(int(n), profile)
        curves.append(simulate_chain_curve(p, lam))
        formula = omega_flat(n, lam) if profile == "flat" else omega_triangle(n, lam)
        predictions.append(
            {
                "n": int(n),
                "formula_rate": formula,
                "dynamical_rate": chain_rate(profile, n, lam),
            }
        )
    return {
        "profile": profile,
        "lambda": lam,
        "curves": curves,
        "predictions": predictions,
        "collapse": collapse_metric(curves) if len(curves) >= 2 else 0.0,
    }


# ---------------------------------------------------------------------------
# search-rate scan
# ---------------------------------------------------------------------------

def grover_experiment(n_list, n0_list, lam: float) -> dict:
    """Transfer-time and detection-probability table over (N, n0).

    The marked set is {0, ..., n0-1}; the projector dynamics is symmetric
    under relabeling, so the choice carries no loss of generality.  Each run
    starts from the uniform superposition over unmarked words (the branch
    that undergoes the transfer oscillation).
    """
    rows = []
    for N in n_list:
        for n0 in n0_list:
            dim = 2 ** N
            if n0 >= dim:
                raise ValueError(f"n0 = {n0} leaves no unmarked words for N = {N}")
            marked = frozenset(range(n0))
            model = CoolingModel.build(grover_model(GroverProblem(N, marked), lam))
            rate_exact, rate_approx = grover_rate(N, n0, lam)
            t_pred = np.pi / (2.0 * rate_exact)

            sys_amps = np.zeros(dim, dtype=np.complex128)
            unmarked = np.array(sorted(set(range(dim)) - marked))
            sys_amps[unmarked] = 1.0 / np.sqrt(dim - n0)
            psi0 = StateVector(_embed_zero_photon(model, sys_amps), copy=False)
            targets = [basis_index(z, 1, N, 1) for z in sorted(marked)]
            t_meas = first_maximum_time(model.hamiltonian, psi0, targets, t_pred)

            evolved = evolve(model.hamiltonian, psi0, t_pred)
            grid = np.abs(evolved.amplitudes.reshape(dim, 2)) ** 2
            p_detect = float(grid[:, 1].sum())
            marked_given_detect = float(grid[sorted(marked), 1].sum() / grid[:, 1].sum())
            rows.append(
                {
                    "n_qubits": N,
                    "n_solutions": n0,
                    "rate_exact": rate_exact,
                    "rate_paper_approx": rate_approx,
                    "t_predicted": float(t_pred),
                    "t_measured": float(t_meas),
                    "rel_error": float(abs(t_meas - t_pred) / t_pred),
                    "detection_probability": p_detect,
                    "marked_fraction_given_detection": marked_given_detect,
                }
            )
            model.hamiltonian.drop_eigensystem()
    scaling = []
    for n0 in n0_list:
        series = {r["n_qubits"]: r for r in rows if r["n_solutions"] == n0}
        for N, row in sorted(series.items()):
            partner = series.get(N + 2)
            if partner is not None:
                scaling.append(
                    {
                        "n_solutions": n0,
                        "from_n": N,
                        "to_n": N + 2,
                        "time_ratio": partner["t_measured"] / row["t_measured"],
                    }
                )
    return {"lambda": lam, "rows": rows, "scaling": scaling}


# ---------------------------------------------------------------------------
# factoring ensembles
# ---------------------------------------------------------------------------

def factor_experiment(
    target: int,
    alpha0: int,
    lam: float = 0.1,
    n_modes: int = 3,
    samples: int = 100,
    cycles: int = 400,
    seed: int = 1,
    threads: int = 1,
    method: str = "auto",
    quiet_cycles_to_stop: int = 0,
    initial_state: tuple = ("random-basis",),
    cycle_duration: float | None = None,
) -> dict:
    """Cooling ensemble for one factoring target; per-cycle statistics plus
    the fraction of trajectories that have touched ground overlap >= 0.9."""
    spec = factoring_model(FactoringProblem(target), lam=lam, alpha0=alpha0, n_modes=n_modes)
    model = CoolingModel.build(spec)
    cfg = CoolingConfig(
        max_cycles=cycles,
        seed=seed,
        cycle_duration=cycle_duration,
        quiet_cycles_to_stop=quiet_cycles_to_stop,
        initial_state=initial_state,
    )
    trajectories = run_trajectories(model, cfg, samples, threads=threads, method=method)
    stats = stats_from_trajectories(trajectories)

    max_len = len(stats.mean_energy)
    touched = np.zeros((samples, max_len), dtype=bool)
    for i, t in enumerate(trajectories):
        g = t.ground_populations() >= 0.9
        touched[i, : len(t)] = np.maximum.accumulate(g)
        if len(t) < max_len:
            touched[i, len(t):] = touched[i, len(t) - 1]
    touch_fraction = touched.mean(axis=0)
    k80 = np.flatnonzero(touch_fraction >= 0.8)
    model.hamiltonian.drop_eigensystem()
    return {
        "target": target,
        "alpha0": alpha0,
        "lambda": lam,
        "stats": stats,
        "trajectories": trajectories,
        "touch_fraction": touch_fraction,
        "cycles_to_80pct": int(k80[0]) if k80.size else None,
        "final_mean_energy": float(stats.mean_energy[-1]),
    }


def windowed_means(series: np.ndarray, window: int = 50) -> np.ndarray:
    """Means over consecutive fixed-size windows (trailing partial dropped)."""
    n = len(series) // window
    if n == 0:
        raise ValueError(f"series shorter than one window ({window})")
    return series[: n * window].reshape(n, window).mean(axis=1)


# ---------------------------------------------------------------------------
# circuit cooling
# ---------------------------------------------------------------------------

def circuit_experiment(
    circuit: CompiledCircuit,
    lam: float,
    seed: int = 1,
    max_cycles: int | None = None,
    program_state: np.ndarray | None = None,
    engine: EvolutionEngine | None = None,
) -> dict:
    """Cool a compiled circuit until its clock cascades through all T steps.

    Records the clock population per cycle, counts detections and heating
    events (detections that move the clock backward), and scores the final
    program register against direct gate-by-gate application.
    """
    T = circuit.n_steps
    n_clock = clock_register_width(T)
    clock_dim = 2 ** n_clock
    prog_dim = 2 ** circuit.n_qubits
    model = CoolingModel.build(circuit_model(circuit, lam))
    engine = engine or EvolutionEngine()
    if max_cycles is None:
        max_cycles = 8 * T + 40
    rng = np.random.default_rng(seed)

    if program_state is None:
        program_state = np.zeros(prog_dim, dtype=np.complex128)
        program_state[0] = 1.0
    sys_amps = np.zeros(prog_dim * clock_dim, dtype=np.complex128)
    sys_amps[:: clock_dim] = program_state  # clock register at 0
    psi = StateVector(_embed_zero_photon(model, sys_amps), copy=False)

    cfg = CoolingConfig(max_cycles=1, seed=seed, cycle_duration=np.pi / (2.0 * lam))
    records = []
    detections = 0
    heating_events = []
    clock_before = 0
    for cycle in range(max_cycles):
        psi, outcome = run_cycle(model, psi, cfg, rng, engine)
        grid = psi.amplitudes.reshape(prog_dim, clock_dim, model.cav_dim)
        clock_pop = np.abs(grid[:, :, 0]) ** 2
        clock_pop = clock_pop.sum(axis=0)[: T + 1]
        clock_now = int(np.argmax(clock_pop))
        if outcome.detected:
            detections += 1
            if clock_now < clock_before:
                heating_events.append(
                    {"cycle": cycle, "from": clock_before, "to": clock_now}
                )
        records.append(
            {
                "cycle": cycle,
                "detected": outcome.detected,
                "clock_populations": clock_pop.copy(),
            }
        )
        clock_before = clock_now
        if detections >= T and clock_now == T:
            break

    grid = psi.amplitudes.reshape(prog_dim, clock_dim, model.cav_dim)[:, :, 0]
    rho_prog = grid @ grid.conj().T
    direct = circuit.output_state(program_state)
    fidelity = float(np.real(direct.conj() @ rho_prog @ direct))
    return {
        "n_steps": T,
        "lambda": lam,
        "records": records,
        "total_cycles": len(records),
        "detections": detections,
        "heating_events": heating_events,
        "fidelity": fidelity,
        "reached_final_clock": detections >= T,
    }
