"""Stochastic cooling cycles: unitary evolution, projective cavity
measurement, cavity reset, trajectory recording, and stopping rule.

Seed splitting.  Trajectory i of an ensemble uses the 64-bit seed
``mix_seed(master, i)``: master + (i+1) * 0x9E3779B97F4A7C15 (mod 2^64)
passed through the splitmix64 finalizer.  Every execution mode derives the
same per-trajectory seeds, so a run is reproducible from (model, config,
n_samples) alone.

Execution modes.  ``per-trajectory`` evolves each trajectory with the
configured engine (sequentially or across worker processes; scheduling does
not change results).  ``batched`` diagonalizes the Hamiltonian once and
advances all live trajectories per cycle with one dense multiply; it is the
fast path for ensembles on models up to BATCH_DIM_CAP.  Both modes are
individually deterministic; they are not bit-identical to each other because
the evolution arithmetic differs at round-off level.
"""

from __future__ import annotations

import concurrent.futures
import csv
from dataclasses import dataclass, replace

import numpy as np

from .core import EvolutionEngine, SparseHermitian, StateVector, eigenbasis_matmul
from .core import evolve as _evolve
from .model import CoolingModelSpec, assemble

BATCH_DIM_CAP = 8192
_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix_seed(master: int, index: int) -> int:
    """Per-trajectory seed: splitmix64 finalizer of master + (index+1)*golden."""
    x = (master + (index + 1) * _GOLDEN) & _MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK64
    x ^= x >> 31
    return x


# ---------------------------------------------------------------------------
# configuration and records
# ---------------------------------------------------------------------------

INITIAL_STATE_KINDS = ("basis", "uniform", "random-basis")


@dataclass(frozen=True)
class CoolingConfig:
    """Knobs of the cooling run.

    cycle_duration None means pi / (2 lam) of the model. quiet_cycles_to_stop
    is the number of consecutive photon-free cycles after which a trajectory
    stops (0 disables).  initial_state is ("basis", z0), ("uniform",) or
    ("random-basis",); the last draws a fresh computational basis word per
    trajectory from its own stream.
    """

    max_cycles: int
    seed: int
    cycle_duration: float | None = None
    quiet_cycles_to_stop: int = 0
    initial_state: tuple = ("uniform",)

    def __post_init__(self):
        if self.max_cycles < 1:
            raise ValueError("max_cycles must be >= 1")
        if self.cycle_duration is not None and self.cycle_duration <= 0:
            raise ValueError("cycle_duration must be positive")
        if self.quiet_cycles_to_stop < 0:
            raise ValueError("quiet_cycles_to_stop must be >= 0")
        kind = self.initial_state[0]
        if kind not in INITIAL_STATE_KINDS:
            raise ValueError(f"unknown initial state kind {kind!r}")
        if kind == "basis" and len(self.initial_state) != 2:
            raise ValueError('("basis", z0) needs the starting word')

    def duration(self, spec: CoolingModelSpec) -> float:
        if self.cycle_duration is not None:
            return self.cycle_duration
        return np.pi / (2.0 * spec.lam)


def initial_state_to_json(state: tuple) -> dict:
    doc = {"kind": state[0]}
    if state[0] == "basis":
        doc["z0"] = int(state[1])
    return doc


def initial_state_from_json(doc: dict) -> tuple:
    kind = doc["kind"]
    if kind == "basis":
        return ("basis", int(doc["z0"]))
    if kind in INITIAL_STATE_KINDS:
        return (kind,)
    raise ValueError(f"unknown initial state kind {kind!r}")


@dataclass(frozen=True)
class CycleOutcome:
    detected: int            # M-bit cavity word measured this cycle
    post_energy: float       # <H_P> after measurement and reset
    ground_population: float  # overlap with the ground manifold

    def __post_init__(self):
        if self.post_energy < -1e-12:
            raise ValueError("post-measurement energy must be non-negative")
        if not -1e-12 <= self.ground_population <= 1 + 1e-12:
            raise ValueError("ground population must lie in [0, 1]")


@dataclass(frozen=True)
class Trajectory:
    seed: int
    outcomes: tuple
    status: str  # "max-cycles" | "quiet-stop"

    def __post_init__(self):
        if self.status not in ("max-cycles", "quiet-stop"):
            raise ValueError(f"unknown terminal status {self.status!r}")

    def __len__(self):
        return len(self.outcomes)

    def detections(self) -> np.ndarray:
        return np.array([o.detected for o in self.outcomes], dtype=np.int64)

    def energies(self) -> np.ndarray:
        return np.array([o.post_energy for o in self.outcomes])

    def ground_populations(self) -> np.ndarray:
        return np.array([o.ground_population for o in self.outcomes])


ENSEMBLE_QUANTILES = (0.1, 0.5, 0.9)


@dataclass(frozen=True)
class EnsembleStats:
    """Per-cycle aggregates over an ensemble.

    Trajectories that stopped early are padded with their final recorded
    values (a stopped trajectory is quasi-stationary), so all series share
    the length of the longest trajectory.
    """

    n_samples: int
    mean_energy: np.ndarray
    ground_fraction: np.ndarray       # fraction of trajectories with >= 0.9 overlap
    mean_ground_population: np.ndarray
    energy_quantiles: dict            # quantile -> per-cycle array
    lengths: np.ndarray
    statuses: tuple


def stats_from_trajectories(trajectories) -> EnsembleStats:
    trajectories = list(trajectories)
    if not trajectories:
        raise ValueError("need at least one trajectory")
    max_len = max(len(t) for t in trajectories)
    n = len(trajectories)
    energy = np.empty((n, max_len))
    ground = np.empty((n, max_len))
    for i, t in enumerate(trajectories):
        e, g = t.energies(), t.ground_populations()
        energy[i, : len(t)] = e
        ground[i, : len(t)] = g
        if len(t) < max_len:
            energy[i, len(t):] = e[-1]
            ground[i, len(t):] = g[-1]
    quantiles = {
        q: np.quantile(energy, q, axis=0) for q in ENSEMBLE_QUANTILES
    }
    return EnsembleStats(
        n_samples=n,
        mean_energy=energy.mean(axis=0),
        ground_fraction=(ground >= 0.9).mean(axis=0),
        mean_ground_population=ground.mean(axis=0),
        energy_quantiles=quantiles,
        lengths=np.array([len(t) for t in trajectories], dtype=np.int64),
        statuses=tuple(t.status for t in trajectories),
    )


# ---------------------------------------------------------------------------
# runtime model
# ---------------------------------------------------------------------------

@dataclass
class CoolingModel:
    """Assembled Hamiltonian plus the lookup tables the cycle needs."""

    spec: CoolingModelSpec
    hamiltonian: SparseHermitian

    def __post_init__(self):
        self.sys_dim = self.spec.problem.dim
        self.cav_dim = self.spec.cavities.dim
        self.energies = self.spec.problem.energies.astype(np.float64)
        self.ground_states = self.spec.problem.ground_states()

    @classmethod
    def build(cls, spec: CoolingModelSpec, **assemble_kwargs) -> "CoolingModel":
        return cls(spec, assemble(spec, **assemble_kwargs))


def _initial_system_amplitudes(model: CoolingModel, state_spec, rng) -> np.ndarray:
    kind = state_spec[0]
    amps = np.zeros(model.sys_dim, dtype=np.complex128)
    if kind == "basis":
        z0 = int(state_spec[1])
        if not 0 <= z0 < model.sys_dim:
            raise ValueError(f"starting word {z0} out of range")
        amps[z0] = 1.0
    elif kind == "uniform":
        amps[:] = 1.0 / np.sqrt(model.sys_dim)
    else:  # random-basis
        amps[int(rng.integers(model.sys_dim))] = 1.0
    return amps


def _embed_zero_photon(model: CoolingModel, sys_amps: np.ndarray) -> np.ndarray:
    full = np.zeros(model.sys_dim * model.cav_dim, dtype=np.complex128)
    full[:: model.cav_dim] = sys_amps
    return full


def _measure_and_reset(model: CoolingModel, amps: np.ndarray, rng):
    """Projective measurement of the cavity word, then reset to empty.

    Returns (system amplitudes after reset, measured word).  Valid because
    after projecting onto a definite cavity word the state factorizes, so
    resetting only relabels the surviving block into the empty sector.
    """
    grid = amps.reshape(model.sys_dim, model.cav_dim)
    probs = np.abs(grid) ** 2
    block = probs.sum(axis=0)
    total = block.sum()
    if abs(total - 1.0) > 1e-8:
        raise ValueError(f"measurement probabilities sum to {total:.12f}")
    detected = int(rng.choice(model.cav_dim, p=block / total))
    sys_amps = grid[:, detected]
    sys_amps = sys_amps / np.linalg.norm(sys_amps)
    return sys_amps, detected


def _outcome(model: CoolingModel, sys_amps: np.ndarray, detected: int) -> CycleOutcome:
    weights = np.abs(sys_amps) ** 2
    return CycleOutcome(
        detected=detected,
        post_energy=float(weights @ model.energies),
        ground_population=float(weights[model.ground_states].sum()),
    )


def run_cycle(
    model: CoolingModel,
    psi: StateVector,
    cfg: CoolingConfig,
    rng,
    engine: EvolutionEngine | None = None,
):
    """One cooling cycle: evolve, measure every cavity, reset, record.

    The input state must live in the empty-cavity sector; the returned state
    does again.
    """
    engine = engine or EvolutionEngine()
    grid = psi.amplitudes.reshape(model.sys_dim, model.cav_dim)
    outside = np.abs(grid[:, 1:]).max() if model.cav_dim > 1 else 0.0
    if outside > 1e-10:
        raise ValueError("input state has photon-sector amplitude")
    evolved = _evolve(model.hamiltonian, psi, cfg.duration(model.spec), engine)
    sys_amps, detected = _measure_and_reset(model, evolved.amplitudes, rng)
    outcome = _outcome(model, sys_amps, detected)
    return StateVector(_embed_zero_photon(model, sys_amps), copy=False), outcome


def run_trajectory(
    model: CoolingModel,
    cfg: CoolingConfig,
    engine: EvolutionEngine | None = None,
) -> Trajectory:
    """Repeat cooling cycles until max_cycles or the quiet-stop rule fires.

    Deterministic: identical (model, cfg) reproduce the trajectory exactly.
    """
    engine = engine or EvolutionEngine()
    rng = np.random.default_rng(cfg.seed)
    sys_amps = _initial_system_amplitudes(model, cfg.initial_state, rng)
    psi = StateVector(_embed_zero_photon(model, sys_amps), copy=False)
    outcomes = []
    quiet = 0
    status = "max-cycles"
    for _ in range(cfg.max_cycles):
        psi, outcome = run_cycle(model, psi, cfg, rng, engine)
        outcomes.append(outcome)
        quiet = quiet + 1 if outcome.detected == 0 else 0
        if cfg.quiet_cycles_to_stop and quiet >= cfg.quiet_cycles_to_stop:
            status = "quiet-stop"
            break
    return Trajectory(seed=cfg.seed, outcomes=tuple(outcomes), status=status)


# ---------------------------------------------------------------------------
# ensembles
# ---------------------------------------------------------------------------

_POOL_STATE: dict = {}


def _pool_init(model, cfg, engine):
    _POOL_STATE["args"] = (model, cfg, engine)


def _pool_run(item):
    index, seed = item
    model, cfg, engine = _POOL_STATE["args"]
    return index, run_trajectory(model, replace(cfg, seed=seed), engine)


def run_trajectories(
    model: CoolingModel,
    cfg: CoolingConfig,
    n_samples: int,
    threads: int = 1,
    method: str = "auto",
    engine: EvolutionEngine | None = None,
) -> list:
    """Run n_samples trajectories with seeds split from cfg.seed.

    method "auto" picks "batched" when the model dimension admits a dense
    eigendecomposition, else "per-trajectory".  threads > 1 distributes
    per-trajectory runs over worker processes; results are identical to the
    sequential run because each trajectory is an isolated computation.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if method == "auto":
        method = "batched" if model.hamiltonian.dim <= BATCH_DIM_CAP else "per-trajectory"
    seeds = [mix_seed(cfg.seed, i) for i in range(n_samples)]

    if method == "batched":
        return _run_batched(model, cfg, seeds)
    if method != "per-trajectory":
        raise ValueError(f"unknown ensemble method {method!r}")

    if threads <= 1:
        return [run_trajectory(model, replace(cfg, seed=s), engine) for s in seeds]
    out: list = [None] * n_samples
    with concurrent.futures.ProcessPoolExecutor(
        max_workers=threads, initializer=_pool_init, initargs=(model, cfg, engine)
    ) as pool:
        for index, traj in pool.map(_pool_run, list(enumerate(seeds)), chunksize=4):
            out[index] = traj
    return out


def _run_batched(model: CoolingModel, cfg: CoolingConfig, seeds) -> list:
    """Advance all live trajectories together via the eigenbasis propagator."""
    evals, evecs = model.hamiltonian.eigensystem()
    phase = np.exp(-1j * cfg.duration(model.spec) * evals)
    rngs = [np.random.default_rng(s) for s in seeds]
    n = len(seeds)

    columns = np.empty((model.hamiltonian.dim, n), dtype=np.complex128)
    for i in range(n):
        sys_amps = _initial_system_amplitudes(model, cfg.initial_state, rngs[i])
        columns[:, i] = _embed_zero_photon(model, sys_amps)

    outcomes: list = [[] for _ in range(n)]
    status = ["max-cycles"] * n
    quiet = np.zeros(n, dtype=np.int64)
    live = list(range(n))
    psi = columns

    for _ in range(cfg.max_cycles):
        if not live:
            break
        psi = eigenbasis_matmul(evecs, phase[:, None] * eigenbasis_matmul(evecs, psi, adjoint=True))
        psi /= np.linalg.norm(psi, axis=0, keepdims=True)
        keep = []
        next_cols = []
        for col, idx in enumerate(live):
            sys_amps, detected = _measure_and_reset(model, psi[:, col], rngs[idx])
            outcomes[idx].append(_outcome(model, sys_amps, detected))
            quiet[idx] = quiet[idx] + 1 if detected == 0 else 0
            if cfg.quiet_cycles_to_stop and quiet[idx] >= cfg.quiet_cycles_to_stop:
                status[idx] = "quiet-stop"
            else:
                keep.append(idx)
                next_cols.append(_embed_zero_photon(model, sys_amps))
        live = keep
        psi = np.stack(next_cols, axis=1) if next_cols else np.empty((0, 0))
    return [
        Trajectory(seed=seeds[i], outcomes=tuple(outcomes[i]), status=status[i])
        for i in range(n)
    ]


def run_ensemble(
    model: CoolingModel,
    cfg: CoolingConfig,
    n_samples: int,
    threads: int = 1,
    method: str = "auto",
    engine: EvolutionEngine | None = None,
) -> EnsembleStats:
    """Aggregate statistics over a seeded trajectory ensemble."""
    return stats_from_trajectories(
        run_trajectories(model, cfg, n_samples, threads, method, engine)
    )


# ---------------------------------------------------------------------------
# tabular output
# ---------------------------------------------------------------------------

TRAJECTORY_COLUMNS = ("cycle", "detected_mask", "post_energy", "ground_population")
ENSEMBLE_COLUMNS = (
    "cycle",
    "mean_energy",
    "ground_fraction",
    "mean_ground_population",
    "energy_q10",
    "energy_q50",
    "energy_q90",
)


def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_trajectory_csv(path, trajectory: Trajectory):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_COLUMNS)
        for i, o in enumerate(trajectory.outcomes):
            writer.writerow(
                [i, o.detected, _fmt(o.post_energy), _fmt(o.ground_population)]
            )


def write_ensemble_csv(path, stats: EnsembleStats):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ENSEMBLE_COLUMNS)
        for i in range(len(stats.mean_energy)):
            writer.writerow(
                [
                    i,
                    _fmt(stats.mean_energy[i]),
                    _fmt(stats.ground_fraction[i]),
                    _fmt(stats.mean_ground_population[i]),
                    _fmt(stats.energy_quantiles[0.1][i]),
                    _fmt(stats.energy_quantiles[0.5][i]),
                    _fmt(stats.energy_quantiles[0.9][i]),
                ]
            )
