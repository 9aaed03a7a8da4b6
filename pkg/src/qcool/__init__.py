"""qcool: state-vector simulation of measurement-driven cavity cooling for
combinatorial problem Hamiltonians."""

from .core import (
    EvolutionEngine,
    EvolutionError,
    SparseHermitian,
    StateVector,
    apply,
    evolve,
    expectation,
)
from .model import (
    CavityBank,
    CoolingModelSpec,
    ProblemHamiltonian,
    TransitionTerm,
    assemble,
    basis_index,
    basis_split,
    commutator_norm,
)
from .problems import (
    ChainProblem,
    CompiledCircuit,
    FactoringProblem,
    GroverProblem,
    brute_force_ground,
    chain_encode,
    circuit_encode,
    circuit_model,
    factoring_encode,
    factoring_model,
    grover_encode,
    grover_model,
    model_from_config,
)
from .analysis import (
    PopulationCurve,
    chain_rate,
    collapse_metric,
    first_maximum_time,
    grover_rate,
    lambda_transition_scan,
    omega_flat,
    omega_triangle,
    simulate_chain_curve,
)
from .protocol import (
    CoolingConfig,
    CoolingModel,
    CycleOutcome,
    EnsembleStats,
    Trajectory,
    mix_seed,
    run_cycle,
    run_ensemble,
    run_trajectories,
    run_trajectory,
)

__version__ = "0.1.0"
