"""Problem encoders: search oracles, integer factoring, transition chains,
and compiled circuits, together with brute-force ground-truth enumeration.

Bit conventions (most-significant first everywhere):
  * qubit q of an n-qubit register sits at bit position n-1-q of the basis
    word, so qubit 0 is the leftmost bit;
  * the factoring register is x2 x1 x0 y2 y1 y0 c3 c2 c1 c0 (10 qubits);
  * the circuit construction orders the composite word as program bits major,
    clock bits minor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse

from .core import SparseHermitian
from .model import CavityBank, CoolingModelSpec, ProblemHamiltonian, TransitionTerm

BRUTE_FORCE_QUBIT_CAP = 24
GROVER_QUBIT_CAP = 12  # projector storage is 4**N entries


# ---------------------------------------------------------------------------
# shared transition generators
# ---------------------------------------------------------------------------

def sum_of_x(n_qubits: int) -> TransitionTerm:
    """Transition term sum_i X_i: unit matrix element between words at
    Hamming distance one, zero otherwise."""
    dim = 2 ** n_qubits
    rows = np.repeat(np.arange(dim), n_qubits)
    cols = rows ^ np.tile(2 ** np.arange(n_qubits), dim)
    mat = scipy.sparse.csr_matrix(
        (np.ones(rows.size), (rows, cols)), shape=(dim, dim), dtype=np.complex128
    )
    return TransitionTerm("sum-of-x", SparseHermitian(mat))


def uniform_projector(n_qubits: int) -> TransitionTerm:
    """Rank-one projector onto the uniform superposition, i.e. the tensor
    product of (I + X)/2 over all qubits; every matrix element is 2**-N."""
    if n_qubits > GROVER_QUBIT_CAP:
        raise ValueError(
            f"projector storage grows as 4**N; {n_qubits} qubits exceeds "
            f"cap {GROVER_QUBIT_CAP}"
        )
    dim = 2 ** n_qubits
    data = np.full(dim * dim, 1.0 / dim, dtype=np.complex128)
    indices = np.tile(np.arange(dim, dtype=np.int32), dim)
    indptr = np.arange(dim + 1, dtype=np.int64) * dim
    mat = scipy.sparse.csr_matrix((data, indices, indptr), shape=(dim, dim))
    return TransitionTerm("grover-projector", SparseHermitian(mat))


# ---------------------------------------------------------------------------
# Grover-style search
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroverProblem:
    n_qubits: int
    marked: frozenset

    def __post_init__(self):
        marked = frozenset(int(z) for z in self.marked)
        if not marked:
            raise ValueError("marked set must be non-empty")
        if len(marked) >= 2 ** self.n_qubits:
            raise ValueError("marked set must be a strict subset of all words")
        if any(not 0 <= z < 2 ** self.n_qubits for z in marked):
            raise ValueError("marked word out of range")
        object.__setattr__(self, "marked", marked)

    @property
    def n_solutions(self) -> int:
        return len(self.marked)


def grover_encode(p: GroverProblem) -> tuple:
    """Indicator cost (0 on marked words, 1 elsewhere) plus the uniform
    projector transition term."""
    energies = np.ones(2 ** p.n_qubits, dtype=np.int64)
    energies[sorted(p.marked)] = 0
    return (
        ProblemHamiltonian(p.n_qubits, energies),
        uniform_projector(p.n_qubits),
    )


def grover_model(p: GroverProblem, lam: float) -> CoolingModelSpec:
    """Single cavity at the level spacing, no photon-preserving transitions."""
    problem, transition = grover_encode(p)
    return CoolingModelSpec(problem, transition, CavityBank((1.0,)), lam, 0)


# ---------------------------------------------------------------------------
# integer factoring
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FactoringProblem:
    """Factor a 6-bit target into two 3-bit integers with four carry bits.

    The five column equations of the schoolbook multiplication are

        x0*y0                     = z0
        x1*y0 + x0*y1             = 2*c0 + z1
        x2*y0 + x1*y1 + x0*y2 + c0 = 4*c2 + 2*c1 + z2
        x2*y1 + x1*y2 + c1        = 2*c3 + z3
        x2*y2 + c2 + c3           = 2*z5 + z4

    and each violated equation costs one spacing unit.
    """

    target: int

    N_QUBITS = 10

    def __post_init__(self):
        if not 0 < self.target < 64:
            raise ValueError("target must be a 6-bit integer in [1, 63]")

    @staticmethod
    def split(z) -> tuple:
        """Assignment word -> (x, y, c) integers; works elementwise on arrays."""
        return (z >> 7) & 7, (z >> 4) & 7, z & 15


def factoring_energies(target: int) -> np.ndarray:
    """Violated-equation count for every 10-bit assignment (vectorized)."""
    z = np.arange(2 ** FactoringProblem.N_QUBITS, dtype=np.int64)
    x0, x1, x2 = (z >> 7) & 1, (z >> 8) & 1, (z >> 9) & 1
    y0, y1, y2 = (z >> 4) & 1, (z >> 5) & 1, (z >> 6) & 1
    c0, c1, c2, c3 = z & 1, (z >> 1) & 1, (z >> 2) & 1, (z >> 3) & 1
    t = [(target >> k) & 1 for k in range(6)]
    violations = (
        (x0 * y0 != t[0]).astype(np.int64)
        + (x1 * y0 + x0 * y1 != 2 * c0 + t[1])
        + (x2 * y0 + x1 * y1 + x0 * y2 + c0 != 4 * c2 + 2 * c1 + t[2])
        + (x2 * y1 + x1 * y2 + c1 != 2 * c3 + t[3])
        + (x2 * y2 + c2 + c3 != 2 * t[5] + t[4])
    )
    return violations


def factoring_encode(p: FactoringProblem) -> ProblemHamiltonian:
    return ProblemHamiltonian(FactoringProblem.N_QUBITS, factoring_energies(p.target))


def factoring_model(
    p: FactoringProblem,
    lam: float = 0.1,
    alpha0: int = 1,
    n_modes: int = 3,
) -> CoolingModelSpec:
    """Bit-flip transitions with a cavity ladder w_m = m times the spacing."""
    problem = factoring_encode(p)
    bank = CavityBank(tuple(float(m) for m in range(1, n_modes + 1)))
    return CoolingModelSpec(problem, sum_of_x(problem.n_qubits), bank, lam, alpha0)


# ---------------------------------------------------------------------------
# transition chains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChainProblem:
    """(n+1)-level ladder with a flat or triangular energy profile."""

    n: int
    profile: str

    def __post_init__(self):
        if self.profile not in ("flat", "triangle"):
            raise ValueError(f"unknown profile {self.profile!r}")
        if self.profile == "flat" and self.n < 2:
            raise ValueError("flat profile requires n >= 2")
        if self.profile == "triangle":
            if self.n < 2 or self.n % 2:
                raise ValueError("triangle profile requires even n >= 2")

    def energies(self) -> np.ndarray:
        if self.profile == "flat":
            e = np.ones(self.n + 1)
            e[0] = e[self.n] = 0.0
            return e
        j = np.arange(self.n + 1)
        return np.minimum(j, self.n - j).astype(np.float64)


def chain_encode(p: ChainProblem, lam: float) -> SparseHermitian:
    """Tridiagonal chain Hamiltonian: profile energies on the diagonal,
    coupling lam on the off-diagonals."""
    if not 0 < lam < 1:
        raise ValueError("coupling must satisfy 0 < lam < 1")
    e = p.energies()
    off = np.full(p.n, lam)
    return SparseHermitian(
        scipy.sparse.diags([off, e, off], offsets=[-1, 0, 1], format="csr")
    )


# ---------------------------------------------------------------------------
# compiled circuits
# ---------------------------------------------------------------------------

_SQ2 = 1.0 / math.sqrt(2.0)
GATE_MATRICES = {
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "H": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=np.complex128),
    "T": np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=np.complex128),
}
GATE_SET = ("X", "H", "T", "CNOT")


def _single_qubit_unitary(n_qubits, gate, qubit):
    left = 2 ** qubit
    right = 2 ** (n_qubits - 1 - qubit)
    return np.kron(np.kron(np.eye(left), GATE_MATRICES[gate]), np.eye(right))


def _cnot_unitary(n_qubits, control, target):
    dim = 2 ** n_qubits
    cbit = 1 << (n_qubits - 1 - control)
    tbit = 1 << (n_qubits - 1 - target)
    src = np.arange(dim)
    dst = np.where(src & cbit, src ^ tbit, src)
    U = np.zeros((dim, dim), dtype=np.complex128)
    U[dst, src] = 1.0
    return U


def step_unitary(n_qubits: int, gate: str, targets: tuple) -> np.ndarray:
    """Full-register unitary of one gate application."""
    if gate == "CNOT":
        if len(targets) != 2 or targets[0] == targets[1]:
            raise ValueError("CNOT takes two distinct targets (control, target)")
        control, target = targets
        if not (0 <= control < n_qubits and 0 <= target < n_qubits):
            raise ValueError("CNOT target out of range")
        return _cnot_unitary(n_qubits, control, target)
    if gate not in GATE_MATRICES:
        raise ValueError(f"gate {gate!r} not in the supported set {GATE_SET}")
    if len(targets) != 1 or not 0 <= targets[0] < n_qubits:
        raise ValueError(f"{gate} takes one in-range target, got {targets}")
    return _single_qubit_unitary(n_qubits, gate, targets[0])


@dataclass(frozen=True)
class CompiledCircuit:
    """T-step circuit on a program register; one gate per time step."""

    n_qubits: int
    gates: tuple  # ((name, (targets...)), ...)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("circuit needs at least one qubit")
        gates = tuple((str(g), tuple(int(q) for q in t)) for g, t in self.gates)
        if not gates:
            raise ValueError("circuit needs at least one step (T >= 1)")
        object.__setattr__(self, "gates", gates)
        for u in self.step_unitaries():
            defect = np.abs(u.conj().T @ u - np.eye(u.shape[0])).max()
            if defect > 1e-12:
                raise ValueError(f"step unitary fails unitarity check ({defect:.3e})")

    @property
    def n_steps(self) -> int:
        return len(self.gates)

    def step_unitaries(self):
        return [step_unitary(self.n_qubits, g, t) for g, t in self.gates]

    def clock_spectrum(self) -> np.ndarray:
        """Raw clock ladder -t for t = 0..T, before the constant shift that
        makes stored energies non-negative."""
        return -np.arange(self.n_steps + 1, dtype=np.float64)

    def output_state(self, program_state: np.ndarray) -> np.ndarray:
        """Direct gate-by-gate application; reference for fidelity checks."""
        psi = np.asarray(program_state, dtype=np.complex128).copy()
        for u in self.step_unitaries():
            psi = u @ psi
        return psi

    @classmethod
    def from_json(cls, doc) -> "CompiledCircuit":
        """Parse {"n_qubits": int, "gates": [{"gate": str, "targets": [int]}]}."""
        try:
            n_qubits = int(doc["n_qubits"])
            gates = tuple(
                (entry["gate"], tuple(entry["targets"])) for entry in doc["gates"]
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed circuit document: {exc}") from exc
        return cls(n_qubits, gates)


def clock_register_width(n_steps: int) -> int:
    """Qubits needed to hold clock values 0..T."""
    return max(1, math.ceil(math.log2(n_steps + 1)))


def circuit_encode(c: CompiledCircuit) -> tuple:
    """Clock-ladder construction on the program (x) clock composite.

    The cost assigns T - t to clock value t (a constant shift of the raw
    -t ladder, which leaves the dynamics unchanged and keeps stored energies
    non-negative); padded clock values above T get a sentinel T + 1 and are
    never coupled.  The transition term hops the clock forward while applying
    the step unitary: sum_t U_{t+1} (x) |t+1><t| plus the conjugate.
    """
    T = c.n_steps
    n_clock = clock_register_width(T)
    clock_dim = 2 ** n_clock
    prog_dim = 2 ** c.n_qubits
    n_total = c.n_qubits + n_clock

    t_part = np.tile(np.arange(clock_dim), prog_dim)
    energies = np.where(t_part <= T, T - t_part, T + 1)
    problem = ProblemHamiltonian(n_total, energies)

    blocks = scipy.sparse.csr_matrix((prog_dim * clock_dim,) * 2, dtype=np.complex128)
    for t, u in enumerate(c.step_unitaries()):
        hop = scipy.sparse.csr_matrix(
            (np.ones(1), ([t + 1], [t])), shape=(clock_dim, clock_dim)
        )
        term = scipy.sparse.kron(scipy.sparse.csr_matrix(u), hop, format="csr")
        blocks = blocks + term + term.getH()
    transition = TransitionTerm("clock-ladder", SparseHermitian(blocks))
    return problem, transition


def circuit_model(c: CompiledCircuit, lam: float) -> CoolingModelSpec:
    """Single cavity at the level spacing, no photon-preserving transitions."""
    problem, transition = circuit_encode(c)
    return CoolingModelSpec(problem, transition, CavityBank((1.0,)), lam, 0)


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------

def brute_force_ground(p: ProblemHamiltonian) -> tuple:
    """Exhaustive enumeration: (minimum energy, array of minimizing words)."""
    if p.n_qubits > BRUTE_FORCE_QUBIT_CAP:
        raise ValueError(
            f"enumeration over {p.n_qubits} qubits exceeds cap {BRUTE_FORCE_QUBIT_CAP}"
        )
    emin = int(p.energies.min())
    return emin, np.flatnonzero(p.energies == emin)


# ---------------------------------------------------------------------------
# JSON experiment-model construction
# ---------------------------------------------------------------------------

def model_from_config(cfg: dict) -> CoolingModelSpec:
    """Build a cooling model from a JSON-style mapping.

    Expected keys: problem kind plus parameters and "lambda".  Optional:
    "alpha0", "omegas" (explicit cavity frequency list; default is the
    ladder 1..M with M from "modes" or the kind's default) and "transition"
    to override the kind's transition term ("sum-of-x" or
    "grover-projector").
    """
    kind = cfg["kind"]
    lam = float(cfg["lambda"])
    if kind == "grover":
        p = GroverProblem(int(cfg["n_qubits"]), frozenset(cfg["marked"]))
        spec = grover_model(p, lam)
    elif kind == "factor":
        spec = factoring_model(
            FactoringProblem(int(cfg["target"])),
            lam=lam,
            alpha0=int(cfg.get("alpha0", 1)),
            n_modes=int(cfg.get("modes", 3)),
        )
    elif kind == "circuit":
        spec = circuit_model(CompiledCircuit.from_json(cfg["circuit"]), lam)
    else:
        raise ValueError(f"unknown problem kind {kind!r}")

    overrides = {}
    if "omegas" in cfg:
        overrides["cavities"] = CavityBank(tuple(float(w) for w in cfg["omegas"]))
    if "alpha0" in cfg and kind != "factor":
        overrides["alpha0"] = int(cfg["alpha0"])
    if "transition" in cfg:
        builders = {"sum-of-x": sum_of_x, "grover-projector": uniform_projector}
        if cfg["transition"] not in builders:
            raise ValueError(f"unknown transition kind {cfg['transition']!r}")
        overrides["transition"] = builders[cfg["transition"]](spec.problem.n_qubits)
    if overrides:
        spec = replace(spec, **overrides)
    return spec
