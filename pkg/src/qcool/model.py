"""Assembly of the full cooling Hamiltonian on the system (x) cavity space.

The composite basis is lexicographic with system bits major and cavity bits
minor: index = z * 2**M + b.  Within the cavity word b, mode m (1-based)
occupies bit M - m, so mode 1 is the most significant cavity bit.  Cavity
modes are truncated to one photon each, hence each mode is a qubit and the
raising/lowering pair of a mode acts as a bit flip.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse

from .core import SparseHermitian

DIM_CAP_DEFAULT = 2 ** 24
NNZ_CAP_DEFAULT = 2 ** 26


@dataclass(frozen=True)
class ProblemHamiltonian:
    """Diagonal cost operator: non-negative integer energies over N-bit strings."""

    n_qubits: int
    energies: np.ndarray  # shape (2**n_qubits,), integers in spacing units

    def __post_init__(self):
        e = np.asarray(self.energies)
        if e.shape != (2 ** self.n_qubits,):
            raise ValueError(
                f"energy table has shape {e.shape}, expected ({2 ** self.n_qubits},)"
            )
        if np.any(e < 0):
            raise ValueError("energies must be non-negative")
        if not np.allclose(e, np.round(e)):
            raise ValueError("energies must be integer multiples of the spacing")
        object.__setattr__(self, "energies", np.round(e).astype(np.int64))

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits

    def ground_energy(self) -> int:
        return int(self.energies.min())

    def ground_states(self) -> np.ndarray:
        return np.flatnonzero(self.energies == self.energies.min())

    def operator(self) -> SparseHermitian:
        return SparseHermitian.from_diagonal(self.energies.astype(np.float64))


TRANSITION_KINDS = ("sum-of-x", "grover-projector", "clock-ladder", "chain-adjacency")


@dataclass(frozen=True)
class TransitionTerm:
    """Off-diagonal generator between cost-basis states; must be Hermitian."""

    kind: str
    matrix: SparseHermitian

    def __post_init__(self):
        if self.kind not in TRANSITION_KINDS:
            raise ValueError(f"unknown transition kind {self.kind!r}")

    @property
    def dim(self) -> int:
        return self.matrix.dim


@dataclass(frozen=True)
class CavityBank:
    """M single-photon modes with frequencies in spacing units."""

    frequencies: tuple = ()

    def __post_init__(self):
        freqs = tuple(float(w) for w in self.frequencies)
        if any(w <= 0 for w in freqs):
            raise ValueError("cavity frequencies must be positive")
        object.__setattr__(self, "frequencies", freqs)

    @property
    def n_modes(self) -> int:
        return len(self.frequencies)

    @property
    def dim(self) -> int:
        return 2 ** self.n_modes

    def occupation_bits(self, b: int) -> np.ndarray:
        """Occupation n_m for m = 1..M of cavity word b (mode 1 = MSB)."""
        M = self.n_modes
        return np.array([(b >> (M - m)) & 1 for m in range(1, M + 1)], dtype=np.int64)

    def energies(self) -> np.ndarray:
        """Photon energy of every cavity word, indexed by b."""
        M = self.n_modes
        out = np.zeros(self.dim)
        for b in range(self.dim):
            out[b] = sum(
                self.frequencies[m - 1] * ((b >> (M - m)) & 1) for m in range(1, M + 1)
            )
        return out


@dataclass(frozen=True)
class CoolingModelSpec:
    """Problem + transition + cavity bank + coupling: everything in Eq. form
    H = H_P (x) I + sum_m w_m n_m + lam * H_T (x) [alpha0 I + sum_m (flip_m)].
    """

    problem: ProblemHamiltonian
    transition: TransitionTerm
    cavities: CavityBank
    lam: float
    alpha0: int

    def __post_init__(self):
        if not 0 <= self.lam < 1:
            raise ValueError("coupling must satisfy 0 <= lam < 1 (perturbative regime)")
        if self.alpha0 not in (0, 1):
            raise ValueError("alpha0 must be 0 or 1")
        if self.transition.dim != self.problem.dim:
            raise ValueError(
                f"transition dim {self.transition.dim} != problem dim {self.problem.dim}"
            )

    @property
    def dim(self) -> int:
        return self.problem.dim * self.cavities.dim


# ---------------------------------------------------------------------------
# basis bookkeeping
# ---------------------------------------------------------------------------

def basis_index(z: int, b: int, n_qubits: int, n_modes: int) -> int:
    """Composite index of system word z and cavity word b (lexicographic)."""
    if not 0 <= z < 2 ** n_qubits:
        raise ValueError(f"system word {z} out of range for {n_qubits} qubits")
    if not 0 <= b < 2 ** n_modes:
        raise ValueError(f"cavity word {b} out of range for {n_modes} modes")
    return z * 2 ** n_modes + b


def basis_split(index: int, n_qubits: int, n_modes: int) -> tuple:
    """Inverse of basis_index: composite index -> (z, b)."""
    dim = 2 ** (n_qubits + n_modes)
    if not 0 <= index < dim:
        raise ValueError(f"index {index} out of range for dim {dim}")
    return divmod(index, 2 ** n_modes)


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------

def _cavity_coupling(bank: CavityBank, alpha0: int) -> scipy.sparse.csr_matrix:
    """alpha0 * I + sum_m (sigma_m^- + sigma_m^+) on the cavity register."""
    dim = bank.dim
    M = bank.n_modes
    op = scipy.sparse.csr_matrix((dim, dim), dtype=np.complex128)
    if alpha0:
        op = op + scipy.sparse.identity(dim, dtype=np.complex128, format="csr")
    for m in range(1, M + 1):
        bit = 1 << (M - m)
        rows = np.arange(dim)
        cols = rows ^ bit
        flip = scipy.sparse.csr_matrix(
            (np.ones(dim), (rows, cols)), shape=(dim, dim), dtype=np.complex128
        )
        op = op + flip
    return op


def assemble(
    spec: CoolingModelSpec,
    dim_cap: int = DIM_CAP_DEFAULT,
    nnz_cap: int = NNZ_CAP_DEFAULT,
) -> SparseHermitian:
    """Build the full cooling Hamiltonian on the composite space as CSR.

    With lam = 0 the result is diagonal with entries E(z) + sum_m w_m b_m.
    Each mode-flip term changes exactly one cavity bit; the alpha0 term
    changes none.
    """
    if spec.dim > dim_cap:
        raise ValueError(f"composite dimension {spec.dim} exceeds cap {dim_cap}")
    cav_coupling = _cavity_coupling(spec.cavities, spec.alpha0)
    est_nnz = (
        spec.problem.dim * spec.cavities.dim
        + spec.transition.matrix.nnz * cav_coupling.nnz
    )
    if est_nnz > nnz_cap:
        raise ValueError(
            f"estimated nonzeros {est_nnz} exceed cap {nnz_cap}; "
            "refusing to assemble (raise nnz_cap to override)"
        )

    sys_dim, cav_dim = spec.problem.dim, spec.cavities.dim
    diag = (
        np.repeat(spec.problem.energies.astype(np.float64), cav_dim)
        + np.tile(spec.cavities.energies(), sys_dim)
    )
    H = scipy.sparse.diags(diag, format="csr", dtype=np.complex128)
    H = H + spec.lam * scipy.sparse.kron(spec.transition.matrix.csr, cav_coupling, format="csr")
    return SparseHermitian(H)


def zero_photon_block(H: SparseHermitian, n_qubits: int, n_modes: int) -> SparseHermitian:
    """Restriction of an assembled Hamiltonian to the empty-cavity sector."""
    idx = np.arange(2 ** n_qubits) * 2 ** n_modes
    return SparseHermitian(H.csr[np.ix_(idx, idx)])


def commutator_norm(a: SparseHermitian, b: SparseHermitian) -> float:
    """Frobenius norm of [a, b]; used as a does-not-commute positivity check."""
    if a.dim != b.dim:
        raise ValueError(f"dims {a.dim} != {b.dim}")
    comm = a.csr @ b.csr - b.csr @ a.csr
    return float(np.linalg.norm(comm.tocsr().data)) if comm.nnz else 0.0
