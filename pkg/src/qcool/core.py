"""Complex state vectors, sparse Hermitian operators, and controlled time evolution.

All energies are stored in units of the level spacing (so the spacing is 1
internally) and times in its inverse; couplings and cavity frequencies are
expressed relative to it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse

NORM_TOL = 1e-10
DROP_TOL = 1e-14


class EvolutionError(RuntimeError):
    """Evolution failed: Krylov non-convergence or non-finite amplitudes."""


class DimensionMismatchError(ValueError):
    """Operator and state dimensions disagree."""


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------

class StateVector:
    """Normalized complex amplitude vector over a computational basis.

    The amplitude buffer is owned by the instance; operations that change the
    state return a new instance.
    """

    __slots__ = ("amplitudes",)

    def __init__(self, amplitudes, normalize=False, copy=True):
        amps = np.array(amplitudes, dtype=np.complex128, copy=copy).ravel()
        if amps.size == 0:
            raise ValueError("state must have positive dimension")
        if normalize:
            nrm = np.linalg.norm(amps)
            if nrm == 0.0:
                raise ValueError("cannot normalize a zero vector")
            amps = amps / nrm
        elif abs(np.linalg.norm(amps) - 1.0) > NORM_TOL:
            raise ValueError(
                f"state norm {np.linalg.norm(amps):.3e} deviates from 1 "
                f"beyond {NORM_TOL:g}; pass normalize=True to rescale"
            )
        self.amplitudes = amps

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    @classmethod
    def basis(cls, dim: int, index: int) -> "StateVector":
        if not 0 <= index < dim:
            raise ValueError(f"basis index {index} out of range for dim {dim}")
        amps = np.zeros(dim, dtype=np.complex128)
        amps[index] = 1.0
        return cls(amps, copy=False)

    @classmethod
    def uniform(cls, dim: int) -> "StateVector":
        return cls(np.full(dim, 1.0 / np.sqrt(dim), dtype=np.complex128), copy=False)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other: "StateVector") -> complex:
        if other.dim != self.dim:
            raise DimensionMismatchError(f"dims {self.dim} != {other.dim}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes, copy=True)

    def __repr__(self):
        return f"StateVector(dim={self.dim})"


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

class SparseHermitian:
    """Hermitian operator in compressed sparse row form, entries in spacing units.

    Hermiticity is verified structurally on construction: the stored matrix
    must equal its conjugate transpose entry for entry.  Entries below
    ``DROP_TOL`` in magnitude are removed.
    """

    __slots__ = ("csr", "_eig")

    def __init__(self, matrix):
        csr = scipy.sparse.csr_matrix(matrix, dtype=np.complex128)
        if csr.shape[0] != csr.shape[1]:
            raise ValueError(f"operator must be square, got {csr.shape}")
        csr.sum_duplicates()
        mask = np.abs(csr.data) > DROP_TOL
        if not mask.all():
            csr.data[~mask] = 0.0
            csr.eliminate_zeros()
        csr.sort_indices()
        herm_defect = csr - csr.getH()
        herm_defect.eliminate_zeros()
        if herm_defect.nnz:
            worst = np.abs(herm_defect.data).max()
            raise ValueError(f"operator is not Hermitian (max defect {worst:.3e})")
        self.csr = csr
        self._eig = None

    @property
    def dim(self) -> int:
        return self.csr.shape[0]

    @property
    def nnz(self) -> int:
        return self.csr.nnz

    @classmethod
    def from_diagonal(cls, values) -> "SparseHermitian":
        vals = np.asarray(values, dtype=np.float64)
        return cls(scipy.sparse.diags(vals, format="csr"))

    @classmethod
    def from_triplets(cls, dim, rows, cols, values) -> "SparseHermitian":
        mat = scipy.sparse.coo_matrix((values, (rows, cols)), shape=(dim, dim))
        return cls(mat.tocsr())

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.csr.dot(x)

    def to_dense(self) -> np.ndarray:
        return self.csr.toarray()

    def diagonal(self) -> np.ndarray:
        return self.csr.diagonal()

    def norm_fro(self) -> float:
        return float(np.linalg.norm(self.csr.data))

    def eigensystem(self):
        """Dense eigendecomposition (cached). Returns (eigenvalues, eigenvectors).

        Operators with purely real entries are decomposed in float64 (the
        eigenvector matrix comes back real), which is several times faster
        and half the memory of the complex path.
        """
        if self._eig is None:
            if np.abs(self.csr.data.imag).max(initial=0.0) == 0.0:
                dense = np.asfortranarray(self.csr.real.toarray())
            else:
                dense = self.csr.toarray(order="F")
            evals, evecs = scipy.linalg.eigh(
                dense, overwrite_a=True, check_finite=False, driver="evr"
            )
            self._eig = (evals, evecs)
        return self._eig

    def drop_eigensystem(self):
        """Release the cached eigendecomposition (frees dim^2 memory)."""
        self._eig = None

    def __repr__(self):
        return f"SparseHermitian(dim={self.dim}, nnz={self.nnz})"


def apply(op: SparseHermitian, psi: StateVector) -> np.ndarray:
    """Raw operator application op @ psi; result is not normalized."""
    if op.dim != psi.dim:
        raise DimensionMismatchError(f"operator dim {op.dim} != state dim {psi.dim}")
    return op.matvec(psi.amplitudes)


def expectation(op: SparseHermitian, psi: StateVector) -> float:
    """Return <psi|op|psi> as a real number.

    An imaginary residue above 1e-10 (relative to the operator scale) signals
    a non-Hermitian operator bug and raises.
    """
    if op.dim != psi.dim:
        raise DimensionMismatchError(f"operator dim {op.dim} != state dim {psi.dim}")
    val = complex(np.vdot(psi.amplitudes, op.matvec(psi.amplitudes)))
    scale = max(1.0, abs(val))
    if abs(val.imag) > 1e-10 * scale:
        raise ValueError(f"expectation has imaginary residue {val.imag:.3e}")
    return val.real


# ---------------------------------------------------------------------------
# time evolution
# ---------------------------------------------------------------------------

@dataclass
class EvolutionEngine:
    """Numerically controlled evolution exp(-i H t) |psi>.

    method:
        "exact"  - dense eigendecomposition, phases applied in the eigenbasis.
        "krylov" - restarted Lanczos with adaptive sub-steps; the a-posteriori
                   error estimate per sub-step is kept below a share of
                   ``tolerance`` proportional to the sub-step length.
        "auto"   - exact for dim <= exact_dim_threshold, else krylov.

    tolerance is the target 2-norm error of the evolved state over the whole
    requested time.
    """

    method: str = "auto"
    tolerance: float = 1e-10
    max_subspace_dim: int = 48
    exact_dim_threshold: int = 2048

    def resolve(self, dim: int) -> str:
        if self.method == "auto":
            return "exact" if dim <= self.exact_dim_threshold else "krylov"
        if self.method not in ("exact", "krylov"):
            raise ValueError(f"unknown evolution method {self.method!r}")
        return self.method


DEFAULT_ENGINE = EvolutionEngine()


def eigenbasis_matmul(evecs: np.ndarray, x: np.ndarray, adjoint=False) -> np.ndarray:
    """evecs @ x (or evecs^dagger @ x) for complex x, staying in real GEMM
    when the eigenvector matrix is real: the complex array is viewed as an
    interleaved float64 block, which is exact and avoids promoting evecs.
    """
    M = evecs.conj().T if adjoint else evecs
    if np.iscomplexobj(evecs):
        return M @ x
    x = np.ascontiguousarray(x, dtype=np.complex128)
    flat = M @ x.view(np.float64).reshape(x.shape[0], -1)
    out = np.ascontiguousarray(flat).view(np.complex128)
    return out.reshape((M.shape[0],) + x.shape[1:])


def _evolve_exact(H: SparseHermitian, amps: np.ndarray, t: float) -> np.ndarray:
    evals, evecs = H.eigensystem()
    coeff = eigenbasis_matmul(evecs, amps, adjoint=True)
    coeff *= np.exp(-1j * t * evals)
    return eigenbasis_matmul(evecs, coeff)


def _lanczos_basis(H, v0, m):
    """Lanczos tridiagonalization with full reorthogonalization.

    Returns (V, alpha, beta, k) where V holds k+1 orthonormal columns
    (k <= m), alpha[:k] the diagonal, beta[:k] the subdiagonal including the
    trailing coupling beta[k-1] = ||residual||.  beta[k-1] ~ 0 flags a happy
    breakdown: the Krylov space is invariant.
    """
    n = v0.shape[0]
    m = min(m, n)
    V = np.empty((n, m + 1), dtype=np.complex128)
    alpha = np.zeros(m, dtype=np.float64)
    beta = np.zeros(m, dtype=np.float64)
    V[:, 0] = v0
    for j in range(m):
        w = H.matvec(V[:, j])
        a = np.vdot(V[:, j], w)
        alpha[j] = a.real
        w -= a * V[:, j]
        if j > 0:
            w -= beta[j - 1] * V[:, j - 1]
        # one extra projection pass keeps the basis orthonormal for large m
        w -= V[:, : j + 1] @ (V[:, : j + 1].conj().T @ w)
        b = np.linalg.norm(w)
        beta[j] = b
        if b < 1e-13 * max(1.0, abs(alpha[: j + 1]).max()):
            return V, alpha, beta, j + 1
        V[:, j + 1] = w / b
    return V, alpha, beta, m


def _tridiag_expm_column(alpha, beta, k, tau, breakdown):
    """First column of exp(-i tau T) for the (k[+1])-dim projected matrix.

    Without breakdown the matrix is augmented by one row/column carrying the
    trailing coupling beta[k-1]; the magnitude of the last entry of the
    returned column is the a-posteriori error estimate for the sub-step.
    """
    if breakdown:
        T = np.diag(alpha[:k]) + np.diag(beta[: k - 1], 1) + np.diag(beta[: k - 1], -1)
    else:
        T = np.zeros((k + 1, k + 1))
        T[:k, :k] = np.diag(alpha[:k]) + np.diag(beta[: k - 1], 1) + np.diag(beta[: k - 1], -1)
        T[k, k - 1] = T[k - 1, k] = beta[k - 1]
    col = scipy.linalg.expm(-1j * tau * T)[:, 0]
    return col


MAX_KRYLOV_SUBSTEPS = 100_000


def _evolve_krylov(H, amps, t, tol, m):
    psi = amps.copy()
    remaining = t
    min_tau = t * 1e-12
    substeps = 0
    while remaining > 0.0:
        substeps += 1
        if substeps > MAX_KRYLOV_SUBSTEPS:
            raise EvolutionError(
                f"Krylov evolution exceeded {MAX_KRYLOV_SUBSTEPS} sub-steps; "
                f"raise max_subspace_dim (currently {m}) or the tolerance"
            )
        nrm = np.linalg.norm(psi)
        V, alpha, beta, k = _lanczos_basis(H, psi / nrm, m)
        breakdown = beta[k - 1] < 1e-13 * max(1.0, abs(alpha[:k]).max())
        tau = remaining
        while True:
            col = _tridiag_expm_column(alpha, beta, k, tau, breakdown)
            if breakdown:
                err = 0.0
            else:
                err = abs(col[k])
            if err <= tol * (tau / t) or tau <= min_tau:
                break
            tau *= 0.5
        if tau <= min_tau and err > tol * (tau / t):
            raise EvolutionError(
                f"Krylov step failed to converge within subspace dim {m}; "
                f"residual estimate {err:.3e}"
            )
        span = k if breakdown else k + 1
        psi = nrm * (V[:, :span] @ col)
        remaining -= tau
    return psi


def evolve(
    H: SparseHermitian,
    psi: StateVector,
    t: float,
    engine: EvolutionEngine = DEFAULT_ENGINE,
) -> StateVector:
    """Return exp(-i H t) |psi>, normalized.

    Energy conservation is enforced: <H> before and after must agree within
    1e-8 (absolute, relative to the initial magnitude), else the evolution is
    considered failed.
    """
    if H.dim != psi.dim:
        raise DimensionMismatchError(f"operator dim {H.dim} != state dim {psi.dim}")
    if t < 0:
        raise ValueError("evolution time must be non-negative")
    if t == 0.0:
        return psi.copy()

    e_before = expectation(H, psi)
    method = engine.resolve(H.dim)
    if method == "exact":
        amps = _evolve_exact(H, psi.amplitudes, t)
    else:
        amps = _evolve_krylov(H, psi.amplitudes, t, engine.tolerance, engine.max_subspace_dim)

    if not np.isfinite(amps).all():
        raise EvolutionError("non-finite amplitudes after evolution")
    out = StateVector(amps, normalize=True, copy=False)
    e_after = expectation(H, out)
    if abs(e_after - e_before) > 1e-8 * max(1.0, abs(e_before)):
        raise EvolutionError(
            f"energy drifted from {e_before:.12g} to {e_after:.12g} during evolution"
        )
    return out


# ---------------------------------------------------------------------------
# JSON snapshots (debugging / cross-implementation comparison)
# ---------------------------------------------------------------------------

def state_to_json(psi: StateVector) -> dict:
    """Snapshot schema: {"dim": int, "amplitudes": [[re, im], ...]}."""
    return {
        "dim": psi.dim,
        "amplitudes": [[float(a.real), float(a.imag)] for a in psi.amplitudes],
    }


def state_from_json(doc: dict) -> StateVector:
    amps = np.array([complex(re, im) for re, im in doc["amplitudes"]])
    if len(amps) != doc["dim"]:
        raise ValueError("amplitude list length does not match dim")
    return StateVector(amps)


def operator_to_json(op: SparseHermitian) -> dict:
    """Snapshot schema: {"dim": int, "triplets": [[row, col, re, im], ...]}."""
    coo = op.csr.tocoo()
    return {
        "dim": op.dim,
        "triplets": [
            [int(i), int(j), float(v.real), float(v.imag)]
            for i, j, v in zip(coo.row, coo.col, coo.data)
        ],
    }


def operator_from_json(doc: dict) -> SparseHermitian:
    trips = doc["triplets"]
    rows = [t[0] for t in trips]
    cols = [t[1] for t in trips]
    vals = [complex(t[2], t[3]) for t in trips]
    return SparseHermitian.from_triplets(doc["dim"], rows, cols, vals)
