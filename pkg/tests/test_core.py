import numpy as np
import pytest
import scipy.sparse

from qcool.core import (
    DimensionMismatchError,
    EvolutionEngine,
    EvolutionError,
    SparseHermitian,
    StateVector,
    apply,
    evolve,
    expectation,
    operator_from_json,
    operator_to_json,
    state_from_json,
    state_to_json,
)

PAULI_X = SparseHermitian(np.array([[0, 1], [1, 0]], dtype=complex))


def random_hermitian(rng, dim, density=0.2):
    mat = scipy.sparse.random(dim, dim, density=density, random_state=rng, format="csr")
    mat = mat + 1j * scipy.sparse.random(dim, dim, density=density, random_state=rng, format="csr")
    return SparseHermitian(mat + mat.getH())


def random_state(rng, dim):
    amps = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return StateVector(amps, normalize=True)


class TestStateVector:
    def test_basis_and_uniform(self):
        b = StateVector.basis(4, 2)
        assert b.amplitudes[2] == 1.0 and b.norm() == 1.0
        u = StateVector.uniform(8)
        assert np.allclose(u.probabilities(), 1 / 8)

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            StateVector(np.array([1.0, 1.0]))

    def test_normalize_flag(self):
        s = StateVector(np.array([3.0, 4.0]), normalize=True)
        assert abs(s.norm() - 1.0) < 1e-12

    def test_basis_out_of_range(self):
        with pytest.raises(ValueError):
            StateVector.basis(4, 4)


class TestSparseHermitian:
    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="Hermitian"):
            SparseHermitian(np.array([[0, 1], [0, 0]], dtype=complex))

    def test_drop_tolerance(self):
        mat = np.array([[1.0, 1e-16], [1e-16, 2.0]], dtype=complex)
        op = SparseHermitian(mat)
        assert op.nnz == 2

    def test_from_diagonal(self):
        op = SparseHermitian.from_diagonal([0.0, 1.0, 2.0])
        assert np.allclose(op.diagonal(), [0, 1, 2])


class TestApply:
    def test_identity(self):
        rng = np.random.default_rng(0)
        psi = random_state(rng, 6)
        eye = SparseHermitian(scipy.sparse.identity(6, dtype=complex))
        assert np.allclose(apply(eye, psi), psi.amplitudes)

    def test_pauli_x_flips(self):
        out = apply(PAULI_X, StateVector.basis(2, 0))
        assert np.allclose(out, [0, 1])

    def test_diagonal_action(self):
        energies = np.array([0.0, 2.0, 5.0, 1.0])
        op = SparseHermitian.from_diagonal(energies)
        for z in range(4):
            out = apply(op, StateVector.basis(4, z))
            expected = np.zeros(4, complex)
            expected[z] = energies[z]
            assert np.allclose(out, expected)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            apply(PAULI_X, StateVector.basis(4, 0))


class TestExpectation:
    def test_diagonal_basis_state(self):
        op = SparseHermitian.from_diagonal([0.0, 3.0])
        assert expectation(op, StateVector.basis(2, 1)) == 3.0

    def test_two_state_superposition(self):
        op = SparseHermitian.from_diagonal([0.0, 1.0])
        psi = StateVector(np.array([1, 1]) / np.sqrt(2))
        assert abs(expectation(op, psi) - 0.5) < 1e-12

    def test_real_for_random_hermitian(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            op = random_hermitian(rng, 16)
            psi = random_state(rng, 16)
            val = expectation(op, psi)
            assert isinstance(val, float)


class TestEvolve:
    def test_zero_hamiltonian(self):
        rng = np.random.default_rng(1)
        psi = random_state(rng, 4)
        H = SparseHermitian(scipy.sparse.csr_matrix((4, 4), dtype=complex))
        out = evolve(H, psi, 7.3)
        assert np.allclose(out.amplitudes, psi.amplitudes, atol=1e-12)

    def test_rabi_flop(self):
        lam = 0.2
        H = SparseHermitian(lam * np.array([[0, 1], [1, 0]], dtype=complex))
        out = evolve(H, StateVector.basis(2, 0), np.pi / (2 * lam))
        assert abs(abs(out.amplitudes[1]) ** 2 - 1.0) < 1e-8

    def test_detuned_two_level_peak(self):
        # H = delta|1><1| + lam*X with delta = 1: peak transfer is the
        # generalized Rabi value lam^2 / (lam^2 + delta^2/4)
        lam = 0.3
        H = SparseHermitian(np.array([[0, lam], [lam, 1.0]], dtype=complex))
        omega = np.sqrt(lam ** 2 + 0.25)
        ts = np.linspace(0.8, 1.2, 4001) * (np.pi / (2 * omega))
        peak = max(
            abs(evolve(H, StateVector.basis(2, 0), t).amplitudes[1]) ** 2 for t in ts
        )
        expected = lam ** 2 / (lam ** 2 + 0.25)
        assert abs(peak - expected) < 1e-6

    @pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
    def test_unitarity_random(self, t):
        rng = np.random.default_rng(5)
        for dim in (8, 32, 64):
            H = random_hermitian(rng, dim)
            psi = random_state(rng, dim)
            for method in ("exact", "krylov"):
                out = evolve(H, psi, t, EvolutionEngine(method=method))
                assert abs(out.norm() - 1.0) < 1e-10

    def test_composition(self):
        rng = np.random.default_rng(8)
        H = random_hermitian(rng, 24)
        psi = random_state(rng, 24)
        engine = EvolutionEngine(method="krylov", tolerance=1e-11)
        once = evolve(H, psi, 3.7, engine)
        twice = evolve(H, evolve(H, psi, 1.2, engine), 2.5, engine)
        assert np.linalg.norm(once.amplitudes - twice.amplitudes) < 1e-8

    @pytest.mark.parametrize("dim", [16, 128, 1024])
    def test_engine_cross_check(self, dim):
        rng = np.random.default_rng(dim)
        H = random_hermitian(rng, dim, density=0.05)
        psi = random_state(rng, dim)
        exact = evolve(H, psi, 2.0, EvolutionEngine(method="exact"))
        krylov = evolve(H, psi, 2.0, EvolutionEngine(method="krylov"))
        assert np.linalg.norm(exact.amplitudes - krylov.amplitudes) < 1e-8

    def test_krylov_non_convergence_raises(self):
        rng = np.random.default_rng(2)
        H = random_hermitian(rng, 64)
        psi = random_state(rng, 64)
        engine = EvolutionEngine(method="krylov", tolerance=1e-14, max_subspace_dim=2)
        with pytest.raises(EvolutionError):
            evolve(H, psi, 50.0, engine)

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            evolve(PAULI_X, StateVector.basis(2, 0), -1.0)


class TestJsonSnapshots:
    def test_state_round_trip(self):
        rng = np.random.default_rng(4)
        psi = random_state(rng, 5)
        back = state_from_json(state_to_json(psi))
        assert np.allclose(back.amplitudes, psi.amplitudes)

    def test_operator_round_trip(self):
        rng = np.random.default_rng(6)
        op = random_hermitian(rng, 10)
        back = operator_from_json(operator_to_json(op))
        assert (back.csr != op.csr).nnz == 0
