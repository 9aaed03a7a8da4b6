import csv

import numpy as np
import pytest

from qcool.core import StateVector
from qcool.model import CavityBank, CoolingModelSpec, ProblemHamiltonian
from qcool.problems import GroverProblem, grover_model, sum_of_x
from qcool.protocol import (
    CoolingConfig,
    CoolingModel,
    CycleOutcome,
    Trajectory,
    _embed_zero_photon,
    _measure_and_reset,
    mix_seed,
    run_cycle,
    run_ensemble,
    run_trajectories,
    run_trajectory,
    stats_from_trajectories,
    write_ensemble_csv,
    write_trajectory_csv,
)


def ladder_model(lam=0.1, alpha0=0):
    """2-qubit staircase: E(00)=2, E(01)=1, E(10)=3, E(11)=0 with one mode."""
    prob = ProblemHamiltonian(2, np.array([2, 1, 3, 0]))
    return CoolingModel.build(
        CoolingModelSpec(prob, sum_of_x(2), CavityBank((1.0,)), lam, alpha0)
    )


def basis_start(model, z0):
    amps = np.zeros(model.sys_dim, complex)
    amps[z0] = 1.0
    return StateVector(_embed_zero_photon(model, amps), copy=False)


class TestSeedSplitting:
    def test_deterministic(self):
        assert mix_seed(42, 0) == mix_seed(42, 0)

    def test_distinct_across_indices(self):
        seeds = {mix_seed(7, i) for i in range(10000)}
        assert len(seeds) == 10000

    def test_64_bit_range(self):
        for i in range(100):
            assert 0 <= mix_seed(2 ** 63, i) < 2 ** 64


class TestRunCycle:
    def test_zero_coupling_is_inert(self):
        prob = ProblemHamiltonian(2, np.array([2, 1, 3, 0]))
        model = CoolingModel.build(
            CoolingModelSpec(prob, sum_of_x(2), CavityBank((1.0,)), 0.0, 0)
        )
        cfg = CoolingConfig(max_cycles=1, seed=0, cycle_duration=10.0)
        rng = np.random.default_rng(0)
        psi = basis_start(model, 0)
        for _ in range(4):
            psi, out = run_cycle(model, psi, cfg, rng)
            assert out.detected == 0
            assert abs(psi.amplitudes[0]) ** 2 == pytest.approx(1.0, abs=1e-12)

    def test_sideband_step_cools(self):
        model = ladder_model()
        cfg = CoolingConfig(max_cycles=1, seed=0, cycle_duration=np.pi / 0.2)
        rng = np.random.default_rng(1)
        psi = basis_start(model, 0)  # E = 2
        psi, out = run_cycle(model, psi, cfg, rng)
        assert out.detected == 1
        assert out.post_energy < 1.1

    def test_search_cycle_lands_on_marked_state(self):
        # N = 8, one marked word, duration pi/(2 * exact rate): the photon
        # is detected and the post-measurement state is the marked word
        from qcool.analysis import grover_rate

        N, marked = 8, 37
        lam = 0.0025
        model = CoolingModel.build(grover_model(GroverProblem(N, frozenset({marked})), lam))
        rate, _ = grover_rate(N, 1, lam)
        cfg = CoolingConfig(
            max_cycles=1, seed=2, cycle_duration=np.pi / (2 * rate),
            initial_state=("uniform",),
        )
        rng = np.random.default_rng(cfg.seed)
        amps = np.full(2 ** N, 1 / np.sqrt(2 ** N), complex)
        psi = StateVector(_embed_zero_photon(model, amps), copy=False)
        psi, out = run_cycle(model, psi, cfg, rng)
        assert out.detected == 1
        assert out.ground_population >= 0.99
        assert abs(psi.amplitudes[2 * marked]) ** 2 >= 0.99

    def test_photon_sector_input_rejected(self):
        model = ladder_model()
        amps = np.zeros(8, complex)
        amps[1] = 1.0  # (z=0, b=1)
        psi = StateVector(amps, copy=False)
        cfg = CoolingConfig(max_cycles=1, seed=0)
        with pytest.raises(ValueError, match="photon-sector"):
            run_cycle(model, psi, cfg, np.random.default_rng(0))

    def test_reset_sector_purity(self):
        model = ladder_model()
        cfg = CoolingConfig(max_cycles=1, seed=0, cycle_duration=3.0)
        rng = np.random.default_rng(5)
        psi = basis_start(model, 0)
        for _ in range(6):
            psi, _ = run_cycle(model, psi, cfg, rng)
            grid = psi.amplitudes.reshape(model.sys_dim, model.cav_dim)
            assert np.all(grid[:, 1:] == 0.0)

    def test_normalization_guard(self):
        model = ladder_model()
        bad = np.zeros(8, complex)
        bad[0] = 1.0
        bad *= 1 + 1e-6
        with pytest.raises(ValueError, match="probabilities"):
            _measure_and_reset(model, bad, np.random.default_rng(0))


class TestMeasurementStatistics:
    def test_multinomial_frequencies(self):
        # fixed pre-measurement state with known cavity-block weights; the
        # sampled pattern frequencies must sit within 3 sigma of each weight
        model = ladder_model()
        weights = np.array([0.5, 0.2, 0.25, 0.05])
        amps = np.zeros((4, 2), complex)
        amps[0, 0] = np.sqrt(weights[0])
        amps[1, 0] = np.sqrt(weights[1])
        amps[2, 1] = np.sqrt(weights[2])
        amps[3, 1] = np.sqrt(weights[3])
        # cavity blocks: b=0 carries 0.7, b=1 carries 0.3
        flat = amps.reshape(-1)
        rng = np.random.default_rng(123)
        n = 4000
        hits = np.zeros(2)
        for _ in range(n):
            _, detected = _measure_and_reset(model, flat, rng)
            hits[detected] += 1
        for b, p in enumerate([0.7, 0.3]):
            sigma = np.sqrt(n * p * (1 - p))
            assert abs(hits[b] - n * p) <= 3 * sigma


class TestTrajectories:
    def test_determinism_bitwise(self):
        model = ladder_model()
        cfg = CoolingConfig(max_cycles=12, seed=99, initial_state=("basis", 2))
        a = run_trajectory(model, cfg)
        b = run_trajectory(model, cfg)
        assert a.detections().tolist() == b.detections().tolist()
        assert a.energies().tolist() == b.energies().tolist()

    def test_quiet_stop_on_ground_start(self):
        model = CoolingModel.build(grover_model(GroverProblem(3, frozenset({5})), 0.01))
        cfg = CoolingConfig(
            max_cycles=50,
            seed=4,
            quiet_cycles_to_stop=5,
            initial_state=("basis", 5),
        )
        traj = run_trajectory(model, cfg)
        assert traj.status == "quiet-stop"
        assert len(traj) == 5
        assert traj.detections().tolist() == [0] * 5

    def test_random_basis_initial_state_uses_stream(self):
        model = ladder_model()
        cfg1 = CoolingConfig(max_cycles=2, seed=11, initial_state=("random-basis",))
        cfg2 = CoolingConfig(max_cycles=2, seed=11, initial_state=("random-basis",))
        assert run_trajectory(model, cfg1).energies().tolist() == \
            run_trajectory(model, cfg2).energies().tolist()

    def test_trajectory_validation(self):
        with pytest.raises(ValueError):
            Trajectory(seed=0, outcomes=(), status="crashed")
        with pytest.raises(ValueError):
            CycleOutcome(detected=0, post_energy=-0.5, ground_population=0.0)


class TestEnsembles:
    def test_sequential_matches_processes(self):
        model = ladder_model()
        cfg = CoolingConfig(max_cycles=8, seed=17, initial_state=("random-basis",))
        seq = run_trajectories(model, cfg, 6, threads=1, method="per-trajectory")
        par = run_trajectories(model, cfg, 6, threads=2, method="per-trajectory")
        for a, b in zip(seq, par):
            assert a.seed == b.seed
            assert a.detections().tolist() == b.detections().tolist()
            assert a.energies().tolist() == b.energies().tolist()

    def test_batched_reproducible(self):
        model = ladder_model()
        cfg = CoolingConfig(max_cycles=10, seed=23, initial_state=("random-basis",))
        a = run_trajectories(model, cfg, 5, method="batched")
        b = run_trajectories(model, cfg, 5, method="batched")
        for x, y in zip(a, b):
            assert x.detections().tolist() == y.detections().tolist()
            assert x.energies().tolist() == y.energies().tolist()

    def test_batched_agrees_with_per_trajectory(self):
        # both modes use exact evolution here; outcomes must coincide unless a
        # sampling draw lands within round-off of a block boundary
        model = ladder_model()
        cfg = CoolingConfig(max_cycles=10, seed=31, initial_state=("random-basis",))
        a = run_trajectories(model, cfg, 8, method="per-trajectory")
        b = run_trajectories(model, cfg, 8, method="batched")
        for x, y in zip(a, b):
            assert x.detections().tolist() == y.detections().tolist()
            assert np.allclose(x.energies(), y.energies(), atol=1e-9)

    def test_quiet_stop_consistency_across_methods(self):
        model = ladder_model()
        cfg = CoolingConfig(
            max_cycles=30, seed=5, quiet_cycles_to_stop=4, initial_state=("basis", 2)
        )
        a = run_trajectories(model, cfg, 3, method="per-trajectory")
        b = run_trajectories(model, cfg, 3, method="batched")
        assert [t.status for t in a] == [t.status for t in b]
        assert [len(t) for t in a] == [len(t) for t in b]

    def test_stats_single_trajectory(self):
        model = ladder_model()
        cfg = CoolingConfig(max_cycles=6, seed=2, initial_state=("basis", 0))
        traj = run_trajectory(model, cfg)
        stats = run_ensemble(model, cfg, 1, method="per-trajectory")
        assert np.allclose(stats.mean_energy, traj.energies())
        assert stats.n_samples == 1

    def test_stats_means_bracketed(self):
        model = ladder_model()
        cfg = CoolingConfig(max_cycles=10, seed=77, initial_state=("random-basis",))
        trajs = run_trajectories(model, cfg, 12, method="batched")
        stats = stats_from_trajectories(trajs)
        padded = np.vstack(
            [
                np.pad(t.energies(), (0, len(stats.mean_energy) - len(t)), mode="edge")
                for t in trajs
            ]
        )
        assert np.all(stats.mean_energy <= padded.max(axis=0) + 1e-12)
        assert np.all(stats.mean_energy >= padded.min(axis=0) - 1e-12)


class TestFactoringTrajectoryFixture:
    def test_fixture_trajectory_reproduces(self):
        """Seed-pinned factoring trajectory, recorded on first run.

        Exercises the Krylov evolution path on the 8192-dimensional model;
        the detection sequence must reproduce exactly and the recorded
        energies to 1e-8.
        """
        import json
        from pathlib import Path

        from qcool.problems import FactoringProblem, factoring_model

        fixture = Path(__file__).parent / "fixtures" / "factoring_trajectory_seed7.json"
        model = CoolingModel.build(factoring_model(FactoringProblem(35), lam=0.1, alpha0=1))
        cfg = CoolingConfig(max_cycles=25, seed=7, initial_state=("basis", 481))
        traj = run_trajectory(model, cfg)
        record = {
            "detections": traj.detections().tolist(),
            "energies": [round(float(e), 10) for e in traj.energies()],
        }
        if not fixture.exists():
            fixture.parent.mkdir(exist_ok=True)
            fixture.write_text(json.dumps(record, indent=2) + "\n")
        stored = json.loads(fixture.read_text())
        assert record["detections"] == stored["detections"]
        assert np.allclose(record["energies"], stored["energies"], atol=1e-8)


class TestCsvOutput:
    def test_trajectory_columns_and_format(self, tmp_path):
        model = ladder_model()
        cfg = CoolingConfig(max_cycles=3, seed=1, initial_state=("basis", 0))
        traj = run_trajectory(model, cfg)
        path = tmp_path / "t.csv"
        write_trajectory_csv(path, traj)
        rows = list(csv.reader(path.open()))
        assert rows[0] == ["cycle", "detected_mask", "post_energy", "ground_population"]
        assert len(rows) == len(traj) + 1
        # floats round-trip exactly through the 17-significant-digit format
        assert float(rows[1][2]) == traj.outcomes[0].post_energy

    def test_ensemble_columns(self, tmp_path):
        model = ladder_model()
        cfg = CoolingConfig(max_cycles=3, seed=1, initial_state=("random-basis",))
        stats = run_ensemble(model, cfg, 4, method="batched")
        path = tmp_path / "e.csv"
        write_ensemble_csv(path, stats)
        rows = list(csv.reader(path.open()))
        assert rows[0] == [
            "cycle",
            "mean_energy",
            "ground_fraction",
            "mean_ground_population",
            "energy_q10",
            "energy_q50",
            "energy_q90",
        ]
