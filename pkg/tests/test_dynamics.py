"""Tests for internal unitary evolution and the dynamics faithfulness check."""

from __future__ import annotations

import cmath
import math

import numpy as np
import pytest

from hyperworlds.errors import ConfigError, UsageError
from hyperworlds.statespace import StatePreset, StateVector, build_space, embed_state
from hyperworlds.dynamics import (
    Propagator,
    dynamics_deviation,
    evolve,
    hamiltonian_spec,
    reference_evolution,
)

TIME_GRID = np.arange(0.0, 10.01, 0.5)


@pytest.fixture(scope="module")
def ho_32():
    space = build_space("hermite", 32)
    return space, hamiltonian_spec(space)


def random_state(space, rng):
    c = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
    return StateVector(space, c / np.linalg.norm(c))


class TestEvolve:
    def test_time_zero_is_identity(self, ho_32):
        space, spec = ho_32
        state = embed_state(StatePreset.coherent(1.0), space).state
        assert evolve(state, spec, 0.0) is state

    def test_ground_state_picks_up_half_quantum_phase(self, ho_32):
        space, spec = ho_32
        state = embed_state(StatePreset.ho_eigenstate(0), space).state
        evolved = evolve(state, spec, math.pi)
        assert abs(evolved.coefficients[0] - cmath.exp(-0.5j * math.pi)) < 1e-10
        fidelity = abs(np.vdot(state.coefficients, evolved.coefficients))
        assert abs(fidelity - 1.0) < 1e-10

    def test_group_inverse(self, ho_32):
        space, spec = ho_32
        state = embed_state(StatePreset.coherent(0.5), space).state
        roundtrip = evolve(evolve(state, spec, 1.3), spec, -1.3)
        assert np.abs(roundtrip.coefficients - state.coefficients).max() < 1e-9

    def test_unitarity_on_random_states(self, ho_32):
        space, spec = ho_32
        rng = np.random.default_rng(12)
        for _ in range(10):
            state = random_state(space, rng)
            t = rng.uniform(-20.0, 20.0)
            assert abs(evolve(state, spec, t).norm() - 1.0) < 1e-10

    def test_group_law(self, ho_32):
        space, spec = ho_32
        rng = np.random.default_rng(13)
        state = random_state(space, rng)
        for t1, t2 in ((0.4, 1.1), (-2.0, 3.3), (5.0, -1.7)):
            once = evolve(state, spec, t1 + t2)
            twice = evolve(evolve(state, spec, t2), spec, t1)
            assert np.abs(once.coefficients - twice.coefficients).max() < 1e-9

    def test_energy_conservation(self, ho_32):
        space, spec = ho_32
        rng = np.random.default_rng(14)
        state = random_state(space, rng)
        h = spec.observable.matrix

        def energy(s):
            return float(np.real(np.vdot(s.coefficients, h @ s.coefficients)))

        e0 = energy(state)
        for t in (0.5, 2.0, 9.5, 17.0):
            assert abs(energy(evolve(state, spec, t)) - e0) < 1e-9

    def test_propagator_wrapper(self, ho_32):
        space, spec = ho_32
        state = embed_state(StatePreset.ho_eigenstate(2), space).state
        direct = evolve(state, spec, 0.7)
        wrapped = Propagator(spec, 0.7).apply(state)
        assert np.array_equal(direct.coefficients, wrapped.coefficients)

    def test_space_mismatch_rejected(self, ho_32):
        _, spec = ho_32
        other = embed_state(StatePreset.ho_eigenstate(0), build_space("hermite", 8)).state
        with pytest.raises(UsageError):
            evolve(other, spec, 1.0)


class TestReferenceEvolution:
    def test_coherent_at_time_zero_matches_embedding(self):
        space = build_space("hermite", 32)
        embedded = embed_state(StatePreset.coherent(1.0), space).state
        reference = reference_evolution(StatePreset.coherent(1.0), 0.0, space)
        assert np.abs(reference.coefficients - embedded.coefficients).max() < 1e-15

    def test_coherent_full_period_global_phase(self):
        space = build_space("hermite", 32)
        embedded = embed_state(StatePreset.coherent(1.0), space).state
        reference = reference_evolution(StatePreset.coherent(1.0), 2.0 * math.pi, space)
        expected = cmath.exp(-1j * math.pi) * embedded.coefficients
        assert np.abs(reference.coefficients - expected).max() < 1e-12

    def test_eigenstate_phase(self):
        space = build_space("hermite", 8)
        reference = reference_evolution(StatePreset.ho_eigenstate(1), math.pi, space)
        assert abs(reference.coefficients[1] - cmath.exp(-1.5j * math.pi)) < 1e-12

    def test_unsupported_preset_rejected(self):
        space = build_space("hermite", 8)
        with pytest.raises(ConfigError):
            reference_evolution(StatePreset.gaussian(0.0, 0.5), 1.0, space)

    def test_nonunit_constants_rejected(self):
        space = build_space("hermite", 8, scale=2.0)
        with pytest.raises(ConfigError):
            reference_evolution(StatePreset.coherent(1.0), 1.0, space)


class TestDynamicsDeviation:
    def test_eigenstate_preset_is_exact(self):
        space = build_space("hermite", 32)
        report = dynamics_deviation(StatePreset.ho_eigenstate(0), space, TIME_GRID)
        assert report.max_deviation <= 1e-10

    def test_coherent_at_dim_128_within_tolerance(self):
        space = build_space("hermite", 128)
        report = dynamics_deviation(StatePreset.coherent(1.0), space, TIME_GRID)
        assert report.max_deviation <= 1e-6

    @pytest.mark.parametrize(
        "preset", [StatePreset.coherent(1.0), StatePreset.coherent(0.6 + 0.8j)]
    )
    def test_deviation_strictly_decreasing_while_above_noise(self, preset):
        # the tail signal crosses the double-precision floor beyond dim 32,
        # so the resolvable part of the sweep is checked strictly
        values = [
            dynamics_deviation(preset, build_space("hermite", dim), TIME_GRID).max_deviation
            for dim in (4, 8, 16, 32)
        ]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_report_carries_embedding_residual_and_rows(self):
        space = build_space("hermite", 16)
        report = dynamics_deviation(StatePreset.coherent(1.0), space, TIME_GRID)
        assert report.embedding_residual > 0
        assert report.max_deviation >= report.embedding_residual
        rows = report.rows()
        assert len(rows) == len(TIME_GRID)
        assert rows[0][0] == 0.0

    def test_empty_grid_rejected(self):
        space = build_space("hermite", 8)
        with pytest.raises(ConfigError):
            dynamics_deviation(StatePreset.coherent(1.0), space, [])
