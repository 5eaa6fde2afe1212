import math
import os

import numpy as np
import pytest

import oracles
from conftest import random_state
from phaselab import (
    GaussianMeasurement,
    Observable,
    apply_m,
    coherent_state,
    conditional_q,
    expectation,
    fock_state,
    husimi,
    inner,
    m_density,
    make_grid,
    marginal,
    povm_completeness,
    sample_joint,
    shot_noise_bound,
    sqrt_form_check,
    successive_density,
    superpose,
    tv_distance,
)
from phaselab.core import Basis, ResolutionError, WaveFunction, as_momentum, to_position
from phaselab.measurement import (
    OutcomeIncompatibleError,
    coarsen,
    identity_composition_deviation,
)
from phaselab.phasespace import MarginalAxis


class TestMDensity:
    def test_vacuum_smeared_variance(self, grid, vacuum):
        dens = m_density(vacuum, 1.0)
        var = float(np.sum(grid.x**2 * dens) * grid.dx)
        assert var == pytest.approx(1.0, abs=1e-6)
        # spot-check against the direct convolution oracle
        k = int(np.argmin(np.abs(grid.x - 0.5)))
        assert dens[k] == pytest.approx(
            oracles.smeared_density(oracles.vacuum, float(grid.x[k]), 1.0), abs=1e-9
        )

    def test_completeness_normalization(self, grid, rng):
        for _ in range(5):
            psi = random_state(grid, rng)
            assert float(np.sum(m_density(psi, 1.0)) * grid.dx) == pytest.approx(
                1.0, abs=1e-8
            )

    def test_equals_husimi_marginal(self, grid, rng):
        psi = random_state(grid, rng)
        assert np.max(
            np.abs(m_density(psi, 1.0) - marginal(husimi(psi, 1.0), MarginalAxis.OVER_P))
        ) < 1e-6

    def test_under_resolved_rejected(self, grid, vacuum):
        with pytest.raises(ResolutionError):
            m_density(vacuum, 0.001)

    @pytest.mark.parametrize("state_seed", range(10))
    def test_sharp_limit_monotone(self, state_seed):
        g = make_grid(1024, -16, 16)
        rng = np.random.default_rng(1000 + state_seed)
        psi = random_state(g, rng)
        dists = []
        for delta in (1.0, 0.1, 0.01):
            dens = m_density(psi, delta)
            dists.append(float(np.sum(np.abs(dens - psi.density())) * g.dx))
        assert dists[0] > dists[1] > dists[2]


class TestApplyM:
    def test_sharp_collapse_concentrates(self):
        g = make_grid(512, -8, 8)
        psi = coherent_state(g, 0, 0, 1)
        delta = 0.01
        out = apply_m(psi, GaussianMeasurement(x=0.4, delta=delta))
        mean = expectation(out, Observable.X)
        var = expectation(out, Observable.X2) - mean**2
        assert var < delta

    def test_generates_coherent_state_from_plane_wave(self, grid):
        p0 = float(grid.p[grid.n // 2 + 5])
        amp = np.zeros(grid.n, dtype=np.complex128)
        amp[grid.n // 2 + 5] = 1.0 / math.sqrt(grid.dp)
        plane = to_position(WaveFunction(grid, Basis.MOMENTUM, amp))
        out = apply_m(plane, GaussianMeasurement(x=1.0, delta=1.0))
        target = coherent_state(grid, 1.0, p0, 1.0)
        assert abs(inner(out, target)) > 1 - 1e-4

    def test_unsharp_limit_identity(self, grid, rng):
        psi = random_state(grid, rng)
        meas = GaussianMeasurement(x=0.0, delta=1e6)
        out = apply_m(psi, meas)
        assert abs(inner(out, psi)) > 1 - 1e-4

    def test_unsharp_fidelity_increases(self, grid, rng):
        psi = random_state(grid, rng)
        fids = [
            abs(inner(apply_m(psi, GaussianMeasurement(x=0.3, delta=d)), psi))
            for d in (10.0, 1e3, 1e6)
        ]
        assert fids[0] < fids[1] < fids[2] <= 1.0 + 1e-12

    def test_unsharp_momentum_density_preserved(self, grid, rng):
        psi = random_state(grid, rng)
        ref = as_momentum(psi).density()
        l1 = []
        for d in (10.0, 1e3, 1e6):
            out = apply_m(psi, GaussianMeasurement(x=0.3, delta=d))
            l1.append(float(np.sum(np.abs(as_momentum(out).density() - ref)) * grid.dp))
        assert l1[0] > l1[1] > l1[2]

    def test_deep_tail_outcome_rejected(self, grid, vacuum):
        with pytest.raises(OutcomeIncompatibleError):
            apply_m(vacuum, GaussianMeasurement(x=15.0, delta=0.1))

    def test_information_preserved_under_the_window(self, grid, rng):
        psi = random_state(grid, rng)
        meas = GaussianMeasurement(x=0.7, delta=1.0)
        out = apply_m(psi, meas)
        weight = np.exp(-((meas.x - grid.x) ** 2) / (2 * meas.delta))
        scale = math.sqrt(m_density(psi, meas.delta)[np.argmin(np.abs(grid.x - meas.x))])
        # renormalization constant recovered from the outcome density itself
        nrm = np.sqrt(np.sum(np.abs(weight * psi.amp) ** 2) * grid.dx)
        mask = weight > 1e-6
        recovered = out.amp[mask] * nrm / weight[mask]
        err = np.abs(recovered - psi.amp[mask])
        tol = 1e-6 * (np.abs(psi.amp[mask]) + 1e-3 * np.max(np.abs(psi.amp)))
        assert np.all(err < tol)


class TestSuccessiveDensity:
    @pytest.mark.parametrize("delta", [0.25, 1.0, 4.0])
    def test_equals_husimi(self, grid, rng, delta):
        for _ in range(5):
            psi = random_state(grid, rng)
            d = np.max(np.abs(successive_density(psi, delta).values - husimi(psi, delta).values))
            assert d < 1e-8

    def test_vacuum_small_delta_shape(self, grid, vacuum):
        q = successive_density(vacuum, 0.25)
        ref = husimi(vacuum, 0.25)
        assert np.max(np.abs(q.values - ref.values)) < 1e-8
        # x-narrowed, p-widened relative to delta = 1
        mx = marginal(q, MarginalAxis.OVER_P)
        mp = marginal(q, MarginalAxis.OVER_X)
        var_x = float(np.sum(grid.x**2 * mx) * grid.dx)
        var_p = float(np.sum(grid.p**2 * mp) * grid.dp)
        assert var_x < 1.0 < var_p


class TestPovm:
    def test_completeness_on_basis_vectors(self, grid):
        assert povm_completeness(grid, 1.0) < 1e-8

    def test_completeness_other_delta(self, grid):
        assert povm_completeness(grid, 0.25) < 1e-8

    def test_sqrt_form(self):
        g = make_grid(64, -8, 8)
        assert sqrt_form_check(g, 0.0, 1.0) < 1e-4

    def test_sqrt_form_translated(self):
        g = make_grid(64, -8, 8)
        assert sqrt_form_check(g, 2.0, 1.0) < 1e-4

    def test_identity_composition(self):
        g = make_grid(64, -8, 8)
        assert identity_composition_deviation(g, 1.0) < 1e-4


class TestSampler:
    def test_zero_shots(self, grid, vacuum):
        res = sample_joint(vacuum, 1.0, 0, seed=1)
        assert res.shots == 0
        assert np.all(res.histogram.values == 0.0)

    def test_negative_shots_rejected(self, grid, vacuum):
        with pytest.raises(ValueError):
            sample_joint(vacuum, 1.0, -1, seed=1)

    def test_determinism(self, grid, vacuum):
        a = sample_joint(vacuum, 1.0, 5000, seed=42)
        b = sample_joint(vacuum, 1.0, 5000, seed=42)
        assert np.array_equal(a.x, b.x) and np.array_equal(a.p, b.p)

    def test_seed_changes_draws(self, grid, vacuum):
        a = sample_joint(vacuum, 1.0, 1000, seed=1)
        b = sample_joint(vacuum, 1.0, 1000, seed=2)
        assert not np.array_equal(a.x, b.x)

    def test_worker_count_independence(self, grid, vacuum):
        base = sample_joint(vacuum, 1.0, 20000, seed=9)
        os.environ["PHASESPACE_THREADS"] = "4"
        try:
            threaded = sample_joint(vacuum, 1.0, 20000, seed=9)
        finally:
            del os.environ["PHASESPACE_THREADS"]
        assert np.array_equal(base.x, threaded.x) and np.array_equal(base.p, threaded.p)

    def test_histogram_matches_husimi(self, grid, vacuum):
        shots = 200_000
        res = sample_joint(vacuum, 1.0, shots, seed=42)
        ref = coarsen(husimi(vacuum, 1.0), (32, 32))
        sampled = res.histogram.values * res.histogram.weight
        assert tv_distance(sampled, ref) < 0.02

    def test_shot_noise_bound_on_synthetic_multinomial(self, grid, vacuum):
        # pre-validation of the TV threshold: ideal multinomial draws from the
        # coarsened Husimi masses stay within a few times the analytic bound
        ref = coarsen(husimi(vacuum, 1.0), (32, 32))
        probs = ref.flatten() / ref.sum()
        shots = 100_000
        rng = np.random.default_rng(7)
        tvs = []
        for _ in range(5):
            counts = rng.multinomial(shots, probs)
            tvs.append(tv_distance(counts / shots, probs))
        bound = shot_noise_bound(ref, shots)
        assert np.mean(tvs) < 3 * bound

    def test_records_in_range(self, grid, vacuum):
        res = sample_joint(vacuum, 1.0, 2000, seed=3)
        assert np.all(res.x >= grid.x[0] - grid.dx) and np.all(res.x <= grid.x[-1] + grid.dx)
        assert np.all(res.p >= grid.p[0] - grid.dp) and np.all(res.p <= grid.p[-1] + grid.dp)
        records = list(res.records())
        assert records[5].shot == 5 and records[5].stream_seed == 3


class TestConditional:
    def test_normalized_integrates_to_one(self, grid, rng):
        psi = random_state(grid, rng)
        q = husimi(psi, 1.0)
        cond = conditional_q(q, psi, 0.0)
        assert float(np.sum(cond.normalized) * q.dx) == pytest.approx(1.0, abs=1e-8)

    def test_vacuum_conditional_is_unit_gaussian(self, grid, vacuum):
        cond = conditional_q(husimi(vacuum, 1.0), vacuum, 0.0)
        var = float(np.sum(cond.x**2 * cond.normalized) * grid.dx)
        assert var == pytest.approx(1.0, abs=1e-6)

    def test_ratio_normalization_defect_reported(self, grid, vacuum):
        cond = conditional_q(husimi(vacuum, 1.0), vacuum, 0.0)
        # ratio integral is the smoothed momentum density over the sharp one
        assert cond.ratio_integral == pytest.approx(1 / math.sqrt(2), abs=1e-6)

    def test_vanishing_denominator_rejected(self, grid):
        f1 = fock_state(grid, 1)
        with pytest.raises(ValueError):
            conditional_q(husimi(f1, 1.0), f1, 0.0)  # odd state: psi~(0) = 0
