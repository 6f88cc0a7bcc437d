import math

import mpmath
import numpy as np
import pytest
from scipy.stats import kstest

from streampag import cmcd
from streampag.cmcd import CmcdParams, CmcdState
from streampag.exceptions import InvalidInputError
from streampag.ocme import OcmeState

mpmath.mp.dps = 30


def fill_ocme(dim, n, rng, scale=1.0):
    st = OcmeState(dim)
    for row in rng.standard_normal((n, dim)) * scale:
        st.update(row, 1.0)
    return st


class TestMahalanobis:
    def test_at_mean_zero(self):
        rng = np.random.default_rng(0)
        st = fill_ocme(3, 50, rng)
        assert cmcd.mahalanobis(st, st.mean) == pytest.approx(0.0, abs=1e-9)

    def test_identity_squared_euclidean(self):
        st = OcmeState(2)
        rng = np.random.default_rng(1)
        # long stream so the covariance estimate is ~identity
        for row in rng.standard_normal((20000, 2)):
            st.update(row, 1.0)
        d2 = cmcd.mahalanobis(st, st.mean + np.array([3.0, 4.0]))
        assert d2 == pytest.approx(25.0, rel=0.1)

    def test_matches_dense_inverse_oracle(self):
        rng = np.random.default_rng(2)
        st = fill_ocme(4, 300, rng)
        x = rng.standard_normal(4)
        cov = st.covariance()
        delta = x - st.mean
        oracle = float(delta @ np.linalg.inv(cov) @ delta)
        assert cmcd.mahalanobis(st, x) == pytest.approx(oracle, abs=1e-8 * max(1.0, oracle))

    def test_burn_in_non_informative(self):
        rng = np.random.default_rng(3)
        st = fill_ocme(4, 5, rng)  # effective_n < dim + 2
        assert cmcd.mahalanobis(st, rng.standard_normal(4)) is None

    def test_singular_non_informative(self):
        st = OcmeState(2)
        for k in range(10):
            st.update([float(k), float(k)], 1.0)  # perfectly correlated
        # residual guard in the SPD solve flags the degenerate direction
        assert cmcd.mahalanobis(st, np.array([1.0, -1.0])) is None


class TestPointPvalue:
    def test_zero_distance(self):
        assert cmcd.point_pvalue(0.0, 100.0, 3) == pytest.approx(1.0)

    def test_non_informative_neutral(self):
        assert cmcd.point_pvalue(None, 100.0, 3) == 0.5
        assert cmcd.point_pvalue(5.0, 3.5, 3) == 0.5

    def test_chi_square_limit(self):
        # N -> infinity: 1 - F_cdf(...) -> 1 - chi2_cdf(d2, p); chi-square CDF
        # evaluated by high-precision incomplete gamma
        for d2, p in ((1.7, 3), (6.0, 5), (0.4, 2)):
            got = cmcd.point_pvalue(d2, 1e6, p)
            chi2_cdf = float(mpmath.gammainc(p / 2, 0, d2 / 2, regularized=True))
            assert got == pytest.approx(1.0 - chi2_cdf, abs=1e-4)

    def test_stationary_uniformity(self):
        rng = np.random.default_rng(42)
        dim = 4
        st = OcmeState(dim)
        pvals = []
        for row in rng.standard_normal((5000, dim)):
            d2 = cmcd.mahalanobis(st, row)
            if d2 is not None:
                pvals.append(cmcd.point_pvalue(d2, st.effective_n, dim))
            st.update(row, 1.0)
        assert kstest(np.asarray(pvals), "uniform").pvalue > 0.01


class TestPool:
    def make_state(self, entries, window=20):
        state = CmcdState(CmcdParams(window=window))
        for p, w in entries:
            state.push(p, w)
        return state

    def test_all_half_any_weights(self):
        state = self.make_state([(0.5, 1.0), (0.5, 3.0), (0.5, 7.0)])
        assert cmcd.pool(state) == pytest.approx(0.5, abs=1e-12)

    def test_single_entry_identity(self):
        for p in (0.03, 0.4, 0.97):
            state = self.make_state([(p, 2.5)])
            assert cmcd.pool(state) == pytest.approx(p, abs=1e-9)

    def test_equal_weights_four_tenths(self):
        # four p = 0.1 with equal weights: pooled_z = 4 z(0.9) / sqrt(4) = 2 z(0.9)
        from streampag.numerics import std_normal_cdf, std_normal_quantile

        state = self.make_state([(0.1, 1.0)] * 4)
        expect = 1.0 - std_normal_cdf(2.0 * std_normal_quantile(0.9))
        assert cmcd.pool(state) == pytest.approx(expect, abs=1e-12)

    def test_direct_summation_oracle(self):
        from streampag.numerics import std_normal_cdf, std_normal_quantile

        entries = [(0.2, 1.0), (0.7, 2.0), (0.04, 4.0), (0.5, 1.5)]
        state = self.make_state(entries)
        z = sum(w * std_normal_quantile(1 - p) for p, w in entries)
        expect = 1.0 - std_normal_cdf(z / math.sqrt(sum(w * w for _, w in entries)))
        assert cmcd.pool(state) == pytest.approx(expect, abs=1e-12)

    def test_weight_scaling_invariance(self):
        entries = [(0.1, 1.0), (0.8, 2.0), (0.3, 1.0)]
        scaled = [(p, 11.0 * w) for p, w in entries]
        assert cmcd.pool(self.make_state(entries)) == pytest.approx(
            cmcd.pool(self.make_state(scaled)), abs=1e-12
        )

    def test_window_caps_buffer(self):
        state = self.make_state([(0.5, 1.0)] * 30, window=20)
        assert len(state.buffer) == 20

    def test_empty_pool_rejected(self):
        with pytest.raises(InvalidInputError):
            cmcd.pool(CmcdState(CmcdParams()))

    def test_extreme_pvalues_clamped(self):
        state = self.make_state([(0.0, 1.0), (1.0, 1.0)])
        pooled = cmcd.pool(state)
        assert 0.0 <= pooled <= 1.0 and math.isfinite(pooled)


class TestNextWeight:
    def test_above_threshold_unchanged(self):
        params = CmcdParams(pool_threshold=0.01, weight_gain=2.0)
        assert cmcd.next_weight(0.9, 3.0, params) == 3.0

    def test_extreme_tripling(self):
        params = CmcdParams(pool_threshold=0.01, weight_gain=2.0)
        assert cmcd.next_weight(0.0, 1.5, params) == pytest.approx(4.5)

    def test_half_threshold_doubles(self):
        params = CmcdParams(pool_threshold=0.01, weight_gain=2.0)
        assert cmcd.next_weight(0.005, 2.0, params) == pytest.approx(4.0)

    def test_never_decreases(self):
        params = CmcdParams()
        rng = np.random.default_rng(0)
        for _ in range(200):
            p = float(rng.random())
            a = float(rng.uniform(0.5, 5.0))
            assert cmcd.next_weight(p, a, params) >= a

    def test_requires_positive_weight(self):
        with pytest.raises(InvalidInputError):
            cmcd.next_weight(0.5, 0.0, CmcdParams())


class TestScheduler:
    def test_fixed_schedule_membership(self):
        params = CmcdParams(fixed_schedule=[10000, 20000, 30000, 40000])
        state = CmcdState(params)
        assert cmcd.should_relearn(state, params, 20000)
        assert not cmcd.should_relearn(state, params, 19999)

    def test_pooled_one_never_fires(self):
        params = CmcdParams(scheduler_floor=0.0)
        state = CmcdState(params, rng_seed=0)
        state.last_pooled_p = 1.0
        assert not any(cmcd.should_relearn(state, params, t) for t in range(200))

    def test_pooled_zero_always_fires(self):
        params = CmcdParams()
        state = CmcdState(params, rng_seed=0)
        state.last_pooled_p = 0.0
        assert all(cmcd.should_relearn(state, params, t) for t in range(200))

    def test_weight_increase_forces_relearn_once(self):
        params = CmcdParams()
        state = CmcdState(params, rng_seed=0)
        state.last_pooled_p = 1.0
        state.weight_increased = True
        assert cmcd.should_relearn(state, params, 5)
        assert not cmcd.should_relearn(state, params, 6)

    def test_deterministic_under_seed(self):
        params = CmcdParams(scheduler_floor=0.1)
        outcomes = []
        for _ in range(2):
            state = CmcdState(params, rng_seed=77)
            state.last_pooled_p = 0.004
            outcomes.append([cmcd.should_relearn(state, params, t) for t in range(50)])
        assert outcomes[0] == outcomes[1]


def test_stationary_weight_increase_rate_bounded():
    """Over a long stationary stream, weight bumps happen at most ~3x the
    pooled false-positive rate at the threshold."""
    rng = np.random.default_rng(123)
    dim = 3
    params = CmcdParams()
    state = CmcdState(params, rng_seed=0)
    st = OcmeState(dim)
    increases = 0
    steps = 10000
    for row in rng.standard_normal((steps, dim)):
        d2 = cmcd.mahalanobis(st, row)
        pv = cmcd.point_pvalue(d2, st.effective_n, dim)
        state.push(pv, st.current_weight)
        pooled = cmcd.pool(state)
        a = cmcd.next_weight(pooled, st.current_weight, params)
        increases += a > st.current_weight
        st.update(row, a)
    assert increases / steps <= 3 * params.pool_threshold


def test_state_json_round_trip():
    params = CmcdParams()
    state = CmcdState(params, rng_seed=5)
    state.push(0.4, 1.0)
    state.push(0.6, 2.0)
    cmcd.pool(state)
    state.rng.random()
    doc = state.to_json()
    restored = CmcdState.from_json(doc, params)
    assert list(restored.buffer) == list(state.buffer)
    assert restored.last_pooled_p == state.last_pooled_p
    assert restored.rng.random() == state.rng.random()


def test_params_validation():
    with pytest.raises(InvalidInputError):
        CmcdParams(window=0)
    with pytest.raises(InvalidInputError):
        CmcdParams(pool_threshold=0.0)
    with pytest.raises(InvalidInputError):
        CmcdParams(weight_gain=0.0)
    with pytest.raises(InvalidInputError):
        CmcdParams(scheduler_exponent=0.5)
