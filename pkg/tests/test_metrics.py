"""Empirical geometry: clouds, box counting, Hoelder estimators, probes."""

import numpy as np
import pytest

import wtf_lab as wl
from wtf_lab import (
    BudgetExceeded,
    CloudProvenance,
    DegenerateFit,
    GraphCloud,
    OscillationUnderflow,
    PotentialSpec,
    ThetaSequence,
)
from wtf_lab.dynamics import cylinder_bounds_many, point_of_word
from wtf_lab.thermo import sample_words


@pytest.fixture(scope="module")
def line_cloud():
    x = np.arange(10**6) / 10**6
    return GraphCloud(x, x.copy(), CloudProvenance("line", "zeros", None, 0, 0.0))


class TestSampleGraph:
    def test_unrestricted_count(self, m1, zeros):
        cloud = wl.sample_graph(m1, zeros, depth=8, per_cylinder=4, tol=1e-8)
        assert len(cloud) == 2**8 * 4
        assert np.all(np.isfinite(cloud.y))
        assert cloud.x.min() >= 0.0 and cloud.x.max() < 1.0

    def test_restricted_containment(self, m2, zeros):
        cloud = wl.sample_graph(m2, zeros, depth=10, per_cylinder=2, tol=1e-8,
                                restrict_to_repeller=True)
        # every x lies inside a depth-10 cylinder
        idx = m2.branch_index(cloud.x)
        assert np.all(idx >= 0)
        for x in cloud.x[:: len(cloud) // 50]:
            word = wl.code_of(m2, float(x), 10)
            assert wl.cylinder_of(m2, word).contains(float(x))

    def test_budget(self, m1, zeros):
        with pytest.raises(BudgetExceeded):
            wl.sample_graph(m1, zeros, depth=10, per_cylinder=4, budget=1000)

    def test_csv_roundtrip_bit_exact(self, m2, zeros, tmp_path):
        cloud = wl.sample_graph(m2, zeros, depth=6, per_cylinder=3, tol=1e-8)
        path = tmp_path / "cloud.csv"
        wl.write_cloud_csv(cloud, path)
        back = wl.read_cloud_csv(path)
        assert np.array_equal(cloud.x, back.x)
        assert np.array_equal(cloud.y, back.y)
        assert back.provenance == cloud.provenance
        assert path.read_text().splitlines()[0] == "x,y"


class TestBoxDimension:
    def test_smooth_line(self, line_cloud):
        result = wl.box_dimension(line_cloud, [2.0**-k for k in range(4, 15)])
        assert result.slope == pytest.approx(1.0, abs=0.02)
        assert result.r2 > 0.999

    def test_counts_monotone_under_doubling(self, line_cloud, m1, zeros):
        cloud = wl.sample_graph(m1, zeros, depth=12, per_cylinder=2, tol=1e-8)
        try:
            result = wl.box_dimension(cloud, [2.0**-k for k in range(4, 13)])
        except DegenerateFit as err:  # sparse cloud: counts still usable
            result = err.result
        counts = np.array(result.counts)  # scales stored coarse -> fine
        assert np.all(np.diff(counts) >= 0)

    def test_needs_six_scales(self, line_cloud):
        with pytest.raises(ValueError):
            wl.box_dimension(line_cloud, [0.5, 0.25, 0.125, 0.0625, 0.03125])

    def test_degenerate_fit_carries_result(self, line_cloud):
        with pytest.raises(DegenerateFit) as err:
            wl.box_dimension(line_cloud, [2.0**-k for k in range(4, 15)],
                             r2_threshold=1.0 + 1e-9)
        assert err.value.result is not None
        assert err.value.result.slope == pytest.approx(1.0, abs=0.02)


class TestHolderBirkhoff:
    def test_m1_constant(self, m1):
        for x in (0.1, 0.3, 0.77):
            assert wl.holder_birkhoff(m1, x, 17) == pytest.approx(
                0.5145731728297583, abs=1e-12)

    def test_m3_branch1_fixed_point(self, m3):
        # fixed point of the second branch: x = 0.5/0.55 = 10/11
        x = 0.5 / 0.55
        value = wl.holder_birkhoff(m3, x, 40)
        assert value == pytest.approx(-np.log(0.7) / np.log(1 / 0.45), abs=1e-9)

    def test_m3_alternating_code(self, m3):
        # fixed point of rho_0 o rho_1: x = 0.15/0.865; even depth keeps the
        # two-cycle balanced (depth 30: float orbit drift still below the
        # distance of the cycle to the branch boundaries)
        x = 0.15 / 0.865
        assert wl.code_of(m3, x, 6).digits == (0, 1, 0, 1, 0, 1)
        value = wl.holder_birkhoff(m3, x, 30)
        assert value == pytest.approx(0.6356944177320357, abs=1e-9)

    def test_hull_invariant(self, systems):
        # finite-orbit averages stay inside the exponent interval
        bounds = {
            "M1": (0.5145731728297583, 0.5145731728297583),
            "M2": (0.7606123719283242, 0.7606123719283242),
            "M3": (0.446676901961204, 0.7610560044063083),
            "M4": (0.5, 0.5),
        }
        rng = np.random.default_rng(23)
        for name, (lo, hi) in bounds.items():
            sys = systems[name]
            words = rng.integers(0, sys.ell, size=(40, 25)).astype(np.uint8)
            clo, chi = cylinder_bounds_many(sys, words)
            words = words[(chi - clo) >= 1e-13][:25]
            xs = point_of_word(sys, words, 0.5)
            for x in xs:
                for n in (10, 18, 25):
                    v = wl.holder_birkhoff(sys, float(x), n)
                    assert lo - 1e-6 <= v <= hi + 1e-6


class TestHolderOscillation:
    def test_m1_matches_symbolic(self, m1, zeros):
        v = wl.holder_oscillation(m1, 1.0 / 3.0, zeros, depth_range=range(8, 21))
        assert v == pytest.approx(0.5146, abs=0.02)

    def test_stub_smooth_curve_clamps(self, m1, zeros):
        # Lipschitz stub reads exponent 1; a flat critical point reads 2 and
        # is clamped to the admissible interval (0, 1]
        v = wl.holder_oscillation(m1, 1.0 / 3.0, zeros, depth_range=range(4, 13),
                                  _curve=lambda x: x)
        assert v == pytest.approx(1.0, abs=1e-9)
        v2 = wl.holder_oscillation(m1, 1.0 / 3.0, zeros, depth_range=range(4, 13),
                                   _curve=lambda x: (x - 1.0 / 3.0) ** 2)
        assert v2 == 1.0

    def test_m4_half(self, m4, zeros):
        word = np.random.default_rng(2).integers(0, 2, 24).astype(np.uint8)
        x = float(point_of_word(m4, word[None, :], 0.5)[0])
        v = wl.holder_oscillation(m4, x, zeros, depth_range=range(2, 19))
        assert v == pytest.approx(0.5, abs=0.02)

    def test_ratio_min_sits_below(self, m1, zeros):
        # the raw ratio keeps the band bias log(C)/log|I_n| < 0
        slope = wl.holder_oscillation(m1, 1.0 / 3.0, zeros, depth_range=range(8, 17))
        raw = wl.holder_oscillation(m1, 1.0 / 3.0, zeros, depth_range=range(8, 17),
                                    estimator="ratio_min")
        assert raw < slope

    def test_underflow(self, zeros):
        sys = wl.validate_system({**wl.model_spec("M1"), "g": {"kind": "zero"}, "id": "M1g0"})
        with pytest.raises(OscillationUnderflow):
            wl.holder_oscillation(sys, 0.3, zeros, depth_range=range(2, 9))

    def test_estimator_agreement_sample(self, m3, zeros):
        rng = np.random.default_rng(42)
        words = rng.integers(0, 2, size=(40, 30)).astype(np.uint8)
        lo, hi = cylinder_bounds_many(m3, words)
        words = words[(hi - lo) >= 1e-14][:20]
        xs = point_of_word(m3, words, 0.5)
        birk = np.array([wl.holder_birkhoff(m3, float(x), 30) for x in xs])
        osc = wl.holder_oscillation_many(m3, xs, zeros, depth_range=range(1, 31),
                                         probes=128, tol=1e-13)
        assert np.max(np.abs(birk - osc)) <= 0.03


class TestEmpiricalSpectrum:
    def test_m3_critical_and_ordered(self, m3):
        rows = wl.empirical_spectrum(m3, [0.0, 3.0], samples_per_q=4000,
                                     birkhoff_depth=1500, seed=77)
        (q0, hat0, pred0), (q3, hat3, pred3) = rows
        assert hat0 == pytest.approx(0.613744318754433, abs=0.005)
        assert hat3 == pytest.approx(pred3, abs=0.01)
        assert hat3 == pytest.approx(0.5407174514534251, abs=0.01)  # oracle alpha(3)
        assert hat3 < hat0  # exponent decreases in q

    def test_sublevel_monotone_proxy(self, m3):
        rows = wl.empirical_spectrum(m3, [-2.0, -1.0, 0.0, 1.0, 2.0],
                                     samples_per_q=3000, birkhoff_depth=1000, seed=3)
        hats = [r[1] for r in rows]
        for a, b in zip(hats, hats[1:]):
            assert a >= b - 0.01

    def test_m4_constant(self, m4):
        rows = wl.empirical_spectrum(m4, [-1.0, 0.0, 2.0], samples_per_q=500,
                                     birkhoff_depth=400, seed=1)
        for _, hat, pred in rows:
            assert hat == pytest.approx(0.5, abs=1e-6)
            assert pred == pytest.approx(0.5, abs=1e-6)


class TestCorrelationDimension:
    def test_uniform_square(self):
        rng = np.random.default_rng(5)
        cloud = GraphCloud(rng.random(10**5), rng.random(10**5),
                           CloudProvenance("unit-square", "zeros", None, 0, 0.0))
        result = wl.correlation_dimension(cloud, [2.0**-k for k in range(1, 8)], seed=1)
        assert result.slope == pytest.approx(2.0, abs=0.1)

    def test_preconditions(self):
        rng = np.random.default_rng(5)
        small = GraphCloud(rng.random(100), rng.random(100),
                           CloudProvenance("s", "zeros", None, 0, 0.0))
        with pytest.raises(ValueError):
            wl.correlation_dimension(small, [0.5, 0.25, 0.125, 0.0625, 0.03125])
        big = GraphCloud(rng.random(2000), rng.random(2000),
                         CloudProvenance("b", "zeros", None, 0, 0.0))
        with pytest.raises(ValueError):
            wl.correlation_dimension(big, [0.5, 0.25])

    def test_metric_convention_sensitivity(self):
        # the alternative wrap-around convention is exposed for sensitivity
        # checks; all its distances exceed 1/2, so small-radius correlation
        # degenerates -- which is why "min" is the working torus metric
        rng = np.random.default_rng(6)
        cloud = GraphCloud(rng.random(20_000), rng.random(20_000),
                           CloudProvenance("u", "zeros", None, 0, 0.0))
        radii = [2.0**-k for k in range(2, 8)]
        d_min = wl.correlation_dimension(cloud, radii, seed=1).slope
        assert d_min == pytest.approx(2.0, abs=0.15)
        with pytest.raises(DegenerateFit):
            wl.correlation_dimension(cloud, radii, seed=1, metric_convention="max")

    def test_m2_base_gibbs_cloud(self, m2):
        a0 = wl.moran_oracle(m2, "A_of_q", q=0.0)
        digits = sample_words(m2, PotentialSpec(-a0, 0.0), depth=50, count=30_000, seed=4181)
        xs = point_of_word(m2, digits, 0.5)
        cloud = GraphCloud(xs, np.zeros_like(xs), CloudProvenance("M2", "zeros", None, 50, 0.0))
        result = wl.correlation_dimension(cloud, [2.0**-k for k in range(5, 13)], seed=32)
        assert 0.61 <= result.slope <= 0.71


@pytest.fixture(scope="module")
def uniform_line():
    rng = np.random.default_rng(11)
    return GraphCloud(rng.random(10**4), np.zeros(10**4),
                      CloudProvenance("line", "zeros", None, 0, 0.0))


class TestSEnergy:
    def test_integrable(self, uniform_line):
        est = wl.s_energy(uniform_line, 0.5, seed=2)
        assert not est.diverged
        assert est.value == pytest.approx(8.0 / 3.0, abs=0.2)

    def test_divergent(self, uniform_line):
        assert wl.s_energy(uniform_line, 1.5, seed=2).diverged

    def test_lifted_below_dimension(self, m1):
        from wtf_lab.thermo import s1_family
        s1 = wl.moran_oracle(m1, "s1")
        digits = sample_words(m1, s1_family(s1), depth=50, count=20_000, seed=90210)
        xs = point_of_word(m1, digits, 0.5)
        ys, _, _ = wl.eval_W_many(m1, xs, ThetaSequence.iid_uniform(777), 1e-8)
        cloud = GraphCloud(xs, ys, CloudProvenance("M1", "iid_uniform", 777, 50, 1e-8))
        est = wl.s_energy(cloud, 1.3, seed=3)
        assert not est.diverged
        assert np.isfinite(est.value)
