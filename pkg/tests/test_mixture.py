import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from gaussplex import GaussianMixture, InputError, MaxGaussianCover, PointCloud
from gaussplex.mixture import DensityCutoff

from conftest import random_mixture


def single(center=(0.0,), a=1.0, h=1.0):
    return GaussianMixture(PointCloud([list(center)]), [a], h)


class TestEvaluate:
    def test_kernel_at_zero_distance(self):
        assert single().evaluate([0.0]) == 1.0

    def test_kernel_at_sqrt2(self):
        f = GaussianMixture(PointCloud([[0.0, 0.0]]), [1.0], 1.0)
        assert_allclose(f.evaluate([1.0, 1.0]), math.exp(-1.0), rtol=1e-14)

    def test_geyser_matches_double_loop_sum(self, geyser_mixture, geyser_cloud):
        # independent oracle: plain double loop over centers
        x = 2.0
        h = geyser_mixture.scale
        acc = 0.0
        for c in geyser_cloud.points[:, 0]:
            acc += (1.0 / 272.0) * math.exp(-((x - c) ** 2) / (2 * h * h))
        assert_allclose(geyser_mixture.evaluate([x]), acc, rtol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            single().evaluate([0.0, 1.0])

    def test_underflow_falls_back_to_log_path(self):
        # every kernel term underflows, but the coefficient keeps the true
        # value representable; the log-sum-exp fallback must recover it
        f = single(a=1e200)
        x = math.sqrt(1500.0)  # squared distance / 2 = 750, exp(-750) == 0.0
        val = f.evaluate([x])
        assert val > 0
        assert_allclose(math.log(val), -750.0 + math.log(1e200), rtol=1e-12)


class TestEvaluateLog:
    def test_zero_at_center(self):
        assert single().evaluate_log([0.0]) == 0.0

    def test_single_term_far_out(self):
        h = 0.5
        f = single(h=h)
        x = 2 * h * 10
        assert_allclose(f.evaluate_log([x]), x**2 / (2 * h * h), rtol=1e-13)

    def test_exp_inverse_consistency(self):
        rng = np.random.Generator(np.random.Philox(11))
        for _ in range(50):
            f = random_mixture(rng, dim=int(rng.integers(1, 4)))
            x = rng.normal(0.0, 3.0, f.dimension)
            val = f.evaluate(x)
            if val > 1e-300:
                assert_allclose(math.exp(-f.evaluate_log(x)), val, rtol=1e-10)


class TestGradient:
    def test_symmetric_pair_vanishes(self):
        f = GaussianMixture(PointCloud([[-1.0], [1.0]]), [0.7, 0.7], 1.0)
        assert_allclose(f.gradient([0.0]), [0.0], atol=1e-16)

    def test_single_center_formula(self):
        a, h = 1.3, 0.8
        c = np.array([0.4, -0.2])
        f = GaussianMixture(PointCloud([c]), [a], h)
        x = np.array([1.0, 1.0])
        rho = math.exp(-np.sum((x - c) ** 2) / (2 * h * h))
        assert_allclose(f.gradient(x), a * rho * (c - x) / h**2, rtol=1e-13)

    def test_matches_finite_differences(self):
        rng = np.random.Generator(np.random.Philox(12))
        for _ in range(20):
            f = random_mixture(rng, dim=3)
            x = rng.normal(0.0, 2.0, 3)
            grad = f.gradient(x)
            step = 1e-5
            fd = np.zeros(3)
            for d in range(3):
                e = np.zeros(3)
                e[d] = step
                fd[d] = (f.evaluate(x + e) - f.evaluate(x - e)) / (2 * step)
            assert_allclose(grad, fd, atol=1e-6)


class TestFit:
    def test_single_center_recovers_f(self):
        f = single(center=(0.7, -0.1), a=1.9, h=0.6)
        b, z = f.fit_at([2.0, 2.0])
        assert_allclose(b, 1.9, rtol=1e-12)
        assert_allclose(z, [0.7, -0.1], atol=1e-12)

    def test_symmetric_pair_at_origin(self):
        f = GaussianMixture(PointCloud([[-1.0], [1.0]]), [0.5, 0.5], 1.0)
        b, z = f.fit_at([0.0])
        assert_allclose(z, [0.0], atol=1e-15)
        assert_allclose(b, math.exp(-0.5), rtol=1e-12)

    def test_two_centers_hand_value(self):
        # centers {0, 2}, a = 1/2 each, h = 1, fit at 0:
        # z = e^{-2} / ((1 + e^{-2})/2 * 2), b = c * e^{z^2/2}
        f = GaussianMixture(PointCloud([[0.0], [2.0]]), [0.5, 0.5], 1.0)
        b, z = f.fit_at([0.0])
        assert_allclose(z, [0.2384058440442351], rtol=1e-12)
        assert_allclose(b, 0.5840314199716967, rtol=1e-10)
        # tangency and global domination on a fine grid
        grid = np.linspace(-6.0, 8.0, 10_000).reshape(-1, 1)
        g_vals = b * np.exp(-((grid[:, 0] - z[0]) ** 2) / 2)
        f_vals = f.evaluate_many(grid)
        assert np.all(g_vals <= f_vals * (1 + 1e-12))
        assert_allclose(b * math.exp(-z[0] ** 2 / 2), f.evaluate([0.0]), rtol=1e-12)

    def test_tangency_and_domination_random(self):
        rng = np.random.Generator(np.random.Philox(13))
        for _ in range(60):
            dim = int(rng.integers(1, 7))
            f = random_mixture(rng, dim)
            y = rng.normal(0.0, 2.5, dim)
            b, z = f.fit_at(y)
            fy = f.evaluate(y)
            gy = b * math.exp(-float(np.sum((z - y) ** 2)) / (2 * f.scale**2))
            assert abs(gy - fy) <= 1e-10 * fy
            gg = f.gradient(y)
            gfit = b * math.exp(-float(np.sum((z - y) ** 2)) / (2 * f.scale**2)) \
                * (z - y) / f.scale**2
            assert np.linalg.norm(gfit - gg) <= 1e-8 * (1 + np.linalg.norm(gg))
            probes = rng.normal(0.0, 3.0, (40, dim))
            gp = b * np.exp(-np.einsum("ij,ij->i", probes - z, probes - z)
                            / (2 * f.scale**2))
            assert np.all(gp <= f.evaluate_many(probes) * (1 + 1e-12))

    def test_fit_center_is_convex_combination(self):
        rng = np.random.Generator(np.random.Philox(14))
        for _ in range(20):
            f = random_mixture(rng, dim=2)
            y = rng.normal(0.0, 2.0, 2)
            t = f.fit_weights(y)
            assert np.all(t > 0)
            assert_allclose(t.sum(), 1.0, atol=1e-12)
            _, z = f.fit_at(y)
            assert_allclose(t @ f.centers.points, z, atol=1e-12)

    def test_translation_equivariance(self):
        rng = np.random.Generator(np.random.Philox(15))
        f = random_mixture(rng, dim=3)
        v = rng.normal(0.0, 5.0, 3)
        shifted = GaussianMixture(PointCloud(f.centers.points + v),
                                  f.coefficients, f.scale)
        x = rng.normal(0.0, 2.0, 3)
        assert_allclose(shifted.evaluate(x + v), f.evaluate(x), rtol=1e-12)
        b0, z0 = f.fit_at(x)
        b1, z1 = shifted.fit_at(x + v)
        assert_allclose(b1, b0, rtol=1e-12)
        assert_allclose(z1, z0 + v, atol=1e-10)

    def test_coincident_centers_equal_merged(self):
        # duplicated center behaves exactly like merged coefficients
        f1 = GaussianMixture(PointCloud([[0.0], [0.0], [1.0]]), [0.3, 0.4, 1.0], 0.7)
        f2 = GaussianMixture(PointCloud([[0.0], [1.0]]), [0.7, 1.0], 0.7)
        xs = np.linspace(-2, 3, 50).reshape(-1, 1)
        assert_allclose(f1.evaluate_many(xs), f2.evaluate_many(xs), rtol=1e-14)


class TestCover:
    def test_single_landmark(self):
        g = MaxGaussianCover(PointCloud([[1.0]]), [2.0], 0.5)
        assert_allclose(g.evaluate([1.0]), 2.0)
        assert_allclose(g.evaluate([1.5]), 2.0 * math.exp(-0.5))

    def test_dominated_duplicate_landmark(self):
        g = MaxGaussianCover(PointCloud([[0.0], [0.0]]), [1.0, 2.0], 1.0)
        xs = np.linspace(-2, 2, 20).reshape(-1, 1)
        expect = 2.0 * np.exp(-xs[:, 0] ** 2 / 2)
        assert_allclose(g.evaluate_many(xs), expect, rtol=1e-14)
        assert g.argmax_index([0.3]) == 1

    def test_argmax_tie_breaks_low(self):
        g = MaxGaussianCover(PointCloud([[0.0], [0.0]]), [2.0, 2.0], 1.0)
        assert g.argmax_index([0.1]) == 0

    def test_geyser_cover_matches_bruteforce_max(self, geyser_cover):
        x = 2.0
        h = geyser_cover.scale
        terms = [b * math.exp(-((x - z) ** 2) / (2 * h * h))
                 for b, z in zip(geyser_cover.coefficients,
                                 geyser_cover.landmarks.points[:, 0])]
        assert_allclose(geyser_cover.evaluate([x]), max(terms), rtol=1e-9)


class TestSerialization:
    def test_cloud_csv_roundtrip(self, tmp_path):
        cloud = PointCloud([[1.0, 2.0], [3.5, -0.25]])
        path = tmp_path / "c.csv"
        cloud.to_csv(path)
        back = PointCloud.from_csv(path)
        assert_allclose(back.points, cloud.points)

    def test_cloud_json_roundtrip(self, tmp_path):
        cloud = PointCloud([[1.0], [2.0]])
        doc = cloud.to_json_dict(weights=np.array([0.25, 0.75]))
        path = tmp_path / "c.json"
        path.write_text(json.dumps(doc))
        back, w = PointCloud.from_json(path)
        assert_allclose(back.points, cloud.points)
        assert_allclose(w, [0.25, 0.75])

    def test_cloud_json_validation(self):
        with pytest.raises(InputError):
            PointCloud.from_json_dict({"dimension": 3, "points": [[1.0, 2.0]]})
        with pytest.raises(InputError):
            PointCloud.from_json_dict({"points": [[1.0]], "weights": [1.0, 2.0]})

    def test_mixture_json_roundtrip(self, geyser_mixture):
        doc = geyser_mixture.to_json_dict()
        back = GaussianMixture.from_json_dict(json.loads(json.dumps(doc)))
        assert_allclose(back.centers.points, geyser_mixture.centers.points)
        assert_allclose(back.coefficients, geyser_mixture.coefficients)
        assert back.scale == geyser_mixture.scale

    def test_cover_json_roundtrip(self, geyser_cover):
        doc = json.loads(json.dumps(geyser_cover.to_json_dict()))
        back = MaxGaussianCover.from_json_dict(doc)
        assert_allclose(back.landmarks.points, geyser_cover.landmarks.points)
        assert_allclose(back.provenance, geyser_cover.provenance)


class TestValidation:
    def test_empty_cloud(self):
        with pytest.raises(InputError):
            PointCloud(np.zeros((0, 2)))

    def test_negative_coefficient(self):
        with pytest.raises(InputError):
            GaussianMixture(PointCloud([[0.0]]), [-1.0], 1.0)

    def test_coefficient_count(self):
        with pytest.raises(InputError):
            GaussianMixture(PointCloud([[0.0], [1.0]]), [1.0], 1.0)

    def test_bad_scale(self):
        with pytest.raises(InputError):
            GaussianMixture(PointCloud([[0.0]]), [1.0], 0.0)

    def test_cutoff(self):
        assert DensityCutoff(math.exp(-2.0)).a0 == pytest.approx(2.0)
        with pytest.raises(InputError):
            DensityCutoff(0.0)
