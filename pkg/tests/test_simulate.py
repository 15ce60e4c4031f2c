import math

import numpy as np
import pytest
from scipy import stats

from boundary_lab.model import (
    ConstantBoundary,
    HolderClass,
    ModelConfig,
    PowerRampBoundary,
)
from boundary_lab.simulate import default_cap, read_sample_csv, sample_ppp, write_sample_csv

HOL = HolderClass(beta=1.0, radius=1.0)
ZERO = ConstantBoundary(0.0, HOL)


class TestDefaultCap:
    def test_constant_one(self):
        cfg = ModelConfig(n=10, boundary=ConstantBoundary(1.0, HOL))
        assert default_cap(cfg, 0.0) == pytest.approx(3.0)

    def test_small_radius_with_margin(self):
        hol = HolderClass(beta=1.0, radius=0.5)
        cfg = ModelConfig(n=10, boundary=ConstantBoundary(0.0, hol))
        assert default_cap(cfg, 0.1) == pytest.approx(1.1)

    def test_linear_boundary(self):
        cfg = ModelConfig(n=10, boundary=PowerRampBoundary(scale=1.0, holder=HOL))
        assert default_cap(cfg, 0.0) == pytest.approx(3.0)

    def test_negative_margin_rejected(self):
        cfg = ModelConfig(n=10, boundary=ZERO)
        with pytest.raises(ValueError):
            default_cap(cfg, -0.1)


class TestSamplePpp:
    def test_cap_below_boundary_rejected(self):
        cfg = ModelConfig(n=10, boundary=ConstantBoundary(1.0, HOL))
        with pytest.raises(ValueError, match="below"):
            sample_ppp(cfg, 0.5, seed=1)

    def test_zero_area_region_gives_empty_sample(self):
        cfg = ModelConfig(n=10, boundary=ConstantBoundary(1.0, HOL))
        s = sample_ppp(cfg, 1.0, seed=1)
        assert s.is_empty() and s.cap_valid

    def test_points_inside_region(self):
        cfg = ModelConfig(n=200, boundary=PowerRampBoundary(scale=1.0, holder=HOL))
        s = sample_ppp(cfg, 2.0, seed=5)
        g_at = cfg.boundary.evaluate(s.xs)
        assert np.all(s.ys >= g_at)
        assert np.all(s.ys <= s.y_cap)

    def test_determinism_and_independence(self):
        cfg = ModelConfig(n=100, boundary=ZERO)
        a = sample_ppp(cfg, 1.0, seed=11)
        b = sample_ppp(cfg, 1.0, seed=11)
        c = sample_ppp(cfg, 1.0, seed=12)
        assert np.array_equal(a.xs, b.xs) and np.array_equal(a.ys, b.ys)
        assert not (len(a.xs) == len(c.xs) and np.array_equal(a.xs, c.xs))

    def test_poisson_count_mean(self):
        # unit area, so counts are Poisson(50); 10^4 seeds pin the mean
        cfg = ModelConfig(n=50, boundary=ZERO)
        counts = [sample_ppp(cfg, 1.0, seed=s).count for s in range(10_000)]
        assert abs(np.mean(counts) - 50.0) <= 3.0 * math.sqrt(50.0 / 10_000)

    def test_triangular_region_halves_count(self):
        # area under the cap above g(x)=x is 1/2, so mean count is n/2
        cfg = ModelConfig(n=100, boundary=PowerRampBoundary(scale=1.0, holder=HOL))
        counts = [sample_ppp(cfg, 1.0, seed=s).count for s in range(4_000)]
        assert abs(np.mean(counts) - 50.0) <= 4.0 * math.sqrt(50.0 / 4_000)

    def test_x_marginal_uniform(self):
        # flat boundary: KS statistic below the 1% critical value at 1e5 points
        cfg = ModelConfig(n=100_000, boundary=ZERO)
        s = sample_ppp(cfg, 1.0, seed=77)
        stat = stats.kstest(s.xs, "uniform").statistic
        assert stat < 1.628 / math.sqrt(s.count)

    def test_x_marginal_triangular_density(self):
        # g(x)=x under cap 1: column density 2(1-x), CDF 2x - x**2
        cfg = ModelConfig(n=60_000, boundary=PowerRampBoundary(scale=1.0, holder=HOL))
        s = sample_ppp(cfg, 1.0, seed=13)
        stat = stats.kstest(s.xs, lambda x: 2.0 * x - x**2).statistic
        assert stat < 1.628 / math.sqrt(s.count)

    def test_y_conditionally_uniform(self):
        cfg = ModelConfig(n=50_000, boundary=ConstantBoundary(0.5, HOL))
        s = sample_ppp(cfg, 1.5, seed=19)
        u = (s.ys - 0.5) / 1.0
        stat = stats.kstest(u, "uniform").statistic
        assert stat < 1.628 / math.sqrt(s.count)

    def test_cap_validity_flag(self):
        cfg = ModelConfig(n=500, boundary=ZERO)
        # tight cap: min Y + R is almost surely above it
        tight = sample_ppp(cfg, 0.5, seed=3)
        assert not tight.cap_valid
        roomy = sample_ppp(cfg, default_cap(cfg), seed=3)
        assert roomy.cap_valid

    def test_empty_sample_cap_valid(self):
        cfg = ModelConfig(n=1, boundary=ZERO)
        for seed in range(50):
            s = sample_ppp(cfg, 0.001, seed=seed)
            if s.is_empty():
                assert s.cap_valid
                break
        else:
            pytest.fail("expected at least one empty sample")


class TestPersistence:
    def test_round_trip_bitwise(self, tmp_path):
        cfg = ModelConfig(n=300, boundary=PowerRampBoundary(scale=0.7, holder=HOL))
        s = sample_ppp(cfg, default_cap(cfg), seed=23)
        path = tmp_path / "sample.csv"
        write_sample_csv(s, path, boundary_spec="powb")
        loaded, meta = read_sample_csv(path)
        assert np.array_equal(loaded.xs, s.xs)
        assert np.array_equal(loaded.ys, s.ys)
        assert loaded.n == s.n and loaded.cap_valid == s.cap_valid
        assert meta["boundary"] == "powb"

    def test_missing_sidecar_needs_n(self, tmp_path):
        path = tmp_path / "bare.csv"
        path.write_text("x,y\n0.5,1\n")
        with pytest.raises(ValueError, match="sidecar"):
            read_sample_csv(path)
        loaded, _ = read_sample_csv(path, n=7)
        assert loaded.n == 7
