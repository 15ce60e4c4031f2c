import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from boundary_lab.bounds import (
    DeviationBoundParams,
    deviation_bound,
    deviation_bound_curve,
    gamma_moment,
    interpolation_check,
    local_asymptotic_constant,
    one_minus_power_norm,
    rate_exponents,
    risk_upper_bound_power,
    variance_rhs,
)
from boundary_lab.envelope import ExceedanceTable, build_exceedance_table
from boundary_lab.functionals import estimate_functional
from boundary_lab.model import (
    BumpSumBoundary,
    ConstantBoundary,
    FunctionalSpec,
    HolderClass,
    ModelConfig,
    PowerRampBoundary,
    certified_corpus,
    power_functional,
)
from boundary_lab.simulate import default_cap, sample_ppp
from boundary_lab.streams import substream_seed

HOL = HolderClass(beta=1.0, radius=1.0)


def _branch1(u, beta, radius, n):
    return math.exp(-n * beta * (2 * radius) ** (-1 / beta) * u ** ((beta + 1) / beta) / (beta + 1))


class TestDeviationBound:
    def test_at_zero(self):
        assert deviation_bound(DeviationBoundParams(beta=0.7, radius=2.0, n=5, u=0.0)) == 1.0

    def test_unit_level(self):
        # branch 1 at u=1: exp(-10 * (1/2) * 1 / 2) = exp(-2.5)
        val = deviation_bound(DeviationBoundParams(beta=1.0, radius=1.0, n=10, u=1.0))
        assert val == pytest.approx(math.exp(-2.5), rel=1e-12)
        assert val == pytest.approx(0.0820849986, abs=1e-9)

    def test_branches_agree_at_junction(self):
        for beta, radius, n in [(1.0, 1.0, 7), (0.5, 0.3, 20), (0.25, 2.0, 3)]:
            u = 2.0 * radius
            inner = _branch1(u, beta, radius, n)
            outer = math.exp(-n * (u - 2 * radius / (beta + 1)))
            assert inner == pytest.approx(outer, rel=1e-12)

    def test_negative_level_rejected(self):
        with pytest.raises(ValueError):
            DeviationBoundParams(beta=1.0, radius=1.0, n=5, u=-0.1)

    @settings(max_examples=60, deadline=None)
    @given(
        beta=st.floats(0.15, 1.0),
        radius=st.floats(0.1, 3.0),
        n=st.integers(1, 500),
    )
    def test_continuous_and_nonincreasing(self, beta, radius, n):
        u = np.linspace(0.0, 4.0 * radius, 801)
        vals = deviation_bound_curve(u, beta, radius, n)
        assert np.all(np.diff(vals) <= 1e-15)
        jump = np.max(np.abs(np.diff(vals)))
        assert jump <= np.max(vals[:-1] - vals[1:]) + 1e-12  # no isolated spike


class TestGammaMoment:
    def test_limit_form_small_n(self):
        # oracle: integral_0^inf exp(-u**2/2) du = sqrt(pi/2)
        assert gamma_moment(0.0, 1.0, 0.5, 1) == pytest.approx(1.2533141373155003, rel=1e-12)

    def test_scaling_in_n(self):
        assert gamma_moment(0.0, 1.0, 0.5, 100) == pytest.approx(0.12533141373155003, rel=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(q=st.floats(0, 4), beta=st.floats(0.2, 1.0), radius=st.floats(0.2, 2.0), n=st.integers(1, 1000))
    def test_quadruple_n_power_law(self, q, beta, radius, n):
        factor = 4.0 ** (-beta * (q + 1.0) / (beta + 1.0))
        assert gamma_moment(q, beta, radius, 4 * n) == pytest.approx(
            gamma_moment(q, beta, radius, n) * factor, rel=1e-12
        )

    @pytest.mark.parametrize("q,beta,radius", [(0.0, 1.0, 0.5), (2.0, 0.5, 1.0), (1.0, 0.3, 0.7)])
    def test_dominates_finite_quadrature(self, q, beta, radius):
        gaps = []
        for n in (2, 20, 200, 2000):
            quad, _ = integrate.quad(
                lambda u: u**q * _branch1(u, beta, radius, n), 0.0, 2.0 * radius
            )
            closed = gamma_moment(q, beta, radius, n)
            assert closed >= quad * (1.0 - 1e-12)
            gaps.append((closed - quad) / closed)
        assert gaps[-1] <= gaps[0] + 1e-12
        assert gaps[-1] < 1e-6


IDENTITY_PRIME = FunctionalSpec(
    phi=lambda u: np.asarray(u, dtype=float),
    phi_prime=lambda u: np.ones_like(np.asarray(u, dtype=float)),
    label="identity",
)


class TestVarianceRhs:
    def test_zero_table(self):
        x = np.linspace(0, 1, 5)
        u = np.linspace(0, 2, 9)
        table = ExceedanceTable(x=x, u=u, p_hat=np.zeros((5, 9)), reps=10, discarded=0)
        cfg = ModelConfig(n=10, boundary=ConstantBoundary(0.0, HOL))
        assert variance_rhs(cfg, power_functional(2), table) == 0.0

    def test_composes_with_closed_forms(self):
        # plugging the analytic bound curve in for p_hat must reproduce the
        # finite-range quadrature and stay below the Gamma closed form
        beta, radius, n = 1.0, 0.5, 40
        hol = HolderClass(beta=beta, radius=radius)
        x = np.linspace(0, 1, 21)
        u = np.linspace(0, 2 * radius, 513)
        curve = deviation_bound_curve(u, beta, radius, n)
        table = ExceedanceTable(x=x, u=u, p_hat=np.tile(curve, (21, 1)), reps=1, discarded=0)
        cfg = ModelConfig(n=n, boundary=ConstantBoundary(0.0, hol))
        rhs = variance_rhs(cfg, IDENTITY_PRIME, table)
        quad, _ = integrate.quad(lambda v: _branch1(v, beta, radius, n), 0.0, 2 * radius)
        assert rhs == pytest.approx(quad / n, rel=1e-5)
        assert rhs <= gamma_moment(0.0, beta, radius, n) / n + 1e-12

    def test_fubini_identity_against_mc(self):
        # for g = 0 and the absolute-value functional the identity right side
        # equals E ||ghat||_1 / n
        cfg = ModelConfig(n=30, boundary=ConstantBoundary(0.0, HOL))
        table = build_exceedance_table(
            cfg, np.linspace(0, 1, 33), np.linspace(0, 2, 161), reps=4000, seed=31
        )
        rhs = variance_rhs(cfg, IDENTITY_PRIME, table)
        cap = default_cap(cfg)
        grid = np.linspace(0, 1, 513)
        norms = []
        for rep in range(4000):
            s = sample_ppp(cfg, cap, seed=substream_seed(77, 4, rep))
            if s.is_empty():
                continue
            from boundary_lab.envelope import Envelope

            norms.append(np.trapezoid(Envelope(s, HOL).evaluate(grid), grid))
        mc = float(np.mean(norms)) / 30
        assert rhs == pytest.approx(mc, rel=0.04)

    def test_short_grid_warns(self):
        x = np.linspace(0, 1, 3)
        u = np.linspace(0, 0.01, 3)
        table = ExceedanceTable(x=x, u=u, p_hat=np.full((3, 3), 0.5), reps=10, discarded=0)
        cfg = ModelConfig(n=10, boundary=ConstantBoundary(0.0, HOL))
        with pytest.warns(UserWarning, match="extend the u grid"):
            variance_rhs(cfg, power_functional(2), table)


class TestRiskUpperBound:
    def test_positive_norm_regime_dominates(self):
        # for large n with ||g|| > 0 the bound tracks the slower rate
        vals = [risk_upper_bound_power(2.0, 1.0, 1.0, n, 1.0) * n**1.5 for n in (10**4, 10**6)]
        assert vals[1] == pytest.approx(vals[0], rel=0.05)

    def test_zero_norm_regime(self):
        # with g = 0 the faster n-exponent takes over: (2*beta*p+1)/(beta+1)
        vals = [risk_upper_bound_power(2.0, 1.0, 1.0, n, 0.0) * n**2.5 for n in (10**4, 10**6)]
        assert vals[1] == pytest.approx(vals[0], rel=0.05)

    def test_covers_empirical_mse(self):
        n = 100
        cfg = ModelConfig(n=n, boundary=ConstantBoundary(1.0, HOL))
        cap = default_cap(cfg)
        errs = []
        for rep in range(2000):
            s = sample_ppp(cfg, cap, seed=substream_seed(13, 6, rep))
            if s.is_empty() or not s.cap_valid:
                continue
            errs.append(estimate_functional(s, HOL, power_functional(1), 2048).value - 1.0)
        mse = float(np.mean(np.square(errs)))
        bound = risk_upper_bound_power(1.0, 1.0, 1.0, n, 1.0)
        assert 0.0 < mse <= bound

    def test_p_below_one_rejected(self):
        with pytest.raises(ValueError):
            risk_upper_bound_power(0.9, 1.0, 1.0, 10, 1.0)


class TestLocalAsymptoticConstant:
    def test_reference_value(self):
        # Gamma(1/2) * 1 * 4 = 4 sqrt(pi)
        assert local_asymptotic_constant(1.0, 1.0, 4.0) == pytest.approx(7.0898154036220635, rel=1e-12)

    def test_zero_norm(self):
        assert local_asymptotic_constant(0.5, 2.0, 0.0) == 0.0

    def test_radius_power_law(self):
        beta = 0.5
        ratio = local_asymptotic_constant(beta, 2.0, 1.0) / local_asymptotic_constant(beta, 1.0, 1.0)
        assert ratio == pytest.approx(2.0 ** (1.0 / (beta + 1.0)), rel=1e-12)


class TestInterpolation:
    def test_zero_function(self):
        res = interpolation_check(ConstantBoundary(0.0, HOL), 1.0)
        assert res.lhs == 0.0 and res.rhs == 0.0 and res.holds

    def test_linear_ramp_attains_equality(self):
        # ||f||_1 = R/2 and the right side is R * ||1-y||_1 = R/2
        res = interpolation_check(PowerRampBoundary(scale=1.0, holder=HOL), 1.0)
        assert res.lhs == pytest.approx(0.5, abs=1e-6)
        assert res.rhs == pytest.approx(0.5, abs=1e-12)
        assert res.holds

    def test_single_bump_exact_norms(self):
        # oracle: bump of height R/8 on [0, 1/4]; ||f||_2 = R/sqrt(768)
        f = BumpSumBoundary(theta=(1, 0, 0, 0), c=0.25, holder=HOL)
        res = interpolation_check(f, 2.0, grid_size=4097)
        assert res.lhs == pytest.approx(1.0 / math.sqrt(768.0), rel=1e-4)
        expected_rhs = 0.125 * math.sqrt(0.125) * math.sqrt(1.0 / 3.0)
        assert res.rhs == pytest.approx(expected_rhs, rel=1e-6)
        assert res.holds

    def test_beta_norm_closed_form(self):
        quad, _ = integrate.quad(lambda y: (1.0 - y**0.4) ** 3.0, 0.0, 1.0)
        assert one_minus_power_norm(0.4, 3.0) == pytest.approx(quad ** (1.0 / 3.0), rel=1e-9)

    @pytest.mark.parametrize("beta", [0.3, 0.5, 1.0])
    @pytest.mark.parametrize("p", [1.0, 2.0, 4.0])
    def test_randomised_corpus_holds(self, beta, p):
        hol = HolderClass(beta=beta, radius=1.0)
        for f in certified_corpus(120, hol, seed=1234):
            assert interpolation_check(f, p).holds


class TestRateExponents:
    def test_reference_row(self):
        t = rate_exponents(1.0, 2.0)
        assert t.ppp_estimation == pytest.approx(0.75)
        assert t.ppp_lp_norm_and_testing == pytest.approx(0.625)
        assert t.gwn_testing == pytest.approx(0.4)

    def test_vanishing_smoothness_limits(self):
        for p in (1.0, 2.0, 4.0):
            t = rate_exponents(1e-4, p)
            assert t.ppp_lp_norm_and_testing == pytest.approx(1.0 / (2.0 * p), abs=2e-4)
            assert t.ppp_estimation == pytest.approx(0.5, abs=2e-4)

    @settings(max_examples=80, deadline=None)
    @given(beta=st.floats(0.01, 1.0), p=st.floats(1.0, 16.0))
    def test_invariant_ranges(self, beta, p):
        t = rate_exponents(beta, p)
        for v in (t.ppp_estimation, t.ppp_lp_norm_and_testing, t.gwn_testing):
            assert 0.0 < v <= 1.0
        assert t.ppp_estimation > 0.5
        assert t.ppp_lp_norm_and_testing > 1.0 / (2.0 * p)

    def test_domain_validated(self):
        with pytest.raises(ValueError):
            rate_exponents(1.5, 2.0)
        with pytest.raises(ValueError):
            rate_exponents(0.5, 0.5)
