import numpy as np
import pytest

from conftest import (
    random_delays,
    random_estimates,
    random_gains,
    random_motor,
    random_velocity,
    rel_err,
)
from epsdyn.emd import (
    Architecture,
    MissingGainsError,
    PiGains,
    SHat,
    block_compose_frf,
    controller_laws,
    fb_closed_form,
    ff_closed_form,
)
from epsdyn.motor import (
    DelayParams,
    EstimatedParams,
    MotorParams,
    OperatingPoint,
    VelocityEstimator,
)
from epsdyn.tf_core import DelayRational, FrequencyGrid, FrequencyResponse, dc_gain

GRID = FrequencyGrid.logspace(0.1, 1e4, 40)
MP = MotorParams(p=4, lambda_m=0.05, L_d=1e-3, L_q=1e-3, R=0.1)
GAINS = PiGains(K_pd=1.0, K_id=100.0, K_pq=1.0, K_iq=100.0)


def closed(arch, mp, ep, gains, dp, ve, grid=GRID, **kw):
    if arch == "ff":
        return ff_closed_form(mp, ep, dp, ve, grid=grid, **kw)
    return fb_closed_form(mp, ep, gains, dp, ve, grid=grid, **kw)


class TestOracleEquivalence:
    @pytest.mark.parametrize("arch", ["ff", "fb"])
    @pytest.mark.parametrize("delayed", [False, True])
    def test_random_sets(self, rng, arch, delayed):
        worst = 0.0
        for _ in range(50):
            mp = random_motor(rng)
            ep = random_estimates(rng, mp)
            gains = random_gains(rng)
            dp = random_delays(rng, zero=not delayed)
            ve = random_velocity(rng)
            op = OperatingPoint.steady(mp, 0.0, float(rng.uniform(-10, 10)), 0.0)
            c = closed(arch, mp, ep, gains, dp, ve)
            b = block_compose_frf(arch, mp, ep, gains, dp, ve, op, GRID)
            worst = max(worst, rel_err(c.eval_A_t(GRID.omegas), b.A_t.values))
            aw_ref = b.A_omega.values
            aw = c.eval_A_omega(GRID.omegas)
            scale = np.maximum(np.abs(aw_ref), 1e-12 * np.max(np.abs(aw_ref)))
            worst = max(worst, float(np.max(np.abs(aw - aw_ref) / scale)))
        assert worst < 1e-9

    @pytest.mark.parametrize("arch", ["ff", "fb"])
    def test_filtered_s_hat(self, rng, arch):
        sh = SHat(1e-4)
        for _ in range(10):
            mp = random_motor(rng)
            ep = random_estimates(rng, mp)
            gains = random_gains(rng)
            dp = random_delays(rng)
            ve = random_velocity(rng)
            c = closed(arch, mp, ep, gains, dp, ve, s_hat=sh)
            b = block_compose_frf(arch, mp, ep, gains, dp, ve, OperatingPoint.steady(mp), GRID, s_hat=sh)
            assert rel_err(c.eval_A_t(GRID.omegas), b.A_t.values) < 1e-9


class TestFeedforward:
    def test_perfect_zero_delay_is_unity(self):
        r = ff_closed_form(MP, EstimatedParams.perfect(MP), DelayParams(), VelocityEstimator())
        assert r.is_symbolic
        assert r.A_t == DelayRational.gain(1.0)

    def test_resistance_error_scales_dc(self):
        ep = EstimatedParams(MP.lambda_m, MP.L_d, MP.L_q, 2 * MP.R)
        r = ff_closed_form(MP, ep, DelayParams(), VelocityEstimator())
        assert dc_gain(r.A_t) == pytest.approx(2.0, rel=1e-15)

    def test_disturbance_null(self):
        r = ff_closed_form(MP, EstimatedParams.perfect(MP), DelayParams(), VelocityEstimator(0.0))
        assert r.A_omega.is_zero

    def test_delay_makes_A_omega_sampled(self):
        r = ff_closed_form(MP, EstimatedParams.perfect(MP), DelayParams(0.0, 1e-4), VelocityEstimator())
        assert isinstance(r.A_omega, FrequencyResponse)

    def test_pure_delay_tracking_with_perfect_model(self, rng):
        for _ in range(10):
            mp = random_motor(rng)
            r = ff_closed_form(mp, EstimatedParams.perfect(mp), random_delays(rng), random_velocity(rng),
                               grid=GRID)
            np.testing.assert_allclose(np.abs(r.eval_A_t(GRID.omegas)), 1.0, rtol=1e-13)


class TestFeedback:
    def test_dc_tracking(self):
        r = fb_closed_form(MP, EstimatedParams.perfect(MP), GAINS, DelayParams(), VelocityEstimator())
        assert dc_gain(r.A_t) == pytest.approx(1.0, rel=1e-15)

    def test_dc_is_flux_ratio_regardless_of_RL_errors(self, rng):
        for _ in range(20):
            mp = random_motor(rng)
            ep = random_estimates(rng, mp)
            r = fb_closed_form(mp, ep, random_gains(rng), DelayParams(), VelocityEstimator())
            assert dc_gain(r.A_t) == pytest.approx(mp.lambda_m / ep.lambda_m_hat, rel=1e-12)

    def test_dc_with_pade_delays(self, rng):
        mp = random_motor(rng)
        ep = random_estimates(rng, mp)
        r = fb_closed_form(mp, ep, GAINS, DelayParams(1e-4, 2e-4), VelocityEstimator(), pade_order=4)
        assert r.is_symbolic
        assert dc_gain(r.A_t) == pytest.approx(mp.lambda_m / ep.lambda_m_hat, rel=1e-12)

    def test_paper_velocity_variant_dc(self):
        r = fb_closed_form(MP, EstimatedParams.perfect(MP), GAINS, DelayParams(), VelocityEstimator(0.0, "paper"))
        # The free s factor puts a zero at DC; the value -q p^2 lambda^2 / K_iq
        # is the DC limit of A_omega / s.
        assert dc_gain(r.A_omega) == 0.0
        slope = r.A_omega * DelayRational(1.0, [0.0, 1.0])
        assert dc_gain(slope) == pytest.approx(-1.5 * 4 ** 2 * 0.05 ** 2 / 100.0, rel=1e-12)
        assert dc_gain(slope) == pytest.approx(-6.0e-4, rel=1e-12)

    def test_disturbance_null(self):
        r = fb_closed_form(MP, EstimatedParams.perfect(MP), GAINS, DelayParams(), VelocityEstimator(0.0))
        assert r.A_omega.is_zero

    def test_free_s_factor_with_physical_estimator(self):
        r = fb_closed_form(MP, random_estimates(np.random.default_rng(3), MP), GAINS,
                           DelayParams(1e-4, 1e-4), VelocityEstimator(1e-3), grid=GRID)
        mags = np.abs(r.eval_A_omega(np.array([1e-2, 1e-4, 1e-6])))
        assert mags[1] < mags[0] / 50 and mags[2] < mags[1] / 50

    def test_block_compose_dc_endpoint(self):
        b = block_compose_frf("fb", MP, EstimatedParams.perfect(MP), GAINS, DelayParams(),
                              VelocityEstimator(), OperatingPoint.steady(MP), GRID)
        assert abs(b.eval_A_t(np.array([1e-7]))[0] - 1.0) < 1e-6

    def test_requires_gains(self):
        with pytest.raises(MissingGainsError):
            fb_closed_form(MP, EstimatedParams.perfect(MP), None, DelayParams(), VelocityEstimator())


def test_cross_coupling_golden(sample_cfg):
    c = sample_cfg
    grid = FrequencyGrid.logspace(1.0, 1e3, 40)
    vals = {}
    for w0 in (0.0, 100.0):
        op = OperatingPoint.steady(c.motor, 0.0, 5.0, w0)
        r = block_compose_frf("fb", c.motor, c.estimates, c.pi_gains, c.delays, c.velocity_estimator, op, grid)
        vals[w0] = abs(r.eval_A_t(np.array([100.0]))[0])
    assert vals[100.0] == pytest.approx(0.909502021206377, rel=1e-9)
    assert abs(vals[100.0] - vals[0.0]) > 1e-5


class TestControllerLaws:
    def test_feedforward_dc_voltage(self):
        ep = EstimatedParams(0.05, 1e-3, 1e-3, 0.2)
        law = controller_laws("ff", MP, ep)
        V = law.C_t.evaluate(np.array([0.0]))[0] @ np.array([0.0, 1.0])
        assert V[1] == pytest.approx(0.2, rel=1e-15)
        assert V[0] == 0.0

    def test_feedback_zero_d_gains(self):
        law = controller_laws("fb", MP, EstimatedParams.perfect(MP), PiGains(0.0, 0.0, 1.0, 10.0))
        assert law.C_t.dd.is_zero

    @pytest.mark.parametrize("arch", list(Architecture))
    def test_velocity_entry(self, arch):
        ep = EstimatedParams(0.04, 1e-3, 1e-3, 0.1)
        law = controller_laws(arch, MP, ep, GAINS)
        assert law.C_omega[1] == DelayRational.gain(MP.p * 0.04)

    def test_feedback_requires_gains(self):
        with pytest.raises(MissingGainsError):
            controller_laws("fb", MP, EstimatedParams.perfect(MP))
