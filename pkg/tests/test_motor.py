import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import motor_params
from epsdyn.motor import (
    DelayParams,
    MotorParams,
    OperatingPoint,
    ParameterError,
    VelocityEstimator,
    VelocityVariant,
    delay_elements,
    linearized_plant,
    mtpa_map,
    torque_from_iq,
    velocity_estimator_tf,
)
from epsdyn.tf_core import DelayRational, dc_gain

MP = MotorParams(p=4, lambda_m=0.05, L_d=1e-3, L_q=1e-3, R=0.1)


def test_q_const_is_fixed():
    assert MP.q_const == 1.5
    with pytest.raises(ParameterError):
        MotorParams(p=4, lambda_m=0.05, L_d=1e-3, L_q=1e-3, R=0.1, q_const=2.0)


def test_invalid_motor_params():
    with pytest.raises(ParameterError) as err:
        MotorParams(p=0, lambda_m=-1.0, L_d=1e-3, L_q=1e-3, R=0.1)
    assert "p" in str(err.value) and "lambda_m" in str(err.value)


class TestMtpa:
    def test_unit_torque(self):
        I_d, I_q = mtpa_map(1.0, MP)
        assert I_d == 0.0
        assert I_q == pytest.approx(3.3333333333333335, rel=1e-15)

    def test_zero(self):
        assert mtpa_map(0.0, MP) == (0.0, 0.0)

    @pytest.mark.parametrize("T", [-5.0, 0.3, 12.0])
    def test_round_trip(self, T):
        assert torque_from_iq(mtpa_map(T, MP)[1], MP) == pytest.approx(T, rel=1e-15)

    def test_torque_from_iq(self):
        assert torque_from_iq(3.3333, MP) == pytest.approx(0.99999, rel=1e-12)
        assert torque_from_iq(0.0, MP) == 0.0
        assert torque_from_iq(3.0, MP) == pytest.approx(torque_from_iq(1.0, MP) + torque_from_iq(2.0, MP))

    @settings(max_examples=60, deadline=None)
    @given(motor_params, st.floats(-1e3, 1e3))
    def test_mutual_inverse(self, mp, T):
        assert torque_from_iq(mtpa_map(T, mp)[1], mp) == pytest.approx(T, rel=1e-14, abs=1e-300)


class TestLinearizedPlant:
    def test_zero_speed_is_diagonal(self):
        P, _ = linearized_plant(MP, OperatingPoint.steady(MP, 1.0, 2.0, 0.0))
        assert P.dq.is_zero and P.qd.is_zero

    def test_back_emf_at_zero_current(self):
        _, E = linearized_plant(MP, OperatingPoint.steady(MP))
        np.testing.assert_array_equal(E, [0.0, MP.p * MP.lambda_m])

    def test_cross_coupling_value(self):
        P, _ = linearized_plant(MP, OperatingPoint.steady(MP, 0.0, 0.0, 10.0))
        assert P.dq.num.coeffs[0] == pytest.approx(0.04, rel=1e-15)
        assert P.qd.num.coeffs[0] == pytest.approx(-0.04, rel=1e-15)

    def test_diagonal_entries(self):
        P, _ = linearized_plant(MP, OperatingPoint.steady(MP))
        assert list(P.dd.num.coeffs * P.dd.den.coeffs[0]) == [MP.R, MP.L_d]

    @settings(max_examples=60, deadline=None)
    @given(motor_params, st.floats(-50, 50), st.floats(-50, 50), st.floats(-500, 500))
    def test_steady_state_consistency(self, mp, i_d, i_q, w):
        op = OperatingPoint.steady(mp, i_d, i_q, w)
        op.check(mp)
        P, _ = linearized_plant(mp, op)
        M = P.evaluate(np.array([0.0]))[0].real
        v = M @ np.array([i_d, i_q]) + np.array([0.0, mp.p * w * mp.lambda_m])
        scale = max(1.0, abs(op.V_d0), abs(op.V_q0))
        assert abs(v[0] - op.V_d0) <= 1e-12 * scale
        assert abs(v[1] - op.V_q0) <= 1e-12 * scale

    def test_inconsistent_set_point_rejected(self):
        op = OperatingPoint(0.0, 1.0, 0.0, 0.0, 5.0)
        with pytest.raises(ParameterError):
            op.check(MP)


class TestDelayElements:
    def test_zero_lag_is_identity(self):
        B, _ = delay_elements(DelayParams(0.0, 1e-3))
        assert B.dd == DelayRational.gain(1.0)
        assert B.qq == DelayRational.gain(1.0)

    def test_inverter_lag_phase(self):
        _, X = delay_elements(DelayParams(0.0, 0.0005))
        v = X.dd.evaluate(np.array([1000.0]))[0]
        assert abs(v) == pytest.approx(1.0, abs=1e-15)
        assert np.angle(v) == pytest.approx(-0.5, abs=1e-15)

    def test_off_diagonals_zero(self):
        B, X = delay_elements(DelayParams(1e-4, 2e-4))
        for m in (B, X):
            assert m.dq.is_zero and m.qd.is_zero

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0, 1e-3), st.floats(0, 1e-3), st.floats(0.01, 1e5))
    def test_unit_magnitude(self, tc, tp, w):
        B, X = delay_elements(DelayParams(tc, tp))
        for m in (B, X):
            v = m.evaluate(np.array([w]))[0]
            assert abs(abs(v[0, 0]) - 1.0) < 1e-14 and abs(abs(v[1, 1]) - 1.0) < 1e-14

    def test_negative_lag_rejected(self):
        with pytest.raises(ParameterError):
            DelayParams(-1e-6, 0.0)


class TestVelocityEstimator:
    def test_physical_zero_lag_is_identity(self):
        assert velocity_estimator_tf(VelocityEstimator(0.0)) == DelayRational.gain(1.0)

    def test_default_variant_is_physical(self):
        assert VelocityEstimator().variant is VelocityVariant.PHYSICAL

    @pytest.mark.parametrize("tau", [0.0, 1e-3, 0.1])
    def test_paper_variant_has_zero_dc_gain(self, tau):
        assert dc_gain(velocity_estimator_tf(VelocityEstimator(tau, "paper"))) == 0.0

    def test_physical_corner(self):
        v = velocity_estimator_tf(VelocityEstimator(0.001)).evaluate(np.array([1000.0]))[0]
        assert abs(v) == pytest.approx(1 / math.sqrt(2), rel=1e-12)
        assert math.degrees(np.angle(v)) == pytest.approx(-45.0, abs=1e-10)

    def test_bad_variant(self):
        with pytest.raises(ParameterError):
            VelocityEstimator(0.0, "derivative")
