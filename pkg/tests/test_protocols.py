import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvqsdc.channel_attacks import Attack, GqcmParams
from cvqsdc.gaussian_core import SqueezeParam, squeeze_matrix
from cvqsdc.protocols import (
    AbortReason,
    CqdConfig,
    QsdcConfig,
    check_abort_complete,
    check_no_leak,
    check_slot_conservation,
    readout_gain,
    run_cqd,
    run_qsdc,
    run_socialist_millionaire,
)

IMR = Attack("intercept-measure-resend", "bob-alice")


def all_checks(t):
    return check_slot_conservation(t) and check_no_leak(t) and check_abort_complete(t)


@given(st.floats(0, 2), st.floats(0, 2 * np.pi))
def test_readout_gain_matches_inverse_squeeze_matrix(r, theta):
    # oracle: image of the unit diagonal under the inverse squeeze, straight from the matrix
    s = SqueezeParam(r, theta)
    u = squeeze_matrix(s.negate()) @ np.array([1.0, 1.0])
    g = readout_gain(s)
    np.testing.assert_allclose([g.real, g.imag], u, atol=1e-12 * np.cosh(r))


class TestQsdc:
    def test_expectation_decode(self):
        t = run_qsdc(QsdcConfig(64), "101011")
        assert not t.aborted
        assert t.result["decoded_bits"] == "101011"
        assert all_checks(t)

    @settings(max_examples=30, deadline=None)
    @given(st.sampled_from([8, 64]), st.data())
    def test_any_payload(self, n, data):
        k = data.draw(st.integers(1, n // 4))
        symbols = data.draw(st.lists(st.integers(0, 7), min_size=k, max_size=k))
        seed = data.draw(st.integers(0, 2**32))
        t = run_qsdc(QsdcConfig(n, seed=seed), symbols)
        assert t.result["decoded_symbols"] == symbols

    def test_real_payload(self):
        t = run_qsdc(QsdcConfig(16, payload_kind="real"), -1.75)
        assert t.result["decoded"] == pytest.approx(-1.75, abs=1e-10)
        t = run_qsdc(QsdcConfig(64, "sampled", payload_kind="real", seed=3), 0.6)
        assert abs(t.result["decoded"] - 0.6) < 4 * t.result["standard_error"]

    def test_deterministic(self):
        a = run_qsdc(QsdcConfig(64, "sampled", seed=12), "110", IMR).to_json()
        b = run_qsdc(QsdcConfig(64, "sampled", seed=12), "110", IMR).to_json()
        assert a == b

    def test_intercept_measure_resend_aborts(self):
        t = run_qsdc(QsdcConfig(64, "sampled", seed=1), "101", IMR)
        assert t.abort_reason is AbortReason.CONTROL_CHECK_FAILED
        assert "decoded_bits" not in t.result
        assert all_checks(t)

    def test_dos_aborts_at_decoys(self):
        t = run_qsdc(QsdcConfig(64, "sampled", seed=1), "101", Attack("dos", "alice-bob"))
        assert t.abort_reason is AbortReason.DECOY_CHECK_FAILED
        assert all_checks(t)

    def test_delay_swap_caught_by_control_check(self):
        t = run_qsdc(QsdcConfig(64, "sampled", seed=4), "101", Attack("intercept-delay-swap"))
        assert t.abort_reason is AbortReason.CONTROL_CHECK_FAILED

    def test_identity_cloner_is_invisible(self):
        honest = run_qsdc(QsdcConfig(64, "sampled", seed=8), "111000")
        cloned = run_qsdc(QsdcConfig(64, "sampled", seed=8), "111000",
                          Attack("gqcm", "alice-bob", GqcmParams(1, 1)))
        assert honest.result == cloned.result

    def test_secrets_not_leaked_early(self):
        t = run_qsdc(QsdcConfig(64), "101011")
        announced = [e for e in t.events if e["type"] == "announcement" and e["what"] == "control_secrets"]
        assert set(announced[0]["slots"]) == set(t.roles["control"])

    def test_validation(self):
        with pytest.raises(ValueError):
            QsdcConfig(10)
        with pytest.raises(ValueError):
            run_qsdc(QsdcConfig(8), [1, 2, 3])
        with pytest.raises(ValueError):
            run_qsdc(QsdcConfig(8), "101", Attack("participant-charlie", "alice-bob"))
        with pytest.raises(ValueError):
            run_qsdc(QsdcConfig(8), "101", Attack("dos", "bob-charlie"))


class TestCqd:
    def test_expectation_round_trip(self):
        t = run_cqd(CqdConfig(16), 2.5, -1.0)
        assert not t.aborted
        np.testing.assert_allclose(t.result["announced"], [[1.5, 1.5]] * 16, atol=1e-10)
        assert t.result["alice_recovers_m_B"] == pytest.approx(-1.0, abs=1e-10)
        assert t.result["bob_recovers_m_A"] == pytest.approx(2.5, abs=1e-10)
        assert all_checks(t)

    def test_zero_messages(self):
        t = run_cqd(CqdConfig(8, seed=3, w_policy="per_slot_w"), 0.0, 0.0)
        np.testing.assert_allclose(t.result["announced"], 0, atol=1e-10)

    def test_sampled_estimate(self):
        t = run_cqd(CqdConfig(64, "sampled", seed=2), 1.0, 0.5)
        assert abs(t.result["sum_estimate"] - 1.5) < 4 * t.result["standard_error"]

    def test_participant_charlie(self):
        errs = []
        for seed in range(40):
            t = run_cqd(CqdConfig(64, "sampled", seed=seed), 1.0, 2.0,
                        Attack("participant-charlie", "alice-bob"))
            assert t.abort_reason is AbortReason.CONTROL_CHECK_FAILED
            errs.append(t.result["charlie_estimate_mA"] - 1.0)
        assert np.mean(np.square(errs)) > 0.1

    def test_gqcm_on_alice_bob_leg(self):
        t = run_cqd(CqdConfig(64, "sampled", seed=0), 1.0, 2.0,
                    Attack("gqcm", "alice-bob", GqcmParams(2.0, 0.5)))
        assert t.abort_reason is AbortReason.CONTROL_CHECK_FAILED


class TestSocialistMillionaire:
    @pytest.mark.parametrize("a, b, verdict", [(5, 3, "A"), (3, 5, "B"), (4, 4, "tie-undetermined")])
    def test_expectation(self, a, b, verdict):
        t = run_socialist_millionaire(a, b, CqdConfig(16))
        assert t.result["richer"] == verdict
        assert all_checks(t)

    def test_sampled_accuracy(self):
        correct = sum(
            run_socialist_millionaire(6, 3, CqdConfig(16, "sampled", seed=s)).result.get("richer") == "A"
            for s in range(500)
        )
        assert correct / 500 >= 0.99

    def test_negative_assets_rejected(self):
        with pytest.raises(ValueError):
            run_socialist_millionaire(-1, 2, CqdConfig(4))
