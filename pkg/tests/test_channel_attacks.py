import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cvqsdc.channel_attacks import (
    Attack,
    AttackType,
    GqcmParams,
    TwoModeGaussian,
    dos_resend,
    gqcm_clone,
    intercept_measure_resend,
    sample_clone_quadratures,
)
from cvqsdc.gaussian_core import SqueezeParam, coherent, displace, squeeze, vacuum
from cvqsdc.security_analysis import EffectiveEncoding, variances

cloners = st.builds(GqcmParams, st.floats(1, 10), st.floats(0, 1))
amplitudes = st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False)


def squeezed_input():
    return squeeze(coherent(0.8 - 1.3j), SqueezeParam(0.6, 1.2))


def test_identity_clone():
    inp = squeezed_input()
    out = gqcm_clone(inp, GqcmParams(1, 1))
    assert out.bob().allclose(inp, atol=0)
    assert out.eve().allclose(vacuum(), atol=0)
    assert np.all(out.cross_cov() == 0)


def test_full_reflection():
    inp = coherent(1 - 2j)
    out = gqcm_clone(inp, GqcmParams(1, 0))
    np.testing.assert_allclose(out.eve().mean, [-1, 2])
    assert out.bob().allclose(vacuum(), atol=1e-15)


def test_vacuum_variance_half():
    out = gqcm_clone(vacuum(), GqcmParams(2, 0.5))
    assert out.bob().cov[0, 0] == pytest.approx(0.5)


@given(cloners, amplitudes)
def test_linear_in_mean(p, a):
    base = gqcm_clone(squeezed_input(), p)
    moved = gqcm_clone(displace(squeezed_input(), a), p)
    c = p.coefficients()[:, 0]
    shift = np.array([c[0] * a.real, c[0] * a.imag, c[1] * a.real, c[1] * a.imag])
    np.testing.assert_allclose(moved.mean - base.mean, shift, atol=1e-12)
    np.testing.assert_array_equal(moved.cov, base.cov)


@given(cloners, st.floats(0, 2), st.floats(0, 2 * np.pi))
def test_noise_matches_closed_form(p, g, h):
    enc = EffectiveEncoding(g, h)
    out = gqcm_clone(enc.input_state(), p)
    v = variances(p.A, p.T, g, h)
    scale = max(1.0, p.A * np.cosh(2 * g))
    assert out.cov[0, 0] == pytest.approx(v.N_XB, abs=1e-10 * scale)
    assert out.cov[1, 1] == pytest.approx(v.N_PB, abs=1e-10 * scale)
    assert out.cov[2, 2] == pytest.approx(v.N_XE, abs=1e-10 * scale)
    assert out.cov[3, 3] == pytest.approx(v.N_PE, abs=1e-10 * scale)


def test_sampled_covariance_oracle():
    n = 100_000
    p = GqcmParams(2, 0.7)
    s = SqueezeParam(np.full(n, 0.5), np.full(n, 0.9))
    inp = squeeze(coherent(np.zeros(n)), s)
    bob, eve = sample_clone_quadratures(inp, p, np.random.default_rng(0))
    sample_cov = np.cov(np.hstack([bob, eve]).T)
    target = gqcm_clone(squeeze(vacuum(), SqueezeParam(0.5, 0.9)), p).cov
    se = np.sqrt((target**2 + np.outer(np.diag(target), np.diag(target))) / (n - 1))
    assert np.all(np.abs(sample_cov - target) <= 3 * se)


def test_sampling_expectation_and_determinism():
    inp = coherent(np.array([1 + 1j, 2 - 1j]))
    p = GqcmParams(1.5, 0.6)
    bob, eve = sample_clone_quadratures(inp, p)
    joint = gqcm_clone(inp, p)
    np.testing.assert_array_equal(bob, joint.mean[:, :2])
    np.testing.assert_array_equal(eve, joint.mean[:, 2:])
    a = sample_clone_quadratures(inp, p, np.random.default_rng(3))
    b = sample_clone_quadratures(inp, p, np.random.default_rng(3))
    assert a[0].tobytes() == b[0].tobytes() and a[1].tobytes() == b[1].tobytes()


def test_imr_erases_squeezing():
    inp = squeeze(coherent(1 + 1j), SqueezeParam(1.0, 0.0))
    resent, record = intercept_measure_resend(inp, np.random.default_rng(0))
    np.testing.assert_array_equal(resent.cov, np.diag([0.25, 0.25]))
    np.testing.assert_array_equal(resent.mean, record)


def test_imr_expectation_mode():
    inp = squeezed_input()
    resent, _ = intercept_measure_resend(inp)
    np.testing.assert_array_equal(resent.mean, inp.mean)


def test_imr_penalty():
    n = 10_000
    inp = squeeze(coherent(np.full(n, 0.5 + 0.5j)), SqueezeParam(np.full(n, 1.0), np.zeros(n)))
    resent, _ = intercept_measure_resend(inp, np.random.default_rng(7))
    err = resent.mean - inp.mean
    target = np.diag(inp.cov[0]) + 0.25
    tol = 3 * target * np.sqrt(2 / (n - 1))
    assert np.all(np.abs(err.var(axis=0, ddof=1) - target) <= tol)


def test_dos():
    st_ = dos_resend(np.random.default_rng(1), 2.0, 20_000)
    np.testing.assert_array_equal(st_.cov, np.diag([0.25, 0.25]))
    spread = st_.mean.std(axis=0, ddof=1)
    assert np.all(np.abs(spread - 2.0) < 0.05)
    again = dos_resend(np.random.default_rng(1), 2.0, 20_000)
    assert st_.mean.tobytes() == again.mean.tobytes()
    with pytest.raises(ValueError):
        dos_resend(np.random.default_rng(1), 0.0)


def test_param_validation():
    with pytest.raises(ValueError):
        GqcmParams(0.5, 0.5)
    with pytest.raises(ValueError):
        GqcmParams(2, 1.5)
    with pytest.raises(ValueError):
        TwoModeGaussian(np.zeros(4), -np.eye(4))


def test_attack_description():
    a = Attack("gqcm", "bob-alice")
    assert a.kind is AttackType.GQCM and a.gqcm == GqcmParams()
    assert a.on("bob-alice") and not a.on("alice-bob")
    assert a.to_dict() == {"kind": "gqcm", "leg": "bob-alice", "A": 1.0, "T": 1.0}
    assert not Attack().on("bob-alice")
    with pytest.raises(ValueError):
        Attack("teleport")
