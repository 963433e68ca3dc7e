import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cvqsdc.encoding import (
    EncoderConfig,
    bits_to_symbols,
    cell_bounds,
    decode_value,
    encode_real,
    encode_symbol,
    symbol_error_rate,
    symbols_to_bits,
)

CFG = EncoderConfig()


def test_symbol_four_in_unit_cell():
    beta = encode_symbol(4, CFG, np.random.default_rng(0))
    assert 0 < beta.real < 1
    assert beta.imag == beta.real


def test_outer_cell_truncated():
    r = encode_symbol(np.zeros(1000, dtype=int), CFG, np.random.default_rng(1)).real
    assert r.min() > -4 + 0.1 and r.max() < -3 - 0.1


def test_seeded_determinism():
    a = encode_symbol(np.arange(8), CFG, np.random.default_rng(5))
    b = encode_symbol(np.arange(8), CFG, np.random.default_rng(5))
    assert a.tobytes() == b.tobytes()


@pytest.mark.parametrize("x, sym", [(2.5, 6), (-3.0, 1), (100.0, 7), (-100.0, 0), (0.0, 4), (-0.5, 3)])
def test_decode_value(x, sym):
    assert decode_value(x) == sym


def test_decode_nan():
    with pytest.raises(ValueError):
        decode_value(float("nan"))


def test_cell_bounds():
    assert cell_bounds(0) == (-np.inf, -3.0)
    assert cell_bounds(7) == (3.0, np.inf)
    with pytest.raises(ValueError):
        cell_bounds(8)


@given(st.integers(0, 7), st.integers(0, 2**32 - 1))
def test_round_trip(sym, seed):
    beta = encode_symbol(sym, CFG, np.random.default_rng(seed))
    assert beta.imag == beta.real
    assert decode_value(beta.real) == sym


@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_decode_total(x):
    k = decode_value(x)
    lo, hi = cell_bounds(k)
    assert lo <= x < hi


@pytest.mark.parametrize("m", [0.0, 2.5, -1.75])
def test_encode_real(m):
    assert encode_real(m) == complex(m, m)


def test_error_rate_monte_carlo_oracle():
    rng = np.random.default_rng(11)
    n = 1_000_000
    sym = rng.integers(0, 8, n)
    windows = np.array([CFG.sampling_interval(k) for k in range(8)])
    r = windows[sym, 0] + (windows[sym, 1] - windows[sym, 0]) * rng.random(n)
    err = np.mean(decode_value(r + 0.5 * rng.standard_normal(n)) != sym)
    p = symbol_error_rate(CFG, 0.25)
    assert abs(err - p) <= 3 * np.sqrt(p * (1 - p) / n)


def test_error_rate_limits_and_monotone():
    assert symbol_error_rate(CFG, 1e-8) < 1e-12
    rates = [symbol_error_rate(CFG, v) for v in np.linspace(0.01, 2, 12)]
    assert all(np.diff(rates) >= 0)


def test_bits_symbols():
    np.testing.assert_array_equal(bits_to_symbols("101011"), [5, 3])
    np.testing.assert_array_equal(bits_to_symbols("1"), [4])
    assert symbols_to_bits([5, 3]) == "101011"
    assert symbols_to_bits([4], 1) == "1"
    with pytest.raises(ValueError):
        bits_to_symbols("10a")


def test_config_validation():
    with pytest.raises(ValueError):
        EncoderConfig(interior_margin=0.5)
    with pytest.raises(ValueError):
        EncoderConfig(interior_margin=-0.1)
