"""Eight-cell 3-bit encoding of messages on diagonal displacements.

The real line is cut at -3, -2, ..., 3 into eight cells; cell ``k`` carries
the 3-bit symbol ``k``. A symbol is sent as ``beta = r + i r`` with ``r``
drawn uniformly from the interior of its cell.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, stats

BOUNDARIES = np.arange(-3.0, 4.0)
N_SYMBOLS = 8
BITS_PER_SYMBOL = 3


@dataclass(frozen=True)
class EncoderConfig:
    """Sampling window inside each cell.

    ``interior_margin`` keeps draws away from cell edges. The two unbounded
    cells are truncated to ``unbounded_cell_width`` for sampling only.
    """

    interior_margin: float = 0.1
    unbounded_cell_width: float = 1.0

    def __post_init__(self):
        if self.interior_margin < 0:
            raise ValueError("interior_margin must be >= 0")
        if self.unbounded_cell_width <= 0:
            raise ValueError("unbounded_cell_width must be > 0")
        if self.interior_margin >= 0.5 or self.interior_margin >= self.unbounded_cell_width / 2:
            raise ValueError("interior_margin must be below half the cell width")

    def sampling_interval(self, sym: int) -> tuple[float, float]:
        lo, hi = cell_bounds(sym)
        if sym == 0:
            lo = hi - self.unbounded_cell_width
        elif sym == N_SYMBOLS - 1:
            hi = lo + self.unbounded_cell_width
        return lo + self.interior_margin, hi - self.interior_margin


def _check_symbol(sym):
    sym = np.asarray(sym)
    if not np.issubdtype(sym.dtype, np.integer) or np.any((sym < 0) | (sym >= N_SYMBOLS)):
        raise ValueError(f"symbols must be integers in [0, 7], got {sym!r}")
    return sym


def cell_bounds(sym: int) -> tuple[float, float]:
    """Decoding cell ``[lo, hi)`` of a symbol (infinite at the ends)."""
    sym = int(_check_symbol(sym))
    edges = np.concatenate([[-np.inf], BOUNDARIES, [np.inf]])
    return float(edges[sym]), float(edges[sym + 1])


def encode_symbol(sym, cfg: EncoderConfig, rng: np.random.Generator):
    """Displacement amplitude ``r + i r`` for symbol(s) ``sym``."""
    sym = _check_symbol(sym)
    windows = np.array([cfg.sampling_interval(k) for k in range(N_SYMBOLS)])
    lo = windows[sym, 0]
    hi = windows[sym, 1]
    r = lo + (hi - lo) * rng.random(np.shape(sym))
    return r + 1j * r


def decode_value(x):
    """Symbol index of the cell containing ``x``; boundary points go right."""
    x = np.asarray(x, dtype=float)
    if np.any(np.isnan(x)):
        raise ValueError("cannot decode NaN")
    out = np.searchsorted(BOUNDARIES, x, side="right")
    return int(out) if out.ndim == 0 else out


def encode_real(m) -> complex:
    m = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(m)):
        raise ValueError("message must be finite")
    beta = m + 1j * m
    return complex(beta) if beta.ndim == 0 else beta


def symbol_error_rate(cfg: EncoderConfig, noise_variance: float) -> float:
    """Probability that ``r + Normal(0, noise_variance)`` leaves the symbol's cell.

    Averaged over the eight symbols (uniform prior) and over ``r`` uniform in
    each sampling window; the inner average is done by adaptive quadrature.
    """
    if not noise_variance > 0:
        raise ValueError("noise_variance must be > 0")
    sd = np.sqrt(noise_variance)
    total = 0.0
    for k in range(N_SYMBOLS):
        lo, hi = cell_bounds(k)
        a, b = cfg.sampling_interval(k)

        def leave(r, lo=lo, hi=hi):
            p = 0.0
            if np.isfinite(lo):
                p += stats.norm.cdf((lo - r) / sd)
            if np.isfinite(hi):
                p += stats.norm.sf((hi - r) / sd)
            return p

        val, _ = integrate.quad(leave, a, b, epsabs=1e-13, epsrel=1e-11, limit=200)
        total += val / (b - a)
    return total / N_SYMBOLS


def bits_to_symbols(bits: str) -> np.ndarray:
    """Group an ASCII '0'/'1' string into big-endian 3-bit symbols, zero-padding the tail."""
    bits = "".join(bits.split())
    if not bits or set(bits) - {"0", "1"}:
        raise ValueError(f"bit string must be non-empty and contain only 0/1, got {bits!r}")
    pad = (-len(bits)) % BITS_PER_SYMBOL
    bits = bits + "0" * pad
    return np.array(
        [int(bits[i:i + BITS_PER_SYMBOL], 2) for i in range(0, len(bits), BITS_PER_SYMBOL)],
        dtype=int,
    )


def symbols_to_bits(symbols, n_bits: int | None = None) -> str:
    bits = "".join(format(int(s), "03b") for s in _check_symbol(np.asarray(symbols, dtype=int)))
    return bits if n_bits is None else bits[:n_bits]
