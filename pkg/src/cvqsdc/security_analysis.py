"""Mutual-information security criterion for the cloning attack.

Alice's effective operation on the travelling mode is a squeeze ``t = g e^{ih}``
plus a displacement ``d``. In the Heisenberg picture the input quadratures are

    X_in = m_r X_a - n_i P_a + d_x,    P_in = m_i X_a + n_r P_a + d_y

with ``m = cosh g - e^{ih} sinh g`` and ``n = cosh g + e^{ih} sinh g``.
Pushing this through the cloning machine gives Bob's and Eve's signal and
noise variances, and from them the Shannon mutual informations (bits).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, fields

import numpy as np

from .channel_attacks import GqcmParams, sample_clone_quadratures
from .gaussian_core import GaussianState, SqueezeParam, open_text_output, squeeze, vacuum

MODULATION_VARIANCE = 0.25

CSV_COLUMNS = [
    "A", "T", "g", "h",
    "M_XB", "M_XE", "M_PB", "M_PE", "N_XB", "N_XE", "N_PB", "N_PE",
    "I_AB_X", "I_AE_X", "I_AB_P", "I_AE_P", "dI_X", "dI_P",
]


@dataclass(frozen=True)
class BogoliubovCoeffs:
    m: complex
    n: complex

    @property
    def x_noise_factor(self):
        """``m_r^2 + n_i^2``: squeeze factor on the X-quadrature noise."""
        return np.real(self.m) ** 2 + np.imag(self.n) ** 2

    @property
    def p_noise_factor(self):
        return np.imag(self.m) ** 2 + np.real(self.n) ** 2

    def negated(self) -> BogoliubovCoeffs:
        """Coefficients for ``-g``: cosh is even and sinh odd, so m and n swap."""
        return BogoliubovCoeffs(self.n, self.m)

    def input_matrix(self) -> np.ndarray:
        """Map ``(X_a, P_a) -> (X_in - d_x, P_in - d_y)``."""
        m, n = np.asarray(self.m), np.asarray(self.n)
        out = np.empty(np.broadcast_shapes(m.shape, n.shape) + (2, 2))
        out[..., 0, 0] = m.real
        out[..., 0, 1] = -n.imag
        out[..., 1, 0] = m.imag
        out[..., 1, 1] = n.real
        return out


@dataclass(frozen=True)
class EffectiveEncoding:
    """Combined squeeze ``g e^{ih}`` and displacement ``d`` seen by the cloner."""

    g: float
    h: float
    d: complex = 0j

    def __post_init__(self):
        if self.g < 0:
            raise ValueError("g must be >= 0")
        object.__setattr__(self, "h", float(np.mod(self.h, 2 * np.pi)))

    def squeeze_param(self) -> SqueezeParam:
        # our S(s) has matrix cosh I + sinh R(theta); theta = h + pi reproduces (m, n)
        return SqueezeParam(self.g, self.h + np.pi)

    def input_state(self) -> GaussianState:
        sq = squeeze(vacuum(), self.squeeze_param())
        return GaussianState(sq.mean + [self.d.real, self.d.imag], sq.cov)


@dataclass(frozen=True)
class VariancePack:
    M_XB: float
    M_XE: float
    M_PB: float
    M_PE: float
    N_XB: float
    N_XE: float
    N_PB: float
    N_PE: float


@dataclass(frozen=True)
class MutualInfoResult:
    I_AB_X: float
    I_AE_X: float
    I_AB_P: float
    I_AE_P: float
    delta_X: float
    delta_P: float


@dataclass(frozen=True)
class SweepPoint:
    A: float
    T: float
    g: float
    h: float
    variances: VariancePack
    info: MutualInfoResult

    def row(self) -> list:
        v, i = self.variances, self.info
        return [
            self.A, self.T, self.g, self.h,
            v.M_XB, v.M_XE, v.M_PB, v.M_PE, v.N_XB, v.N_XE, v.N_PB, v.N_PE,
            i.I_AB_X, i.I_AE_X, i.I_AB_P, i.I_AE_P, i.delta_X, i.delta_P,
        ]


def _coeffs(g, h) -> BogoliubovCoeffs:
    g = np.asarray(g, dtype=float)
    eih = np.exp(1j * np.asarray(h, dtype=float))
    return BogoliubovCoeffs(np.cosh(g) - eih * np.sinh(g), np.cosh(g) + eih * np.sinh(g))


def bogoliubov(g, h) -> BogoliubovCoeffs:
    if np.any(np.asarray(g) < 0):
        raise ValueError("g must be >= 0; use BogoliubovCoeffs.negated() for -g")
    return _coeffs(g, h)


def _check_cloner(A, T):
    A = np.asarray(A, dtype=float)
    T = np.asarray(T, dtype=float)
    if np.any(~np.isfinite(A)) or np.any(A < 1):
        raise ValueError("amplifier gain A must be >= 1")
    if np.any(~np.isfinite(T)) or np.any((T < 0) | (T > 1)):
        raise ValueError("transmission T must lie in [0, 1]")
    return A, T


def variances_from_coeffs(A, T, coeffs: BogoliubovCoeffs) -> VariancePack:
    A, T = _check_cloner(A, T)
    kx, kp = coeffs.x_noise_factor, coeffs.p_noise_factor
    m_b = 0.25 * A * T
    m_e = 0.25 * A * (1 - T)
    return VariancePack(
        M_XB=m_b,
        M_XE=m_e,
        M_PB=m_b,
        M_PE=m_e,
        N_XB=0.25 * (kx * A * T + (A - 1) * T + (1 - T)),
        N_XE=0.25 * (T + kx * A * (1 - T) + (A - 1) * (1 - T)),
        N_PB=0.25 * (kp * A * T + (A - 1) * T + (1 - T)),
        N_PE=0.25 * (T + kp * A * (1 - T) + (A - 1) * (1 - T)),
    )


def variances(A, T, g, h) -> VariancePack:
    """Signal (M) and noise (N) variances of Bob's and Eve's quadratures."""
    return variances_from_coeffs(A, T, bogoliubov(g, h))


def mutual_info(M, N):
    """Gaussian-channel mutual information ``0.5 log2(1 + M/N)`` in bits."""
    M = np.asarray(M, dtype=float)
    N = np.asarray(N, dtype=float)
    if np.any(N <= 0):
        raise ValueError("noise variance must be > 0")
    if np.any(M < 0):
        raise ValueError("signal variance must be >= 0")
    out = 0.5 * np.log2(1 + M / N)
    return float(out) if out.ndim == 0 else out


def delta_from_coeffs(A, T, coeffs: BogoliubovCoeffs) -> MutualInfoResult:
    v = variances_from_coeffs(A, T, coeffs)
    iab_x, iae_x = mutual_info(v.M_XB, v.N_XB), mutual_info(v.M_XE, v.N_XE)
    iab_p, iae_p = mutual_info(v.M_PB, v.N_PB), mutual_info(v.M_PE, v.N_PE)
    return MutualInfoResult(iab_x, iae_x, iab_p, iae_p, iab_x - iae_x, iab_p - iae_p)


def delta_i(A, T, g, h) -> MutualInfoResult:
    """``I(A,B) - I(A,E)`` per quadrature; positive means Bob out-learns Eve."""
    return delta_from_coeffs(A, T, bogoliubov(g, h))


def sweep(A_values, T_values, g_values, h_values) -> list[SweepPoint]:
    """Evaluate every grid point; rows ordered A, T, g, h with h fastest."""
    axes = [np.atleast_1d(np.asarray(v, dtype=float)) for v in (A_values, T_values, g_values, h_values)]
    if any(ax.size == 0 for ax in axes):
        raise ValueError("sweep grid is empty")
    A, T, g, h = (x.ravel() for x in np.meshgrid(*axes, indexing="ij"))
    v = variances(A, T, g, h)
    info = delta_i(A, T, g, h)
    vals_v = [np.broadcast_to(getattr(v, f.name), A.shape) for f in fields(VariancePack)]
    vals_i = [np.broadcast_to(getattr(info, f.name), A.shape) for f in fields(MutualInfoResult)]
    return [
        SweepPoint(
            float(A[k]), float(T[k]), float(g[k]), float(h[k]),
            VariancePack(*(float(x[k]) for x in vals_v)),
            MutualInfoResult(*(float(x[k]) for x in vals_i)),
        )
        for k in range(A.size)
    ]


def write_sweep_csv(target, rows: list[SweepPoint]):
    with open_text_output(target) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for pt in rows:
            writer.writerow([f"{x:.12g}" for x in pt.row()])


def monte_carlo_variances(A, T, g, h, n_samples: int, rng: np.random.Generator) -> dict:
    """Sample variances of Bob's and Eve's quadratures under the cloner.

    Each sample gets a fresh modulation ``d ~ Normal(0, MODULATION_VARIANCE I)``
    on top of the squeezed vacuum, then one joint clone draw. Returns
    ``{"X_B": ..., "X_E": ..., "P_B": ..., "P_E": ...}``.
    """
    base = squeeze(vacuum(), EffectiveEncoding(g, h).squeeze_param())
    d = np.sqrt(MODULATION_VARIANCE) * rng.standard_normal((n_samples, 2))
    bob, eve = sample_clone_quadratures(GaussianState(d, base.cov), GqcmParams(A, T), rng)
    return {
        "X_B": float(bob[:, 0].var(ddof=1)),
        "P_B": float(bob[:, 1].var(ddof=1)),
        "X_E": float(eve[:, 0].var(ddof=1)),
        "P_E": float(eve[:, 1].var(ddof=1)),
    }


def expected_totals(v: VariancePack) -> dict:
    return {
        "X_B": v.M_XB + v.N_XB,
        "P_B": v.M_PB + v.N_PB,
        "X_E": v.M_XE + v.N_XE,
        "P_E": v.M_PE + v.N_PE,
    }

