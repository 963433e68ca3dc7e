"""Eavesdropping models acting on the quantum channel.

The cloning machine is a linear amplifier of gain ``A`` followed by a
beamsplitter of transmission ``T``. At the quadrature level

    X_B =  sqrt(AT) X_in + sqrt((A-1)T) X_b1 + sqrt(1-T) X_b2
    X_E = -sqrt(A(1-T)) X_in - sqrt((A-1)(1-T)) X_b1 + sqrt(T) X_b2

and identically for P, with ``b1``, ``b2`` vacuum inputs. The idler ``b1``
enters unconjugated, which is what the closed-form variances in
``security_analysis`` assume.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .gaussian_core import VACUUM_VARIANCE, GaussianState, coherent
from .measurement import heterodyne


@dataclass(frozen=True)
class GqcmParams:
    A: float = 1.0
    T: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.A) and self.A >= 1):
            raise ValueError(f"amplifier gain A must be >= 1, got {self.A}")
        if not (np.isfinite(self.T) and 0 <= self.T <= 1):
            raise ValueError(f"transmission T must lie in [0, 1], got {self.T}")

    def coefficients(self) -> np.ndarray:
        """Rows (Bob, Eve), columns (a_in, b1, b2)."""
        A, T = self.A, self.T
        return np.array([
            [np.sqrt(A * T), np.sqrt((A - 1) * T), np.sqrt(1 - T)],
            [-np.sqrt(A * (1 - T)), -np.sqrt((A - 1) * (1 - T)), np.sqrt(T)],
        ])


@dataclass(frozen=True)
class TwoModeGaussian:
    """Joint Bob/Eve state, quadrature order (X_B, P_B, X_E, P_E)."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float)
        cov = np.array(self.cov, dtype=float)
        if mean.shape[-1:] != (4,) or cov.shape[-2:] != (4, 4):
            raise ValueError("two-mode state needs a 4-vector mean and 4x4 covariance")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ValueError("two-mode state must be finite")
        cov = 0.5 * (cov + np.swapaxes(cov, -1, -2))
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise ValueError("two-mode covariance is not positive-definite") from exc
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    def bob(self) -> GaussianState:
        return GaussianState(self.mean[..., :2], self.cov[..., :2, :2])

    def eve(self) -> GaussianState:
        return GaussianState(self.mean[..., 2:], self.cov[..., 2:, 2:])

    def cross_cov(self) -> np.ndarray:
        return self.cov[..., :2, 2:]


def _mode_map(coef: np.ndarray) -> np.ndarray:
    # 4x6 map from (X_in, P_in, X_b1, P_b1, X_b2, P_b2) to (X_B, P_B, X_E, P_E)
    return np.kron(coef, np.eye(2))


def gqcm_clone(state: GaussianState, p: GqcmParams) -> TwoModeGaussian:
    """Joint Bob/Eve output of the cloning machine for input ``state``."""
    L = _mode_map(p.coefficients())
    L_in, L_noise = L[:, :2], L[:, 2:]
    mean = np.einsum("ij,...j->...i", L_in, state.mean)
    cov = L_in @ state.cov @ L_in.T + VACUUM_VARIANCE * (L_noise @ L_noise.T)
    return TwoModeGaussian(mean, cov)


def sample_clone_quadratures(state: GaussianState, p: GqcmParams,
                             rng: np.random.Generator | None = None):
    """One joint draw of Bob's and Eve's (x, p); the means if ``rng`` is None."""
    joint = gqcm_clone(state, p)
    shape = np.broadcast_shapes(joint.mean.shape[:-1], joint.cov.shape[:-2])
    mean = np.broadcast_to(joint.mean, shape + (4,))
    if rng is None:
        draw = np.array(mean)
    else:
        chol = np.linalg.cholesky(np.broadcast_to(joint.cov, shape + (4, 4)))
        draw = mean + np.einsum("...ij,...j->...i", chol, rng.standard_normal(shape + (4,)))
    return draw[..., :2], draw[..., 2:]


def intercept_measure_resend(state: GaussianState, rng: np.random.Generator | None = None):
    """Eve heterodynes the intercepted state and resends a coherent state at the outcome.

    Returns ``(resent, record)`` with ``record`` of shape ``batch_shape + (2,)``.
    """
    record = heterodyne(state, rng)
    return coherent(record[..., 0] + 1j * record[..., 1]), record


def dos_resend(rng: np.random.Generator, amplitude_scale: float, size=None) -> GaussianState:
    """Random coherent state(s) with mean drawn from ``Normal(0, amplitude_scale^2 I)``."""
    if not amplitude_scale > 0:
        raise ValueError("amplitude_scale must be > 0")
    shape = () if size is None else (size,) if np.isscalar(size) else tuple(size)
    z = amplitude_scale * rng.standard_normal(shape + (2,))
    return coherent(z[..., 0] + 1j * z[..., 1])


class AttackType(Enum):
    NONE = "none"
    GQCM = "gqcm"
    INTERCEPT_MEASURE_RESEND = "intercept-measure-resend"
    INTERCEPT_DELAY_SWAP = "intercept-delay-swap"
    DENIAL_OF_SERVICE = "dos"
    PARTICIPANT_CHARLIE = "participant-charlie"


@dataclass(frozen=True)
class Attack:
    """An attack and the channel leg it targets (e.g. ``"bob-alice"``)."""

    kind: AttackType = AttackType.NONE
    leg: str | None = None
    gqcm: GqcmParams | None = None
    amplitude_scale: float = 2.0

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", AttackType(self.kind))
        if self.kind is AttackType.GQCM and self.gqcm is None:
            object.__setattr__(self, "gqcm", GqcmParams())
        if not self.amplitude_scale > 0:
            raise ValueError("amplitude_scale must be > 0")

    def on(self, leg: str) -> bool:
        return self.kind is not AttackType.NONE and self.leg == leg

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value, "leg": self.leg}
        if self.kind is AttackType.GQCM:
            d["A"], d["T"] = self.gqcm.A, self.gqcm.T
        if self.kind is AttackType.DENIAL_OF_SERVICE:
            d["amplitude_scale"] = self.amplitude_scale
        return d


NO_ATTACK = Attack()
