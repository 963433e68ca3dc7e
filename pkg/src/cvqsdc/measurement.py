"""Homodyne/heterodyne sampling and the eavesdropping check.

Passing ``rng=None`` to a detector selects expectation mode: the detector
returns the exact quadrature mean instead of a random draw.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from enum import IntEnum

import numpy as np
from scipy import stats

from .gaussian_core import VACUUM_VARIANCE, GaussianState


class Quadrature(IntEnum):
    X = 0
    P = 1


@dataclass(frozen=True)
class VerificationPolicy:
    """Acceptance rule for a batch of check measurements.

    Attributes
    ----------
    per_sample_sigma_bound : float
        Any single residual beyond this many standard deviations fails the batch.
    aggregate_alpha : float
        Significance level of each aggregate test (mean z-test and
        two-sided chi-square variance test).
    min_samples : int
        Smallest batch the aggregate tests are run on.
    """

    per_sample_sigma_bound: float = 4.5
    aggregate_alpha: float = 0.01
    min_samples: int = 2

    def __post_init__(self):
        if not self.per_sample_sigma_bound > 0:
            raise ValueError("per_sample_sigma_bound must be > 0")
        if not 0 < self.aggregate_alpha < 1:
            raise ValueError("aggregate_alpha must lie in (0, 1)")
        if self.min_samples < 2:
            raise ValueError("min_samples must be >= 2")

    def scaled(self, factor: float) -> VerificationPolicy:
        """Same policy with ``aggregate_alpha`` multiplied by ``factor``."""
        return VerificationPolicy(
            self.per_sample_sigma_bound, self.aggregate_alpha * factor, self.min_samples
        )


@dataclass(frozen=True)
class VerificationReport:
    pass_: bool
    per_sample_outliers: int
    sample_mean_error: float
    sample_variance: float
    expected_variance: float
    mean_test_pass: bool = True
    variance_test_pass: bool = True

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("pass_")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def __bool__(self):
        return self.pass_


def homodyne(state: GaussianState, q, rng: np.random.Generator | None = None):
    """Measure quadrature ``q`` (X or P, scalar or per-slot array).

    Draws from ``Normal(mean_q, cov_qq)``; returns ``mean_q`` when ``rng`` is None.
    """
    mean = state.quadrature_mean(q)
    if rng is None:
        return mean
    sd = np.sqrt(state.variance(q))
    return mean + sd * rng.standard_normal(np.shape(mean))


def heterodyne(state: GaussianState, rng: np.random.Generator | None = None):
    """Joint (x, p) readout with one extra vacuum unit of noise per quadrature.

    Returns an array of shape ``batch_shape + (2,)``.
    """
    shape = state.batch_shape
    mean = np.broadcast_to(state.mean, shape + (2,))
    if rng is None:
        return np.array(mean)
    cov = np.broadcast_to(state.cov, shape + (2, 2)) + VACUUM_VARIANCE * np.eye(2)
    chol = np.linalg.cholesky(cov)
    z = rng.standard_normal(shape + (2,))
    return mean + np.einsum("...ij,...j->...i", chol, z)


def verify_batch(samples, expected, expected_variance, policy: VerificationPolicy | None = None,
                 *, variance_test: bool = True) -> VerificationReport:
    """Compare check measurements with the values the preparer revealed.

    The batch fails if any residual exceeds the per-sample bound, if the mean
    residual fails a two-sided z-test, or if the residual sample variance falls
    outside the two-sided chi-square acceptance region (both at
    ``policy.aggregate_alpha``). Expectation-mode data has zero spread and is
    under-dispersed by construction; pass ``variance_test=False`` for it.
    """
    policy = policy or VerificationPolicy()
    samples = np.asarray(samples, dtype=float).ravel()
    expected = np.asarray(expected, dtype=float).ravel()
    if samples.shape != expected.shape:
        raise ValueError(f"length mismatch: {samples.size} samples vs {expected.size} expected")
    n = samples.size
    if n < policy.min_samples:
        raise ValueError(f"need at least {policy.min_samples} samples, got {n}")
    if not expected_variance > 0:
        raise ValueError("expected_variance must be > 0")

    resid = samples - expected
    sd = np.sqrt(expected_variance)
    outliers = int(np.count_nonzero(np.abs(resid) > policy.per_sample_sigma_bound * sd))

    alpha = policy.aggregate_alpha
    mean_err = float(resid.mean())
    z = mean_err / (sd / np.sqrt(n))
    mean_ok = bool(abs(z) <= stats.norm.ppf(1 - alpha / 2))

    svar = float(resid.var(ddof=1))
    var_ok = True
    if variance_test:
        q = (n - 1) * svar / expected_variance
        lo, hi = stats.chi2.ppf([alpha / 2, 1 - alpha / 2], n - 1)
        var_ok = bool(lo <= q <= hi)

    return VerificationReport(
        pass_=outliers == 0 and mean_ok and var_ok,
        per_sample_outliers=outliers,
        sample_mean_error=mean_err,
        sample_variance=svar,
        expected_variance=float(expected_variance),
        mean_test_pass=mean_ok,
        variance_test_pass=var_ok,
    )
