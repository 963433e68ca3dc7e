"""Phase-space representation of single-mode Gaussian states.

Quadratures follow ``X = (a + a^dag)/2`` and ``P = (a - a^dag)/2i`` so the
vacuum has variance 1/4 in each quadrature and a coherent state ``|alpha>``
sits at ``(Re alpha, Im alpha)``.

Every function here broadcasts: a ``GaussianState`` may hold a batch of
states (``mean`` of shape ``(..., 2)``, ``cov`` of shape ``(..., 2, 2)`` or a
single shared ``(2, 2)`` covariance), and squeeze parameters may be arrays.
The protocol simulator relies on this to push whole blocks of time slots
through the same operator in one call.

Squeezing convention
--------------------
The phase-space action of ``S(s)``, ``s = r e^{i theta}``, is the symplectic
matrix

    M(s) = cosh(r) I + sinh(r) [[cos theta, sin theta], [sin theta, -cos theta]]

which is the Heisenberg map ``S^dag a S = a cosh r + a^dag e^{i theta} sinh r``.
With this choice ``S(s) D(alpha) = D(beta) S(s)`` holds exactly for
``beta = alpha cosh r + e^{i theta} alpha^* sinh r`` (see ``commute_ds``).
For ``theta = 0`` the P quadrature is squeezed.
"""

from __future__ import annotations

import csv
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TWO_PI = 2.0 * np.pi
VACUUM_VARIANCE = 0.25
_PD_TOL = 1e-12


def _check_finite(name, value):
    if not np.all(np.isfinite(value)):
        raise ValueError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class SqueezeParam:
    """Squeezing parameter ``s = r e^{i theta}``.

    ``r`` and ``theta`` may be scalars or equally-shaped arrays (one entry
    per slot). ``theta`` is wrapped into ``[0, 2 pi)`` on construction.
    """

    r: np.ndarray | float
    theta: np.ndarray | float = 0.0

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        theta = np.asarray(self.theta, dtype=float)
        _check_finite("r", r)
        _check_finite("theta", theta)
        if np.any(r < 0):
            raise ValueError("squeeze magnitude r must be >= 0")
        theta = np.mod(theta, TWO_PI)
        if r.ndim == 0:
            r = float(r)
        if theta.ndim == 0:
            theta = float(theta)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "theta", theta)

    @classmethod
    def from_complex(cls, s) -> SqueezeParam:
        s = np.asarray(s, dtype=complex)
        return cls(np.abs(s), np.angle(s))

    @property
    def complex(self):
        return self.r * np.exp(1j * self.theta)

    def negate(self) -> SqueezeParam:
        """Return ``-s``, so that ``S(-s) = S(s)^dag``."""
        return SqueezeParam(self.r, np.asarray(self.theta) + np.pi)


@dataclass(frozen=True)
class GaussianState:
    """Gaussian state (or batch of states) given by quadrature mean and covariance.

    The covariance is symmetrized on construction and checked against the
    Heisenberg bound ``det(cov) >= 1/16``.
    """

    mean: np.ndarray
    cov: np.ndarray = field(default_factory=lambda: VACUUM_VARIANCE * np.eye(2))

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float)
        cov = np.array(self.cov, dtype=float)
        if mean.shape[-1:] != (2,):
            raise ValueError(f"mean must have trailing dimension 2, got {mean.shape}")
        if cov.shape[-2:] != (2, 2):
            raise ValueError(f"cov must have trailing shape (2, 2), got {cov.shape}")
        _check_finite("mean", mean)
        _check_finite("cov", cov)
        cov = 0.5 * (cov + np.swapaxes(cov, -1, -2))
        det = cov[..., 0, 0] * cov[..., 1, 1] - cov[..., 0, 1] * cov[..., 1, 0]
        trace = cov[..., 0, 0] + cov[..., 1, 1]
        if np.any(trace <= 0) or np.any(det < VACUUM_VARIANCE**2 - _PD_TOL):
            raise ValueError("covariance violates positivity or the uncertainty bound")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def batch_shape(self) -> tuple:
        return np.broadcast_shapes(self.mean.shape[:-1], self.cov.shape[:-2])

    def __len__(self):
        shape = self.batch_shape
        if not shape:
            raise TypeError("single GaussianState has no length")
        return shape[0]

    def __getitem__(self, idx) -> GaussianState:
        shape = self.batch_shape
        mean = np.broadcast_to(self.mean, shape + (2,))[idx]
        cov = np.broadcast_to(self.cov, shape + (2, 2))[idx]
        return GaussianState(mean, cov)

    def det(self):
        c = self.cov
        return c[..., 0, 0] * c[..., 1, 1] - c[..., 0, 1] * c[..., 1, 0]

    def variance(self, quadrature):
        """Variance of quadrature 0 (X) or 1 (P); ``quadrature`` may be an array."""
        cov = np.broadcast_to(self.cov, self.batch_shape + (2, 2))
        return select_quadrature(np.diagonal(cov, axis1=-2, axis2=-1), quadrature)

    def quadrature_mean(self, quadrature):
        mean = np.broadcast_to(self.mean, self.batch_shape + (2,))
        return select_quadrature(mean, quadrature)

    def allclose(self, other: GaussianState, atol=1e-12) -> bool:
        return bool(
            np.allclose(self.mean, other.mean, atol=atol, rtol=0)
            and np.allclose(self.cov, other.cov, atol=atol, rtol=0)
        )


@dataclass(frozen=True)
class PhaseGrid:
    """Rectangular evaluation grid in the (x, p) plane."""

    x_range: tuple[float, float]
    p_range: tuple[float, float]
    nx: int
    np_: int

    def __post_init__(self):
        if self.nx <= 0 or self.np_ <= 0:
            raise ValueError("grid resolution must be positive")
        for lo, hi in (self.x_range, self.p_range):
            _check_finite("grid range", np.array([lo, hi]))
            if not lo < hi:
                raise ValueError(f"grid range must be ordered, got ({lo}, {hi})")

    @classmethod
    def from_step(cls, start, stop, step, p_start=None, p_stop=None) -> PhaseGrid:
        """Square-cell grid with stop-inclusive sampling (within 1e-9)."""
        if step <= 0:
            raise ValueError("grid step must be positive")
        p_start = start if p_start is None else p_start
        p_stop = stop if p_stop is None else p_stop
        nx = int(np.floor((stop - start) / step + 1e-9)) + 1
        npts = int(np.floor((p_stop - p_start) / step + 1e-9)) + 1
        return cls(
            (start, start + (nx - 1) * step),
            (p_start, p_start + (npts - 1) * step),
            nx,
            npts,
        )

    @property
    def x(self):
        return np.linspace(*self.x_range, self.nx)

    @property
    def p(self):
        return np.linspace(*self.p_range, self.np_)

    @property
    def cell_area(self):
        dx = (self.x_range[1] - self.x_range[0]) / max(self.nx - 1, 1)
        dp = (self.p_range[1] - self.p_range[0]) / max(self.np_ - 1, 1)
        return dx * dp


def select_quadrature(values, quadrature):
    """Pick entry ``quadrature`` (0 = X, 1 = P) along the last axis, elementwise."""
    q = np.asarray(quadrature, dtype=int)
    if q.ndim == 0:
        return values[..., int(q)]
    values = np.broadcast_to(values, q.shape + values.shape[-1:])
    return np.take_along_axis(values, q[..., None], axis=-1)[..., 0]


def vacuum() -> GaussianState:
    return GaussianState(np.zeros(2), VACUUM_VARIANCE * np.eye(2))


def coherent(alpha) -> GaussianState:
    """Coherent state(s) ``D(alpha)|0>``; ``alpha`` may be an array."""
    return displace(vacuum(), alpha)


def _as_vec(alpha):
    alpha = np.asarray(alpha, dtype=complex)
    _check_finite("alpha", alpha)
    return np.stack([alpha.real, alpha.imag], axis=-1)


def _as_complex(vec):
    return vec[..., 0] + 1j * vec[..., 1]


def displace(state: GaussianState, alpha) -> GaussianState:
    """Apply ``D(alpha)``: shifts the mean by ``(Re alpha, Im alpha)``."""
    return GaussianState(state.mean + _as_vec(alpha), state.cov)


def squeeze_matrix(s: SqueezeParam) -> np.ndarray:
    """Symplectic phase-space matrix of ``S(s)``; shape ``(..., 2, 2)``."""
    r = np.asarray(s.r, dtype=float)
    theta = np.asarray(s.theta, dtype=float)
    r, theta = np.broadcast_arrays(r, theta)
    ch, sh = np.cosh(r), np.sinh(r)
    c, sn = np.cos(theta), np.sin(theta)
    m = np.empty(r.shape + (2, 2))
    m[..., 0, 0] = ch + sh * c
    m[..., 0, 1] = sh * sn
    m[..., 1, 0] = sh * sn
    m[..., 1, 1] = ch - sh * c
    return m


def apply_symplectic(state: GaussianState, m: np.ndarray) -> GaussianState:
    mean = np.einsum("...ij,...j->...i", m, state.mean)
    cov = m @ state.cov @ np.swapaxes(m, -1, -2)
    return GaussianState(mean, cov)


def squeeze(state: GaussianState, s: SqueezeParam) -> GaussianState:
    """Apply ``S(s)``: ``mean -> M mean``, ``cov -> M cov M^T``."""
    return apply_symplectic(state, squeeze_matrix(s))


def commute_ds(alpha, s: SqueezeParam):
    """Amplitude ``beta`` with ``S(s) D(alpha) = D(beta) S(s)``."""
    alpha = np.asarray(alpha, dtype=complex)
    return alpha * np.cosh(s.r) + np.exp(1j * np.asarray(s.theta)) * np.conj(alpha) * np.sinh(s.r)


def commute_sd_inverse(beta, s: SqueezeParam):
    """Inverse of ``commute_ds``: recover ``alpha`` from ``beta``."""
    beta = np.asarray(beta, dtype=complex)
    return beta * np.cosh(s.r) - np.exp(1j * np.asarray(s.theta)) * np.conj(beta) * np.sinh(s.r)


def wigner(state: GaussianState, grid: PhaseGrid) -> np.ndarray:
    """Closed-form Gaussian Wigner function on ``grid``.

    Returns an array of shape ``(grid.nx, grid.np_)`` indexed ``[ix, ip]``.
    """
    if state.batch_shape:
        raise ValueError("wigner expects a single state")
    det = state.det()
    if det <= 0:
        raise ValueError("singular covariance")
    inv = np.linalg.inv(state.cov)
    xx, pp = np.meshgrid(grid.x, grid.p, indexing="ij")
    dx = xx - state.mean[0]
    dp = pp - state.mean[1]
    quad = inv[0, 0] * dx**2 + 2 * inv[0, 1] * dx * dp + inv[1, 1] * dp**2
    return np.exp(-0.5 * quad) / (2 * np.pi * np.sqrt(det))


@contextmanager
def open_text_output(target):
    """Yield a writable text stream for a path, or pass an open stream through."""
    if hasattr(target, "write"):
        yield target
    else:
        with Path(target).open("w", newline="") as fh:
            yield fh


def write_wigner_csv(target, grid: PhaseGrid, w: np.ndarray):
    """Write ``x,p,w`` rows, x-major (p varies fastest), to a path or stream."""
    with open_text_output(target) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "p", "w"])
        for i, x in enumerate(grid.x):
            for j, p in enumerate(grid.p):
                writer.writerow([f"{x:.12g}", f"{p:.12g}", f"{w[i, j]:.12g}"])
