"""Complex robust PCA by ADMM.

Splits a complex matrix ``L`` into a low-rank part ``N`` and a sparse part
``A`` by minimising ``||N||_* + alpha ||A||_1`` subject to ``N + A = L``.
The penalty follows ``beta_k = min(1.5^k, 1.5^cap) * 1.25 / ||L||_2``, which
grows geometrically and then saturates.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, InadmissibleError, NumericalFailureError

log = logging.getLogger(__name__)

HISTORY_FIELDS = ("iter", "residual", "rank", "nnz", "beta", "amax")


class RateBoundWarning(UserWarning):
    """Observed residual decay is slower than the assumed ``p q^k``."""


@dataclass(frozen=True)
class AdmmParams:
    """ADMM settings.

    ``alpha=None`` selects ``1 / sqrt(max(rows, cols))``.  ``p`` and ``q`` are
    the assumed R-linear rate constants ``||L - N^k - A^k||_max <= p q^k``
    used by the runtime monitor and by :func:`alpha_floor`.
    """

    alpha: float = None
    beta_cap: int = 40
    tol: float = 1e-7
    max_iter: int = 500
    rank_tol: float = 1e-8
    p: float = 1.0
    q: float = 0.9

    def __post_init__(self):
        if self.alpha is not None and not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if int(self.beta_cap) != self.beta_cap or self.beta_cap < 1:
            raise ValueError(f"beta cap must be a positive integer, got {self.beta_cap}")
        if not self.tol > 0:
            raise ValueError(f"tolerance must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.rank_tol > 0:
            raise ValueError("rank tolerance must be positive")
        if not (self.p >= 0 and 0 < self.q < 1):
            raise ValueError(f"need p >= 0 and 0 < q < 1, got p={self.p}, q={self.q}")

    def alpha_for(self, shape):
        return self.alpha if self.alpha is not None else default_alpha(shape)


@dataclass(frozen=True)
class IterationRecord:
    iter: int
    residual: float
    rank: int
    nnz: int
    beta: float
    amax: float
    rmax: float

    def row(self):
        return tuple(getattr(self, name) for name in HISTORY_FIELDS)


@dataclass(eq=False)
class DecompositionResult:
    low_rank: np.ndarray
    sparse: np.ndarray
    multiplier: np.ndarray
    history: list = field(default_factory=list)
    rank: int = 0
    iterations: int = 0
    converged: bool = False
    alpha: float = 0.0
    rate_violations: int = 0

    @property
    def residual(self):
        return self.history[-1].residual if self.history else float("nan")

    @property
    def max_sparse_history(self):
        return np.array([h.amax for h in self.history])


def default_alpha(shape):
    return 1.0 / math.sqrt(max(shape))


def spectral_norm(M):
    """Largest singular value of ``M`` (0 for empty or zero matrices)."""
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    return float(np.linalg.svd(M, compute_uv=False)[0])


def max_norm(M):
    M = np.asarray(M)
    return float(np.abs(M).max()) if M.size else 0.0


def complex_svt(M, tau):
    """Singular value thresholding ``U diag((s - tau)_+) V^*``.

    Returns the thresholded matrix and the number of singular values
    strictly above ``tau``.
    """
    if tau < 0:
        raise ValueError("threshold must be non-negative")
    M = np.asarray(M)
    if M.size == 0:
        return M.copy(), 0
    U, s, Vh = np.linalg.svd(M, full_matrices=False)
    keep = int(np.count_nonzero(s > tau))
    out = (U[:, :keep] * (s[:keep] - tau)) @ Vh[:keep]
    return out.astype(np.result_type(M, float), copy=False), keep


def complex_shrink(M, tau):
    """Entrywise complex soft threshold ``z -> (1 - tau/|z|)_+ z``."""
    if tau < 0:
        raise ValueError("threshold must be non-negative")
    M = np.asarray(M)
    mag = np.abs(M)
    hit = mag > tau
    out = np.zeros(M.shape, dtype=np.result_type(M, float))
    out[hit] = M[hit] * (1.0 - tau / mag[hit])
    return out


def beta_schedule(k, cap, spec_norm):
    """Penalty ``min(1.5^k, 1.5^cap) * 1.25 / ||L||_2``."""
    if not spec_norm > 0:
        raise DegenerateInputError("spectral norm of L must be positive")
    return 1.5 ** min(k, cap) * 1.25 / spec_norm


def alpha_floor(L, p, q, cap):
    """Sparsity weight above which every sparse iterate keeps ``|A_ij| < 1``.

    ``p`` and ``q`` are the R-linear rate constants of the iteration; they
    must be supplied (see :func:`calibrate_rate`).
    """
    if not 0 < q < 1:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    s = spectral_norm(L)
    if s == 0:
        raise DegenerateInputError("alpha floor undefined for a zero matrix")
    lmax = max_norm(L)
    if lmax >= 1:
        raise InadmissibleError(f"||L||_max = {lmax:.6g} >= 1")
    x = 1.5 * q
    if math.isclose(x, 1.0, rel_tol=1e-12):
        geometric = float(cap)
    else:
        geometric = (1.0 - x**cap) / (1.0 - x)
    beta_cap = beta_schedule(cap, cap, s)
    return lmax / s + 1.25 * p / s * geometric + beta_cap * p * q**cap / (1.0 - q)


def calibrate_rate(history, p=1.0):
    """Smallest ``q`` with ``rmax_k <= p q^k`` over a recorded run.

    ``rmax_k`` is the max-norm residual after iteration ``k`` (1-based).
    Returns a value clipped into ``(0, 1)``.
    """
    if p <= 0:
        raise ValueError("p must be positive")
    q = 0.0
    for rec in history:
        r = rec.rmax / p
        if r > 0:
            q = max(q, r ** (1.0 / (rec.iter + 1)))
    return min(max(q, 1e-12), 1.0 - 1e-12)


def numerical_rank(M, rel_tol=1e-8):
    """Number of singular values above ``rel_tol`` times the largest."""
    if not rel_tol > 0:
        raise ValueError("rel_tol must be positive")
    M = np.asarray(M)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.count_nonzero(s > rel_tol * s[0]))


def decompose(L, params=None, callback=None):
    """Low-rank plus sparse decomposition of a complex matrix.

    Iterates the singular value thresholding step on ``L - A + Z/beta``, the
    complex shrinkage step on ``Z/beta - N + L`` and the multiplier update
    ``Z += beta (L - N - A)`` until the relative Frobenius residual falls
    below ``params.tol``.  Running out of iterations is reported through
    ``converged=False``, not an exception.

    ``callback(k, N, A, Z)`` is invoked after every iteration.
    """
    params = params or AdmmParams()
    L = np.asarray(L)
    if L.ndim != 2:
        raise ValueError("L must be a matrix")
    L = L.astype(complex, copy=False)
    if not np.all(np.isfinite(L)):
        raise NumericalFailureError("L contains NaN or Inf", iteration=0)
    s = spectral_norm(L)
    if s == 0:
        raise DegenerateInputError("cannot decompose a zero matrix")

    alpha = params.alpha_for(L.shape)
    norm_L = np.linalg.norm(L)
    N = np.zeros_like(L)
    A = np.zeros_like(L)
    Z = L / s
    history = []
    rank = 0
    converged = False
    violations = 0

    for k in range(params.max_iter):
        beta = beta_schedule(k, params.beta_cap, s)
        N, rank = complex_svt(L - A + Z / beta, 1.0 / beta)
        A = complex_shrink(Z / beta - N + L, alpha / beta)
        R = L - N - A
        Z = Z + beta * R

        resid = float(np.linalg.norm(R) / norm_L)
        if not (math.isfinite(resid) and np.all(np.isfinite(Z))):
            raise NumericalFailureError(f"non-finite iterate at iteration {k}", iteration=k)
        rmax = max_norm(R)
        rec = IterationRecord(k, resid, rank, int(np.count_nonzero(A)), beta, max_norm(A), rmax)
        history.append(rec)
        if rmax > params.p * params.q ** (k + 1):
            violations += 1
        if callback is not None:
            callback(k, N, A, Z)
        if resid < params.tol:
            converged = True
            break

    if violations:
        warnings.warn(
            f"residual exceeded p q^k = {params.p} * {params.q}^k on {violations} of "
            f"{len(history)} iterations; the assumed rate underestimates the decay",
            RateBoundWarning,
            stacklevel=2,
        )
    if not converged:
        log.warning("ADMM stopped after %d iterations at residual %.3e", len(history), history[-1].residual)
    return DecompositionResult(
        low_rank=N, sparse=A, multiplier=Z, history=history, rank=rank,
        iterations=len(history), converged=converged, alpha=alpha, rate_violations=violations,
    )
