"""Downlink SVD beamforming, zero-forcing precoding and water-filling.

Everything here is computed at the eNB from the reciprocal channel, except
:func:`ue_postprocess` and :func:`ue_equalize` which run at each UE.
"""

from dataclasses import dataclass

import numpy as np

from .dspcore import RANK_TOL, pseudo_inverse
from .errors import AllocationError, DegenerateChannelError, DimensionError, SingularityError

BISECTION_TOL = 1e-12
BISECTION_MAX_ITER = 200


@dataclass(frozen=True)
class BeamformerSet:
    """Per-subcarrier SVD factors of every user's channel row.

    Shapes: ``u`` and ``sigma`` are ``(..., K)``; ``v`` is ``(..., N_e, K)``
    with one unit-norm beam direction per column.
    """

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray


@dataclass(frozen=True)
class PowerAllocation:
    alpha_sq: np.ndarray
    water_level: np.ndarray

    @property
    def alpha(self):
        return np.sqrt(self.alpha_sq)


def svd_beamformers(rows):
    """Row SVD of every user's channel, vectorized.

    `rows` has shape ``(..., K, N_e)``: row ``l`` is user l's 1 x N_e channel
    on that subcarrier.  ``rows[..., l, :] == u * sigma * v[..., :, l].conj()``
    with ``u = 1``.
    """
    rows = np.asarray(rows, dtype=complex)
    sigma = np.linalg.norm(rows, axis=-1)
    if np.any(sigma == 0):
        raise DegenerateChannelError("a user has an all-zero channel row on some subcarrier")
    v = np.swapaxes(rows.conj() / sigma[..., None], -1, -2)
    return BeamformerSet(np.ones_like(sigma, dtype=complex), sigma, v)


def zf_directions(v, rank_tol=RANK_TOL):
    """Unit-power zero-forcing columns ``[(V^H)^+]``, shape ``(..., N_e, K)``."""
    return pseudo_inverse(np.conj(np.swapaxes(v, -1, -2)), rank_tol)


def zf_precoder(v, alpha, rank_tol=RANK_TOL):
    """``P = (V^H)^+ diag(alpha)`` so that ``V^H P == diag(alpha)``."""
    alpha = np.asarray(alpha, dtype=float)
    return zf_directions(v, rank_tol) * alpha[..., None, :]


def waterfill(sigmas, n0, budget, col_norm_sq=None, tol=BISECTION_TOL, max_iter=BISECTION_MAX_ITER):
    """Water-filling over one user's subcarriers by bisection on the level.

    Finds ``v`` with ``alpha_sq = max(0, v - n0 / sigma**2)`` and
    ``sum(alpha_sq * col_norm_sq) == budget``.  Zero-gain subcarriers get
    nothing.  Leading axes of `sigmas` are independent problems; `n0` and
    `budget` broadcast against them.
    """
    sigmas = np.asarray(sigmas, dtype=float)
    if np.any(sigmas < 0):
        raise ValueError("gains must be nonnegative")
    weights = np.ones_like(sigmas) if col_norm_sq is None else np.broadcast_to(col_norm_sq, sigmas.shape)
    n0 = np.asarray(n0, dtype=float)[..., None]
    budget = np.asarray(budget, dtype=float)[..., None]
    if np.any(budget <= 0):
        raise ValueError("power budget must be positive")
    active = sigmas > 0
    if np.any(~np.any(active, axis=-1)):
        raise AllocationError("every subcarrier gain is zero")
    with np.errstate(divide="ignore"):
        floor = np.where(active, n0 / np.where(active, sigmas, 1.0) ** 2, np.inf)

    def spent(level):
        return np.sum(np.maximum(0.0, level - floor) * weights, axis=-1, keepdims=True)

    finite = np.where(active, floor, 0.0)
    lo = np.zeros(budget.shape)
    hi = np.max(finite, axis=-1, keepdims=True) + budget / np.min(
        np.where(active, weights, np.inf), axis=-1, keepdims=True
    )
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        over = spent(mid) > budget
        hi = np.where(over, mid, hi)
        lo = np.where(over, lo, mid)
        if np.all(hi - lo <= tol):
            break
    level = 0.5 * (lo + hi)
    alpha_sq = np.maximum(0.0, level - floor)
    # the final bracket is ~1e-12 wide; rescale so the budget holds to rounding
    alpha_sq *= budget / spent(level)
    return PowerAllocation(alpha_sq, level[..., 0])


def per_subcarrier_clamp(sigmas, col_norm_sq):
    """Per-subcarrier reading of the power constraint: spend exactly one unit
    on every subcarrier with a usable channel.  Degenerate alternative to
    :func:`waterfill`."""
    sigmas = np.asarray(sigmas, dtype=float)
    alpha_sq = np.where(sigmas > 0, 1.0 / np.asarray(col_norm_sq, dtype=float), 0.0)
    return PowerAllocation(alpha_sq, np.full(sigmas.shape[:-1], np.nan))


def ue_postprocess(y_tilde, u):
    """Remove the left singular factor: ``u^H * y``."""
    return np.conj(u) * y_tilde


def ue_equalize(y_hat, sigma_eff, n0):
    """Diagonal frequency-domain MMSE: ``s y / (s**2 + n0)`` per subcarrier."""
    y_hat = np.asarray(y_hat, dtype=complex)
    sigma_eff = np.asarray(sigma_eff, dtype=float)
    if y_hat.shape[-1] != sigma_eff.shape[-1]:
        raise DimensionError("one effective gain per subcarrier is required")
    if np.any(sigma_eff < 0):
        raise ValueError("effective gains must be nonnegative")
    denom = sigma_eff**2 + np.asarray(n0, dtype=float)
    if np.any(denom == 0):
        raise SingularityError("zero gain with zero noise leaves the equalizer undefined")
    return sigma_eff * y_hat / denom
