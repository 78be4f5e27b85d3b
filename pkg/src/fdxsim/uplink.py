"""eNB multiuser detection: MMSE with successive interference cancellation.

Per subcarrier, users are detected strongest-first (largest channel-column
power), each with an MMSE filter that treats the still-undetected users as
coloured interference.  The estimate is subtracted and the next user is
processed; the last user is recovered by maximal ratio combining.

:func:`ssic_oo_detect` works on one subcarrier and mirrors the algorithm
step by step.  :func:`detect_block` is the vectorized equivalent used by the
simulation harness.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, SingularityError
from .scfdma import despread as despread_user  # noqa: F401  (M-point IDFT per user)


@dataclass(frozen=True)
class PerSubcarrierObservation:
    """Stacked received vector ``y`` (N_e,), user columns (N_e, K) and noise power."""

    y: np.ndarray
    columns: np.ndarray
    n0: float

    def __post_init__(self):
        y = np.asarray(self.y, dtype=complex).reshape(-1)
        cols = np.asarray(self.columns, dtype=complex)
        if cols.ndim == 1:
            cols = cols[:, None]
        if cols.shape[0] != y.size:
            raise DimensionError(f"{cols.shape[0]}-row channel columns for a {y.size}-antenna vector")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "columns", cols)

    @property
    def k(self):
        return self.columns.shape[1]


@dataclass(frozen=True)
class DetectionResult:
    estimates: np.ndarray
    order: tuple


def interference_covariance(obs, target, active):
    """``sum_{i in active, i != target} H_i H_i^H + n0 I``."""
    h = obs.columns
    others = [i for i in active if i != target]
    r = obs.n0 * np.eye(h.shape[0], dtype=complex)
    if others:
        r = r + h[:, others] @ h[:, others].conj().T
    return r


def _whitened_filter(h_l, others, n0):
    """``n0 R^{-1} h_l`` through the matrix inversion lemma.

    ``R = A A^H + n0 I`` with the interferer columns `A`.  Solving the small
    ``A^H A + n0 I`` system keeps full precision when `n0` is far below the
    interference power, where a direct solve with `R` loses digits.
    Leading axes broadcast.
    """
    a_h = np.conj(np.swapaxes(others, -1, -2))
    gram = a_h @ others + np.asarray(n0)[..., None, None] * np.eye(others.shape[-1])
    coef = np.linalg.solve(gram, (a_h @ h_l[..., None]))
    return h_l - (others @ coef)[..., 0]


def _mmse_filter(obs, target, active):
    if target not in active:
        raise ValueError(f"user {target} is not among the active users {sorted(active)}")
    if obs.n0 <= 0:
        raise SingularityError("noise power must be positive for MMSE detection")
    others = [i for i in active if i != target]
    h_l = obs.columns[:, target]
    if not others:
        return h_l / obs.n0
    # w with w^H = h^H R^{-1} (R is Hermitian)
    return _whitened_filter(h_l, obs.columns[:, others], obs.n0) / obs.n0


def mmse_estimate(obs, target, active):
    """Unscaled MMSE output ``H_t^H R^{-1} y`` for user `target`."""
    w = _mmse_filter(obs, target, active)
    return complex(np.vdot(w, obs.y))


def mmse_gain(obs, target, active):
    """Post-filter gain ``H_t^H R^{-1} H_t`` (real, nonnegative)."""
    w = _mmse_filter(obs, target, active)
    return float(np.real(np.vdot(w, obs.columns[:, target])))


def mrc_combine(y, h):
    y = np.asarray(y, dtype=complex)
    h = np.asarray(h, dtype=complex)
    if y.shape != h.shape:
        raise DimensionError(f"received vector {y.shape} and channel {h.shape} differ")
    return complex(np.vdot(h, y))


def ssic_oo_detect(obs, slicer=None):
    """Successive interference cancellation with optimal ordering on one subcarrier.

    Estimates carry the MMSE normalization ``1 / (1 + H^H R^{-1} H)``, which for
    the last user reduces to ``1 / (|H|^2 + n0)`` applied to the MRC output.
    By default the soft estimate is subtracted; pass `slicer` (a function
    mapping an estimate to a constellation point) for hard-decision
    cancellation.
    """
    k = obs.k
    power = np.sum(np.abs(obs.columns) ** 2, axis=0)
    y = obs.y.copy()
    active = list(range(k))
    estimates = np.zeros(k, dtype=complex)
    order = []
    while len(active) > 1:
        # ties go to the lowest index because max() keeps the first maximum
        l = max(active, key=lambda i: power[i])
        stage = PerSubcarrierObservation(y, obs.columns, obs.n0)
        d = mmse_estimate(stage, l, active) / (1.0 + mmse_gain(stage, l, active))
        estimates[l] = d
        order.append(l)
        y = y - obs.columns[:, l] * (slicer(d) if slicer else d)
        active.remove(l)
    (l,) = active
    estimates[l] = mrc_combine(y, obs.columns[:, l]) / (power[l] + obs.n0)
    order.append(l)
    return DetectionResult(estimates, tuple(order))


def detect_block(y, h, n0):
    """Vectorized soft SSIC-OO over arbitrary leading batch axes.

    Parameters
    ----------
    y : (..., N_e) complex
        Received vectors, one per subcarrier (and per any other batch axis).
    h : (..., N_e, K) complex
        Channel columns, broadcastable against `y`.
    n0 : float or array broadcastable to the batch shape

    Returns
    -------
    estimates : (..., K) complex
    bias : (..., K) real
        Gain of each estimate on its own symbol, ``g / (1 + g)``.
    order : (..., K) int
    """
    y = np.array(y, dtype=complex)
    h = np.asarray(h, dtype=complex)
    n_e, k = h.shape[-2:]
    batch = np.broadcast_shapes(y.shape[:-1], h.shape[:-2], np.shape(n0))
    y = np.broadcast_to(y, batch + (n_e,)).copy()
    h = np.broadcast_to(h, batch + (n_e, k))
    n0 = np.broadcast_to(np.asarray(n0, dtype=float), batch)
    if np.any(n0 <= 0):
        raise SingularityError("noise power must be positive for MMSE detection")

    power = np.sum(np.abs(h) ** 2, axis=-2)
    remaining = np.ones(batch + (k,), dtype=bool)
    estimates = np.zeros(batch + (k,), dtype=complex)
    bias = np.zeros(batch + (k,))
    order = np.zeros(batch + (k,), dtype=int)
    for stage in range(k):
        l = np.argmax(np.where(remaining, power, -np.inf), axis=-1)
        order[..., stage] = l
        np.put_along_axis(remaining, l[..., None], False, axis=-1)
        h_l = np.take_along_axis(h, l[..., None, None], axis=-1)[..., 0]
        if stage < k - 1:
            w = _whitened_filter(h_l, h * remaining[..., None, :], n0)  # n0 R^{-1} h_l
            gn = np.real(np.sum(np.conj(w) * h_l, axis=-1))  # n0 * g
            d = np.sum(np.conj(w) * y, axis=-1) / (n0 + gn)
            b = gn / (n0 + gn)
        else:
            p_l = np.take_along_axis(power, l[..., None], axis=-1)[..., 0]
            d = np.sum(np.conj(h_l) * y, axis=-1) / (p_l + n0)
            b = p_l / (p_l + n0)
        np.put_along_axis(estimates, l[..., None], d[..., None], axis=-1)
        np.put_along_axis(bias, l[..., None], b[..., None], axis=-1)
        y -= h_l * d[..., None]
    return estimates, bias, order
