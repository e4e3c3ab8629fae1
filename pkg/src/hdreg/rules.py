"""Truncation-level selection rules for spectral cut-off.

Indices are 1-based throughout, matching ``b_1, ..., b_D``.

hd       heuristic discrepancy: for each m the smallest minimizer of
         ``psi_m(k) = sqrt(sum_{j=k}^{m} b_j^2) / sigma_k`` over ``k <= m/2``,
         then the maximum over ``m = 2..D``. Never sees the noise level.
dp       modified discrepancy principle: for each m the smallest ``k`` in
         ``0..m`` with ``sum_{j=k+1}^{m} b_j^2 <= tau * m * delta^2``, then the
         maximum over ``m = 1..D``.
oracle   smallest minimizer of the true error over ``k = 0..rank``.

Window sums come from extended-precision prefix sums of ``b_j^2``, which keeps
tail sums accurate when the leading coefficients dominate.
"""

from dataclasses import dataclass, field

import numpy as np

from hdreg.errors import ExcludedIndexError, InvalidInputError
from hdreg.estimator import _coeffs, spectral_truth, squared_error_profile
from hdreg.linalg import numerical_rank

_CHUNK = 1 << 20


@dataclass(frozen=True, eq=False)
class RuleOutcome:
    rule: str
    k_selected: int
    ms: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    ks: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    psi_at_selection: float = float("nan")

    @property
    def per_m_trace(self):
        return list(zip(self.ms.tolist(), self.ks.tolist()))


def _prefix_squares(b):
    P = np.zeros(b.shape[0] + 1, dtype=np.longdouble)
    np.cumsum(np.asarray(b, dtype=np.longdouble) ** 2, out=P[1:])
    return P


def _window(P, k, m):
    """``sum_{j=k}^{m} b_j^2`` as float64 (arrays broadcast)."""
    return (P[m] - P[k - 1]).astype(float)


def _resolve(obs, sigmas, rank):
    b = _coeffs(obs)
    sigmas = np.asarray(sigmas, dtype=float)
    if b.ndim != 1 or b.shape != sigmas.shape:
        raise InvalidInputError(
            f"coefficients {b.shape} and singular values {sigmas.shape} differ")
    if rank is None:
        rank = numerical_rank(sigmas)
    return b, sigmas, int(rank)


def psi(k, m, coeffs, sigmas, rank=None):
    """Discretised heuristic functional ``psi_m(k)``; both window ends inclusive."""
    b, sigmas, rank = _resolve(coeffs, sigmas, rank)
    D = b.shape[0]
    if not 1 <= m <= D:
        raise InvalidInputError(f"m={m} outside [1, {D}]")
    if not 1 <= k <= m:
        raise InvalidInputError(f"k={k} outside [1, m={m}]")
    if k > rank:
        raise ExcludedIndexError(f"sigma_{k} is below the numerical rank threshold")
    P = _prefix_squares(b)
    return float(np.sqrt(_window(P, k, m)) / sigmas[k - 1])


def _hd_argmins(P, sigmas, ms, rank):
    """Smallest minimizer of psi_m over the admissible k for each m in ``ms``."""
    ms = np.asarray(ms, dtype=int)
    kcap = min(int(ms.max()) // 2, rank)
    if kcap < 1:
        raise ExcludedIndexError("no admissible truncation level (numerical rank is zero)")
    k = np.arange(1, kcap + 1)
    sig = sigmas[:kcap]
    out = np.empty(ms.shape[0], dtype=int)
    vals = np.empty(ms.shape[0])
    step = max(1, _CHUNK // kcap)
    for lo in range(0, ms.shape[0], step):
        mm = ms[lo:lo + step]
        kc = min(kcap, int(mm.max()) // 2)
        w = (P[mm][:, None] - P[k[:kc] - 1][None, :]).astype(float)
        with np.errstate(invalid="ignore"):
            values = np.sqrt(w) / sig[:kc]
        values[k[None, :kc] > (mm // 2)[:, None]] = np.inf
        idx = np.argmin(values, axis=1)
        out[lo:lo + step] = idx + 1
        vals[lo:lo + step] = values[np.arange(mm.shape[0]), idx]
    return out, vals


def hd_for_m(m, obs, sigmas, rank=None):
    b, sigmas, rank = _resolve(obs, sigmas, rank)
    if not 2 <= m <= b.shape[0]:
        raise InvalidInputError(f"m={m} outside [2, {b.shape[0]}]")
    ks, _ = _hd_argmins(_prefix_squares(b), sigmas, [m], rank)
    return int(ks[0])


def hd(obs, sigmas, rank=None):
    """Heuristic discrepancy choice ``max_m argmin_{k <= m/2} psi_m(k)``.

    ``rank`` caps the candidate k; by default it is the numerical rank of
    ``sigmas``. Pass ``len(sigmas)`` for exactly known positive spectra.
    """
    b, sigmas, rank = _resolve(obs, sigmas, rank)
    D = b.shape[0]
    if D < 2:
        raise InvalidInputError("need at least two coefficients")
    ms = np.arange(2, D + 1)
    ks, vals = _hd_argmins(_prefix_squares(b), sigmas, ms, rank)
    best = int(np.argmax(ks))
    return RuleOutcome("hd", int(ks[best]), ms, ks, float(vals[best]))


def _dp_mins(P, ms, tau, delta):
    ms = np.asarray(ms, dtype=int)
    kk = np.arange(int(ms.max()) + 1)
    out = np.empty(ms.shape[0], dtype=int)
    step = max(1, _CHUNK // kk.shape[0])
    for lo in range(0, ms.shape[0], step):
        mm = ms[lo:lo + step]
        tail = (P[mm][:, None] - P[kk][None, :]).astype(float)
        ok = tail <= (tau * delta ** 2) * mm[:, None]
        # k = m always passes (empty sum), so the first hit lies in 0..m
        out[lo:lo + step] = np.argmax(ok, axis=1)
    return out


def _check_dp(tau, delta):
    if not tau > 1:
        raise InvalidInputError(f"fudge parameter tau must exceed 1, got {tau}")
    if not delta > 0:
        raise InvalidInputError(f"noise level must be positive, got {delta}")


def dp_for_m(m, obs, sigmas, tau, delta):
    b, _, _ = _resolve(obs, sigmas, None)
    _check_dp(tau, delta)
    if not 1 <= m <= b.shape[0]:
        raise InvalidInputError(f"m={m} outside [1, {b.shape[0]}]")
    return int(_dp_mins(_prefix_squares(b), [m], tau, delta)[0])


def dp(obs, sigmas, tau, delta):
    """Modified discrepancy principle ``max_m k_dp(m)``; needs the true noise level."""
    b, _, _ = _resolve(obs, sigmas, None)
    _check_dp(tau, delta)
    ms = np.arange(1, b.shape[0] + 1)
    ks = _dp_mins(_prefix_squares(b), ms, tau, delta)
    return RuleOutcome("dp", int(ks.max()), ms, ks)


def oracle(obs, problem):
    """Error-minimizing truncation level (requires the true solution)."""
    sigmas, x_spec, rank = spectral_truth(problem)
    b = _coeffs(obs)
    if b.shape != np.shape(x_spec):
        raise InvalidInputError("observation and problem dimensions differ")
    profile = squared_error_profile(b, sigmas, x_spec, kmax=rank)
    return RuleOutcome("oracle", int(np.argmin(profile)))


def stabilization_level(sigmas):
    """``min{k : sigma_k < sigma_1}`` (1-based); ``len + 1`` for a flat spectrum."""
    sigmas = np.asarray(sigmas, dtype=float)
    below = np.nonzero(sigmas < sigmas[0])[0]
    return int(below[0]) + 1 if below.size else sigmas.shape[0] + 1


def stabilization_diagnostic(obs, sigmas, m_grid, rank=None):
    """``[(m, hd_for_m(m)) for m in m_grid]``."""
    b, sigmas, rank = _resolve(obs, sigmas, rank)
    m_grid = [int(m) for m in m_grid]
    if any(not 2 <= m <= b.shape[0] for m in m_grid):
        raise InvalidInputError(f"grid must lie in [2, {b.shape[0]}]")
    ks, _ = _hd_argmins(_prefix_squares(b), sigmas, m_grid, rank)
    return list(zip(m_grid, ks.tolist()))
