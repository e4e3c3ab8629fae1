"""Spectral cut-off reconstruction and its error functionals.

Errors are evaluated in the v-basis, where for a truncation level k

    ||x_k - x||^2 = sum_{j<=k} (b_j/sigma_j - x_j)^2 + sum_{j>k} x_j^2

(data propagation plus approximation term). Since V is orthogonal this equals
the coordinate-space error.
"""

from dataclasses import dataclass

import numpy as np

from hdreg.errors import InvalidInputError


@dataclass(frozen=True, eq=False)
class Reconstruction:
    k: int
    x_spectral: np.ndarray
    v_basis: np.ndarray = None

    @property
    def x_coords(self):
        if self.v_basis is None:
            raise InvalidInputError("no v-basis attached; coordinates unavailable")
        return self.v_basis @ self.x_spectral


def spectral_truth(problem):
    """``(sigmas, x_spectral, rank)`` for an InverseProblem or a SequenceModel."""
    system = getattr(problem, "system", None)
    if system is not None:
        return system.sigmas, problem.x_true_spectral, system.numerical_rank
    return problem.sigmas, problem.x_coeffs, problem.dim


def _coeffs(obs):
    return np.asarray(getattr(obs, "coeffs", obs), dtype=float)


def cutoff_estimate(k, obs, system):
    """Spectral cut-off solution keeping the first ``k`` components."""
    b = _coeffs(obs)
    sigmas = system.sigmas
    if b.shape != sigmas.shape:
        raise InvalidInputError("observation and singular system sizes differ")
    if int(k) != k or k < 0 or k > system.numerical_rank:
        raise InvalidInputError(
            f"truncation level {k} outside [0, {system.numerical_rank}]")
    k = int(k)
    x = np.zeros_like(b)
    x[:k] = b[:k] / sigmas[:k]
    return Reconstruction(k, x, getattr(system, "v_basis", None))


def error_terms(k, obs, sigmas, x_spectral):
    """Squared (propagation, approximation) error terms at truncation level ``k``.

    Works for any ``0 <= k <= D``; a vanishing singular value inside the kept
    range gives an infinite propagation term.
    """
    b = _coeffs(obs)
    sigmas = np.asarray(sigmas, dtype=float)
    x = np.asarray(x_spectral, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        r = b[:k] / sigmas[:k] - x[:k]
        prop = float(np.sum(r * r)) if k else 0.0
    if not np.isfinite(prop):
        prop = np.inf
    approx = float(np.sum(x[k:] ** 2))
    return prop, approx


def squared_error_profile(obs, sigmas, x_spectral, kmax=None):
    """``E[k] = ||x_k - x||^2`` for ``k = 0..kmax`` in O(D)."""
    b = _coeffs(obs)
    sigmas = np.asarray(sigmas, dtype=float)
    x = np.asarray(x_spectral, dtype=float)
    D = b.shape[0]
    kmax = D if kmax is None else int(kmax)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        r = b[:kmax] / sigmas[:kmax] - x[:kmax]
        prop = np.concatenate(([0.0], np.cumsum(r * r)))
    prop[~np.isfinite(prop)] = np.inf
    tail = np.concatenate((np.cumsum((x ** 2)[::-1])[::-1], [0.0]))
    return prop + tail[:kmax + 1]


def absolute_error(k, obs, sigmas, x_spectral):
    prop, approx = error_terms(k, obs, sigmas, x_spectral)
    return float(np.sqrt(prop + approx))


def relative_error_at(k, obs, sigmas, x_spectral):
    x = np.asarray(x_spectral, dtype=float)
    norm = float(np.sqrt(np.sum(x ** 2)))
    if norm == 0:
        raise InvalidInputError("true solution is zero; use absolute_error instead")
    return absolute_error(k, obs, sigmas, x) / norm


def relative_error(rec, problem):
    """``||x_k - x|| / ||x||`` for a reconstruction of ``problem``."""
    sigmas, x_spec, _ = spectral_truth(problem)
    x_spec = np.asarray(x_spec, dtype=float)
    norm = float(np.sqrt(np.sum(x_spec ** 2)))
    if norm == 0:
        raise InvalidInputError("true solution is zero; use absolute_error instead")
    diff = rec.x_spectral - x_spec
    return float(np.sqrt(np.sum(diff ** 2))) / norm
