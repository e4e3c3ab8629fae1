"""White-noise simulation.

Random streams
--------------
Every draw comes from a :class:`numpy.random.Philox` (Philox4x64-10,
counter-based) generator keyed by a 64-bit seed. Substreams for a cell and a
run index are addressed by folding the identifiers into the master seed with
the SplitMix64 finalizer::

    state = master
    for ident in idents:
        state = splitmix64(state ^ splitmix64(ident + 0x9E3779B97F4A7C15))

String identifiers are first hashed to 64 bits with BLAKE2b. Results are
bit-reproducible within this implementation; no cross-language guarantee.

Marginal laws (all with mean 0 and variance 1)
----------------------------------------------
``gaussian``     polar Box-Muller on pairs of uniforms in (-1, 1).
``pareto``       generalized Pareto with shape 1/3, inverse-CDF sampling.
``three-point``  0 with probability 1/2 and +-sqrt(2) with probability 1/4 each.
"""

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from hdreg.errors import InvalidInputError

MASK64 = (1 << 64) - 1
GOLDEN64 = 0x9E3779B97F4A7C15

LAWS = ("gaussian", "pareto", "three-point")
BASES = ("spectral", "coordinate")

PARETO_SHAPE = 1.0 / 3.0
PARETO_SCALE = (1.0 - PARETO_SHAPE) * math.sqrt(1.0 - 2.0 * PARETO_SHAPE)
PARETO_SHIFT = -PARETO_SCALE / (1.0 - PARETO_SHAPE)


def splitmix64(x):
    z = (x + GOLDEN64) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def ident64(ident):
    if isinstance(ident, str):
        return int.from_bytes(hashlib.blake2b(ident.encode(), digest_size=8).digest(), "little")
    return int(ident) & MASK64


def mix(master_seed, *idents):
    """Deterministic 64-bit substream seed for ``(master_seed, *idents)``."""
    state = int(master_seed) & MASK64
    for ident in idents:
        state = splitmix64(state ^ splitmix64((ident64(ident) + GOLDEN64) & MASK64))
    return state


def make_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(key=int(seed) & MASK64))


def _polar_normals(rng, n):
    out = np.empty(n)
    filled = 0
    while filled < n:
        need = n - filled
        # acceptance rate is pi/4; oversample a little to usually finish in one pass
        pairs = int(need * 0.66) + 16
        u = 2.0 * rng.random((pairs, 2)) - 1.0
        s = u[:, 0] ** 2 + u[:, 1] ** 2
        ok = (s > 0.0) & (s < 1.0)
        u, s = u[ok], s[ok]
        z = (u * np.sqrt(-2.0 * np.log(s) / s)[:, None]).ravel()
        take = min(need, z.size)
        out[filled:filled + take] = z[:take]
        filled += take
    return out


def _pareto(rng, n):
    U = rng.random(n)
    k = PARETO_SHAPE
    return PARETO_SHIFT + PARETO_SCALE * ((1.0 - U) ** -k - 1.0) / k


def _three_point(rng, n):
    U = rng.random(n)
    r2 = math.sqrt(2.0)
    return np.where(U < 0.5, 0.0, np.where(U < 0.75, r2, -r2))


_SAMPLERS = {"gaussian": _polar_normals, "pareto": _pareto, "three-point": _three_point}


def sample_marginals(law, n, seed):
    """``n`` i.i.d. standardized draws of ``law`` from the stream ``seed``.

    ``seed`` may be an integer key or an existing Generator (which is advanced).
    """
    if int(n) != n or n < 1:
        raise InvalidInputError(f"sample size must be a positive integer, got {n}")
    if law not in _SAMPLERS:
        raise InvalidInputError(f"unknown noise law {law!r}; choose from {LAWS}")
    return _SAMPLERS[law](make_rng(seed), int(n))


def pareto_moments(k=PARETO_SHAPE, scale=PARETO_SCALE, shift=PARETO_SHIFT):
    """Closed-form (mean, variance) of the shifted generalized Pareto law, k < 1/2."""
    mean = shift + scale / (1.0 - k)
    var = scale ** 2 / ((1.0 - k) ** 2 * (1.0 - 2.0 * k))
    return mean, var


def delta_from_snr(y_true_norm, D, snr):
    """Noise level with ``snr = ||y|| / sqrt(D * delta**2)``."""
    if y_true_norm <= 0 or D <= 0 or snr <= 0:
        raise InvalidInputError("norm, dimension and SNR must all be positive")
    return y_true_norm / (snr * math.sqrt(D))


def snr_from_delta(y_true_norm, D, delta):
    if y_true_norm <= 0 or D <= 0 or delta <= 0:
        raise InvalidInputError("norm, dimension and delta must all be positive")
    return y_true_norm / math.sqrt(D * delta ** 2)


@dataclass(frozen=True)
class NoiseSpec:
    law: str = "gaussian"
    basis: str = "spectral"
    seed: int = 0

    def __post_init__(self):
        if self.law not in LAWS:
            raise InvalidInputError(f"unknown noise law {self.law!r}")
        if self.basis not in BASES:
            raise InvalidInputError(f"unknown noise basis {self.basis!r}")


@dataclass(frozen=True, eq=False)
class SpectralObservation:
    """Noisy coefficients ``b_j = (y_delta, u_j)``.

    ``true_delta`` is kept for evaluation and for the non-heuristic
    discrepancy principle only.
    """

    coeffs: np.ndarray
    true_delta: float
    problem_ref: str = ""

    @property
    def dim(self):
        return self.coeffs.shape[0]


def observe(problem, delta, spec=NoiseSpec()):
    """Noisy spectral data for ``problem`` at noise level ``delta``.

    With the spectral basis the coefficients are perturbed directly; with the
    coordinate basis the noise is added to ``y_true`` and then projected.
    """
    if delta < 0:
        raise InvalidInputError("delta must be nonnegative")
    D = problem.dim
    if delta == 0:
        return SpectralObservation(np.array(problem.y_true_spectral, dtype=float), 0.0, problem.name)
    xi = sample_marginals(spec.law, D, spec.seed)
    if spec.basis == "spectral":
        b = problem.y_true_spectral + delta * xi
    else:
        b = problem.system.u_basis.T @ (problem.y_true + delta * xi)
    return SpectralObservation(b, float(delta), problem.name)


def adversarial_observation(m_delta, delta, sigmas):
    """Data vanishing everywhere except ``b_{m_delta - 1} = sqrt(2) * delta`` (1-based).

    This is the configuration on which the heuristic rule truncates too late
    for ``sigma_j**2 = exp(-j)`` and a zero solution.
    """
    D = len(sigmas)
    if m_delta < 2:
        raise InvalidInputError("m_delta must be at least 2")
    if D < 2 * m_delta:
        raise InvalidInputError(f"need at least {2 * m_delta} singular values, got {D}")
    b = np.zeros(D)
    b[m_delta - 2] = math.sqrt(2.0) * delta
    return SpectralObservation(b, float(delta), "adversarial")
