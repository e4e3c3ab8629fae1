"""Discretized Fredholm test problems and the diagonal sequence model.

All four integral-equation problems use midpoint collocation on D points:
``K[i, j] = h * k(s_i, t_j)`` and ``x_true[j] = x(t_j)``. Exact data is always
formed as ``K @ x_true`` so that it lies in the range of the matrix.
"""

import hashlib
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from hdreg import linalg
from hdreg.errors import InvalidInputError

PROBLEMS = ("phillips", "gravity", "heat", "deriv2")

# Human-readable kernel descriptions; hashed into report metadata.
FORMULAS = {
    "deriv2": "interval [0,1]; k(s,t)=s*(t-1) if s<t else t*(s-1); x(t)=t",
    "phillips": "interval [-6,6]; phi(u)=1+cos(pi*u/3) if |u|<3 else 0; "
                "k(s,t)=phi(s-t); x(t)=phi(t)",
    "gravity": "interval [0,1]; k(s,t)=d*(d^2+(s-t)^2)^(-3/2), d=0.25; "
               "x(t)=sin(pi*t)+0.5*sin(2*pi*t)",
    "heat": "Volterra on [0,1]; s_i=i*h, t_j=(j-1/2)*h; "
            "k(u)=u^(-3/2)/(2*sqrt(pi))*exp(-1/(4u)) for j<=i; "
            "x(t)=r(20t) for t<=1/2 else 0 with r(u)=0.75u^2/4 (u<2), "
            "0.75+(u-2)(3-u) (u<3), 0.75exp(-2(u-3)) otherwise",
}


def formula_fingerprint(name):
    return hashlib.sha256(FORMULAS[name].encode()).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class InverseProblem:
    name: str
    dim: int
    forward: np.ndarray
    x_true: np.ndarray
    y_true: np.ndarray
    system: linalg.SingularSystem
    x_true_spectral: np.ndarray
    y_true_spectral: np.ndarray

    @property
    def sigmas(self):
        return self.system.sigmas


@dataclass(frozen=True, eq=False)
class SequenceModel:
    """Diagonal model with ``sigma_j**2 = j**-q`` and ``(x, v_j) = j**(-eta/2) * X_j``."""

    dim: int
    q: float
    eta: float
    x_mode: str
    sigmas: np.ndarray
    x_coeffs: np.ndarray

    @property
    def y_coeffs(self):
        return self.sigmas * self.x_coeffs


def _midpoints(a, b, D):
    h = (b - a) / D
    return h, a + (np.arange(D) + 0.5) * h


def _phillips_phi(u):
    return np.where(np.abs(u) < 3.0, 1.0 + np.cos(np.pi * u / 3.0), 0.0)


def _deriv2(D):
    h, t = _midpoints(0.0, 1.0, D)
    s = t[:, None]
    tt = t[None, :]
    K = h * np.where(s < tt, s * (tt - 1.0), tt * (s - 1.0))
    return K, t.copy()


def _phillips(D):
    h, t = _midpoints(-6.0, 6.0, D)
    K = h * _phillips_phi(t[:, None] - t[None, :])
    return K, _phillips_phi(t)


def _gravity(D, depth=0.25):
    h, t = _midpoints(0.0, 1.0, D)
    diff = t[:, None] - t[None, :]
    K = h * depth * (depth ** 2 + diff ** 2) ** -1.5
    x = np.sin(np.pi * t) + 0.5 * np.sin(2.0 * np.pi * t)
    return K, x


def _heat(D):
    h, t = _midpoints(0.0, 1.0, D)
    s = np.arange(1, D + 1) * h
    u = s[:, None] - t[None, :]
    lower = u > 0
    uu = np.where(lower, u, 1.0)
    with np.errstate(under="ignore"):
        kern = uu ** -1.5 / (2.0 * np.sqrt(np.pi)) * np.exp(-1.0 / (4.0 * uu))
    K = h * np.where(lower, kern, 0.0)
    return K, _heat_profile(t)


def _heat_profile(t):
    # ramp, plateau and exponential decay on [0, 1/2]; zero afterwards
    u = 20.0 * t
    x = np.where(u < 2.0, 0.75 * u ** 2 / 4.0,
                 np.where(u < 3.0, 0.75 + (u - 2.0) * (3.0 - u), 0.75 * np.exp(-2.0 * (u - 3.0))))
    return np.where(t <= 0.5, x, 0.0)


_BUILDERS = {"deriv2": _deriv2, "phillips": _phillips, "gravity": _gravity, "heat": _heat}


def discretize(name, D):
    """Forward matrix and true solution without the SVD."""
    if name not in _BUILDERS:
        raise InvalidInputError(f"unknown problem {name!r}; choose from {PROBLEMS}")
    if int(D) != D or D < 8 or D % 2:
        raise InvalidInputError(f"dimension must be an even integer >= 8, got {D}")
    return _BUILDERS[name](int(D))


@lru_cache(maxsize=16)
def generate(name, D):
    """Fully populated :class:`InverseProblem`; cached since it is deterministic."""
    K, x = discretize(name, D)
    y = K @ x
    system = linalg.svd(K)
    for arr in (K, x, y, system.u_basis, system.v_basis, system.sigmas):
        arr.setflags(write=False)
    x_spec = linalg.project_onto_columns(system.v_basis, x)
    y_spec = linalg.project_onto_columns(system.u_basis, y)
    x_spec.setflags(write=False)
    y_spec.setflags(write=False)
    return InverseProblem(name, int(D), K, x, y, system, x_spec, y_spec)


def generate_sequence(D, q, eta, x_mode="deterministic-one", seed=0):
    from hdreg.noise import sample_marginals

    if D < 2:
        raise InvalidInputError("sequence model needs D >= 2")
    if q <= 0:
        raise InvalidInputError("ill-posedness exponent q must be positive")
    if eta <= 1:
        raise InvalidInputError("smoothness exponent eta must exceed 1")
    j = np.arange(1, D + 1, dtype=float)
    sigmas = j ** (-q / 2.0)
    if x_mode == "deterministic-one":
        X = np.ones(D)
    elif x_mode == "gaussian":
        X = sample_marginals("gaussian", D, seed)
    else:
        raise InvalidInputError(f"unknown x_mode {x_mode!r}")
    return SequenceModel(int(D), float(q), float(eta), x_mode, sigmas, j ** (-eta / 2.0) * X)
