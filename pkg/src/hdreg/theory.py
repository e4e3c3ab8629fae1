"""Numerical checks of the probabilistic guarantees behind the heuristic rule.

* closed-form constants of the oracle inequality in the polynomial sequence model,
* Monte-Carlo frequencies for the two chi-square type concentration bounds,
* the deterministic construction showing the rule has unbounded mean squared error,
* a rate study of the rule against the oracle in the sequence model.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from hdreg import noise, rules
from hdreg.errors import InvalidInputError
from hdreg.estimator import absolute_error, squared_error_profile
from hdreg.problems import generate_sequence

_BATCH_ENTRIES = 1 << 22


@dataclass(frozen=True)
class RateConstants:
    q: float
    eta: float
    epsilon: float
    epsilon_prime: float
    c_small: float
    C_menu: float
    C_final: float
    p_final: float
    rate_exponent: float
    probability_exponent: float

    def to_dict(self):
        return asdict(self)


def compute_constants(q, eta, epsilon=0.25):
    """Constants of the oracle inequality ``err_HD <= C_final * min_k err_k``.

    The inequality holds with probability at least
    ``1 - 4 exp(-p_final * delta**probability_exponent)``; ``epsilon`` < 1/3 is
    the concentration slack (fixed to 1/4 by default).
    """
    if q <= 0:
        raise InvalidInputError("q must be positive")
    if eta <= 1:
        raise InvalidInputError("eta must exceed 1")
    if not 0 < epsilon < 1.0 / 3.0:
        raise InvalidInputError("epsilon must lie in (0, 1/3)")
    eps_p = 1.0 - math.sqrt(1.0 - 3.0 * epsilon)
    ratio = (1.0 + eps_p) / (1.0 - eps_p)
    s = q + eta
    c_small = (2.0 ** (s / 2.0) * 3.0 * math.sqrt(2.0) * ratio) ** (2.0 / (1.0 - s))
    C_menu = max((2.0 * ratio) ** (2.0 / s), (4.0 * math.sqrt(3.0) * ratio) ** (2.0 / q))
    C_final = ((1.0 + eps_p)
               * (math.sqrt(C_menu ** (1.0 + q)) + c_small ** (-eta / 2.0) * math.sqrt(eta / (eta - 1.0)))
               * math.sqrt(max(1.0, (eta - 1.0) * 4.0 ** (eta - 1.0))))
    p_final = c_small * (epsilon - math.log(1.0 + epsilon)) / 2.0
    return RateConstants(
        q=float(q), eta=float(eta), epsilon=float(epsilon), epsilon_prime=eps_p,
        c_small=c_small, C_menu=C_menu, C_final=C_final, p_final=p_final,
        rate_exponent=(eta - 1.0) / (eta + q),
        probability_exponent=2.0 * (1.0 - eta) / ((s - 1.0) * s),
    )


def chi_square_tail_bound(M, epsilon):
    """``2 exp(-(M/2) (eps - log(1 + eps)))``."""
    return 2.0 * math.exp(-(M / 2.0) * (epsilon - math.log1p(epsilon)))


def chi_square_sup_tail(M, epsilon, trials, m_max, seed):
    """Frequency of ``sup_{M <= m <= m_max} |mean_m(X^2 - 1)| >= epsilon`` and its bound.

    The supremum is truncated at ``m_max``, which can only lower the
    empirical frequency, so comparing it with the bound stays one-sided safe.
    """
    if M < 1 or m_max < 10 * M:
        raise InvalidInputError("need M >= 1 and m_max >= 10 * M")
    if trials < 1000:
        raise InvalidInputError("need at least 1000 trials")
    batch = max(1, _BATCH_ENTRIES // m_max)
    m = np.arange(1, m_max + 1, dtype=float)
    hits = 0
    for b, lo in enumerate(range(0, trials, batch)):
        n = min(batch, trials - lo)
        X = noise.sample_marginals("gaussian", n * m_max, noise.mix(seed, "chi2", b)).reshape(n, m_max)
        avg = np.cumsum(X * X - 1.0, axis=1) / m
        sup = np.max(np.abs(avg[:, M - 1:]), axis=1)
        hits += int(np.count_nonzero(sup >= epsilon))
    return hits / trials, chi_square_tail_bound(M, epsilon)


def _draw(law, shape, rng):
    if callable(law):
        return np.asarray(law(shape, rng), dtype=float).reshape(shape)
    return noise.sample_marginals(law, int(np.prod(shape)), rng).reshape(shape)


def residual_concentration(kappa, epsilon_prime, law, trials, D, seed):
    """Frequency of the simultaneous residual event up to ``m = D``.

    The event is ``|sum_{j=k+1}^m xi_j^2 - (m-k)| <= epsilon_prime * (m-k)``
    for every ``kappa <= m <= D`` and ``0 <= k <= m/2``. ``law`` is a
    marginal name or a callable ``(shape, rng) -> array``.
    """
    kappa = int(kappa)
    if kappa < 1 or D < 4 * kappa:
        raise InvalidInputError("need kappa >= 1 and D >= 4 * kappa")
    if trials < 1:
        raise InvalidInputError("need at least one trial")
    batch = max(1, _BATCH_ENTRIES // D)
    held = 0
    for b, lo in enumerate(range(0, trials, batch)):
        n = min(batch, trials - lo)
        rng = noise.make_rng(noise.mix(seed, "residual", b))
        xi = _draw(law, (n, D), rng)
        S = np.zeros((n, D + 1))
        np.cumsum(xi * xi - 1.0, axis=1, out=S[:, 1:])
        alive = np.ones(n, dtype=bool)
        for m in range(kappa, D + 1):
            idx = np.nonzero(alive)[0]
            if idx.size == 0:
                break
            k = np.arange(m // 2 + 1)
            dev = np.abs(S[idx, m][:, None] - S[np.ix_(idx, k)])
            ok = np.all(dev <= epsilon_prime * (m - k), axis=1)
            alive[idx[~ok]] = False
        held += int(np.count_nonzero(alive))
    return held / trials


def divergence_level(delta):
    """``ceil(-3 log(delta) / (1 - log 2)) + 1``."""
    return math.ceil(-3.0 * math.log(delta) / (1.0 - math.log(2.0))) + 1


def _log_error(b, log_sigma_sq, k):
    """``log ||x_k||`` for zero truth, summing ``b_j^2 / sigma_j^2`` in the log domain."""
    terms = [2.0 * math.log(abs(b[j])) - log_sigma_sq[j] for j in range(k) if b[j] != 0.0]
    if not terms:
        return -math.inf
    top = max(terms)
    return float(0.5 * (top + math.log(math.fsum(math.exp(t - top) for t in terms))))


def counterexample_check(delta):
    """Run the adversarial construction with ``sigma_j^2 = e^{-j}`` and zero truth."""
    if not 0 < delta < 1:
        raise InvalidInputError("delta must lie in (0, 1)")
    m = divergence_level(delta)
    D = 2 * m
    j = np.arange(1, D + 1, dtype=float)
    log_sigma_sq = -j
    sigmas = np.exp(-j / 2.0)
    obs = noise.adversarial_observation(m, delta, sigmas)
    b = obs.coeffs

    # the analytic spectrum is exactly positive, so no rank truncation
    psi_at_m = rules.psi(m, D, b, sigmas, rank=D)
    k_at_2m = rules.hd_for_m(D, b, sigmas, rank=D)
    k_hd = rules.hd(b, sigmas, rank=D).k_selected
    log_error = _log_error(b, log_sigma_sq, k_hd)
    log_error_bound = math.log(math.sqrt(2.0) * delta) + (m - 1) / 2.0
    log_mise_lower = math.log(delta ** 2 / 4.0) + (m - 1) * (1.0 - math.log(2.0))
    log_mise_target = -math.log(4.0 * delta)
    checks = {
        "psi_vanishes_at_m_delta": bool(psi_at_m == 0.0),
        "k_hd_at_2m_equals_m_delta": bool(k_at_2m == m),
        "k_hd_at_least_m_delta": bool(k_hd >= m),
        "error_above_bound": bool(log_error >= log_error_bound),
        "mise_lower_bound_exceeds_target": bool(log_mise_lower >= log_mise_target),
    }
    report = {
        "delta": delta,
        "m_delta": m,
        "dim": D,
        "psi_2m_at_m_delta": psi_at_m,
        "k_hd_at_2m": k_at_2m,
        "k_hd": k_hd,
        "log_error": log_error,
        "log_error_bound": log_error_bound,
        "log_event_probability": (m + 2) * math.log(0.5),
        "log_mise_lower_bound": log_mise_lower,
        "log_mise_target": log_mise_target,
        "checks": checks,
        "passed": all(checks.values()),
    }
    if log_error < 700:
        report["error"] = absolute_error(k_hd, b, sigmas, np.zeros(D))
    return report


def rate_dimension(delta, q, eta):
    """``(k_delta, D)`` with ``k_delta = ceil(delta^{-2/(q+eta)})`` and ``D = min(1e5, 32 k_delta)``."""
    k_delta = math.ceil(delta ** (-2.0 / (q + eta)))
    return k_delta, min(100_000, 32 * k_delta)


def bayes_rate_study(q, eta, x_mode, delta_grid, runs, seed):
    """Heuristic rule against the oracle in the sequence model under Gaussian noise.

    Returns per-delta mean errors, the frequency of the oracle inequality
    with the theoretical constant, and the fitted log-log slope of the mean
    heuristic error against delta.
    """
    deltas = [float(d) for d in delta_grid]
    if len(deltas) < 3:
        raise InvalidInputError("need at least three noise levels")
    if any(a <= b for a, b in zip(deltas, deltas[1:])):
        raise InvalidInputError("noise levels must be strictly descending")
    if any(not 0 < d <= 1 for d in deltas):
        raise InvalidInputError("noise levels must lie in (0, 1]")
    consts = compute_constants(q, eta)
    rows = []
    for i, delta in enumerate(deltas):
        k_delta, D = rate_dimension(delta, q, eta)
        if D < 4 * k_delta:
            raise InvalidInputError(f"delta={delta} too small for D <= 1e5")
        err_hd, err_opt, k_hd = [], [], []
        fixed = generate_sequence(D, q, eta, x_mode, seed) if x_mode == "deterministic-one" else None
        for r in range(runs):
            model = fixed or generate_sequence(D, q, eta, x_mode, noise.mix(seed, "x", i, r))
            xi = noise.sample_marginals("gaussian", D, noise.mix(seed, "noise", i, r))
            b = model.y_coeffs + delta * xi
            profile = squared_error_profile(b, model.sigmas, model.x_coeffs)
            k = rules.hd(b, model.sigmas, rank=D).k_selected
            err_hd.append(math.sqrt(profile[k]))
            err_opt.append(math.sqrt(profile.min()))
            k_hd.append(k)
        err_hd = np.array(err_hd)
        err_opt = np.array(err_opt)
        rows.append({
            "delta": delta,
            "k_delta": k_delta,
            "dim": D,
            "mean_err_hd": float(err_hd.mean()),
            "mean_err_opt": float(err_opt.mean()),
            "mean_k_hd": float(np.mean(k_hd)),
            "oracle_inequality_freq": float(np.mean(err_hd <= consts.C_final * err_opt)),
            "probability_bound": 1.0 - 4.0 * math.exp(
                -consts.p_final * delta ** consts.probability_exponent),
        })
    slope, _ = np.polyfit(np.log(deltas), np.log([row["mean_err_hd"] for row in rows]), 1)
    return {
        "q": float(q),
        "eta": float(eta),
        "x_mode": x_mode,
        "runs": int(runs),
        "seed": int(seed),
        "constants": consts.to_dict(),
        "rate_exponent": consts.rate_exponent,
        "fitted_slope": float(slope),
        "rows": rows,
    }
