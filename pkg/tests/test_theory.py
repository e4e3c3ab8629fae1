import math

import numpy as np
import pytest

from hdreg import theory
from hdreg.errors import InvalidInputError


def constants_by_logs(q, eta, eps=0.25):
    """Second evaluation of the same constants, built from logarithms."""
    ep = 1 - math.sqrt(1 - 3 * eps)
    lr = math.log1p(ep) - math.log1p(-ep)
    s = q + eta
    log_c = 2 / (1 - s) * (s / 2 * math.log(2) + math.log(3) + 0.5 * math.log(2) + lr)
    log_menu = max(2 / s * (math.log(2) + lr), 2 / q * (math.log(4) + 0.5 * math.log(3) + lr))
    first = math.exp((1 + q) / 2 * log_menu)
    second = math.exp(-eta / 2 * log_c + 0.5 * (math.log(eta) - math.log(eta - 1)))
    tail = math.exp(0.5 * max(0.0, math.log(eta - 1) + (eta - 1) * math.log(4)))
    C = math.exp(math.log1p(ep) + math.log(first + second) + math.log(tail))
    p = math.exp(log_c) * (eps - math.log1p(eps)) / 2
    return dict(epsilon_prime=ep, c_small=math.exp(log_c), C_menu=math.exp(log_menu), C_final=C, p_final=p)


@pytest.mark.parametrize("q,eta", [(2, 2), (1, 1.5), (3, 4), (0.5, 3)])
def test_constants_dual_evaluation(q, eta):
    c = theory.compute_constants(q, eta).to_dict()
    for key, value in constants_by_logs(q, eta).items():
        assert c[key] == pytest.approx(value, rel=1e-12), key


def test_constants_q2_eta2():
    c = theory.compute_constants(2, 2)
    assert c.epsilon_prime == 0.5
    assert c.rate_exponent == 0.25
    assert c.probability_exponent == pytest.approx(-1 / 6)
    # pinned from the independent log-domain evaluation above
    assert c.c_small == pytest.approx(0.0727983720613582, rel=1e-12)
    assert c.C_menu == pytest.approx(12 ** (2 / 2) * math.sqrt(3), rel=1e-12)
    assert 0 < c.c_small < 1 < c.C_final and c.p_final > 0


def test_c_small_increases_with_eta():
    # the exponent 2/(1-q-eta) shrinks in magnitude faster than the base grows
    for q in (0.5, 1, 2, 4):
        vals = [theory.compute_constants(q, eta).c_small for eta in np.linspace(1.1, 8, 30)]
        assert np.all(np.diff(vals) > 0)


@pytest.mark.parametrize("q,eta,eps", [(0, 2, 0.25), (2, 1, 0.25), (2, 2, 0.4)])
def test_constants_preconditions(q, eta, eps):
    with pytest.raises(InvalidInputError):
        theory.compute_constants(q, eta, eps)


def test_chi_square_bound_arithmetic():
    assert theory.chi_square_tail_bound(2, 1.0) == pytest.approx(2 * math.exp(-(1 - math.log(2))), rel=1e-15)


def test_chi_square_impossible_event():
    freq, bound = theory.chi_square_sup_tail(5, 1e9, 1000, 50, 1)
    assert freq == 0.0 and bound == 0.0


def test_chi_square_small_case():
    freq, bound = theory.chi_square_sup_tail(50, 0.5, 1000, 500, 2)
    assert freq <= bound


def test_chi_square_preconditions():
    with pytest.raises(InvalidInputError):
        theory.chi_square_sup_tail(50, 0.5, 1000, 100, 1)
    with pytest.raises(InvalidInputError):
        theory.chi_square_sup_tail(50, 0.5, 999, 500, 1)


def test_residual_degenerate_and_loose():
    ones = lambda shape, rng: np.ones(shape)
    assert theory.residual_concentration(4, 1e-9, ones, 50, 64, 0) == 1.0
    assert theory.residual_concentration(4, 64.0, "gaussian", 50, 64, 0) == 1.0
    with pytest.raises(InvalidInputError):
        theory.residual_concentration(32, 0.5, "gaussian", 10, 64, 0)


def test_residual_brute_force():
    # direct triple loop on a tiny instance with the same random stream
    from hdreg import noise

    kappa, eps, D, trials = 2, 0.9, 12, 40
    rng = noise.make_rng(noise.mix(3, "residual", 0))
    xi = noise.sample_marginals("gaussian", trials * D, rng).reshape(trials, D)
    held = 0
    for t in range(trials):
        ok = all(abs(sum(xi[t, j] ** 2 for j in range(k, m)) - (m - k)) <= eps * (m - k)
                 for m in range(kappa, D + 1) for k in range(0, m // 2 + 1))
        held += ok
    assert theory.residual_concentration(kappa, eps, "gaussian", trials, D, 3) == held / trials


def test_divergence_level():
    assert theory.divergence_level(1e-3) == 69
    assert theory.divergence_level(1e-2) == math.ceil(3 * math.log(100) / (1 - math.log(2))) + 1


@pytest.mark.parametrize("delta", [1e-3, 1e-2, 0.2, 1e-8])
def test_counterexample(delta):
    r = theory.counterexample_check(delta)
    assert r["passed"], r["checks"]
    assert r["psi_2m_at_m_delta"] == 0.0
    assert r["k_hd_at_2m"] == r["m_delta"]
    assert r["log_error"] >= math.log(math.sqrt(2) * delta) + (r["m_delta"] - 1) / 2


def test_counterexample_log_matches_direct():
    r = theory.counterexample_check(0.2)
    assert math.log(r["error"]) == pytest.approx(r["log_error"], rel=1e-12)


def test_counterexample_rejects():
    with pytest.raises(InvalidInputError):
        theory.counterexample_check(1.0)


def test_rate_dimension():
    assert theory.rate_dimension(1e-2, 2, 2) == (10, 320)
    assert theory.rate_dimension(1e-8, 2, 2)[1] == 100_000


def test_bayes_small_and_reproducible():
    a = theory.bayes_rate_study(2, 2, "deterministic-one", [0.1, 0.05, 0.02], 3, 7)
    b = theory.bayes_rate_study(2, 2, "deterministic-one", [0.1, 0.05, 0.02], 3, 7)
    assert a == b
    assert len(a["rows"]) == 3
    for row in a["rows"]:
        assert row["mean_err_opt"] <= row["mean_err_hd"]
    g = theory.bayes_rate_study(2, 2, "gaussian", [0.1, 0.05, 0.02], 2, 7)
    assert np.isfinite(g["fitted_slope"])


@pytest.mark.parametrize("grid", [[0.1, 0.01], [0.01, 0.1, 0.001], [2.0, 0.1, 0.01]])
def test_bayes_grid_validation(grid):
    with pytest.raises(InvalidInputError):
        theory.bayes_rate_study(2, 2, "deterministic-one", grid, 2, 0)
