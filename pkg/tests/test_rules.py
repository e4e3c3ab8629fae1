import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdreg import noise, problems, rules
from hdreg.errors import ExcludedIndexError, InvalidInputError


# brute-force oracles, plain Python loops over 1-based indices

def brute_psi(k, m, b, s):
    return math.sqrt(sum(b[j - 1] ** 2 for j in range(k, m + 1))) / s[k - 1]


def brute_hd(b, s):
    best = 0
    for m in range(2, len(b) + 1):
        vals = [brute_psi(k, m, b, s) for k in range(1, m // 2 + 1)]
        best = max(best, 1 + vals.index(min(vals)))
    return best


def brute_dp(b, tau, delta):
    best = 0
    for m in range(1, len(b) + 1):
        for k in range(0, m + 1):
            if sum(b[j - 1] ** 2 for j in range(k + 1, m + 1)) <= tau * m * delta ** 2:
                break
        best = max(best, k)
    return best


def brute_oracle(b, s, x):
    errs = []
    for k in range(len(b) + 1):
        errs.append(sum((b[j] / s[j] - x[j]) ** 2 for j in range(k)) + sum(x[j] ** 2 for j in range(k, len(b))))
    return errs.index(min(errs))


def random_instance(seed):
    rng = np.random.default_rng(seed)
    D = int(rng.integers(2, 33))
    s = np.sort(rng.uniform(0.01, 1.0, D))[::-1]
    x = rng.standard_normal(D) * np.arange(1, D + 1) ** -1.0
    delta = 10 ** rng.uniform(-3, 0)
    b = s * x + delta * rng.standard_normal(D)
    return b, s, x, delta


class Seq:
    """Minimal stand-in for a problem with an exactly known spectrum."""

    def __init__(self, s, x):
        self.sigmas, self.x_coeffs, self.dim = s, x, len(s)


def test_psi_hand_values():
    assert rules.psi(2, 4, [0, 3, 4, 0], [1, 1, 1, 1]) == 5.0
    assert rules.psi(2, 4, [1, 1, 1, 1], [1, 0.5, 0.25, 0.125]) == pytest.approx(2 * math.sqrt(3), rel=1e-15)
    for k, m in [(1, 1), (1, 4), (3, 4)]:
        assert rules.psi(k, m, np.zeros(4), np.ones(4)) == 0.0


def test_psi_window_includes_both_ends():
    b = [1.0, 2.0, 3.0, 4.0]
    assert rules.psi(2, 3, b, np.ones(4)) == pytest.approx(math.sqrt(4 + 9))
    assert rules.psi(3, 3, b, np.ones(4)) == 3.0


def test_psi_errors():
    with pytest.raises(InvalidInputError):
        rules.psi(3, 2, np.ones(4), np.ones(4))
    with pytest.raises(InvalidInputError):
        rules.psi(0, 2, np.ones(4), np.ones(4))
    with pytest.raises(ExcludedIndexError):
        rules.psi(3, 4, np.ones(4), [1, 1, 1e-20, 1e-20])


def test_hd_for_m_hand_values():
    assert rules.hd_for_m(4, [0, 3, 4, 0], np.ones(4)) == 1
    assert rules.hd_for_m(4, [2, 0.1, 0.1, 0.1], [1, 0.5, 0.25, 0.125]) == 2


def test_hd_zero_data():
    out = rules.hd(np.zeros(16), np.linspace(1, 0.1, 16))
    assert out.k_selected == 1
    assert np.all(out.ks == 1)


def test_hd_adversarial():
    sig = np.exp(-np.arange(1, 11) / 2)
    obs = noise.adversarial_observation(5, 1.0, sig)
    assert rules.psi(5, 10, obs, sig) == 0.0
    assert rules.hd_for_m(10, obs, sig) == 5
    assert rules.hd(obs, sig).k_selected >= 5


def test_hd_trace_properties(rng):
    b, s, _, _ = random_instance(7)
    out = rules.hd(b, s)
    assert out.k_selected == out.ks.max()
    assert np.all(out.ks <= out.ms // 2)
    assert out.per_m_trace[0][0] == 2


def test_dp_hand_values():
    assert rules.dp_for_m(4, [2, 0, 0, 0], np.ones(4), 1.5, 1.0) == 0
    assert rules.dp_for_m(4, [3, 0, 0, 0], np.ones(4), 1.5, 1.0) == 1
    # the DP tail starts at k+1: with b_2^2 = 9 > 1.5 * 2, k = 1 fails and k = 2 passes
    assert rules.dp_for_m(2, [0, 3], np.ones(2), 1.5, 1.0) == 2


def test_dp_limits():
    assert rules.dp(np.zeros(8), np.ones(8), 1.5, 0.1).k_selected == 0
    assert rules.dp(np.arange(8.0), np.ones(8), 1.5, 1e6).k_selected == 0


@pytest.mark.parametrize("tau,delta", [(1.0, 1.0), (1.5, 0.0), (0.5, 1.0)])
def test_dp_preconditions(tau, delta):
    with pytest.raises(InvalidInputError):
        rules.dp(np.ones(4), np.ones(4), tau, delta)


def test_oracle_limits():
    D = 12
    s = 1.0 / np.arange(1, D + 1)
    x = np.ones(D)
    assert rules.oracle(s * x, Seq(s, x)).k_selected == D
    b = np.random.default_rng(1).standard_normal(D)
    assert rules.oracle(b, Seq(s, np.zeros(D))).k_selected == 0


def test_oracle_respects_rank():
    p = problems.generate("gravity", 128)
    obs = noise.observe(p, 0.0)
    assert rules.oracle(obs, p).k_selected <= p.system.numerical_rank


@pytest.mark.parametrize("seed", range(100))
def test_brute_force_equivalence(seed):
    b, s, x, delta = random_instance(seed)
    assert rules.hd(b, s).k_selected == brute_hd(list(b), list(s))
    assert rules.dp(b, s, 1.5, delta).k_selected == brute_dp(list(b), 1.5, delta)
    assert rules.oracle(b, Seq(s, x)).k_selected == brute_oracle(list(b), list(s), list(x))
    m = len(b)
    if m >= 2:
        vals = [brute_psi(k, m, b, s) for k in range(1, m // 2 + 1)]
        assert rules.hd_for_m(m, b, s) == 1 + vals.index(min(vals))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), c=st.floats(1e-3, 1e3))
def test_hd_scale_covariant(seed, c):
    b, s, _, _ = random_instance(seed)
    # powers of two scale exactly; other factors may flip exact ties only
    c2 = 2.0 ** round(math.log2(c))
    assert rules.hd(c2 * b, s).k_selected == rules.hd(b, s).k_selected


def test_hd_signature_has_no_noise_level():
    import inspect
    assert "delta" not in inspect.signature(rules.hd).parameters


def test_stabilization_level():
    assert rules.stabilization_level([1, 1, 0.5, 0.25]) == 3
    assert rules.stabilization_level([2, 1]) == 2


def test_stabilization_diagnostic():
    # for m large enough that m * delta^2 dominates the signal, psi_m is
    # governed by 1 / sigma_k and the argmin stays below K
    D = 2048
    j = np.arange(1, D + 1)
    s = np.where(j <= 2, 1.0, 0.5 / np.maximum(j - 1.0, 1.0))
    x = 1.0 / j ** 2
    K = rules.stabilization_level(s)
    assert K == 3
    below = 0
    for r in range(200):
        b = s * x + 0.05 * noise.sample_marginals("gaussian", D, noise.mix(5, r))
        m, k = rules.stabilization_diagnostic(b, s, [D])[0]
        below += k < K
    assert below >= 0.95 * 200
    assert all(k == 1 for _, k in rules.stabilization_diagnostic(np.zeros(D), s, range(2, D + 1)))
    b = noise.sample_marginals("gaussian", D, 3)
    assert rules.stabilization_diagnostic(b, s, [D]) == [(D, rules.hd_for_m(D, b, s))]


def test_long_vectors_chunked():
    # many m-rows per chunk and several chunks give the same answer as a single m
    D = 3000
    rng = np.random.default_rng(0)
    s = np.exp(-np.arange(D) / 400)
    b = s * rng.standard_normal(D) + 1e-3 * rng.standard_normal(D)
    out = rules.hd(b, s)
    for m in (2, 17, 1500, D):
        assert out.ks[m - 2] == rules.hd_for_m(m, b, s)
    dpo = rules.dp(b, s, 1.5, 1e-3)
    for m in (1, 700, D):
        assert dpo.ks[m - 1] == rules.dp_for_m(m, b, s, 1.5, 1e-3)
