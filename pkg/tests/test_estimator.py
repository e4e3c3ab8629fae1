import numpy as np
import pytest

from hdreg import estimator, noise, problems
from hdreg.errors import InvalidInputError


def test_zero_truncation():
    p = problems.generate("deriv2", 32)
    obs = noise.observe(p, 1e-3, noise.NoiseSpec(seed=1))
    rec = estimator.cutoff_estimate(0, obs, p.system)
    assert np.all(rec.x_spectral == 0)
    assert estimator.relative_error(rec, p) == 1.0


def test_noiseless_full_rank_inversion():
    p = problems.generate("deriv2", 32)
    obs = noise.observe(p, 0.0)
    rec = estimator.cutoff_estimate(p.system.numerical_rank, obs, p.system)
    np.testing.assert_allclose(rec.x_spectral, p.x_true_spectral, rtol=0,
                               atol=1e-8 * np.linalg.norm(p.x_true_spectral))
    assert estimator.relative_error(rec, p) <= 1e-8


def test_hand_value():
    class System:
        sigmas = np.array([1.0, 0.5])
        numerical_rank = 2

    rec = estimator.cutoff_estimate(2, np.array([1.0, 1.0]), System())
    np.testing.assert_allclose(rec.x_spectral, [1, 2])
    with pytest.raises(InvalidInputError):
        rec.x_coords


def test_exact_truth_zero_error():
    p = problems.generate("phillips", 32)
    rec = estimator.Reconstruction(5, np.array(p.x_true_spectral))
    assert estimator.relative_error(rec, p) == 0.0


def test_parseval(rng):
    p = problems.generate("gravity", 64)
    obs = noise.observe(p, 1e-2, noise.NoiseSpec(seed=3))
    rec = estimator.cutoff_estimate(9, obs, p.system)
    coord = np.linalg.norm(rec.x_coords - p.x_true) / np.linalg.norm(p.x_true)
    assert abs(coord - estimator.relative_error(rec, p)) <= 1e-10


def test_error_split_and_profile(rng):
    D = 20
    b = rng.standard_normal(D)
    sig = np.sort(rng.uniform(0.1, 1.0, D))[::-1]
    x = rng.standard_normal(D)
    profile = estimator.squared_error_profile(b, sig, x)
    for k in range(D + 1):
        xk = np.where(np.arange(D) < k, b / sig, 0.0)
        direct = np.sum((xk - x) ** 2)
        prop, approx = estimator.error_terms(k, b, sig, x)
        assert prop == pytest.approx(np.sum((b[:k] / sig[:k] - x[:k]) ** 2))
        assert approx == pytest.approx(np.sum(x[k:] ** 2))
        assert prop + approx == pytest.approx(direct, rel=1e-12)
        assert profile[k] == pytest.approx(direct, rel=1e-12)


def test_relative_error_rejects_zero_truth():
    with pytest.raises(InvalidInputError):
        estimator.relative_error_at(1, np.ones(3), np.ones(3), np.zeros(3))


def test_cutoff_beyond_rank():
    p = problems.generate("gravity", 128)
    with pytest.raises(InvalidInputError):
        estimator.cutoff_estimate(p.system.numerical_rank + 1, noise.observe(p, 0.0), p.system)


def test_zero_singular_value_gives_infinite_error():
    prop, _ = estimator.error_terms(2, np.ones(2), np.array([1.0, 0.0]), np.zeros(2))
    assert prop == np.inf
