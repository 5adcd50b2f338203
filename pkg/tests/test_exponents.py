import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hlab.errors import DomainError, RegimeError
from hlab.exponents import (
    DistortionParams,
    astala_exponent,
    beta_bar,
    mu_q,
    regime,
    sigma,
    summary,
    tau_star,
)


def test_tau_star_examples():
    assert tau_star(DistortionParams(4, 2, 3)) == 1
    assert tau_star(DistortionParams(1, 1, 2)) == 1
    assert tau_star(DistortionParams(4, 3, 3)) == -2


def test_sigma_examples():
    p = DistortionParams(4, 2, 3)
    assert sigma(p, 2) == 2
    assert sigma(p, 0.5) == pytest.approx(0.6, abs=1e-15)
    assert sigma(p, 1.0) == 1.0
    assert regime(p, 1.0) == "critical"
    assert regime(p, 0.5) == "undercritical"
    assert regime(p, 2.0) == "supercritical"
    assert regime(DistortionParams(4, 3, 3), 1.0) == "fully_supercritical"


def test_sigma_errors():
    p = DistortionParams(4, 2, 3)
    for bad in (0.0, -1.0, 4.5):
        with pytest.raises(DomainError):
            sigma(p, bad)
    with pytest.raises(RegimeError):
        sigma(DistortionParams(4, 1, 2), 1.0)
    with pytest.raises(DomainError):
        DistortionParams(4, 2, 1.0)
    with pytest.raises(DomainError):
        DistortionParams(4, 0, 2)


def test_lorentz_mode_allows_equality():
    p = DistortionParams(2, 1, 2, lorentz_mode=True)
    # tau_star = n here, so every tau < n is on the second branch
    assert sigma(p, 1.0) == 2.0
    with pytest.raises(RegimeError):
        sigma(DistortionParams(2, 1, 2), 1.0)


def test_sigma_vectorized_and_continuous():
    p = DistortionParams(4, 2, 3)
    ts = tau_star(p)
    for eps in 10.0 ** -np.arange(2, 9):
        assert abs(sigma(p, ts - eps) - sigma(p, ts + eps)) < 10 * eps
    taus = np.linspace(1e-3, 4, 10_000)
    vals = sigma(p, taus)
    assert np.all(np.diff(vals) >= -1e-15)
    assert np.all(vals >= taus - 1e-15)


@settings(max_examples=200, deadline=None)
@given(
    n=st.integers(1, 6),
    alpha=st.floats(0.1, 5),
    p=st.floats(1.01, 10),
    frac=st.floats(1e-6, 1.0),
)
def test_sigma_at_least_tau(n, alpha, p, frac):
    if alpha * p <= n:
        return
    params = DistortionParams(n, alpha, p)
    tau = frac * n
    s = sigma(params, tau)
    assert s >= tau * (1 - 1e-12)
    if tau >= tau_star(params):
        assert s == tau
    else:
        assert s > tau


def test_mu_q_identities():
    n, m, k, a = 4, 1, 2, 0.0
    assert mu_q(n, m, k, a, m - 1) == n - m + 1
    assert mu_q(n, m, k, a, m) == n - m - k + 1 == 2
    bb = beta_bar(n, m, k, a)
    assert bb == 2
    assert mu_q(n, m, k, a, bb) == 0
    assert beta_bar(5, 5, 1, 0.0) == 5


def test_mu_q_errors_and_monotone():
    with pytest.raises(DomainError):
        mu_q(3, 4, 1, 0.0, 4)
    with pytest.raises(DomainError):
        mu_q(3, 2, 1, 0.0, 0.5)
    with pytest.raises(DomainError):
        mu_q(3, 2, 1, 1.0, 2)
    qs = np.linspace(1, 5, 50)
    vals = np.array([mu_q(4, 2, 2, 0.3, q) for q in qs])
    assert np.all(np.diff(vals) < 0)
    assert np.allclose(np.diff(vals, 2), 0, atol=1e-12)


def test_astala():
    assert astala_exponent(1, 0.7) == pytest.approx(0.7)
    assert astala_exponent(3, 1) == 1.5
    assert astala_exponent(5, 1e-12) < 1e-10
    assert astala_exponent(4, 2 - 1e-12) == pytest.approx(2.0)
    assert astala_exponent(2, 1) < astala_exponent(3, 1) < astala_exponent(3, 1.2) < 2
    with pytest.raises(DomainError):
        astala_exponent(2, 2)
    with pytest.raises(DomainError):
        astala_exponent(0.5, 1)


def test_summary_bridge_part():
    out = summary(DistortionParams(4, 2.25, 3, k=2, m=1), tau=0.5, q=2)
    assert out["sigma"] == sigma(DistortionParams(4, 2.25, 3), 0.5)
    assert out["beta_bar"] == pytest.approx(1 + 4 / 2.25 - 1)
    assert out["mu_q"] == pytest.approx(4 - 2.25 * 2)
    with pytest.raises(DomainError):
        summary(DistortionParams(4, 3.5, 3, k=2, m=1))
    assert math.isfinite(summary(DistortionParams(4, 2, 3))["tau_star"])
