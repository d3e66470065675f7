"""Shared fixtures and small reference implementations used across tests."""

import math

import numpy as np
import pytest

from dsn.priors import PriorParams
from dsn.replica import NetworkConfig
from dsn.spectra import EnsembleSpec


@pytest.fixture
def reference_prior() -> PriorParams:
    """The default jointly sparse source law used throughout the tests."""
    return PriorParams(
        common_var=0.5,
        private_vars=(0.5, 0.5),
        common_rate=0.3,
        private_rates=(0.1, 0.1),
    )


@pytest.fixture
def mp08() -> EnsembleSpec:
    return EnsembleSpec.marchenko_pastur(0.8)


def make_network(
    prior: PriorParams,
    *,
    rho=(0.8, 0.8),
    noise=(0.01, 0.01),
    lam=(0.04, 0.04),
    psi=0.8,
    estimator="coupled",
    distortion="half_sum_square",
) -> NetworkConfig:
    return NetworkConfig(
        ensembles=(
            EnsembleSpec.marchenko_pastur(rho[0]),
            EnsembleSpec.marchenko_pastur(rho[1]),
        ),
        noise_vars=tuple(noise),
        tunings=tuple(lam),
        prior=prior,
        psi=psi,
        estimator=estimator,
        distortion=distortion,
    )


def soft_threshold(y, tau):
    """Scalar soft thresholding; the reference for all separable reductions."""
    y = np.asarray(y, dtype=float)
    return np.sign(y) * np.maximum(np.abs(y) - tau, 0.0)


def marginal_channel_fixed_point(
    *,
    common_rate,
    private_rate,
    common_var,
    private_var,
    lam,
    rho,
    sigma2,
    n_samples,
    seed,
    damping=0.5,
    tol=1e-6,
    max_iter=500,
):
    """Single-terminal scalar-channel iteration with plain soft thresholding.

    Independent reference for the zero-coupling factorization: one
    terminal's marginal source mixture, effective scales tau = lam +
    chi/rho and theta2 = sigma2 + p/rho, estimator sign(y)(|y|-tau)+.
    Returns (chi, p, standard error of the p estimate).
    """
    rng = np.random.Generator(np.random.Philox(seed))
    on_c = rng.random(n_samples) < common_rate
    on_p = rng.random(n_samples) < private_rate
    x = on_c * rng.standard_normal(n_samples) * math.sqrt(common_var) + on_p * (
        rng.standard_normal(n_samples) * math.sqrt(private_var)
    )
    z = rng.standard_normal(n_samples)

    p = common_rate * common_var + private_rate * private_var
    chi = p / lam
    for _ in range(max_iter):
        tau = lam + chi / rho
        theta2 = sigma2 + p / rho
        theta = math.sqrt(theta2)
        err = soft_threshold(x + theta * z, tau) - x
        m2 = float(np.mean(err * err))
        corr = float(np.mean(err * theta * z))
        chi_target = tau * corr / theta2 if theta2 > 0 else 0.0
        p_new = (1 - damping) * p + damping * m2
        chi_new = (1 - damping) * chi + damping * chi_target
        residual = max(
            abs(p_new - p) / max(abs(p_new), abs(p), 1e-10),
            abs(chi_new - chi) / max(abs(chi_new), abs(chi), 1e-10),
        )
        chi, p = chi_new, p_new
        if residual <= tol:
            break
    tau = lam + chi / rho
    theta2 = sigma2 + p / rho
    err = soft_threshold(x + math.sqrt(theta2) * z, tau) - x
    stderr = float(np.std(err * err, ddof=1) / math.sqrt(n_samples))
    return chi, p, stderr
