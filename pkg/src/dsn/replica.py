"""Asymptotic performance prediction through a decoupled scalar channel.

In the large-system limit the two-terminal recovery problem decouples:
each source component behaves like a scalar observed through additive
Gaussian noise, ``y_j = x_j + theta_j z_j``, and fed to the coupled
threshold map with per-terminal scale ``tau_j``.  The pair
``(chi_j, p_j)`` per terminal (response susceptibility and error power)
must solve the self-consistency conditions::

    p_j   = E[(xhat_j - x_j)^2]
    chi_j = tau_j E[(xhat_j - x_j) z_j] / theta_j^2

where ``tau_j`` and ``theta_j^2`` are functions of ``(chi, p)`` through
the measurement ensemble's R-transform (:mod:`dsn.spectra`).  The
expectations run over the source prior and the channel noise; they are
evaluated here by Monte Carlo with common random numbers (the same draws
at every iteration, so the damped iteration sees a deterministic map),
with a Gauss-Hermite quadrature path as an independent cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Tuple, Union

import numpy as np

from dsn.priors import PriorParams, mixture_components, sample_sources
from dsn.scalar_map import (
    _threshold_kernel,
    block_soft_threshold,
    scalar_prox_oracle,
    weighted_block_soft_threshold,
)
from dsn.spectra import EnsembleSpec, effective_noise_variance, effective_tuning

ESTIMATOR_COUPLED = "coupled"
ESTIMATOR_L21 = "l21"

DISTORTION_HALF_SUM_SQUARE = "half_sum_square"

EstimatorKind = Union[str, Callable[[np.ndarray], np.ndarray]]
DistortionKind = Union[str, Callable[[np.ndarray, np.ndarray], np.ndarray]]


class FixedPointError(RuntimeError):
    """The damped fixed-point iteration did not reach the tolerance.

    Carries the per-iteration residual history in ``residual_trace``.
    """

    def __init__(self, message: str, residual_trace: np.ndarray):
        super().__init__(message)
        self.residual_trace = residual_trace


@dataclass(frozen=True)
class NetworkConfig:
    """Everything the asymptotic analysis needs about the two-terminal setup.

    ``estimator`` selects the scalar map applied to the decoupled
    channel: ``"coupled"`` (the default two-dimensional soft threshold
    with coupling ``psi``), ``"l21"`` (prox of the rotation-invariant
    norm), or a custom convex nonnegative utility callable handed to the
    numeric oracle.  ``distortion`` is ``"half_sum_square"``
    (``((xhat_1-x_1)^2 + (xhat_2-x_2)^2) / 2``) or a callable mapping
    per-sample estimate/truth arrays of shape (n, 2) to (n,) costs.
    """

    ensembles: Tuple[EnsembleSpec, EnsembleSpec]
    noise_vars: Tuple[float, float]
    tunings: Tuple[float, float]
    prior: PriorParams
    psi: float
    estimator: EstimatorKind = ESTIMATOR_COUPLED
    distortion: DistortionKind = DISTORTION_HALF_SUM_SQUARE

    def __post_init__(self) -> None:
        for j in (0, 1):
            if not (math.isfinite(self.noise_vars[j]) and self.noise_vars[j] >= 0.0):
                raise ValueError(f"noise_vars[{j}] must be nonnegative and finite, got {self.noise_vars[j]}")
            if not (math.isfinite(self.tunings[j]) and self.tunings[j] > 0.0):
                raise ValueError(f"tunings[{j}] must be positive and finite, got {self.tunings[j]}")
        if not (math.isfinite(self.psi) and self.psi >= 0.0):
            raise ValueError(f"psi must be nonnegative and finite, got {self.psi}")
        if isinstance(self.estimator, str) and self.estimator not in (ESTIMATOR_COUPLED, ESTIMATOR_L21):
            raise ValueError(f"unknown estimator kind {self.estimator!r}")
        if isinstance(self.distortion, str) and self.distortion != DISTORTION_HALF_SUM_SQUARE:
            raise ValueError(f"unknown distortion kind {self.distortion!r}")


@dataclass
class ReplicaState:
    """Order parameters of the decoupled channel at (or en route to) a fixed point."""

    chi: np.ndarray
    p: np.ndarray
    tau: np.ndarray
    theta2: np.ndarray
    iterations: int
    residual: float
    residual_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def mse(self) -> float:
        """Predicted distortion: the error powers averaged over terminals."""
        return 0.5 * float(self.p[0] + self.p[1])

    def mse_db(self) -> float:
        value = self.mse()
        return 10.0 * math.log10(value) if value > 0.0 else float("-inf")


def make_state(config: NetworkConfig, chi, p, iterations: int = 0, residual: float = math.inf) -> ReplicaState:
    """Assemble a state whose ``tau``/``theta2`` are consistent with ``(chi, p)``."""
    chi = np.asarray(chi, dtype=float).copy()
    p = np.asarray(p, dtype=float).copy()
    tau = np.array(
        [effective_tuning(config.ensembles[j], chi[j], config.tunings[j]) for j in (0, 1)]
    )
    theta2 = np.array(
        [
            effective_noise_variance(
                config.ensembles[j], chi[j], p[j], config.tunings[j], config.noise_vars[j]
            )
            for j in (0, 1)
        ]
    )
    return ReplicaState(chi=chi, p=p, tau=tau, theta2=theta2, iterations=iterations, residual=residual)


def _apply_estimator(y: np.ndarray, tau: np.ndarray, config: NetworkConfig) -> np.ndarray:
    """Run the configured scalar map on channel outputs ``y`` of shape (n, 2)."""
    if callable(config.estimator):
        return scalar_prox_oracle(y, tau[0], tau[1], config.estimator)
    if config.estimator == ESTIMATOR_COUPLED:
        est, _ = _threshold_kernel(y, tau[0], tau[1], config.psi)
        return est
    # Rotation-invariant norm: equal scales reduce to the exact block
    # shrinkage; unequal scales use the exact weighted form (root-find).
    if tau[0] == tau[1]:
        return block_soft_threshold(y, tau[0])
    return weighted_block_soft_threshold(y, tau[0], tau[1])


def _distortion_fn(config: NetworkConfig) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    if callable(config.distortion):
        return config.distortion
    return lambda xhat, x: 0.5 * np.sum((xhat - x) ** 2, axis=-1)


def _exchange_symmetric(config: NetworkConfig) -> bool:
    """True when the network is invariant under swapping the two terminals.

    Custom callable estimators are excluded (their symmetry cannot be
    verified); the built-in coupled and euclidean-norm maps are
    swap-equivariant by construction.
    """
    if callable(config.estimator):
        return False
    prior = config.prior
    return (
        config.ensembles[0] == config.ensembles[1]
        and config.noise_vars[0] == config.noise_vars[1]
        and config.tunings[0] == config.tunings[1]
        and prior.private_vars[0] == prior.private_vars[1]
        and prior.private_rates[0] == prior.private_rates[1]
    )


def _draw_channel_samples(config: NetworkConfig, n_samples: int, seed: int):
    """Common-random-number draws: sources, then one standard normal block per terminal.

    For exchange-symmetric networks the draws are symmetrized: half the
    budget is drawn fresh and the swapped pairs are appended.  Swapped
    pairs follow the same law (the prior is exchangeable there), and the
    empirical measure becomes exactly swap-invariant, so the iterated
    fixed-point map preserves ``chi_1 = chi_2`` and ``p_1 = p_2`` to
    rounding instead of Monte Carlo error.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    if _exchange_symmetric(config):
        half = (n_samples + 1) // 2
        x = sample_sources(config.prior, half, rng)
        z_std = rng.standard_normal((half, 2))
        x = np.concatenate([x, x[:, ::-1]], axis=0)
        z_std = np.concatenate([z_std, z_std[:, ::-1]], axis=0)
        return x, z_std
    x = sample_sources(config.prior, n_samples, rng)
    z_std = rng.standard_normal((n_samples, 2))
    return x, z_std


def _expectations_from_draws(
    x: np.ndarray, z_std: np.ndarray, tau: np.ndarray, theta2: np.ndarray, config: NetworkConfig
):
    theta = np.sqrt(theta2)
    z = z_std * theta
    y = x + z
    err = _apply_estimator(y, tau, config) - x
    m2 = np.mean(err * err, axis=0)
    corr = np.mean(err * z, axis=0)
    return m2, corr


def channel_expectations(
    state: ReplicaState, config: NetworkConfig, n_samples: int = 200_000, seed: int = 0
):
    """Monte Carlo estimates of the error power and error-noise correlation.

    Returns two length-2 arrays: ``E[(xhat_j - x_j)^2]`` and
    ``E[(xhat_j - x_j) z_j]`` under ``y_j = x_j + theta_j z_j`` with the
    state's scales.  Identical ``seed`` means identical draws, which is
    what makes the fixed-point iteration see a deterministic map.
    """
    if n_samples < 1000:
        raise ValueError(f"need at least 1000 samples for usable expectations, got {n_samples}")
    x, z_std = _draw_channel_samples(config, n_samples, seed)
    return _expectations_from_draws(x, z_std, state.tau, state.theta2, config)


def quadrature_expectations(state: ReplicaState, config: NetworkConfig, order: int = 80):
    """Gauss-Hermite evaluation of the same channel expectations.

    Conditions on each mixture component of the source pair: given the
    component, ``y`` is a 2-D zero-mean Gaussian with covariance
    ``cov_x + diag(theta2)``, and the conditional means
    ``E[x_j | y]`` and ``E[z_j | y]`` are linear in ``y``, so every term
    reduces to a smooth integral over ``y``.  Needs ``theta2 > 0``.
    Serves as an independent cross-check of :func:`channel_expectations`.
    """
    if np.any(state.theta2 <= 0.0):
        raise ValueError("quadrature path requires strictly positive channel noise")
    nodes, weights = np.polynomial.hermite_e.hermegauss(order)
    weights = weights / math.sqrt(2.0 * math.pi)
    w2 = np.outer(weights, weights).ravel()
    grid = np.stack(
        (np.repeat(nodes, order), np.tile(nodes, order)), axis=-1
    )  # (order^2, 2) standard normal nodes

    m2 = np.zeros(2)
    corr = np.zeros(2)
    noise_cov = np.diag(state.theta2)
    for comp in mixture_components(config.prior):
        cov_y = comp.covariance + noise_cov
        chol = np.linalg.cholesky(cov_y)
        y = grid @ chol.T
        xhat = _apply_estimator(y, state.tau, config)
        solved = np.linalg.solve(cov_y, y.T).T            # cov_y^{-1} y
        x_mean = solved @ comp.covariance.T               # E[x | y] per node
        z_mean = solved * state.theta2                    # E[z_j | y] = theta2_j (cov_y^{-1} y)_j
        for j in (0, 1):
            e_xhat_sq = np.sum(w2 * xhat[:, j] ** 2)
            e_xhat_x = np.sum(w2 * xhat[:, j] * x_mean[:, j])
            m2[j] += comp.weight * (e_xhat_sq - 2.0 * e_xhat_x + comp.covariance[j, j])
            corr[j] += comp.weight * np.sum(w2 * xhat[:, j] * z_mean[:, j])
    return m2, corr


def solve_fixed_point(
    config: NetworkConfig,
    *,
    damping: float = 0.5,
    tol: float = 1e-6,
    max_iter: int = 500,
    n_samples: int = 200_000,
    seed: int = 0,
    init=None,
) -> ReplicaState:
    """Damped iteration of the self-consistency conditions to a fixed point.

    Starts from ``p_j = E[x_j^2]``, ``chi_j = p_j / lambda_j`` unless
    ``init=(chi, p)`` overrides.  Each step recomputes ``(tau, theta2)``
    from the current ``(chi, p)``, evaluates the channel expectations on
    the fixed common-random-number draws, and moves a ``damping``
    fraction toward the targets.  Converged when the largest relative
    update across all four order parameters is at most ``tol``; raises
    :class:`FixedPointError` (with the residual history) otherwise.
    """
    if not (0.0 < damping <= 1.0):
        raise ValueError(f"damping must lie in (0, 1], got {damping}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be positive, got {max_iter}")
    if n_samples < 1000:
        raise ValueError(f"need at least 1000 samples, got {n_samples}")

    if init is None:
        p = np.array([config.prior.second_moment(1), config.prior.second_moment(2)])
        chi = p / np.asarray(config.tunings, dtype=float)
    else:
        chi = np.asarray(init[0], dtype=float).copy()
        p = np.asarray(init[1], dtype=float).copy()

    x, z_std = _draw_channel_samples(config, n_samples, seed)
    symmetric = _exchange_symmetric(config)
    trace = []
    for iteration in range(1, max_iter + 1):
        state = make_state(config, chi, p)
        m2, corr = _expectations_from_draws(x, z_std, state.tau, state.theta2, config)
        if symmetric:
            # Pool the two coordinates: under an exchange-symmetric
            # network both have the same law, the pooled estimate uses
            # every sample coordinate, and the iterates stay bitwise
            # equal so downstream equal-scale fast paths stay engaged.
            m2 = np.full(2, 0.5 * (m2[0] + m2[1]))
            corr = np.full(2, 0.5 * (corr[0] + corr[1]))
        safe_theta2 = np.where(state.theta2 > 0.0, state.theta2, 1.0)
        chi_target = np.where(state.theta2 > 0.0, state.tau * corr / safe_theta2, 0.0)
        p_new = (1.0 - damping) * p + damping * m2
        chi_new = (1.0 - damping) * chi + damping * chi_target

        def rel(new, old):
            return np.abs(new - old) / np.maximum(np.maximum(np.abs(new), np.abs(old)), 1e-10)

        residual = float(np.max(np.maximum(rel(p_new, p), rel(chi_new, chi))))
        trace.append(residual)
        chi, p = chi_new, p_new
        if residual <= tol:
            final = make_state(config, chi, p, iterations=iteration, residual=residual)
            final.residual_trace = np.asarray(trace)
            return final
    raise FixedPointError(
        f"no fixed point within {max_iter} iterations (last residual {trace[-1]:.3e}, tol {tol:.3e})",
        residual_trace=np.asarray(trace),
    )


def asymptotic_distortion(
    state: ReplicaState, config: NetworkConfig, n_samples: int = 200_000, seed: int = 1
) -> Tuple[float, float]:
    """Predicted distortion at the fixed point, as (value, dB).

    Evaluates the configured distortion on fresh draws from the
    decoupled channel (seeded independently of the solver's draws).
    A zero distortion maps to -inf dB.
    """
    if n_samples < 1000:
        raise ValueError(f"need at least 1000 samples, got {n_samples}")
    x, z_std = _draw_channel_samples(config, n_samples, seed)
    y = x + z_std * np.sqrt(state.theta2)
    xhat = _apply_estimator(y, state.tau, config)
    value = float(np.mean(_distortion_fn(config)(xhat, x)))
    db = 10.0 * math.log10(value) if value > 0.0 else float("-inf")
    return value, db
