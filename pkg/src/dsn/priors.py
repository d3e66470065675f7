"""Jointly sparse Gaussian source-pair model.

The two scalar sources share a common sparse Gaussian part and carry
private sparse Gaussian innovations::

    x_1 = w_c * s_c + w_1 * s_1
    x_2 = w_c * s_c + w_2 * s_2

with independent activity flags ``s_c ~ Bern(common_rate)``,
``s_j ~ Bern(private_rates[j])`` and independent Gaussian amplitudes
``w_c ~ N(0, common_var)``, ``w_j ~ N(0, private_vars[j])``.  The joint
law of ``(x_1, x_2)`` is an 8-component zero-mean Gaussian mixture, one
component per activity pattern ``(s_c, s_1, s_2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np


@dataclass(frozen=True)
class PriorParams:
    """Variances and activity rates of the source-pair model."""

    common_var: float
    private_vars: Tuple[float, float]
    common_rate: float
    private_rates: Tuple[float, float]

    def __post_init__(self) -> None:
        for name, var in (
            ("common_var", self.common_var),
            ("private_vars[0]", self.private_vars[0]),
            ("private_vars[1]", self.private_vars[1]),
        ):
            if not (math.isfinite(var) and var >= 0.0):
                raise ValueError(f"{name} must be nonnegative and finite, got {var}")
        for name, rate in (
            ("common_rate", self.common_rate),
            ("private_rates[0]", self.private_rates[0]),
            ("private_rates[1]", self.private_rates[1]),
        ):
            if not (0.0 <= rate <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {rate}")

    def second_moment(self, j: int) -> float:
        """E[x_j^2] for terminal ``j`` in {1, 2}."""
        _check_terminal(j)
        return self.common_rate * self.common_var + self.private_rates[j - 1] * self.private_vars[j - 1]


@dataclass(frozen=True)
class MixtureComponent:
    """One activity pattern of the source pair.

    ``support`` is the flag triple (s_c, s_1, s_2); ``covariance`` is the
    2x2 joint covariance of (x_1, x_2) conditioned on that pattern.
    """

    weight: float
    support: Tuple[int, int, int]
    covariance: np.ndarray


def _check_terminal(j: int) -> None:
    if j not in (1, 2):
        raise ValueError(f"terminal index must be 1 or 2, got {j}")


def sample_sources(params: PriorParams, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` source pairs, returned with shape (n, 2).

    Draw order is fixed for reproducibility: activity flags s_c, s_1, s_2
    (one uniform block each), then amplitudes w_c, w_1, w_2 (one standard
    normal block each).
    """
    if n < 1:
        raise ValueError(f"sample count must be positive, got {n}")
    s_c = rng.random(n) < params.common_rate
    s_1 = rng.random(n) < params.private_rates[0]
    s_2 = rng.random(n) < params.private_rates[1]
    w_c = rng.standard_normal(n) * math.sqrt(params.common_var)
    w_1 = rng.standard_normal(n) * math.sqrt(params.private_vars[0])
    w_2 = rng.standard_normal(n) * math.sqrt(params.private_vars[1])
    common = w_c * s_c
    return np.column_stack((common + w_1 * s_1, common + w_2 * s_2))


def mixture_components(params: PriorParams) -> List[MixtureComponent]:
    """The 8 Gaussian mixture components of (x_1, x_2).

    Ordered lexicographically over the activity triple (s_c, s_1, s_2)
    with inactive before active.  Weights sum to 1; the all-zero pattern
    has a zero covariance matrix.
    """
    ones = np.ones((2, 2))
    comps: List[MixtureComponent] = []
    for s_c in (0, 1):
        for s_1 in (0, 1):
            for s_2 in (0, 1):
                w = (
                    (params.common_rate if s_c else 1.0 - params.common_rate)
                    * (params.private_rates[0] if s_1 else 1.0 - params.private_rates[0])
                    * (params.private_rates[1] if s_2 else 1.0 - params.private_rates[1])
                )
                cov = s_c * params.common_var * ones + np.diag(
                    [s_1 * params.private_vars[0], s_2 * params.private_vars[1]]
                )
                comps.append(MixtureComponent(weight=w, support=(s_c, s_1, s_2), covariance=cov))
    return comps


def marginal_nonzero_rate(params: PriorParams, j: int) -> float:
    """P[x_j != 0]: terminal ``j`` is active unless both its flags are off."""
    _check_terminal(j)
    return 1.0 - (1.0 - params.common_rate) * (1.0 - params.private_rates[j - 1])
