"""Sensing-matrix spectra and the effective scalar-channel quantities.

Each terminal's measurement operator enters the asymptotic analysis only
through the R-transform of the limiting eigenvalue distribution of its
Gram matrix.  For an i.i.d. Gaussian matrix with variance 1/M entries
(undersampling ratio ``rho = M/N``) that distribution is Marchenko-Pastur
and the R-transform has the closed form ``R(w) = rho / (rho - w)``; other
ensembles are supported through a user-supplied callable.

The two derived quantities consumed by the fixed point are the effective
threshold scale ``tau = lam / R(-chi/lam)`` and the effective noise
variance ``theta2``, obtained by differentiating
``g(c) = (sigma2 * c - lam * p) * R(-c/lam)`` with respect to ``c`` at
``c = chi`` (the error power ``p`` held constant) and dividing by
``R(-chi/lam)**2``.  For Marchenko-Pastur both collapse to closed forms::

    tau    = lam + chi / rho
    theta2 = sigma2 + p / rho
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

MARCHENKO_PASTUR = "marchenko_pastur"
GENERIC = "generic"

# Relative margin keeping Marchenko-Pastur evaluations strictly below the
# pole at w = rho.
_POLE_MARGIN = 1e-12


class RTransformDomainError(ValueError):
    """R-transform evaluated at or beyond a pole of its domain."""


class NoiseVarianceError(ValueError):
    """The effective noise variance came out negative.

    Signals a bad fixed-point region; the offending inputs are carried in
    the message instead of being clamped silently.
    """


@dataclass(frozen=True)
class EnsembleSpec:
    """Spectral description of one terminal's sensing matrix.

    ``rho`` is the undersampling ratio M/N.  ``kind`` selects either the
    Marchenko-Pastur closed form or a generic ensemble whose R-transform
    is supplied as ``r_fn``.
    """

    rho: float
    kind: str = MARCHENKO_PASTUR
    r_fn: Optional[Callable[[float], float]] = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.rho) and self.rho > 0.0):
            raise ValueError(f"undersampling ratio must be positive and finite, got {self.rho}")
        if self.kind not in (MARCHENKO_PASTUR, GENERIC):
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        if self.kind == GENERIC and self.r_fn is None:
            raise ValueError("generic ensembles need an R-transform callable")

    @classmethod
    def marchenko_pastur(cls, rho: float) -> "EnsembleSpec":
        return cls(rho=rho)

    @classmethod
    def generic_r_transform(cls, r_fn: Callable[[float], float], rho: float) -> "EnsembleSpec":
        return cls(rho=rho, kind=GENERIC, r_fn=r_fn)


def r_transform(ensemble: EnsembleSpec, omega: float) -> float:
    """Evaluate the ensemble's R-transform at ``omega``.

    The Marchenko-Pastur form has a pole at ``omega = rho``; evaluations
    must stay strictly below it (relative margin 1e-12).  Generic
    callables own their domain, but a non-finite return is rejected here
    rather than propagated.
    """
    omega = float(omega)
    if ensemble.kind == MARCHENKO_PASTUR:
        if omega >= ensemble.rho * (1.0 - _POLE_MARGIN):
            raise RTransformDomainError(
                f"omega={omega} is not strictly below the Marchenko-Pastur pole at rho={ensemble.rho}"
            )
        return ensemble.rho / (ensemble.rho - omega)
    value = float(ensemble.r_fn(omega))
    if not math.isfinite(value):
        raise RTransformDomainError(f"generic R-transform returned {value} at omega={omega}")
    return value


def _validate_chi_lam(chi: float, lam: float) -> None:
    if not (math.isfinite(chi) and chi >= 0.0):
        raise ValueError(f"susceptibility chi must be nonnegative and finite, got {chi}")
    if not (math.isfinite(lam) and lam > 0.0):
        raise ValueError(f"regularization weight lam must be positive and finite, got {lam}")


def effective_tuning(ensemble: EnsembleSpec, chi: float, lam: float) -> float:
    """Effective threshold scale of the decoupled scalar channel.

    ``tau = lam / R(-chi/lam)``; the Marchenko-Pastur branch uses the
    simplified ``lam + chi/rho`` directly so the identity holds exactly
    in floating point.
    """
    chi, lam = float(chi), float(lam)
    _validate_chi_lam(chi, lam)
    if ensemble.kind == MARCHENKO_PASTUR:
        return lam + chi / ensemble.rho
    tau = lam / r_transform(ensemble, -chi / lam)
    if not (math.isfinite(tau) and tau > 0.0):
        raise ValueError(f"effective tuning came out nonpositive: tau={tau} at chi={chi}, lam={lam}")
    return tau


def effective_noise_variance(
    ensemble: EnsembleSpec,
    chi: float,
    p: float,
    lam: float,
    sigma2: float,
    step: Optional[float] = None,
) -> float:
    """Effective noise variance ``theta2`` of the decoupled scalar channel.

    Generic ensembles differentiate ``g(c) = (sigma2*c - lam*p) * R(-c/lam)``
    by central differences with ``h = max(1e-6, 1e-6*|chi|)`` (override via
    ``step``), holding the error power ``p`` constant, then divide by
    ``R(-chi/lam)**2``.  Marchenko-Pastur uses the exact ``sigma2 + p/rho``.
    A negative result raises :class:`NoiseVarianceError` with the inputs.
    """
    chi, p, lam, sigma2 = float(chi), float(p), float(lam), float(sigma2)
    _validate_chi_lam(chi, lam)
    if not (math.isfinite(p) and p >= 0.0):
        raise ValueError(f"error power p must be nonnegative and finite, got {p}")
    if not (math.isfinite(sigma2) and sigma2 >= 0.0):
        raise ValueError(f"noise variance sigma2 must be nonnegative and finite, got {sigma2}")

    if ensemble.kind == MARCHENKO_PASTUR:
        return sigma2 + p / ensemble.rho

    h = float(step) if step is not None else max(1e-6, 1e-6 * abs(chi))
    if h <= 0.0:
        raise ValueError(f"difference step must be positive, got {h}")

    def g(c: float) -> float:
        return (sigma2 * c - lam * p) * r_transform(ensemble, -c / lam)

    derivative = (g(chi + h) - g(chi - h)) / (2.0 * h)
    theta2 = derivative / r_transform(ensemble, -chi / lam) ** 2
    if not math.isfinite(theta2) or theta2 < 0.0:
        raise NoiseVarianceError(
            f"effective noise variance {theta2} is not a valid variance "
            f"(chi={chi}, p={p}, lam={lam}, sigma2={sigma2}, step={h})"
        )
    return theta2
