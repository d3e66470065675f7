"""Coupled two-dimensional soft thresholding and its numeric oracle.

The decoupled scalar channel of the two-terminal problem asks, for an
observation pair ``y = (y_1, y_2)`` and per-terminal scales
``tau = (tau_1, tau_2)``, for the minimizer of::

    F(v) = (y_1 - v_1)^2 / (2 tau_1) + (y_2 - v_2)^2 / (2 tau_2) + u(v)

With the coupled penalty ``u(v) = |v_1| + |v_2| + psi |v_1 - v_2|``
(coupling strength ``0 <= psi <= 1``) the minimizer has a closed form:
the plane splits into 13 polyhedral regions and on each region the
estimate is an affine map of ``y``.  Each terminal's behaviour falls in
one of seven classes (:class:`RegionLabel`): zeroed, shifted down/up by
the shrunk threshold ``(1-psi) tau_j``, shifted down/up by the inflated
threshold ``(1+psi) tau_j``, or pooled with the other terminal on the
diagonal ``v_1 = v_2``.

:func:`scalar_prox_oracle` solves the same problem for arbitrary convex
nonnegative penalties by direct numeric minimization. It is deliberately
independent of the closed form so the two can cross-check each other
(:func:`oracle_equivalence_suite`).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Dict, Optional

import numpy as np

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class OracleConvergenceError(RuntimeError):
    """The numeric prox oracle exhausted its optimization budget."""


class RegionLabel(Enum):
    """Per-terminal behaviour class of the coupled threshold map."""

    ZERO = "zero"
    SHIFT_DOWN_SMALL = "shift_down_small"  # subtract (1-psi)*tau
    SHIFT_DOWN_FULL = "shift_down_full"    # subtract (1+psi)*tau
    POOLED_DOWN = "pooled_down"            # shared value on v1=v2, downward shift
    SHIFT_UP_SMALL = "shift_up_small"      # add (1-psi)*tau
    SHIFT_UP_FULL = "shift_up_full"        # add (1+psi)*tau
    POOLED_UP = "pooled_up"                # shared value on v1=v2, upward shift


@dataclass(frozen=True)
class ThresholdGeometry:
    """Scales and coupling strength of the two-dimensional threshold."""

    tau1: float
    tau2: float
    psi: float

    def __post_init__(self) -> None:
        for name, tau in (("tau1", self.tau1), ("tau2", self.tau2)):
            if not (math.isfinite(tau) and tau > 0.0):
                raise ValueError(f"{name} must be positive and finite, got {tau}")
        if not (math.isfinite(self.psi) and self.psi >= 0.0):
            raise ValueError(f"psi must be nonnegative and finite, got {self.psi}")

    @property
    def closed_form_valid(self) -> bool:
        """The 13-region geometry only covers coupling strengths <= 1."""
        return self.psi <= 1.0

    @property
    def shrunk1(self) -> float:
        return (1.0 - self.psi) * self.tau1

    @property
    def shrunk2(self) -> float:
        return (1.0 - self.psi) * self.tau2

    @property
    def inflated1(self) -> float:
        return (1.0 + self.psi) * self.tau1

    @property
    def inflated2(self) -> float:
        return (1.0 + self.psi) * self.tau2

    def corner_points(self) -> np.ndarray:
        """The six vertices of the zero region's boundary, shape (6, 2).

        Ordered as [(shrunk1, inflated2), (inflated1, shrunk2),
        (inflated1, -inflated2)] followed by their negatives.
        """
        upper = np.array(
            [
                [self.shrunk1, self.inflated2],
                [self.inflated1, self.shrunk2],
                [self.inflated1, -self.inflated2],
            ]
        )
        return np.vstack((upper, -upper))


def _region_code(y1, y2, tau1, tau2, psi):
    """Assign each point one of 13 region codes (first matching test wins).

    The closed inequalities tile the plane; on shared boundaries the
    estimate formulas agree, so tie-breaking order does not change the
    map.  An unassigned point would indicate a broken tiling and raises.
    """
    q1 = (1.0 + psi) * tau1
    p1 = (1.0 - psi) * tau1
    q2 = (1.0 + psi) * tau2
    p2 = (1.0 - psi) * tau2
    band_lo = q2 - p1   # diagonal band: -(q2-p1) <= y1-y2 <= q1-p2
    band_hi = q1 - p2
    d = y1 - y2
    s = y1 / tau1 + y2 / tau2

    conditions = [
        (np.abs(y1) <= q1) & (np.abs(y2) <= q2) & (np.abs(s) <= 2.0),   # 0: both zero
        (d >= -band_lo) & (d <= band_hi) & (s > 2.0),                   # 1: pooled, down
        (d <= band_lo) & (d >= -band_hi) & (s < -2.0),                  # 7: pooled, up
        (y2 >= p2) & (d >= band_hi),                                    # 2
        (y1 >= p1) & (-d >= band_lo),                                   # 12
        (y2 <= -p2) & (d <= -band_hi),                                  # 8
        (y1 <= -p1) & (d >= band_lo),                                   # 6
        (y1 >= q1) & (y2 <= -q2),                                       # 4: opposite full shifts
        (y1 <= -q1) & (y2 >= q2),                                       # 10
        (y1 >= q1) & (y2 >= -q2) & (y2 <= p2),                          # 3: only terminal 1 active
        (y1 <= -q1) & (y2 >= -p2) & (y2 <= q2),                         # 9
        (y2 <= -q2) & (y1 >= -p1) & (y1 <= q1),                         # 5: only terminal 2 active
        (y2 >= q2) & (y1 >= -q1) & (y1 <= p1),                          # 11
    ]
    codes = [0, 1, 7, 2, 12, 8, 6, 4, 10, 3, 9, 5, 11]
    code = np.select(conditions, codes, default=-1)
    if np.any(code < 0):
        bad = np.argwhere(np.atleast_1d(code) < 0)
        raise AssertionError(f"threshold region tiling left points unassigned, first at index {bad[0]}")
    return code


def _threshold_kernel(y, tau1, tau2, psi):
    """Closed-form coupled threshold, broadcast over leading dimensions.

    ``y`` has shape (..., 2); ``tau1``, ``tau2``, ``psi`` broadcast
    against ``y[..., 0]``.  Requires psi <= 1 elementwise.
    """
    y = np.asarray(y, dtype=float)
    y1, y2 = y[..., 0], y[..., 1]
    tau1 = np.asarray(tau1, dtype=float)
    tau2 = np.asarray(tau2, dtype=float)
    psi = np.asarray(psi, dtype=float)
    code = _region_code(y1, y2, tau1, tau2, psi)

    q1 = (1.0 + psi) * tau1
    p1 = (1.0 - psi) * tau1
    q2 = (1.0 + psi) * tau2
    p2 = (1.0 - psi) * tau2
    # Pooled estimate: minimize the weighted quadratic on v1 = v2 = t with
    # penalty 2|t|; the diagonal terms of u are inactive there.
    pool_down = (y1 * tau2 + y2 * tau1 - 2.0 * tau1 * tau2) / (tau1 + tau2)
    pool_up = (y1 * tau2 + y2 * tau1 + 2.0 * tau1 * tau2) / (tau1 + tau2)

    est1 = np.select(
        [
            code == 1,
            code == 7,
            (code == 2) | (code == 3) | (code == 4),
            (code == 8) | (code == 9) | (code == 10),
            code == 12,
            code == 6,
        ],
        [pool_down, pool_up, y1 - q1, y1 + q1, y1 - p1, y1 + p1],
        default=0.0,
    )
    est2 = np.select(
        [
            code == 1,
            code == 7,
            (code == 10) | (code == 11) | (code == 12),
            (code == 4) | (code == 5) | (code == 6),
            code == 2,
            code == 8,
        ],
        [pool_down, pool_up, y2 - q2, y2 + q2, y2 - p2, y2 + p2],
        default=0.0,
    )
    return np.stack((est1, est2), axis=-1), code


_LABELS_1 = {
    0: RegionLabel.ZERO,
    1: RegionLabel.POOLED_DOWN,
    2: RegionLabel.SHIFT_DOWN_FULL,
    3: RegionLabel.SHIFT_DOWN_FULL,
    4: RegionLabel.SHIFT_DOWN_FULL,
    5: RegionLabel.ZERO,
    6: RegionLabel.SHIFT_UP_SMALL,
    7: RegionLabel.POOLED_UP,
    8: RegionLabel.SHIFT_UP_FULL,
    9: RegionLabel.SHIFT_UP_FULL,
    10: RegionLabel.SHIFT_UP_FULL,
    11: RegionLabel.ZERO,
    12: RegionLabel.SHIFT_DOWN_SMALL,
}
_LABELS_2 = {
    0: RegionLabel.ZERO,
    1: RegionLabel.POOLED_DOWN,
    2: RegionLabel.SHIFT_DOWN_SMALL,
    3: RegionLabel.ZERO,
    4: RegionLabel.SHIFT_UP_FULL,
    5: RegionLabel.SHIFT_UP_FULL,
    6: RegionLabel.SHIFT_UP_FULL,
    7: RegionLabel.POOLED_UP,
    8: RegionLabel.SHIFT_UP_SMALL,
    9: RegionLabel.ZERO,
    10: RegionLabel.SHIFT_DOWN_FULL,
    11: RegionLabel.SHIFT_DOWN_FULL,
    12: RegionLabel.SHIFT_DOWN_FULL,
}


def label_regions(y, geometry: ThresholdGeometry):
    """Behaviour classes (terminal 1, terminal 2) for observation(s) ``y``.

    For a single pair (shape (2,)) returns a tuple of two
    :class:`RegionLabel`; for a batch (..., 2) returns two object arrays.
    Labels and estimates come from the same region assignment, so
    :func:`two_dim_soft_threshold` always agrees with the advertised class.
    """
    if not geometry.closed_form_valid:
        raise ValueError(f"region labels only exist for psi <= 1, got psi={geometry.psi}")
    y = np.asarray(y, dtype=float)
    code = _region_code(y[..., 0], y[..., 1], geometry.tau1, geometry.tau2, geometry.psi)
    if np.ndim(code) == 0:
        return _LABELS_1[int(code)], _LABELS_2[int(code)]
    lab1 = np.empty(code.shape, dtype=object)
    lab2 = np.empty(code.shape, dtype=object)
    for k, lab in _LABELS_1.items():
        lab1[code == k] = lab
    for k, lab in _LABELS_2.items():
        lab2[code == k] = lab
    return lab1, lab2


def two_dim_soft_threshold(y, geometry: ThresholdGeometry) -> np.ndarray:
    """Minimizer of the coupled scalar-channel objective, shape like ``y``.

    Uses the 13-region closed form for ``psi <= 1``; stronger coupling
    has no closed form here and is routed to the numeric oracle.
    """
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != 2:
        raise ValueError(f"expected pairs in the last axis, got shape {y.shape}")
    if geometry.closed_form_valid:
        est, _ = _threshold_kernel(y, geometry.tau1, geometry.tau2, geometry.psi)
        return est
    return scalar_prox_oracle(y, geometry.tau1, geometry.tau2, coupled_l1_utility(geometry.psi))


def block_soft_threshold(y, tau) -> np.ndarray:
    """Row-wise Euclidean shrinkage ``max(0, 1 - tau/||y_n||) y_n``.

    ``y`` has shape (..., J); rows with zero norm map to zero.  This is
    the exact prox of ``tau * sum_n ||y_n||``.
    """
    y = np.asarray(y, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if np.any(tau <= 0.0):
        raise ValueError("threshold tau must be positive")
    norms = np.sqrt(np.sum(y * y, axis=-1))
    safe = np.maximum(norms, 1e-300)
    factor = np.where(norms > 0.0, np.maximum(1.0 - tau / safe, 0.0), 0.0)
    return y * factor[..., None]


def weighted_block_soft_threshold(y, tau1, tau2) -> np.ndarray:
    """Exact prox of the pairwise Euclidean norm with per-coordinate weights.

    Minimizes ``(y1-v1)^2/(2 tau1) + (y2-v2)^2/(2 tau2) + sqrt(v1^2+v2^2)``.
    Stationarity off the origin gives ``v_j = y_j r / (r + tau_j)`` with
    ``r = ||v||`` solving the strictly decreasing scalar equation
    ``(y1/(r+tau1))^2 + (y2/(r+tau2))^2 = 1``; the solution is zero exactly
    when ``(y1/tau1)^2 + (y2/tau2)^2 <= 1``.  The root is bracketed by
    ``[0, ||y||]`` and resolved by bisection to relative machine precision,
    so this agrees with :func:`block_soft_threshold` when ``tau1 == tau2``
    (up to rounding) while remaining exact for unequal weights, where the
    generic numeric oracle's coordinate descent converges too slowly near
    the shrinkage boundary to be usable inside an iterated expectation.

    ``y`` has shape (..., 2); ``tau1``/``tau2`` broadcast against its
    leading dimensions.
    """
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != 2:
        raise ValueError(f"expected pair-valued input with last axis 2, got shape {y.shape}")
    tau1 = np.asarray(tau1, dtype=float)
    tau2 = np.asarray(tau2, dtype=float)
    if np.any(tau1 <= 0.0) or np.any(tau2 <= 0.0):
        raise ValueError("threshold weights must be positive")
    y1, y2 = y[..., 0], y[..., 1]
    zero = (y1 / tau1) ** 2 + (y2 / tau2) ** 2 <= 1.0
    lo = np.zeros(np.broadcast(y1, tau1, tau2).shape)
    hi = np.broadcast_to(np.hypot(y1, y2), lo.shape).copy()
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        positive = (y1 / (mid + tau1)) ** 2 + (y2 / (mid + tau2)) ** 2 > 1.0
        lo = np.where(positive, mid, lo)
        hi = np.where(positive, hi, mid)
    r = 0.5 * (lo + hi)
    out = np.stack([y1 * r / (r + tau1), y2 * r / (r + tau2)], axis=-1)
    return np.where(zero[..., None], 0.0, out)


def coupled_l1_utility(psi) -> Callable[[np.ndarray], np.ndarray]:
    """Penalty ``|v1| + |v2| + psi |v1 - v2|`` as a vectorized callable."""
    psi = np.asarray(psi, dtype=float)
    if np.any(psi < 0.0):
        raise ValueError("coupling strength psi must be nonnegative")

    def utility(v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return np.abs(v[..., 0]) + np.abs(v[..., 1]) + psi * np.abs(v[..., 0] - v[..., 1])

    return utility


def euclidean_norm_utility(v: np.ndarray) -> np.ndarray:
    """Penalty ``sqrt(v1^2 + v2^2)`` (the rotation-invariant norm)."""
    v = np.asarray(v, dtype=float)
    return np.hypot(v[..., 0], v[..., 1])


def _golden_min(f: Callable[[np.ndarray], np.ndarray], lo, hi, iters: int) -> np.ndarray:
    """Vectorized golden-section minimization of per-point 1-D slices.

    ``f`` maps a point array to values of the same shape; each slice must
    be unimodal on [lo_k, hi_k] (convexity suffices).  One evaluation per
    iteration after the two warm-up points.
    """
    a = np.array(lo, dtype=float, copy=True)
    b = np.array(hi, dtype=float, copy=True)
    h = b - a
    c = b - _INVPHI * h
    d = a + _INVPHI * h
    fc = f(c)
    fd = f(d)
    for _ in range(iters):
        shrink_right = fc < fd  # minimum lies in [a, d]
        a = np.where(shrink_right, a, c)
        b = np.where(shrink_right, d, b)
        h = b - a
        cand_c = b - _INVPHI * h
        cand_d = a + _INVPHI * h
        x_fresh = np.where(shrink_right, cand_c, cand_d)
        fx = f(x_fresh)
        c_old, fc_old = c, fc
        c = np.where(shrink_right, cand_c, d)
        fc = np.where(shrink_right, fx, fd)
        d = np.where(shrink_right, c_old, cand_d)
        fd = np.where(shrink_right, fc_old, fx)
    return np.where(fc <= fd, c, d)


def scalar_prox_oracle(
    y,
    tau1,
    tau2,
    utility: Callable[[np.ndarray], np.ndarray],
    *,
    grid_points: int = 41,
    golden_iters: int = 52,
    cd_sweeps: int = 40,
    tol: float = 5e-7,
) -> np.ndarray:
    """Numeric minimizer of the scalar-channel objective, independent of any closed form.

    ``y`` is one pair (shape (2,)) or a batch (K, 2); ``tau1``/``tau2``
    are scalars or per-point arrays.  ``utility`` must be convex,
    nonnegative, and vectorized over (..., 2) arrays.

    Strategy: bound the minimizer inside the box ``|v_j - y_j| <=
    sqrt(2 tau_j F(0))`` (valid because every term of F is nonnegative),
    then take the best of: the origin, ``y``, golden-section minima along
    the two axes and the diagonal ``v1 = v2`` (where nondifferentiable
    penalties kink), a dense grid, and exact coordinate descent refined
    from the two best starting points.  Raises
    :class:`OracleConvergenceError` if coordinate descent still moves
    after ``cd_sweeps`` sweeps.

    ``tol`` is the per-sweep movement threshold relative to the point's
    scale.  Comparison-based line search cannot resolve a smooth minimum
    below ``sqrt(eps * 2 tau |F|)`` (about 1e-7 here), where function
    differences fall under floating-point noise, so the default sits just
    above that floor; tightening ``tol`` beyond it only produces jitter.
    """
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    if y.shape[-1] != 2 or y.ndim > 2:
        raise ValueError(f"expected shape (2,) or (K, 2), got {y.shape}")
    pts = y.reshape(1, 2) if single else y
    if not np.all(np.isfinite(pts)):
        raise ValueError("observations must be finite")
    k = pts.shape[0]
    y1, y2 = pts[:, 0].copy(), pts[:, 1].copy()
    t1 = np.broadcast_to(np.asarray(tau1, dtype=float), (k,)).astype(float)
    t2 = np.broadcast_to(np.asarray(tau2, dtype=float), (k,)).astype(float)
    if np.any(t1 <= 0.0) or np.any(t2 <= 0.0):
        raise ValueError("threshold scales must be positive")

    def f_pair(v1, v2):
        v = np.stack(np.broadcast_arrays(v1, v2), axis=-1)
        vals = (
            (y1 - v[..., 0]) ** 2 / (2.0 * t1)
            + (y2 - v[..., 1]) ** 2 / (2.0 * t2)
            + utility(v)
        )
        return vals

    zero = np.zeros(k)
    f0 = f_pair(zero, zero)
    if not np.all(np.isfinite(f0)):
        raise ValueError("utility returned a non-finite value at the origin")
    half1 = np.sqrt(2.0 * t1 * f0) + 1e-12
    half2 = np.sqrt(2.0 * t2 * f0) + 1e-12
    lo1, hi1 = y1 - half1, y1 + half1
    lo2, hi2 = y2 - half2, y2 + half2

    best_v1 = zero.copy()
    best_v2 = zero.copy()
    best_f = f0.copy()

    def consider(v1, v2):
        nonlocal best_v1, best_v2, best_f
        fv = f_pair(v1, v2)
        if fv.ndim == 2:  # reduce a stacked set of candidates first
            idx = np.argmin(fv, axis=0)
            cols = np.arange(k)
            v1 = np.broadcast_to(v1, fv.shape)[idx, cols]
            v2 = np.broadcast_to(v2, fv.shape)[idx, cols]
            fv = fv[idx, cols]
        better = fv < best_f
        best_v1 = np.where(better, v1, best_v1)
        best_v2 = np.where(better, v2, best_v2)
        best_f = np.where(better, fv, best_f)

    consider(y1, y2)
    consider(_golden_min(lambda t: f_pair(t, zero), lo1, hi1, golden_iters), zero)
    consider(zero, _golden_min(lambda t: f_pair(zero, t), lo2, hi2, golden_iters))
    diag_lo = np.minimum(np.maximum(lo1, lo2), np.minimum(hi1, hi2))
    diag_hi = np.maximum(np.maximum(lo1, lo2), np.minimum(hi1, hi2))
    t_diag = _golden_min(lambda t: f_pair(t, t), diag_lo, diag_hi, golden_iters)
    consider(t_diag, t_diag)

    fracs = np.linspace(0.0, 1.0, grid_points)
    v2_rows = lo2[None, :] + fracs[:, None] * (hi2 - lo2)[None, :]
    for frac in fracs:
        v1_row = lo1 + frac * (hi1 - lo1)
        consider(np.broadcast_to(v1_row, v2_rows.shape), v2_rows)

    scale = np.maximum(1.0, np.maximum(np.abs(y1), np.abs(y2)))

    def coordinate_descent(v1_start, v2_start):
        v1 = v1_start.copy()
        v2 = v2_start.copy()
        for _ in range(cd_sweeps):
            v1_new = _golden_min(lambda t: f_pair(t, v2), lo1, hi1, golden_iters)
            v2_new = _golden_min(lambda t: f_pair(v1_new, t), lo2, hi2, golden_iters)
            move = np.maximum(np.abs(v1_new - v1), np.abs(v2_new - v2))
            v1, v2 = v1_new, v2_new
            if np.all(move <= tol * scale):
                return v1, v2
        worst = int(np.argmax(move / scale))
        raise OracleConvergenceError(
            f"coordinate descent still moving after {cd_sweeps} sweeps; "
            f"worst point y=({y1[worst]}, {y2[worst]}), tau=({t1[worst]}, {t2[worst]})"
        )

    consider(*coordinate_descent(best_v1, best_v2))
    consider(*coordinate_descent(y1, y2))

    out = np.stack((best_v1, best_v2), axis=-1)
    return out[0] if single else out


@dataclass
class SuiteResult:
    """Outcome of one closed-form versus oracle comparison run."""

    n_draws: int
    tolerance: float
    max_abs_deviation: float
    passed: bool
    routed_to_oracle: bool
    worst: Dict[str, Any]
    elapsed_seconds: float


def oracle_equivalence_suite(
    n_draws: int = 10000,
    seed: int = 0,
    psi: Optional[float] = None,
    tolerance: float = 1e-6,
    closed_form_fn: Optional[Callable] = None,
) -> SuiteResult:
    """Compare the closed-form threshold against the numeric oracle on random draws.

    Draws ``y`` uniform on [-5, 5]^2, scales uniform on [0.05, 2]^2, and
    coupling uniform on [0, 1] unless ``psi`` pins it.  A pinned
    ``psi > 1`` exercises the documented routing of the public threshold
    to the oracle itself (reported via ``routed_to_oracle``).

    ``closed_form_fn(y, tau1, tau2, psi) -> estimates`` overrides the
    closed-form side; this seam exists so self-test tooling can verify
    that a deliberately corrupted map is caught.
    """
    if n_draws < 1:
        raise ValueError("need at least one draw")
    start = time.perf_counter()
    rng = np.random.Generator(np.random.Philox(seed))
    y = rng.uniform(-5.0, 5.0, (n_draws, 2))
    taus = rng.uniform(0.05, 2.0, (n_draws, 2))
    if psi is None:
        psi_arr = rng.uniform(0.0, 1.0, n_draws)
        routed = False
    else:
        psi_arr = np.full(n_draws, float(psi))
        routed = float(psi) > 1.0

    if closed_form_fn is not None:
        closed = closed_form_fn(y, taus[:, 0], taus[:, 1], psi_arr)
    elif routed:
        closed = scalar_prox_oracle(y, taus[:, 0], taus[:, 1], coupled_l1_utility(psi_arr))
    else:
        closed, _ = _threshold_kernel(y, taus[:, 0], taus[:, 1], psi_arr)
    oracle = scalar_prox_oracle(y, taus[:, 0], taus[:, 1], coupled_l1_utility(psi_arr))

    dev = np.max(np.abs(closed - oracle), axis=1)
    worst_idx = int(np.argmax(dev))
    max_dev = float(dev[worst_idx])
    elapsed = time.perf_counter() - start
    return SuiteResult(
        n_draws=n_draws,
        tolerance=tolerance,
        max_abs_deviation=max_dev,
        passed=bool(max_dev <= tolerance),
        routed_to_oracle=routed,
        worst={
            "y": (float(y[worst_idx, 0]), float(y[worst_idx, 1])),
            "tau1": float(taus[worst_idx, 0]),
            "tau2": float(taus[worst_idx, 1]),
            "psi": float(psi_arr[worst_idx]),
            "closed_form": (float(closed[worst_idx, 0]), float(closed[worst_idx, 1])),
            "oracle": (float(oracle[worst_idx, 0]), float(oracle[worst_idx, 1])),
            "deviation": max_dev,
        },
        elapsed_seconds=elapsed,
    )
