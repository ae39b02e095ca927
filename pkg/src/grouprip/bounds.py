"""Closed-form bound evaluators.

These evaluate scaling laws, not certified counts: every unspecified
universal constant is an explicit argument defaulting to 1, logarithms are
natural, and multiplicative log factors are clamped below by 1 via
:func:`clamped_log` so a bound never collapses at ``s = 1``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from ._rng import make_rng

__all__ = [
    "BoundInputs",
    "GnspConstants",
    "clamped_log",
    "measurement_bound",
    "dense_lower_bound",
    "grip_to_gnsp",
    "covnum_volumetric",
    "maurey_K",
    "covnum_maurey",
    "extended_maurey_bound",
    "chaos_Eu",
    "gamma2_entropy_estimate",
    "empirical_covering",
    "GNSP_THRESHOLD",
]

GNSP_THRESHOLD = 4.0 / math.sqrt(41.0)


def clamped_log(t: float) -> float:
    """``max(ln t, 1)``; nonpositive ``t`` maps to 1."""
    if t <= 0:
        return 1.0
    return max(math.log(t), 1.0)


@dataclass(frozen=True)
class BoundInputs:
    s: int
    G: int
    g: int
    D: int
    d: int
    L: int
    delta: float
    eta: float
    mu: float | None = None
    omega: float | None = None
    m: int | None = None
    c_const: float = 1.0

    def __post_init__(self):
        if self.D != self.d * self.L:
            raise ValueError(f"D={self.D} != d*L={self.d * self.L}")
        if not 1 <= self.s <= self.G:
            raise ValueError(f"s={self.s} outside [1, G={self.G}]")
        if not 1 <= self.g <= self.D:
            raise ValueError(f"g={self.g} outside [1, D={self.D}]")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if not 0 < self.eta < 1:
            raise ValueError("eta must lie in (0, 1)")
        if self.c_const <= 0:
            raise ValueError("c_const must be positive")


def measurement_bound(inputs: BoundInputs, variant: str = "independent_thm2") -> float:
    """Per-sensor measurement count predicted for a GRIP of order ``s``.

    ``c * delta^-2 * [s k^2 ln(D) ln(s)^2 (ln(G) + g ln(s k)) + ln(1/eta)]``
    with ``k = mu`` for independent blocks and ``k = omega`` for a shared
    block; each logarithm is clamped below by 1.
    """
    if variant == "independent_thm2":
        kappa = inputs.mu
    elif variant == "shared_thm3":
        kappa = inputs.omega
    else:
        raise ValueError(f"unknown variant {variant!r}")
    if kappa is None or kappa < 0:
        raise ValueError(f"variant {variant} needs a nonnegative {'mu' if variant.startswith('ind') else 'omega'}")
    s, lg = inputs.s, clamped_log
    core = s * kappa**2 * lg(inputs.D) * lg(s) ** 2 * (lg(inputs.G) + inputs.g * lg(s * kappa))
    return inputs.c_const / inputs.delta**2 * (core + lg(1.0 / inputs.eta))


def dense_lower_bound(s: int, G: int, g: int, c1: float = 1.0) -> float:
    """Total measurements any stable decoder needs: ``c1 (s ln(eG/s) + s g)``."""
    if not 1 <= s <= G:
        raise ValueError(f"s={s} outside [1, {G}]")
    return c1 * (s * math.log(math.e * G / s) + s * g)


@dataclass(frozen=True)
class GnspConstants:
    rho: float
    tau: float
    C: float
    Dconst: float
    valid: bool

    def as_dict(self) -> dict:
        return asdict(self)


def grip_to_gnsp(delta: float, denominator: str = "linear") -> GnspConstants:
    """Null space constants implied by a GRIP constant of order ``2s``.

    ``rho = delta / den`` and ``tau = sqrt(1 + delta) / den``, then
    ``C = (1+rho)^2/(1-rho)``, ``D = (3+rho) tau/(1-rho)``.

    ``denominator="linear"`` uses ``den = sqrt(1 - delta^2) - delta/4``, the
    only choice for which ``rho < 1`` is equivalent to ``delta < 4/sqrt(41)``
    (at the threshold ``den = 5/sqrt(41) - 1/sqrt(41) = delta``).
    ``denominator="quadratic"`` uses ``sqrt(1 - delta^2) - delta^2/4`` as it
    appears in print, whose ``rho = 1`` crossing lies elsewhere. ``C`` and ``D``
    are ``inf`` whenever ``rho >= 1``.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if denominator == "linear":
        den = math.sqrt(1.0 - delta**2) - delta / 4.0
    elif denominator == "quadratic":
        den = math.sqrt(1.0 - delta**2) - delta**2 / 4.0
    else:
        raise ValueError(f"unknown denominator variant {denominator!r}")
    if den <= 0:
        raise ValueError(f"denominator {den:.3g} is not positive for delta={delta}")
    rho = delta / den
    tau = math.sqrt(1.0 + delta) / den
    # for the linear variant rho < 1 is exactly delta < 4/sqrt(41); test that to avoid rounding at the edge
    valid = delta < GNSP_THRESHOLD if denominator == "linear" else rho < 1
    if valid:
        C = (1 + rho) ** 2 / (1 - rho)
        Dc = (3 + rho) * tau / (1 - rho)
    else:
        C = Dc = math.inf
    return GnspConstants(rho=rho, tau=tau, C=C, Dconst=Dc, valid=valid)


def covnum_volumetric(s: int, G: int, g: int, u: float) -> float:
    """Log of the volumetric covering bound ``(eG/s)^s (1 + 4/u)^(2sg)``."""
    if u <= 0:
        raise ValueError("u must be positive")
    if not 1 <= s <= G or g < 1:
        raise ValueError("need 1 <= s <= G and g >= 1")
    return s * math.log(math.e * G / s) + 2 * s * g * math.log1p(4.0 / u)


def maurey_K(mu: float, M_total: float, eps: float) -> int:
    """Empirical-method sample count ``ceil(16 mu^2 ln(M) / eps^2)``, at least 1."""
    if M_total < 2 or eps <= 0 or mu < 0:
        raise ValueError("need M_total >= 2, eps > 0, mu >= 0")
    return max(1, math.ceil(16.0 * mu**2 * math.log(M_total) / eps**2))


def covnum_maurey(mu: float, D: int, G: int, g: int, eps: float) -> float:
    """Bound on ``sqrt(log N)`` of the group-l1 ball at scale ``eps``.

    ``mu sqrt(ln D)/eps * (sqrt(ln G) + sqrt(g ln(1 + 8/eps)))`` with the
    implicit constant set to 1.
    """
    if eps <= 0 or mu < 0 or D < 1 or G < 1 or g < 1:
        raise ValueError("invalid covering-number inputs")
    return mu * math.sqrt(math.log(D)) / eps * (math.sqrt(math.log(G)) + math.sqrt(g * math.log1p(8.0 / eps)))


def extended_maurey_bound(A_const: float, u: float, per_set_covnums: Sequence[float], constant: float = 16.0) -> float:
    """Log covering bound for a convex hull of several sets.

    ``constant * (A/u)^2 * ln(sum_i N_i)`` where ``N_i`` are the covering
    numbers of the individual sets at radius ``u/2``. The default constant 16
    is the sample count used in the empirical-method argument.
    """
    if u <= 0:
        raise ValueError("u must be positive")
    if len(per_set_covnums) == 0:
        raise ValueError("need at least one covering number")
    if any(n < 1 for n in per_set_covnums):
        raise ValueError("covering numbers must be >= 1")
    return constant * (A_const / u) ** 2 * math.log(math.fsum(per_set_covnums))


def chaos_Eu(gamma2: float, rho_F: float, rho_op: float, u: float) -> float:
    """``gamma2^2 + rho_F gamma2 + sqrt(u) rho_F rho_op + u rho_op^2``."""
    if u < 1:
        raise ValueError("u must be >= 1")
    if min(gamma2, rho_F, rho_op) < 0:
        raise ValueError("radii and gamma2 must be nonnegative")
    return gamma2**2 + rho_F * gamma2 + math.sqrt(u) * rho_F * rho_op + u * rho_op**2


def gamma2_entropy_estimate(mu: float, s: int, D: int, G: int, g: int) -> float:
    """Entropy-integral estimate of gamma2 for the lifted sparse sphere.

    ``sqrt(s) mu sqrt(ln D) ln(s) (sqrt(ln G) + sqrt(g ln(s mu)))``. The
    multiplicative ``ln D``, ``ln s`` and the ``ln(s mu)`` inside the square
    root are clamped at 1; ``ln G`` is additive and left as is.
    """
    if mu < 0 or not 1 <= s <= G or g < 1 or D < 1:
        raise ValueError("invalid gamma2 inputs")
    lg = clamped_log
    return math.sqrt(s) * mu * math.sqrt(lg(D)) * lg(s) * (math.sqrt(math.log(G)) + math.sqrt(g * lg(s * mu)))


def _distance_rows(points: np.ndarray, center: np.ndarray, metric: str, basis) -> np.ndarray:
    diff = points - center
    if metric == "euclidean":
        return np.linalg.norm(diff, axis=1)
    # ||v||_V = max_l ||Psi_l v||_2
    blocks = basis.apply(diff.T).T.reshape(len(points), basis.sensors, basis.block_dim)
    return np.linalg.norm(blocks, axis=2).max(axis=1)


def empirical_covering(
    points,
    radius: float,
    metric: str = "euclidean",
    basis=None,
    strategy: str = "first_uncovered",
    shuffle_seed: int | None = None,
) -> int:
    """Size of a greedy ``radius``-net of a finite point cloud.

    ``first_uncovered`` walks the points in order (optionally after a seeded
    shuffle) and opens a ball at each point not yet covered.
    ``max_coverage`` opens the ball covering the most uncovered points, ties
    to the lowest index; it needs the full distance matrix. Either way the
    result upper-bounds the covering number of the cloud with centers in the
    cloud. ``metric="lifted_V"`` measures ``max_l ||Psi_l (p - q)||`` and
    needs ``basis``.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    pts = np.asarray(points)
    if pts.ndim == 1:
        pts = pts[:, None]
    if len(pts) == 0:
        raise ValueError("point cloud is empty")
    if metric not in ("euclidean", "lifted_V"):
        raise ValueError(f"unknown metric {metric!r}")
    if metric == "lifted_V" and basis is None:
        raise ValueError("lifted_V metric needs a basis")
    if shuffle_seed is not None:
        pts = pts[make_rng(shuffle_seed).permutation(len(pts))]
    n = len(pts)
    covered = np.zeros(n, dtype=bool)
    count = 0
    if strategy == "first_uncovered":
        for i in range(n):
            if covered[i]:
                continue
            covered |= _distance_rows(pts, pts[i], metric, basis) <= radius
            count += 1
        return count
    if strategy != "max_coverage":
        raise ValueError(f"unknown strategy {strategy!r}")
    within = np.stack([_distance_rows(pts, pts[i], metric, basis) <= radius for i in range(n)])
    while not covered.all():
        gain = (within & ~covered).sum(axis=1)
        best = int(np.argmax(gain))
        covered |= within[best]
        count += 1
    return count
