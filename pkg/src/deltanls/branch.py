"""Closed-form structure of the singular-only Nehari branch.

For states q G_lam the manifold condition I_omega = 0 reduces to a scalar
equation: the branch exists exactly where

    g(lam) = (omega - lam)/(4 pi) + lam (alpha + theta(lam)) > 0,

with charge |q| = g(lam)^{1/(p-2)} / K_p, K_p = (||G_1||_p^p)^{1/(p-2)}.
g decreases on (0, omega0), increases past omega0, and g(omega0) =
(omega - omega0)/(4 pi), so for omega < omega0 two roots lam1 < omega0 <
lam2 bound a forbidden interval; at or above omega0 the branch covers all
lam (minus the touch point at omega = omega0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .special import PhysicalParams, green_lp_p, theta


@dataclass(frozen=True)
class NehariBranchPoint:
    lam: float
    g: float
    q: float
    action: float
    admissible: bool


def g_function(lam: float, omega: float, params: PhysicalParams):
    """Branch admissibility function and its derivative alpha + theta(lam)."""
    lam_a = np.asarray(lam, dtype=float)
    if (lam_a <= 0).any():
        raise DomainError("g_function: lam must be positive")
    slope = params.alpha + theta(lam_a)
    val = (omega - lam_a) / (4.0 * math.pi) + lam_a * slope
    if val.ndim == 0:
        return float(val), float(slope)
    return val, slope


def _bisect_g(omega, params, lo, hi, tol=1e-13):
    """Bisection for g = 0 on a bracket where g changes sign."""
    glo, _ = g_function(lo, omega, params)
    ghi, _ = g_function(hi, omega, params)
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    if glo * ghi > 0:
        raise DomainError("branch_roots: bracket does not change sign")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm, _ = g_function(mid, omega, params)
        if abs(gm) < tol or (hi - lo) < 1e-16 * max(1.0, mid):
            return mid
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def branch_roots(omega: float, params: PhysicalParams):
    """Roots (lam1, lam2) of g for omega < omega0, else None.

    g has its global minimum (omega - omega0)/(4 pi) at omega0, so roots
    exist iff omega < omega0; they bracket omega0 and are found by
    bisection on the two monotone pieces.
    """
    if omega <= 0:
        raise DomainError("branch_roots: omega must be positive")
    om0 = params.omega0
    if omega >= om0:
        return None
    lo = 1e-8 * om0
    lam1 = _bisect_g(omega, params, lo, om0)
    hi = 2.0 * om0
    while g_function(hi, omega, params)[0] <= 0:
        hi *= 2.0
        if hi > 1e12 * om0:
            raise DomainError("branch_roots: failed to bracket the upper root")
    lam2 = _bisect_g(omega, params, om0, hi)
    return lam1, lam2


def branch_point(lam: float, omega: float, params: PhysicalParams) -> NehariBranchPoint:
    """Singular branch state at lam: charge and reduced action, or the
    inadmissible marker when g(lam) <= 0."""
    if lam <= 0:
        raise DomainError("branch_point: lam must be positive")
    g, _ = g_function(lam, omega, params)
    if g <= 0:
        return NehariBranchPoint(lam=lam, g=g, q=0.0, action=0.0, admissible=False)
    p = params.p
    c_p = green_lp_p(1.0, p)
    k_p = c_p ** (1.0 / (p - 2.0))
    q = g ** (1.0 / (p - 2.0)) / k_p
    act = (p - 2.0) / (2.0 * p) * c_p * q**p / lam
    return NehariBranchPoint(lam=lam, g=g, q=q, action=act, admissible=True)


def branch_scan(omega: float, params: PhysicalParams, lam_grid) -> list[NehariBranchPoint]:
    """branch_point at every lam of the scan grid."""
    return [branch_point(float(lam), omega, params) for lam in np.asarray(lam_grid, float)]
