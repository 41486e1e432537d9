"""Functionals on regular-plus-singular decomposed states.

A state stores u = phi + q * G_lam through (lam, q, phi).  All quadratic
quantities avoid the cancellation of nearly equal masses: the combination
lam (||phi||^2 - ||u||^2) is always computed as
-lam (2 q <phi, G_lam> + q^2/(4 pi lam)).

The p-norm integrates |phi + q G|^p on the grid with the Green values
taken analytically at the nodes; the innermost cell [0, r_1] uses the
model u ~ a log r + b fitted on the two innermost nodes and integrated
with a Gauss-Laguerre rule in the variable t = -2 log(r/r_1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DomainError
from .grid import RadialField, RadialGrid
from .special import PhysicalParams, green_value, theta

_LAGUERRE_N = 32
_lag_nodes: np.ndarray | None = None
_lag_weights: np.ndarray | None = None


def _laguerre_rule():
    """Gauss-Laguerre nodes/weights (weight e^{-t} on [0, inf)), Golub-Welsch."""
    global _lag_nodes, _lag_weights
    if _lag_nodes is None:
        k = np.arange(_LAGUERRE_N)
        jac = (
            np.diag(2.0 * k + 1.0)
            + np.diag(k[1:].astype(float), 1)
            + np.diag(k[1:].astype(float), -1)
        )
        vals, vecs = np.linalg.eigh(jac)
        _lag_nodes, _lag_weights = vals, vecs[0] ** 2
    return _lag_nodes, _lag_weights


@dataclass(frozen=True, eq=False)
class DecomposedState:
    """u = phi + q G_lam with gauge-fixed charge q >= 0."""

    lam: float
    q: float
    phi: RadialField

    def __post_init__(self):
        if not self.lam > 0:
            raise DomainError("DecomposedState: lam must be positive")
        if self.q < 0:
            raise DomainError("DecomposedState: charge is gauge-fixed to q >= 0")

    @property
    def grid(self) -> RadialGrid:
        return self.phi.grid

    @property
    def green_values(self) -> np.ndarray:
        """G_lam sampled at the nodes (cached)."""
        cached = self.__dict__.get("_green")
        if cached is None:
            cached = green_value(self.lam, self.grid.nodes)
            object.__setattr__(self, "_green", cached)
        return cached

    @property
    def u_values(self) -> np.ndarray:
        return self.phi.values + self.q * self.green_values


@dataclass(frozen=True)
class FunctionalReport:
    """All functional values of one state at one frequency.

    The identities reduced_action = (p-2)/(2p) lp_p,
    action = energy + (omega/2) mass, nehari = quadratic_form_omega - lp_p
    and action = quadratic_form_omega/2 - lp_p/p hold by construction.
    """

    omega: float
    mass: float
    lp_p: float
    gradsq_phi: float
    quadratic_form: float
    quadratic_form_omega: float
    energy: float
    action: float
    nehari: float
    reduced_action: float

    def as_dict(self) -> dict:
        return {
            "omega": self.omega,
            "mass": self.mass,
            "lp_p": self.lp_p,
            "gradsq_phi": self.gradsq_phi,
            "quadratic_form": self.quadratic_form,
            "quadratic_form_omega": self.quadratic_form_omega,
            "energy": self.energy,
            "action": self.action,
            "nehari": self.nehari,
            "reduced_action": self.reduced_action,
        }


def log_cell_lp(grid: RadialGrid, u1: float, u2: float, p: float):
    """Integral of |a log r + b|^p 2 pi r dr over [0, r_1] and its u-partials.

    The model is fitted through (r_1, u1), (r_2, u2).  Substituting
    r = r_1 e^{-t/2} turns the integral into
    pi r_1^2 int_0^inf |u1 - (a/2) t|^p e^{-t} dt.
    Returns (value, d/du1, d/du2).
    """
    t, w = _laguerre_rule()
    r1, r2 = grid.nodes[0], grid.nodes[1]
    span = math.log(r2 / r1)
    a = (u2 - u1) / span
    arg = u1 - 0.5 * a * t
    mag = np.abs(arg)
    sgn = np.sign(arg)
    pref = math.pi * r1 * r1
    val = pref * float(np.dot(w, mag**p))
    pow1 = mag ** (p - 1.0) * sgn
    d_direct = pref * p * float(np.dot(w, pow1))
    d_slope = -0.5 * pref * p * float(np.dot(w, t * pow1))
    du1 = d_direct - d_slope / span
    du2 = d_slope / span
    return val, du1, du2


def lp_p_value(grid: RadialGrid, u: np.ndarray, p: float) -> float:
    """||u||_p^p on the grid (flat innermost cell replaced by the log model)."""
    w = grid.weights
    mag = np.abs(u)
    P = float(np.dot(w, mag**p))
    P -= math.pi * grid.nodes[0] ** 2 * mag[0] ** p
    cell, _, _ = log_cell_lp(grid, float(u[0]), float(u[1]), p)
    return P + cell


def lp_p_with_grad(grid: RadialGrid, u: np.ndarray, p: float):
    """||u||_p^p on the grid and its partial derivatives w.r.t. the node values."""
    w = grid.weights
    mag = np.abs(u)
    P = float(np.dot(w, mag**p))
    dP = p * w * mag ** (p - 1.0) * np.sign(u)
    # replace the flat innermost-cell closure by the log model
    flat = math.pi * grid.nodes[0] ** 2
    P -= flat * mag[0] ** p
    dP[0] -= flat * p * mag[0] ** (p - 1.0) * np.sign(u[0])
    cell, d1, d2 = log_cell_lp(grid, float(u[0]), float(u[1]), p)
    P += cell
    dP[0] += d1
    dP[1] += d2
    return P, dP


def state_lp_p(state: DecomposedState, p: float) -> float:
    """||u||_p^p for u = phi + q G_lam, log-model innermost cell included."""
    if p < 2:
        raise DomainError("state_lp_p: requires p >= 2")
    P, _ = lp_p_with_grad(state.grid, state.u_values, p)
    return P


def green_overlap(state: DecomposedState) -> float:
    """Quadrature inner product <phi, G_lam>."""
    return state.grid.integrate_values(state.phi.values * state.green_values)


def mass(state: DecomposedState) -> float:
    """||u||_2^2 with the singular self-term taken in closed form."""
    g = state.grid
    phi2 = g.integrate_values(state.phi.values**2)
    return (
        phi2
        + 2.0 * state.q * green_overlap(state)
        + state.q**2 / (4.0 * math.pi * state.lam)
    )


def quadratic_form(state: DecomposedState, params: PhysicalParams) -> float:
    """Defect quadratic form Q; the lam (||phi||^2 - ||u||^2) term is
    evaluated cancellation-free as -lam (2 q <phi,G> + q^2/(4 pi lam))."""
    gsq = state.grid.grad_sq_values(state.phi.values)
    middle = -state.lam * (
        2.0 * state.q * green_overlap(state)
        + state.q**2 / (4.0 * math.pi * state.lam)
    )
    coeff = params.alpha + theta(state.lam)
    return gsq + middle + coeff * state.q**2


def energy(state: DecomposedState, params: PhysicalParams) -> float:
    """E = Q/2 - ||u||_p^p / p."""
    return 0.5 * quadratic_form(state, params) - state_lp_p(state, params.p) / params.p


def action(state: DecomposedState, params: PhysicalParams, omega: float) -> float:
    """S_omega = E + (omega/2) ||u||_2^2."""
    return energy(state, params) + 0.5 * omega * mass(state)


def nehari(state: DecomposedState, params: PhysicalParams, omega: float) -> float:
    """I_omega = Q_omega - ||u||_p^p, zero exactly on the Nehari manifold."""
    return (
        quadratic_form(state, params)
        + omega * mass(state)
        - state_lp_p(state, params.p)
    )


def s_tilde(state: DecomposedState, params: PhysicalParams) -> float:
    """Reduced action (p-2)/(2p) ||u||_p^p; equals S_omega on the manifold."""
    p = params.p
    return (p - 2.0) / (2.0 * p) * state_lp_p(state, p)


def evaluate(state: DecomposedState, params: PhysicalParams, omega: float) -> FunctionalReport:
    """Full functional report; the report identities hold by construction."""
    p = params.p
    m = mass(state)
    P = state_lp_p(state, p)
    gsq = state.grid.grad_sq_values(state.phi.values)
    Q = quadratic_form(state, params)
    Qw = Q + omega * m
    E = 0.5 * Q - P / p
    return FunctionalReport(
        omega=omega,
        mass=m,
        lp_p=P,
        gradsq_phi=gsq,
        quadratic_form=Q,
        quadratic_form_omega=Qw,
        energy=E,
        action=E + 0.5 * omega * m,
        nehari=Qw - P,
        reduced_action=(p - 2.0) / (2.0 * p) * P,
    )


def rebase(state: DecomposedState, nu: float) -> DecomposedState:
    """Same u re-expressed with decomposition parameter nu:
    phi_nu = phi_lam + q (G_lam - G_nu)."""
    if nu <= 0:
        raise DomainError("rebase: nu must be positive")
    g_new = green_value(nu, state.grid.nodes)
    phi_nu = state.phi.values + state.q * (state.green_values - g_new)
    out = DecomposedState(lam=float(nu), q=state.q, phi=RadialField(state.grid, phi_nu))
    object.__setattr__(out, "_green", g_new)
    return out


def lagrange_frequency(state: DecomposedState, params: PhysicalParams) -> float:
    """Multiplier omega = (||u||_p^p - Q(u)) / ||u||_2^2 of the mass constraint."""
    m = mass(state)
    if m <= 0:
        raise ContractError("lagrange_frequency: state has nonpositive mass")
    return (state_lp_p(state, params.p) - quadratic_form(state, params)) / m


def origin_value(f: RadialField) -> float:
    """f(0) by quadratic extrapolation from the three innermost nodes."""
    r = f.grid.nodes[:3]
    coeffs = np.linalg.solve(np.vander(r, 3, increasing=True), f.values[:3])
    return float(coeffs[0])
