"""Energy functionals on the constraint sphere and their gradients.

The kinetic term is assembled on links (forward differences), so that for
fields whose supports are separated by a zero node layer the energy is
exactly additive. All reductions use numpy's deterministic summation order,
keeping repeated runs bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import ProblemSpec, dual_norm_W, potential_values
from .field import FieldError, GridFunction

ON_MANIFOLD_TOL = 1e-6


@dataclass
class EnergyBreakdown:
    """J split into kinetic and potential parts, next to its autonomous value."""

    kinetic: float
    potential: float
    total: float
    autonomous: float

    @property
    def deviation(self) -> float:
        return self.total - self.autonomous

    def to_dict(self) -> dict:
        return {
            "kinetic": self.kinetic,
            "potential": self.potential,
            "total": self.total,
            "autonomous": self.autonomous,
            "deviation": self.deviation,
        }


def mass_I(u: GridFunction, p: float) -> float:
    """Quadrature of |u|^p (the constraint functional; equals |u|_p^p)."""
    return float(np.sum(np.abs(u.values) ** p) * u.grid.weight)


def kinetic_energy(u: GridFunction) -> float:
    """Link-based quadrature of |grad u|^2 (forward differences, Dirichlet)."""
    v = u.values
    h = u.grid.h
    total = 0.0
    for ax in range(u.grid.N):
        d = np.diff(v, axis=ax)
        total += float(np.sum(d * d))
    return total * h ** (u.grid.N - 2)


def energy_J(u: GridFunction, spec: ProblemSpec) -> EnergyBreakdown:
    """J(u) = int |grad u|^2 + V u^2 with V = Vinf - W, plus the autonomous total."""
    kin = kinetic_energy(u)
    V = potential_values(spec, u.grid)
    usq = u.values * u.values
    pot = float(np.sum(V * usq) * u.grid.weight)
    mass2 = float(np.sum(usq) * u.grid.weight)
    return EnergyBreakdown(kinetic=kin, potential=pot, total=kin + pot,
                           autonomous=kin + spec.Vinf * mass2)


def laplacian(u: GridFunction) -> np.ndarray:
    """Standard (2N+1)-point discrete Laplacian with Dirichlet exterior zeros."""
    v = u.values
    h2 = u.grid.h ** 2
    out = -2.0 * u.grid.N * v.copy()
    for ax in range(u.grid.N):
        lo = [slice(None)] * u.grid.N
        hi = [slice(None)] * u.grid.N
        lo[ax] = slice(None, -1)
        hi[ax] = slice(1, None)
        out[tuple(lo)] += v[tuple(hi)]
        out[tuple(hi)] += v[tuple(lo)]
    out /= h2
    # Dirichlet boundary rows are not part of the unknowns.
    for ax in range(u.grid.N):
        edge = [slice(None)] * u.grid.N
        edge[ax] = 0
        out[tuple(edge)] = 0.0
        edge[ax] = -1
        out[tuple(edge)] = 0.0
    return out


def euler_lagrange_residual(u: GridFunction, lam: float, spec: ProblemSpec) -> float:
    """Discrete L^2 norm of -Delta u + V u - lam |u|^(p-2) u over interior nodes."""
    V = potential_values(spec, u.grid)
    res = -laplacian(u) + V * u.values - lam * np.abs(u.values) ** (spec.p - 2) * u.values
    mask = u.grid.interior_mask()
    return float(np.sqrt(np.sum(res[mask] ** 2) * u.grid.weight))


def manifold_gradient(u: GridFunction, spec: ProblemSpec) -> GridFunction:
    """Field representative of J'(u) - mu I'(u) with mu = (2/p) J(u).

    Vanishes exactly when u solves the discrete equation with lambda = J(u);
    its pairing with any direction v equals d/dt J(normalize(u + t v)) at t=0.
    """
    m = mass_I(u, spec.p)
    if abs(m - 1.0) > ON_MANIFOLD_TOL:
        raise FieldError(f"field is off the constraint sphere: I(u) = {m}")
    V = potential_values(spec, u.grid)
    J = kinetic_energy(u) + float(np.sum(V * u.values ** 2) * u.grid.weight)
    g = 2.0 * (-laplacian(u) + V * u.values - J * np.abs(u.values) ** (spec.p - 2) * u.values)
    return GridFunction(u.grid, g)


def gradient_norm(g: GridFunction) -> float:
    """Discrete L^2 norm of a gradient representative."""
    return float(np.sqrt(np.sum(g.values ** 2) * g.grid.weight))


def inner_l2(u: GridFunction, v: GridFunction) -> float:
    """Quadrature pairing sum h^N u_i v_i."""
    return float(np.sum(u.values * v.values) * u.grid.weight)


def deviation_bound(u: GridFunction, spec: ProblemSpec) -> tuple[float, float]:
    """(|J(u) - Jinf(u)|, |W|_q): the first never exceeds the second on the sphere."""
    m = mass_I(u, spec.p)
    if abs(m - 1.0) > ON_MANIFOLD_TOL:
        raise FieldError(f"field is off the constraint sphere: I(u) = {m}")
    br = energy_J(u, spec)
    return abs(br.deviation), dual_norm_W(spec, u.grid)
