"""Explicit odd path and sphere-map constructions on the constraint sphere,
and their exact maxima.

A two-block path interpolates trigonometrically between blocks u1, u2 and is
renormalized pointwise; when the blocks have layer-separated supports its
energy maximum has a closed form, which the dense sampling must reproduce.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .domain import ProblemSpec, potential_values
from .energy import kinetic_energy, mass_I
from .field import (FieldError, GridFunction, layer_separated, lp_norm,
                    lp_normalize, nodal_domains, split_signs, translate)


class PathError(ValueError):
    pass


class PathFamily:
    """Odd loop gamma(theta) = normalize(u1 cos theta + u2 sin theta)."""

    def __init__(self, u1: GridFunction, u2: GridFunction, p: float, samples: int = 512):
        for u in (u1, u2):
            if abs(mass_I(u, p) - 1.0) > 1e-6:
                raise PathError("path blocks must lie on the constraint sphere")
        d = float(np.max(np.abs(u1.values - u2.values)))
        s = float(np.max(np.abs(u1.values + u2.values)))
        if min(d, s) < 1e-12:
            raise PathError("degenerate path: u2 = +/- u1")
        self.u1 = u1
        self.u2 = u2
        self.p = p
        self.samples = samples

    def at(self, theta: float) -> GridFunction:
        v = self.u1.values * math.cos(theta) + self.u2.values * math.sin(theta)
        return lp_normalize(GridFunction(self.u1.grid, v), self.p)


class SampledPath:
    """Odd loop stored as fields at uniform theta samples on [0, pi).

    Values on [pi, 2 pi) follow by the exact reflection gamma(theta + pi) =
    -gamma(theta); between samples the fields are blended linearly and
    renormalized.
    """

    def __init__(self, thetas: np.ndarray, fields: list[GridFunction], p: float):
        self.thetas = thetas
        self.fields = fields
        self.p = p
        self.samples = len(fields)

    def at(self, theta: float) -> GridFunction:
        th = theta % (2.0 * math.pi)
        sign = 1.0
        if th >= math.pi:
            th -= math.pi
            sign = -1.0
        step = math.pi / self.samples
        j = int(th // step)
        frac = th / step - j
        # snap to a stored sample when angle reduction lands within rounding of it
        if frac > 1.0 - 1e-9:
            j += 1
            frac = 0.0
        sign_j = 1.0
        if j == self.samples:
            j = 0
            sign_j = -1.0  # wrap through the reflection
        a = sign_j * self.fields[j].values
        if frac < 1e-9:
            blend = a.copy()
        else:
            if j + 1 < self.samples:
                b = self.fields[j + 1].values
            else:
                b = -self.fields[0].values
            blend = (1.0 - frac) * a + frac * b
        out = lp_normalize(GridFunction(self.fields[0].grid, blend), self.p)
        if sign < 0:
            out = -out
        return out

    @classmethod
    def from_path(cls, path, samples: int, p: float) -> "SampledPath":
        thetas = np.linspace(0.0, math.pi, samples, endpoint=False)
        return cls(thetas, [path.at(t) for t in thetas], p)


def disjoint_support_max(J1: float, J2: float, p: float) -> float:
    """Closed-form extremal level of a disjoint-support two-block path.

    For positive block energies this is the interior peak of the energy
    profile; for mixed signs the positive endpoint; when both energies are
    nonpositive the renormalization amplifies magnitude and the distinguished
    stationary value is the interior trough.
    """
    q = p / (p - 2.0)
    if J1 > 0.0 and J2 > 0.0:
        return (J1 ** q + J2 ** q) ** (1.0 / q)
    if J1 <= 0.0 < J2:
        return J2
    if J2 <= 0.0 < J1:
        return J1
    return -((abs(J1) ** q + abs(J2) ** q) ** (1.0 / q))


def two_block_energy(J1: float, J2: float, p: float, theta: float) -> float:
    """Energy along the disjoint-support path as a function of theta."""
    c, s = math.cos(theta), math.sin(theta)
    return (J1 * c * c + J2 * s * s) / (abs(c) ** p + abs(s) ** p) ** (2.0 / p)


def path_max_from_energies(J1: float, J2: float, p: float, samples: int = 512) -> tuple[float, float]:
    """Dense theta-sampling of the disjoint-support energy profile, refined by
    bounded golden-section search. Independent route to disjoint_support_max.

    Targets the same stationary value as the closed form: the profile maximum
    unless both energies are nonpositive, in which case the interior trough.
    """
    sign = -1.0 if (J1 <= 0.0 and J2 <= 0.0) else 1.0
    thetas = np.linspace(0.0, math.pi, samples, endpoint=False)
    vals = np.array([sign * two_block_energy(J1, J2, p, t) for t in thetas])
    j = int(np.argmax(vals))
    lo = thetas[j] - math.pi / samples
    hi = thetas[j] + math.pi / samples
    res = minimize_scalar(lambda t: -sign * two_block_energy(J1, J2, p, t),
                          bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-13})
    if -res.fun >= vals[j]:
        return float(-sign * res.fun), float(res.x % math.pi)
    return float(sign * vals[j]), float(thetas[j])


def _path_energy(path, spec: ProblemSpec, V: np.ndarray, theta: float) -> float:
    u = path.at(theta)
    return kinetic_energy(u) + float(np.sum(V * u.values ** 2) * u.grid.weight)


def path_max_J(path, spec: ProblemSpec, samples: int | None = None) -> tuple[float, float]:
    """Maximum of J over the path and its argmax angle.

    Samples theta on [0, pi) (J is even under the antipodal reflection) and
    refines around the best sample by golden-section search.
    """
    if samples is None:
        samples = getattr(path, "samples", 512)
    if samples < 64:
        raise PathError("at least 64 theta samples required")
    grid = path.at(0.0).grid
    V = potential_values(spec, grid)
    thetas = np.linspace(0.0, math.pi, samples, endpoint=False)
    vals = np.array([_path_energy(path, spec, V, t) for t in thetas])
    j = int(np.argmax(vals))
    lo = thetas[j] - math.pi / samples
    hi = thetas[j] + math.pi / samples
    res = minimize_scalar(lambda t: -_path_energy(path, spec, V, t),
                          bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    if -res.fun >= vals[j]:
        return float(-res.fun), float(res.x % math.pi)
    return float(vals[j]), float(thetas[j])


def path_scan(path, spec: ProblemSpec, samples: int = 512) -> list[dict]:
    """Per-sample record (theta, J, I+, I-) for CSV export."""
    grid = path.at(0.0).grid
    V = potential_values(spec, grid)
    rows = []
    for t in np.linspace(0.0, math.pi, samples, endpoint=False):
        u = path.at(t)
        plus, minus = split_signs(u)
        rows.append({
            "theta": float(t),
            "J": kinetic_energy(u) + float(np.sum(V * u.values ** 2) * grid.weight),
            "I_plus": mass_I(plus, spec.p),
            "I_minus": mass_I(minus, spec.p),
        })
    return rows


def balanced_point(path, p: float, tol: float = 1e-10,
                   max_iter: int = 200) -> tuple[GridFunction, float]:
    """Point of the path whose positive and negative parts carry equal mass.

    Bisection on f(theta) = I(gamma+) - I(gamma-) over [0, pi], using the
    sign flip f(pi) = -f(0) forced by oddness.
    """
    def f(theta):
        u = path.at(theta)
        plus, minus = split_signs(u)
        return mass_I(plus, p) - mass_I(minus, p)

    f0 = f(0.0)
    if abs(f0) <= tol:
        return path.at(0.0), 0.0
    lo, hi = 0.0, math.pi
    flo = f0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if abs(fm) <= tol:
            return path.at(mid), mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    raise PathError(f"balanced-point bisection did not reach tol {tol}")


def translated_bump_path(w1: GridFunction, winf: GridFunction, y,
                         p: float, samples: int = 512) -> PathFamily:
    """Two-bump path between w1 and the normalized translate of winf by y."""
    shifted = lp_normalize(translate(winf, y), p)
    if not layer_separated(w1, shifted, eps=1e-12):
        warnings.warn("two-bump path blocks overlap numerically; the closed-form "
                      "maximum will not apply exactly", stacklevel=2)
    return PathFamily(w1, shifted, p, samples=samples)


def overlap_integrals(w1: GridFunction, winf: GridFunction, y, p: float) -> tuple[float, float]:
    """Cross integrals (int w1^(p-1) winf(.-y), int w1 winf(.-y)^(p-1)).

    Both decay exponentially in |y|; their log-slope against |y| is the
    rate diagnostic for the two-bump error terms.
    """
    if np.min(w1.values) < -1e-12 or np.min(winf.values) < -1e-12:
        raise PathError("overlap integrals require nonnegative fields")
    shifted = translate(winf, y).values
    weight = w1.grid.weight
    o1 = float(np.sum(w1.values ** (p - 1.0) * shifted) * weight)
    o2 = float(np.sum(w1.values * shifted ** (p - 1.0)) * weight)
    return o1, o2


@dataclass
class SphereSample:
    direction: np.ndarray
    lattice_center: tuple[int, ...]
    energy: float
    nodal_count: int


class SphereMap:
    """Odd map from sampled S^(m-1) into the constraint sphere.

    `rule(y)` evaluates the map at a unit vector y; `points` is a sampling of
    the sphere closed under the antipodal map.
    """

    def __init__(self, rule, points: np.ndarray, p: float, m: int):
        self.rule = rule
        self.points = points
        self.p = p
        self.m = m

    def at(self, y) -> GridFunction:
        return self.rule(np.asarray(y, dtype=float))

    def scan(self, spec: ProblemSpec, count_nodal: bool = False) -> list[SphereSample]:
        grid = self.at(self.points[0]).grid
        V = potential_values(spec, grid)
        out = []
        for y in self.points:
            u = self.at(y)
            J = kinetic_energy(u) + float(np.sum(V * u.values ** 2) * grid.weight)
            nc = nodal_domains(u).count if count_nodal else -1
            out.append(SphereSample(direction=y, lattice_center=(), energy=J, nodal_count=nc))
        return out

    def max_energy(self, spec: ProblemSpec) -> float:
        return max(s.energy for s in self.scan(spec))


def sphere_points(m: int, samples: int) -> np.ndarray:
    """Sampling of S^(m-1) closed under y -> -y.

    Uniform angles for m = 2; a symmetrized Fibonacci sphere for m = 3.
    """
    if m == 2:
        angles = 2.0 * math.pi * np.arange(samples) / samples
        return np.stack([np.cos(angles), np.sin(angles)], axis=1)
    if m == 3:
        half = samples // 2
        k = np.arange(half)
        golden = (1.0 + math.sqrt(5.0)) / 2.0
        z = (2.0 * k + 1.0) / half - 1.0
        phi = 2.0 * math.pi * k / golden
        rad = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        pts = np.stack([rad * np.cos(phi), rad * np.sin(phi), z], axis=1)
        return np.concatenate([pts, -pts], axis=0)
    raise PathError("sphere sampling implemented for m = 2 and m = 3")


def gamma_R(winf: GridFunction, R: float, p: float, samples: int | None = None) -> SphereMap:
    """Odd map y -> normalize(winf(. + Ry) - winf(. - Ry)) over sampled S^(N-1).

    Displacements Ry are rounded to the nearest lattice vector, so evaluation
    uses exact grid shifts. Higher modes m < N follow by restricting the
    sampling sphere to a coordinate subsphere.
    """
    grid = winf.grid
    if R >= grid.L:
        raise PathError("R must be smaller than the box half-width")
    if samples is None:
        samples = 256 if grid.N == 2 else 1024
    pts = sphere_points(grid.N, samples)

    def rule(y):
        steps = grid.lattice_vector(R * y)
        u = translate(winf, steps).values - translate(winf, tuple(-s for s in steps)).values
        return lp_normalize(GridFunction(grid, u), p)

    return SphereMap(rule, pts, p, grid.N)


def nodal_sphere_map(u0: GridFunction, spec: ProblemSpec,
                     samples: int | None = None) -> SphereMap:
    """Map built from the normalized restrictions of u0 to its nodal domains.

    The sampled maximum of J over the image never exceeds J(u0) (up to
    quadrature tolerance), which is the upper-bound mechanism for the m-th
    level.
    """
    labeling = nodal_domains(u0)
    m = labeling.count
    if m < 2:
        raise PathError(f"need at least 2 nodal domains, found {m}")
    if m > 3:
        m = 3  # sample a coordinate subsphere through the 3 largest domains
    # order domains by mass, keep the m largest
    masses = []
    for j in range(1, labeling.count + 1):
        chi = labeling.labels == j
        masses.append(float(np.sum(np.abs(u0.values[chi]) ** spec.p)))
    order = np.argsort(masses)[::-1][:m]
    blocks = []
    for j in order:
        chi = (labeling.labels == j + 1).astype(float)
        blocks.append(lp_normalize(GridFunction(u0.grid, chi * u0.values), spec.p))
    if samples is None:
        samples = 256 if m == 2 else 1024
    pts = sphere_points(m, samples)

    def rule(y):
        v = sum(float(c) * b.values for c, b in zip(y, blocks))
        return lp_normalize(GridFunction(u0.grid, v), spec.p)

    return SphereMap(rule, pts, spec.p, m)
