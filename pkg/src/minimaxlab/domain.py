"""Problem specification, grid construction, quadrature, and potential evaluation.

The continuum problem lives on R^N; we truncate to the box [-L, L]^N with
zero Dirichlet boundary. All states of interest decay exponentially, so the
truncation error is exponentially small in L and can be probed by doubling L.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

W_FAMILIES = ("zero", "exponential", "bump", "table")

# Refuse grids that would not fit comfortably in memory (float64 nodes).
MAX_GRID_NODES = 80_000_000


class DomainError(ValueError):
    """Invalid problem specification or grid request."""


@dataclass(frozen=True)
class WSpec:
    """Descriptor of the potential perturbation W, with V = Vinf - W.

    Families:
      zero         -- W = 0 (autonomous problem)
      exponential  -- W = c * exp(-a |x|)
      bump         -- compact bump W = c * (1 - (|x|/a)^2)^2 for |x| < a
      table        -- tabulated on the grid, loaded from `table_path`
    """

    family: str = "zero"
    c: float = 0.0
    a: float = 1.0
    table_path: str | None = None

    def __post_init__(self):
        if self.family not in W_FAMILIES:
            raise DomainError(f"unknown W family {self.family!r}, expected one of {W_FAMILIES}")
        if self.family == "table" and not self.table_path:
            raise DomainError("table W family requires table_path")


@dataclass(frozen=True)
class ProblemSpec:
    """Parameters of -Delta u + V(x) u = lambda |u|^(p-2) u on the unit L^p sphere.

    Derived exponents: q = p/(p-2) (dual exponent of the level algebra) and
    sigma = (p-2)/p = 1/q, so that 2^sigma scales the second level.
    """

    N: int = 2
    p: float = 4.0
    Vinf: float = 1.0
    W: WSpec = field(default_factory=WSpec)
    L: float = 16.0
    h: float = 0.125

    def __post_init__(self):
        if self.N < 2:
            raise DomainError("spatial dimension must be at least 2")
        if self.N not in (2, 3):
            raise DomainError("only N = 2 or 3 supported")
        if not self.p > 2:
            raise DomainError("exponent p must exceed 2")
        if self.N >= 3 and self.p >= 2 * self.N / (self.N - 2):
            raise DomainError("p must lie below the critical exponent 2N/(N-2)")
        if not self.Vinf > 0:
            raise DomainError("Vinf must be positive")
        if self.L <= 0 or self.h <= 0:
            raise DomainError("L and h must be positive")
        ratio = self.L / self.h
        if abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise DomainError("L/h must be an integer")

    @property
    def q(self) -> float:
        return self.p / (self.p - 2)

    @property
    def sigma(self) -> float:
        return (self.p - 2) / self.p


class Grid:
    """Uniform Cartesian grid on [-L, L]^N, symmetric about the origin.

    Boundary nodes carry Dirichlet zeros; the quadrature weight is h^N per
    node (boundary values vanish, so including them is harmless).
    """

    def __init__(self, N: int, L: float, h: float):
        m = round(L / h)
        self.N = N
        self.L = float(L)
        self.h = float(h)
        self.axis = np.linspace(-L, L, 2 * m + 1)
        self.shape = (2 * m + 1,) * N
        self.origin_index = (m,) * N
        self.weight = h ** N
        self._coords = None

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def coords(self):
        """Meshgrid of node coordinates, one array per axis (ij indexing)."""
        if self._coords is None:
            self._coords = np.meshgrid(*([self.axis] * self.N), indexing="ij")
        return self._coords

    def radius(self) -> np.ndarray:
        """Distance from the origin at every node."""
        c = self.coords()
        return np.sqrt(sum(x * x for x in c))

    def interior_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[(slice(1, -1),) * self.N] = True
        return mask

    def lattice_vector(self, y) -> tuple[int, ...]:
        """Round a spatial displacement to whole grid steps per axis."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if y.shape != (self.N,):
            raise DomainError(f"displacement must have {self.N} components")
        return tuple(int(round(v / self.h)) for v in y)


def build_grid(spec: ProblemSpec) -> Grid:
    """Construct the truncated Dirichlet grid for a problem specification."""
    m = round(spec.L / spec.h)
    nodes = (2 * m + 1) ** spec.N
    if nodes > MAX_GRID_NODES:
        raise DomainError(f"grid would have {nodes} nodes, above cap {MAX_GRID_NODES}")
    return Grid(spec.N, spec.L, spec.h)


def eval_W(spec: ProblemSpec, grid: Grid):
    """Nodewise values of the perturbation W; the potential is Vinf - W."""
    from .field import GridFunction, load_gridfunction

    w = spec.W
    if w.family == "zero":
        vals = np.zeros(grid.shape)
    elif w.family == "exponential":
        vals = w.c * np.exp(-w.a * grid.radius())
    elif w.family == "bump":
        r = grid.radius()
        vals = np.where(r < w.a, w.c * (1.0 - (r / w.a) ** 2) ** 2, 0.0)
    elif w.family == "table":
        gf = load_gridfunction(w.table_path)
        if gf.values.shape != grid.shape:
            raise DomainError("tabulated W does not match the grid shape")
        vals = gf.values
    else:  # pragma: no cover - guarded by WSpec
        raise DomainError(f"unknown W family {w.family!r}")
    return GridFunction(grid, vals)


def potential_values(spec: ProblemSpec, grid: Grid) -> np.ndarray:
    """V = Vinf - W as a plain array (hot path for energy evaluations)."""
    return spec.Vinf - eval_W(spec, grid).values


def dual_norm_W(spec: ProblemSpec, grid: Grid) -> float:
    """L^q norm of W with q = p/(p-2), the deviation bound of the level algebra."""
    vals = np.abs(eval_W(spec, grid).values)
    q = spec.q
    total = float(np.sum(vals ** q) * grid.weight)
    if not math.isfinite(total):
        raise DomainError("quadrature of |W|^q overflowed")
    return total ** (1.0 / q)


# --- flat key-value problem files -------------------------------------------

PROBLEM_KEYS = ("dim", "p", "v_inf", "box_l", "spacing_h",
                "w_family", "w_c", "w_a", "w_table_path")


def parse_problem_mapping(mapping: dict) -> ProblemSpec:
    """Build a ProblemSpec from string key-value pairs (strict keys)."""
    unknown = set(mapping) - set(PROBLEM_KEYS)
    if unknown:
        raise DomainError(f"unknown problem keys: {sorted(unknown)}")
    w = WSpec(
        family=mapping.get("w_family", "zero"),
        c=float(mapping.get("w_c", 0.0)),
        a=float(mapping.get("w_a", 1.0)),
        table_path=mapping.get("w_table_path"),
    )
    return ProblemSpec(
        N=int(mapping.get("dim", 2)),
        p=float(mapping.get("p", 4.0)),
        Vinf=float(mapping.get("v_inf", 1.0)),
        W=w,
        L=float(mapping.get("box_l", 16.0)),
        h=float(mapping.get("spacing_h", 0.125)),
    )


def read_keyvalue_file(path) -> dict:
    """Parse a flat `key = value` text file ('#' starts a comment)."""
    out = {}
    with open(path) as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            key, val = (part.strip() for part in line.split("=", 1))
            if not key or not val:
                raise DomainError(f"{path}:{lineno}: empty key or value")
            if key in out:
                raise DomainError(f"{path}:{lineno}: duplicate key {key!r}")
            out[key] = val
    return out


def load_problem_spec(path) -> ProblemSpec:
    """Read a problem specification from a flat key-value file."""
    return parse_problem_mapping(read_keyvalue_file(path))
