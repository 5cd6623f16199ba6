"""Algebra of grid functions: norms, normalization, sign splitting, translation,
and nodal-domain labeling."""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .domain import DomainError, Grid


class FieldError(ValueError):
    pass


class GridFunction:
    """Real-valued field sampled on a grid, zero on the Dirichlet boundary."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values: np.ndarray, check: bool = False):
        values = np.array(values, dtype=float, copy=True)
        if values.shape != grid.shape:
            raise FieldError(f"values shape {values.shape} does not match grid {grid.shape}")
        self.grid = grid
        self.values = values
        if check:
            if not np.all(np.isfinite(values)):
                raise FieldError("non-finite values")
        self._zero_boundary()

    def _zero_boundary(self):
        v = self.values
        for ax in range(self.grid.N):
            idx0 = [slice(None)] * self.grid.N
            idx0[ax] = 0
            v[tuple(idx0)] = 0.0
            idx0[ax] = -1
            v[tuple(idx0)] = 0.0

    def copy(self) -> "GridFunction":
        return GridFunction(self.grid, self.values.copy())

    def __neg__(self) -> "GridFunction":
        return GridFunction(self.grid, -self.values)


def zeros_like(grid: Grid) -> GridFunction:
    return GridFunction(grid, np.zeros(grid.shape))


def lp_norm(u: GridFunction, p: float) -> float:
    """(sum h^N |u_i|^p)^(1/p)."""
    if p < 1:
        raise FieldError("p must be at least 1")
    return float((np.sum(np.abs(u.values) ** p) * u.grid.weight) ** (1.0 / p))


def lp_normalize(u: GridFunction, p: float) -> GridFunction:
    """Radial projection u / |u|_p onto the unit L^p sphere."""
    n = lp_norm(u, p)
    if n == 0.0:
        raise FieldError("cannot normalize the zero field")
    return GridFunction(u.grid, u.values / n)


def split_signs(u: GridFunction) -> tuple[GridFunction, GridFunction]:
    """Positive and negative parts: u = u+ - u-, with u+ * u- = 0 pointwise."""
    plus = np.maximum(u.values, 0.0)
    minus = np.maximum(-u.values, 0.0)
    return GridFunction(u.grid, plus), GridFunction(u.grid, minus)


def translate(u: GridFunction, y) -> GridFunction:
    """Shift by a lattice vector; values pushed past the boundary are dropped.

    `y` is either a spatial displacement (rounded to whole steps must be
    exact) or a tuple of integer node offsets.
    """
    grid = u.grid
    if all(isinstance(v, (int, np.integer)) for v in np.atleast_1d(y)):
        steps = tuple(int(v) for v in np.atleast_1d(y))
        if len(steps) != grid.N:
            raise FieldError(f"offset must have {grid.N} components")
    else:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        steps = grid.lattice_vector(y)
        if np.max(np.abs(np.asarray(steps) * grid.h - y)) > 1e-9 * max(1.0, grid.h):
            raise FieldError("translation must be an integer multiple of h per axis")
    out = u.values
    for ax, k in enumerate(steps):
        if k == 0:
            continue
        shifted = np.zeros_like(out)
        src = [slice(None)] * grid.N
        dst = [slice(None)] * grid.N
        if k > 0:
            dst[ax] = slice(k, None)
            src[ax] = slice(None, -k)
        else:
            dst[ax] = slice(None, k)
            src[ax] = slice(-k, None)
        if abs(k) < out.shape[ax]:
            shifted[tuple(dst)] = out[tuple(src)]
        out = shifted
    return GridFunction(grid, out)


@dataclass
class NodalLabeling:
    """Connected sign regions of a field: 0 marks the zero-set, 1..count the domains."""

    labels: np.ndarray
    count: int


def nodal_domains(u: GridFunction, eps: float | None = None) -> NodalLabeling:
    """Label connected components of {u > eps} and {u < -eps} (face adjacency).

    The grid labeling at eps > 0 is a proxy for the measure-theoretic nodal
    domains of the continuum field.
    """
    vals = u.values
    if eps is None:
        eps = 1e-10 * float(np.max(np.abs(vals))) if np.any(vals) else 0.0
    if eps < 0:
        raise FieldError("eps must be nonnegative")
    structure = ndimage.generate_binary_structure(u.grid.N, 1)
    labels = np.zeros(vals.shape, dtype=np.int32)
    count = 0
    for mask in (vals > eps, vals < -eps):
        lab, n = ndimage.label(mask, structure=structure)
        labels[mask] = lab[mask] + count
        count += int(n)
    return NodalLabeling(labels=labels, count=count)


def layer_separated(u1: GridFunction, u2: GridFunction, eps: float = 0.0) -> bool:
    """True if the supports are separated by at least one zero node layer.

    Under face adjacency this makes the link-based energy exactly additive.
    """
    s1 = np.abs(u1.values) > eps
    s2 = np.abs(u2.values) > eps
    if np.any(s1 & s2):
        return False
    structure = ndimage.generate_binary_structure(u1.grid.N, 1)
    grown = ndimage.binary_dilation(s1, structure=structure)
    return not np.any(grown & s2)


# --- serialization -----------------------------------------------------------

_MAGIC = b"GFB1"


def save_gridfunction(u: GridFunction, path) -> None:
    """Flat binary layout: magic, N, L, h, per-axis sizes, row-major float64."""
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<i", u.grid.N))
        f.write(struct.pack("<dd", u.grid.L, u.grid.h))
        f.write(struct.pack(f"<{u.grid.N}i", *u.values.shape))
        f.write(np.ascontiguousarray(u.values, dtype="<f8").tobytes())


def load_gridfunction(path) -> GridFunction:
    with open(path, "rb") as f:
        if f.read(4) != _MAGIC:
            raise FieldError(f"{path}: not a grid-function file")
        (N,) = struct.unpack("<i", f.read(4))
        L, h = struct.unpack("<dd", f.read(16))
        shape = struct.unpack(f"<{N}i", f.read(4 * N))
        data = np.frombuffer(f.read(), dtype="<f8").reshape(shape)
    grid = Grid(N, L, h)
    if grid.shape != shape:
        raise FieldError(f"{path}: header shape {shape} inconsistent with L={L}, h={h}")
    return GridFunction(grid, data.copy())


def export_csv(u: GridFunction, path) -> None:
    """CSV of node coordinates and values, one row per node."""
    coords = u.grid.coords()
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow([f"x{i + 1}" for i in range(u.grid.N)] + ["value"])
        flat = [c.ravel() for c in coords] + [u.values.ravel()]
        for row in zip(*flat):
            writer.writerow([repr(float(v)) for v in row])
