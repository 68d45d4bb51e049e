"""Cell-centered grids and scalar fields, with the integral vocabulary
(means, Lp norms, discrete gradient energy) used by every other module.

All reductions go through math.fsum, which returns the correctly rounded
sum and is therefore independent of summation order; this is what makes
every functional exactly invariant under spatial reflection of its input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError

__all__ = [
    "Grid",
    "ScalarField",
    "mean",
    "lp_norm",
    "grad_sq_norm",
    "save_field_csv",
    "load_field_csv",
]

_FORMAT_TAG = "chemolab-field-v1"


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered mesh on an interval (1D) or rectangle (2D)."""

    extents: tuple[float, ...]
    cells: tuple[int, ...]

    def __post_init__(self):
        extents = tuple(float(e) for e in self.extents)
        cells = tuple(int(c) for c in self.cells)
        object.__setattr__(self, "extents", extents)
        object.__setattr__(self, "cells", cells)
        if len(extents) != len(cells):
            raise DomainError("extents and cells must have equal length")
        if len(extents) not in (1, 2):
            raise DomainError("only 1D and 2D grids are supported")
        for e in extents:
            if not (math.isfinite(e) and e > 0.0):
                raise DomainError(f"extents must be positive, got {e}")
        for c in cells:
            if c < 4:
                raise DomainError(f"at least 4 cells per axis required, got {c}")

    @classmethod
    def line(cls, length: float, n: int) -> "Grid":
        return cls((length,), (n,))

    @classmethod
    def rectangle(cls, extents, cells) -> "Grid":
        return cls(tuple(extents), tuple(cells))

    @property
    def dim(self) -> int:
        return len(self.extents)

    @property
    def h(self) -> tuple[float, ...]:
        return tuple(e / c for e, c in zip(self.extents, self.cells))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @property
    def measure(self) -> float:
        return float(np.prod(self.extents))

    @property
    def total_cells(self) -> int:
        return int(np.prod(self.cells))

    def centers(self, axis: int = 0) -> np.ndarray:
        hx = self.h[axis]
        return (np.arange(self.cells[axis]) + 0.5) * hx

    def meshes(self) -> tuple[np.ndarray, ...]:
        """Cell-center coordinate arrays broadcast to the full cell shape."""
        axes = [self.centers(i) for i in range(self.dim)]
        if self.dim == 1:
            return (axes[0],)
        return tuple(np.meshgrid(*axes, indexing="ij"))


@dataclass
class ScalarField:
    """Cell values of one scalar quantity on a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=float)
        if vals.shape != self.grid.cells:
            raise DomainError(
                f"values shape {vals.shape} does not match grid cells {self.grid.cells}"
            )
        self.values = vals

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.cells, float(value)))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "ScalarField":
        return cls(grid, np.asarray(fn(*grid.meshes()), dtype=float))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())


def mean(f: ScalarField) -> float:
    """Domain average: exact cell quadrature divided by the total measure."""
    return math.fsum(f.values.ravel()) * f.grid.cell_volume / f.grid.measure


def lp_norm(f: ScalarField, p: float) -> float:
    """(integral of |f|^p)^(1/p) by cell quadrature."""
    if p < 1.0:
        raise DomainError(f"lp_norm requires p >= 1, got {p}")
    terms = np.abs(f.values.ravel()) ** p
    return (math.fsum(terms) * f.grid.cell_volume) ** (1.0 / p)


def grad_sq_norm(f: ScalarField) -> float:
    """Squared discrete gradient energy over interior faces.

    Boundary faces carry no flux and contribute nothing, so constants have
    exactly zero energy and the value is shift-invariant.
    """
    g = f.grid
    v = f.values
    h = g.h
    if g.dim == 1:
        d = np.diff(v) / h[0]
        return math.fsum(d * d) * h[0]
    hx, hy = h
    dx = np.diff(v, axis=0) / hx
    dy = np.diff(v, axis=1) / hy
    cellvol = hx * hy
    terms = np.concatenate([(dx * dx).ravel(), (dy * dy).ravel()])
    return math.fsum(terms) * cellvol


def _fmt(x) -> str:
    return repr(float(x))


def save_field_csv(f: ScalarField, path, name: str = "field", time: float = 0.0):
    """Write one snapshot: an 8-line header of grid metadata, then one row
    per cell (indices, coordinates, value)."""
    g = f.grid
    join = lambda xs: ",".join(_fmt(x) for x in xs)
    lines = [
        f"# {_FORMAT_TAG}",
        f"# dim={g.dim}",
        f"# extents={join(g.extents)}",
        f"# cells={','.join(str(c) for c in g.cells)}",
        f"# h={join(g.h)}",
        f"# name={name}",
        f"# time={_fmt(time)}",
    ]
    if g.dim == 1:
        lines.append("# columns=i,x,value")
        x = g.centers(0)
        for i in range(g.cells[0]):
            lines.append(f"{i},{_fmt(x[i])},{_fmt(f.values[i])}")
    else:
        lines.append("# columns=i,j,x,y,value")
        x, y = g.centers(0), g.centers(1)
        for i in range(g.cells[0]):
            for j in range(g.cells[1]):
                lines.append(f"{i},{j},{_fmt(x[i])},{_fmt(y[j])},{_fmt(f.values[i, j])}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_field_csv(path) -> tuple[ScalarField, dict]:
    """Read a snapshot written by save_field_csv; returns (field, metadata)."""
    meta = {}
    rows = []
    try:
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    body = line[1:].strip()
                    if "=" in body:
                        key, val = body.split("=", 1)
                        meta[key.strip()] = val.strip()
                    else:
                        meta["format"] = body
                else:
                    rows.append(line.split(","))
    except OSError as exc:
        raise ConfigError(f"cannot read field snapshot {path}: {exc}") from exc
    if meta.get("format") != _FORMAT_TAG:
        raise ConfigError(f"{path} is not a recognized field snapshot")
    try:
        dim = int(meta["dim"])
        extents = tuple(float(s) for s in meta["extents"].split(","))
        cells = tuple(int(s) for s in meta["cells"].split(","))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"malformed snapshot header in {path}: {exc}") from exc
    grid = Grid(extents, cells)
    values = np.zeros(grid.cells)
    if dim == 1:
        for row in rows:
            values[int(row[0])] = float(row[2])
    else:
        for row in rows:
            values[int(row[0]), int(row[1])] = float(row[4])
    meta["time"] = float(meta.get("time", "0"))
    return ScalarField(grid, values), meta
