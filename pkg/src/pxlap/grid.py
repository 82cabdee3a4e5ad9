"""Structured tensor-product grids and the discrete calculus on them.

A :class:`Grid` is a box in dimension 1, 2 or 3 with equispaced nodes along
each axis.  Quadrature uses trapezoid-equivalent node weights (the tensor
product of ``[h/2, h, ..., h, h/2]``), gradients use second-order central
differences with one-sided second-order stencils on the boundary layer.
Level sets are quantized at node centers: a node belongs to a ball if its
center does, and set measures count nodes times the cell volume.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import BallContainmentError, ConfigError, FieldMismatchError

__all__ = [
    "Grid",
    "ScalarField",
    "LevelSetMeasure",
    "make_grid",
    "gradient",
    "integrate",
    "level_set_measure",
    "l2_distance",
    "write_field_csv",
    "read_field_csv",
]

_MIN_NODES = 8


@dataclass(frozen=True, eq=False)
class Grid:
    """Equispaced box grid; construct through :func:`make_grid`."""

    extents: tuple[tuple[float, float], ...]
    nodes: tuple[int, ...]
    spacing: tuple[float, ...]
    axes: tuple[np.ndarray, ...]
    boundary_mask: np.ndarray
    quad_weights: np.ndarray
    cell_volume: float

    @property
    def dim(self) -> int:
        return len(self.extents)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.nodes

    @property
    def volume(self) -> float:
        return float(np.prod([hi - lo for lo, hi in self.extents]))

    @property
    def interior_mask(self) -> np.ndarray:
        return ~self.boundary_mask

    @property
    def center(self) -> tuple[float, ...]:
        return tuple(0.5 * (lo + hi) for lo, hi in self.extents)

    def coordinate_arrays(self) -> list[np.ndarray]:
        """Meshgrid coordinate arrays in ``ij`` indexing, one per axis."""
        return np.meshgrid(*self.axes, indexing="ij")

    def node_coordinates(self) -> np.ndarray:
        """All node coordinates as an array of shape ``(n_nodes, dim)`` in C order."""
        coords = self.coordinate_arrays()
        return np.stack([c.ravel() for c in coords], axis=1)


def make_grid(extents: Sequence[Sequence[float]], nodes: int | Sequence[int]) -> Grid:
    """Build a grid over the box ``extents`` with ``nodes`` nodes per axis."""
    ext = tuple((float(lo), float(hi)) for lo, hi in extents)
    dim = len(ext)
    if dim not in (1, 2, 3):
        raise ConfigError(f"grid dimension must be 1, 2 or 3, got {dim}")
    for lo, hi in ext:
        if not (np.isfinite(lo) and np.isfinite(hi)) or hi <= lo:
            raise ConfigError(f"bad axis extent ({lo}, {hi})")
    if isinstance(nodes, int):
        counts = (nodes,) * dim
    else:
        counts = tuple(int(n) for n in nodes)
    if len(counts) != dim:
        raise ConfigError("nodes must be an int or one count per axis")
    for n in counts:
        if n < _MIN_NODES:
            raise ConfigError(f"need at least {_MIN_NODES} nodes per axis, got {n}")

    axes = tuple(np.linspace(lo, hi, n) for (lo, hi), n in zip(ext, counts))
    spacing = tuple(float(a[1] - a[0]) for a in axes)

    boundary = np.zeros(counts, dtype=bool)
    for d in range(dim):
        idx_lo = [slice(None)] * dim
        idx_lo[d] = 0
        idx_hi = [slice(None)] * dim
        idx_hi[d] = -1
        boundary[tuple(idx_lo)] = True
        boundary[tuple(idx_hi)] = True

    weights = np.ones(counts)
    for d, (h, n) in enumerate(zip(spacing, counts)):
        w = np.full(n, h)
        w[0] = w[-1] = 0.5 * h
        shape = [1] * dim
        shape[d] = n
        weights = weights * w.reshape(shape)

    return Grid(
        extents=ext,
        nodes=counts,
        spacing=spacing,
        axes=axes,
        boundary_mask=boundary,
        quad_weights=weights,
        cell_volume=float(np.prod(spacing)),
    )


@dataclass(eq=False)
class ScalarField:
    """Nodal scalar data bound to a grid.

    Fields intended as Dirichlet candidates should be zero on the boundary
    layer; use :meth:`zero_boundary` to enforce that.
    """

    values: np.ndarray
    grid: Grid

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise FieldMismatchError(
                f"field mismatch: values shape {self.values.shape} vs grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise FieldMismatchError("field mismatch: non-finite values")

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(np.zeros(grid.shape), grid)

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[..., np.ndarray]) -> "ScalarField":
        coords = grid.coordinate_arrays()
        vals = np.broadcast_to(np.asarray(fn(*coords), dtype=float), grid.shape)
        return cls(vals.copy(), grid)

    def copy(self) -> "ScalarField":
        return ScalarField(self.values.copy(), self.grid)

    def zero_boundary(self) -> "ScalarField":
        vals = self.values.copy()
        vals[self.grid.boundary_mask] = 0.0
        return ScalarField(vals, self.grid)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True)
class LevelSetMeasure:
    """Nodes of ``{u > level}`` inside an open ball, with quantized measure."""

    level: float
    radius: float
    center: tuple[float, ...]
    measure: float
    node_indices: np.ndarray  # sorted flat indices into the grid's C order
    count: int


def _check_field(u: ScalarField, grid: Grid | None = None) -> None:
    if grid is not None and u.grid is not grid and u.grid.shape != grid.shape:
        raise FieldMismatchError("field mismatch: field bound to a different grid")


def gradient(u: ScalarField) -> np.ndarray:
    """Nodal gradient, shape ``(*grid.shape, dim)``.

    Central differences at interior nodes, one-sided second-order stencils on
    the boundary; exact for polynomials of degree two along each axis.
    """
    grid = u.grid
    if any(n < 3 for n in grid.nodes):
        raise ConfigError("grid too coarse: need at least 3 nodes per axis for gradients")
    if grid.dim == 1:
        parts = [np.gradient(u.values, grid.spacing[0], edge_order=2)]
    else:
        parts = np.gradient(u.values, *grid.spacing, edge_order=2)
    return np.stack(parts, axis=-1)


def integrate(values: np.ndarray | ScalarField, grid: Grid | None = None) -> float:
    """Quadrature of nodal samples with the grid's trapezoid-equivalent weights."""
    if isinstance(values, ScalarField):
        grid = values.grid
        values = values.values
    if grid is None:
        raise ConfigError("integrate needs a grid when given a bare array")
    values = np.asarray(values)
    if values.shape != grid.shape:
        raise FieldMismatchError(
            f"field mismatch: samples shape {values.shape} vs grid {grid.shape}"
        )
    return float(np.sum(grid.quad_weights * values))


def level_set_measure(
    u: ScalarField,
    level: float,
    radius: float,
    center: Sequence[float],
    strict: bool = True,
) -> LevelSetMeasure:
    """Measure of ``{u > level}`` within the open ball of ``radius`` at ``center``.

    With ``strict=True`` the closed ball must sit strictly inside the domain,
    otherwise a :class:`BallContainmentError` is raised.  Membership is decided
    at node centers and the measure is ``count * cell_volume``, so it is
    accurate to one cell layer around the set boundary.
    """
    grid = u.grid
    ctr = tuple(float(c) for c in center)
    if len(ctr) != grid.dim:
        raise ConfigError(f"center has {len(ctr)} coordinates for a {grid.dim}-d grid")
    if radius <= 0:
        raise ConfigError(f"ball radius must be positive, got {radius}")
    if strict:
        for (lo, hi), c in zip(grid.extents, ctr):
            if c - lo <= radius or hi - c <= radius:
                raise BallContainmentError(
                    f"ball containment error: ball of radius {radius} at {ctr} "
                    f"is not strictly inside the domain"
                )
    coords = grid.coordinate_arrays()
    dist2 = np.zeros(grid.shape)
    for c_arr, c in zip(coords, ctr):
        dist2 += (c_arr - c) ** 2
    inside = (dist2 < radius * radius) & (u.values > level)
    idx = np.flatnonzero(inside.ravel())
    return LevelSetMeasure(
        level=float(level),
        radius=float(radius),
        center=ctr,
        measure=float(idx.size) * grid.cell_volume,
        node_indices=idx,
        count=int(idx.size),
    )


def l2_distance(u: ScalarField, v: ScalarField) -> float:
    """Discrete L2 distance using the grid quadrature weights."""
    _check_field(v, u.grid)
    diff = u.values - v.values
    return float(np.sqrt(np.sum(u.grid.quad_weights * diff * diff)))


def write_field_csv(u: ScalarField, path: str | Path) -> None:
    """Write one row per node: the coordinates, then the value, in C node order.

    Uses the shortest round-trippable float format so that reading the file
    back reproduces the exact same doubles.
    """
    grid = u.grid
    coords = grid.node_coordinates()
    data = np.column_stack([coords, u.values.ravel()])
    header = ",".join(f"x{d + 1}" for d in range(grid.dim)) + ",value"
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=header, comments="")


def read_field_csv(path: str | Path, grid: Grid) -> ScalarField:
    """Read a field written by :func:`write_field_csv` back onto ``grid``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    n_nodes = int(np.prod(grid.shape))
    if data.shape != (n_nodes, grid.dim + 1):
        raise FieldMismatchError(
            f"field mismatch: csv shape {data.shape}, expected ({n_nodes}, {grid.dim + 1})"
        )
    expected = grid.node_coordinates()
    if not np.allclose(data[:, : grid.dim], expected, rtol=0.0, atol=1e-12):
        raise FieldMismatchError("field mismatch: csv node coordinates differ from grid")
    return ScalarField(data[:, -1].reshape(grid.shape), grid)
