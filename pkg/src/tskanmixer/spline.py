"""Uniform B-spline grids and Cox-de Boor basis evaluation.

A grid with ``G`` intervals on ``[domain_min, domain_max]`` and polynomial
degree ``k`` is extended by ``k`` knots on either side, giving ``G + 2k + 1``
knots and ``G + k`` basis functions whose supports cover the domain. Inputs
are clamped into the domain before evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

DEFAULT_DOMAIN = (-3.0, 3.0)


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class KnotGrid:
    domain_min: float
    domain_max: float
    G: int
    k: int

    def __post_init__(self):
        if not (np.isfinite(self.domain_min) and np.isfinite(self.domain_max)):
            raise GridError("grid domain must be finite")
        if not self.domain_min < self.domain_max:
            raise GridError(f"domain_min ({self.domain_min}) must be < domain_max ({self.domain_max})")
        if int(self.G) != self.G or self.G < 1:
            raise GridError(f"G must be a positive integer, got {self.G}")
        if int(self.k) != self.k or self.k < 0:
            raise GridError(f"k must be a non-negative integer, got {self.k}")

    @property
    def h(self) -> float:
        return (self.domain_max - self.domain_min) / self.G

    @property
    def n_basis(self) -> int:
        return self.G + self.k

    @cached_property
    def knots(self) -> np.ndarray:
        j = np.arange(-self.k, self.G + self.k + 1, dtype=np.float64)
        t = self.domain_min + j * self.h
        # pin the domain end exactly so clamped inputs land on a knot
        t[self.k + self.G] = self.domain_max
        t.flags.writeable = False
        return t

    def to_dict(self) -> dict:
        return {"domain_min": self.domain_min, "domain_max": self.domain_max, "G": self.G, "k": self.k}


def make_grid(domain_min: float, domain_max: float, G: int, k: int) -> KnotGrid:
    return KnotGrid(float(domain_min), float(domain_max), int(G), int(k))


def _span(grid: KnotGrid, x: np.ndarray) -> np.ndarray:
    """Index into ``knots`` of the interval containing each (clamped) x.

    The right domain end maps to the last interval so the evaluated piece
    is its right limit; by continuity this is the spline's value there.
    """
    cell = np.floor((x - grid.domain_min) / grid.h).astype(np.intp)
    return np.clip(cell, 0, grid.G - 1) + grid.k


def _local_basis(grid: KnotGrid, x: np.ndarray, span: np.ndarray, degree: int) -> np.ndarray:
    """Non-zero basis values of ``degree`` on ``span``, shape ``x.shape + (degree+1,)``.

    Triangular Cox-de Boor scheme; entry ``r`` belongs to basis index
    ``span - degree + r``.
    """
    t = grid.knots
    N = np.zeros(x.shape + (degree + 1,))
    N[..., 0] = 1.0
    left = np.empty(x.shape + (degree + 1,))
    right = np.empty(x.shape + (degree + 1,))
    for j in range(1, degree + 1):
        left[..., j] = x - t[span + 1 - j]
        right[..., j] = t[span + j] - x
        saved = np.zeros(x.shape)
        for r in range(j):
            temp = N[..., r] / (right[..., r + 1] + left[..., j - r])
            N[..., r] = saved + right[..., r + 1] * temp
            saved = left[..., j - r] * temp
        N[..., j] = saved
    return N


def _scatter(grid: KnotGrid, local: np.ndarray, first: np.ndarray) -> np.ndarray:
    width = local.shape[-1]
    out = np.zeros(local.shape[:-1] + (grid.n_basis,))
    idx = first[..., None] + np.arange(width)
    np.put_along_axis(out, idx, local, axis=-1)
    return out


def clamp(grid: KnotGrid, x) -> np.ndarray:
    return np.clip(np.asarray(x, dtype=np.float64), grid.domain_min, grid.domain_max)


def basis_values(grid: KnotGrid, x) -> np.ndarray:
    """Values of all ``G + k`` basis functions at ``x``.

    ``x`` may be a scalar or an array; the basis index is the trailing axis
    of the result. At most ``k + 1`` entries per point are non-zero.
    """
    xc = clamp(grid, x)
    span = _span(grid, xc)
    local = _local_basis(grid, xc, span, grid.k)
    return _scatter(grid, local, span - grid.k)


def basis_derivatives(grid: KnotGrid, x) -> np.ndarray:
    """d/dx of every basis function at the clamped ``x``.

    Uses B'_{i,k} = (B_{i,k-1} - B_{i+1,k-1}) / h, the uniform-knot form of
    the standard derivative recurrence.
    """
    if grid.k < 1:
        raise GridError("basis derivatives are undefined for degree-0 (piecewise constant) splines")
    xc = clamp(grid, x)
    span = _span(grid, xc)
    lower = _local_basis(grid, xc, span, grid.k - 1)  # indices span-k+1 .. span
    k = grid.k
    d = np.zeros(xc.shape + (k + 1,))
    # local slot r <-> basis index span-k+r; lower slot r-1 <-> same index
    d[..., 1:] += lower
    d[..., :-1] -= lower
    d /= grid.h
    return _scatter(grid, d, span - k)


def basis_with_derivatives(grid: KnotGrid, x) -> tuple[np.ndarray, np.ndarray]:
    """Both basis values and derivatives, sharing the clamp and span lookup."""
    return basis_values(grid, x), basis_derivatives(grid, x)
