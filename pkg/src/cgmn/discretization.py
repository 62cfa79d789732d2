"""Finite-difference Helmholtz systems on the unit interval and unit square.

All grids are vertex-centred with homogeneous Dirichlet boundaries
eliminated, so only interior gridpoints carry unknowns.  The operator is
``k(x)^2 + Laplacian`` (no sign flip), which makes the system indefinite
as soon as ``k^2`` exceeds the smallest Laplacian eigenvalue.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class Grid1D:
    """Interior gridpoints ``x_i = i*h``, ``i = 1..N``, with ``h = 1/(N+1)``."""

    n_interior: int

    def __post_init__(self):
        if int(self.n_interior) != self.n_interior or self.n_interior < 1:
            raise ValueError(f"n_interior must be a positive integer, got {self.n_interior!r}")

    @property
    def spacing(self) -> float:
        return 1.0 / (self.n_interior + 1)

    @property
    def size(self) -> int:
        return self.n_interior

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_interior,)

    def coordinates(self) -> np.ndarray:
        return np.arange(1, self.n_interior + 1) * self.spacing


@dataclass(frozen=True)
class Grid2D:
    """``nx`` by ``ny`` interior points with uniform spacing ``h``.

    Unknowns are ordered with x varying fastest: row index ``j*nx + i``
    belongs to the point ``((i+1)h, (j+1)h)``.
    """

    nx: int
    ny: int
    spacing: float

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError(f"grid dimensions must be positive, got {self.nx}x{self.ny}")
        if not self.spacing > 0:
            raise ValueError(f"spacing must be positive, got {self.spacing!r}")

    @classmethod
    def unit_square(cls, nx: int, ny: int | None = None) -> "Grid2D":
        """Square grid on [0,1]^2; requires ``nx == ny`` for a uniform spacing."""
        ny = nx if ny is None else ny
        if nx != ny:
            raise ValueError("the unit square needs nx == ny for uniform spacing")
        return cls(nx, ny, 1.0 / (nx + 1))

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(X, Y)`` arrays of shape ``(ny, nx)``."""
        x = np.arange(1, self.nx + 1) * self.spacing
        y = np.arange(1, self.ny + 1) * self.spacing
        return np.meshgrid(x, y, indexing="xy")


Grid = Union[Grid1D, Grid2D]


@dataclass(frozen=True)
class Medium:
    """Per-gridpoint wavenumber ``k``; shape ``(N,)`` in 1D, ``(ny, nx)`` in 2D."""

    wavenumber: np.ndarray

    def __post_init__(self):
        k = np.array(self.wavenumber, dtype=float)
        if k.ndim not in (1, 2) or k.size == 0:
            raise ValueError(f"wavenumber must be a non-empty 1D or 2D array, got shape {k.shape}")
        if not np.all(np.isfinite(k)) or np.any(k < 0):
            raise ValueError("wavenumbers must be finite and nonnegative")
        k.setflags(write=False)
        object.__setattr__(self, "wavenumber", k)

    @classmethod
    def constant(cls, shape, k: float) -> "Medium":
        return cls(np.full(shape, float(k)))

    @classmethod
    def with_anomaly(cls, grid: Grid2D, background_k: float, anomaly_k: float,
                     region: tuple[float, float, float, float]) -> "Medium":
        """Constant background with a rectangular block ``x0<=x<=x1, y0<=y<=y1``."""
        x0, x1, y0, y1 = region
        if not (0.0 <= x0 < x1 <= 1.0 and 0.0 <= y0 < y1 <= 1.0):
            raise ValueError(f"anomaly region {region} must lie inside the unit square")
        X, Y = grid.coordinates()
        inside = (X >= x0) & (X <= x1) & (Y >= y0) & (Y <= y1)
        return cls(np.where(inside, float(anomaly_k), float(background_k)))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.wavenumber.shape


class SparseRowMatrix:
    """Square CSR matrix with cached squared row norms ``||a_i||_2^2``.

    The sweep kernels read ``indptr``, ``indices``, ``data`` and
    ``row_norms_sq`` directly; the arrays are made read-only.
    """

    def __init__(self, matrix):
        csr = sp.csr_matrix(matrix, copy=True)
        if csr.shape[0] != csr.shape[1]:
            raise ValueError(f"matrix must be square, got shape {csr.shape}")
        csr.sum_duplicates()
        csr.sort_indices()
        norms = np.zeros(csr.shape[0])
        np.add.at(norms, np.repeat(np.arange(csr.shape[0]), np.diff(csr.indptr)),
                  np.abs(csr.data) ** 2)
        zero = np.flatnonzero(norms == 0.0)
        if zero.size:
            raise ValueError(f"matrix has zero rows: {zero[:10].tolist()}")
        for arr in (csr.indptr, csr.indices, csr.data, norms):
            arr.setflags(write=False)
        self._csr = csr
        self.row_norms_sq = norms

    @property
    def dimension(self) -> int:
        return self._csr.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self._csr.shape

    @property
    def dtype(self):
        return self._csr.dtype

    @property
    def indptr(self) -> np.ndarray:
        return self._csr.indptr

    @property
    def indices(self) -> np.ndarray:
        return self._csr.indices

    @property
    def data(self) -> np.ndarray:
        return self._csr.data

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Column indices and values of row ``i``."""
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.data[lo:hi]

    def matvec(self, u: np.ndarray) -> np.ndarray:
        return self._csr @ u

    __matmul__ = matvec

    def toarray(self) -> np.ndarray:
        return self._csr.toarray()

    def to_scipy(self) -> sp.csr_matrix:
        return self._csr.copy()

    def is_symmetric(self) -> bool:
        diff = self._csr - self._csr.T
        return diff.nnz == 0 or not np.any(diff.data)

    def __repr__(self):
        return f"SparseRowMatrix(dimension={self.dimension}, nnz={self._csr.nnz}, dtype={self.dtype})"


@dataclass(frozen=True)
class HelmholtzProblem:
    """Assembled system ``A u = s``; ``rhs`` starts at zero and is set by the caller."""

    matrix: SparseRowMatrix
    grid: Grid
    medium: Medium
    rhs: np.ndarray = field(default=None)

    def __post_init__(self):
        n = self.matrix.dimension
        if self.grid.size != n or self.medium.wavenumber.size != n:
            raise ValueError("matrix, grid and medium sizes disagree")
        rhs = np.zeros(n) if self.rhs is None else np.asarray(self.rhs).ravel()
        if rhs.shape != (n,):
            raise ValueError(f"rhs must have length {n}, got {rhs.shape}")
        object.__setattr__(self, "rhs", rhs)

    @property
    def dimension(self) -> int:
        return self.matrix.dimension

    def with_rhs(self, rhs: np.ndarray) -> "HelmholtzProblem":
        return replace(self, rhs=np.array(rhs))


def build_helmholtz_1d(k: float, n_interior: int) -> HelmholtzProblem:
    """Second-order discretization of ``(k^2 + d^2/dx^2) u = s`` on [0, 1].

    Diagonal entries are ``k^2 - 2/h^2`` and the two off-diagonals ``1/h^2``.
    """
    if k < 0:
        raise ValueError(f"wavenumber must be nonnegative, got {k}")
    grid = Grid1D(n_interior)
    h = grid.spacing
    A = _tridiagonal(grid.n_interior, k * k - 2.0 * h ** -2, h ** -2)
    return HelmholtzProblem(SparseRowMatrix(A), grid, Medium.constant(grid.n_interior, k))


def analytic_eigenpair_1d(n: int, k: float, grid: Grid1D) -> tuple[float, np.ndarray]:
    """Eigenvalue ``k^2 + 2h^-2 (cos(n pi h) - 1)`` and vector ``sin(n pi i h)``.

    The eigenvector is returned unnormalized.
    """
    if not 1 <= n <= grid.n_interior:
        raise ValueError(f"mode index {n} out of range 1..{grid.n_interior}")
    h = grid.spacing
    lam = k * k + 2.0 * h ** -2 * (np.cos(n * np.pi * h) - 1.0)
    i = np.arange(1, grid.n_interior + 1)
    return float(lam), np.sin(n * np.pi * i * h)


def _tridiagonal(n: int, diagonal: float, off: float) -> sp.csr_matrix:
    offs = np.full(n - 1, off)
    return sp.diags([offs, np.full(n, diagonal), offs], [-1, 0, 1], shape=(n, n), format="csr")


def build_helmholtz_2d(medium: Medium, spacing: float) -> HelmholtzProblem:
    """Five-point stencil for ``(k(x)^2 + Laplacian) u = s`` with Dirichlet boundaries.

    ``medium.wavenumber`` must have shape ``(ny, nx)``.
    """
    k = medium.wavenumber
    if k.ndim != 2:
        raise ValueError(f"2D medium expected, got shape {k.shape}")
    if not spacing > 0:
        raise ValueError(f"spacing must be positive, got {spacing!r}")
    ny, nx = k.shape
    grid = Grid2D(nx, ny, spacing)
    lap = (sp.kron(sp.identity(ny), _tridiagonal(nx, -2.0 * spacing ** -2, spacing ** -2))
           + sp.kron(_tridiagonal(ny, -2.0 * spacing ** -2, spacing ** -2), sp.identity(nx)))
    A = sp.csr_matrix(lap + sp.diags(k.ravel() ** 2))
    return HelmholtzProblem(SparseRowMatrix(A), grid, medium)


def _x_coordinates(medium: Medium, spacing: float) -> np.ndarray:
    if medium.wavenumber.ndim == 1:
        return np.arange(1, medium.wavenumber.size + 1) * spacing
    ny, nx = medium.shape
    return np.tile(np.arange(1, nx + 1) * spacing, ny)


def plane_wave(medium: Medium, background_k: float, spacing: float) -> np.ndarray:
    """Incident field ``exp(i k0 x)`` sampled at the interior points (flattened)."""
    return np.exp(1j * background_k * _x_coordinates(medium, spacing))


def scattered_field_rhs(medium: Medium, background_k: float, spacing: float) -> np.ndarray:
    """Source ``-(k^2 - k0^2) exp(i k0 x)`` for the scattered field ``u - u_inc``.

    With this source, ``A u_sc = s`` is equivalent to ``A u_total = A0 u_inc``
    where ``A0`` is the background operator.
    """
    if not background_k > 0:
        raise ValueError(f"background wavenumber must be positive, got {background_k}")
    contrast = medium.wavenumber.ravel() ** 2 - background_k ** 2
    return -contrast * plane_wave(medium, background_k, spacing)
