"""Kaczmarz row projections and symmetric (forward-then-backward) sweeps.

A double sweep maps ``u -> Q u + R s`` without forming ``Q`` or ``R``.
The turnaround row is projected twice in a row, so with ``omega != 1``
the map is not the same as a sweep that skips the repeated projection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .discretization import SparseRowMatrix


@dataclass(frozen=True)
class SweepPlan:
    """Row ordering of the forward pass and per-row relaxation ``omega_i``.

    ``omega`` is always stored as a full vector, even when constant.
    """

    order: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        order = np.array(self.order, dtype=np.int64)
        omega = np.array(self.omega, dtype=float)
        if order.ndim != 1 or omega.shape != order.shape:
            raise ValueError("order and omega must be 1D arrays of equal length")
        if not np.array_equal(np.sort(order), np.arange(order.size)):
            raise ValueError("order must be a permutation of 0..N-1")
        if not (np.all(omega > 0.0) and np.all(omega < 2.0)):
            raise ValueError("every relaxation factor must lie strictly inside (0, 2)")
        order.setflags(write=False)
        omega.setflags(write=False)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "omega", omega)

    @classmethod
    def constant(cls, n: int, omega: float) -> "SweepPlan":
        return cls(np.arange(n), np.full(n, float(omega)))

    @classmethod
    def per_row(cls, omega) -> "SweepPlan":
        omega = np.asarray(omega, dtype=float).ravel()
        return cls(np.arange(omega.size), omega)

    @property
    def size(self) -> int:
        return self.order.size

    def is_constant(self) -> bool:
        return bool(np.all(self.omega == self.omega[0]))


@dataclass
class SweepWorkspace:
    """Reusable buffers for repeated operator applications on one problem."""

    iterate: np.ndarray
    zero_rhs: np.ndarray

    @classmethod
    def for_matrix(cls, matrix: SparseRowMatrix, dtype=float) -> "SweepWorkspace":
        n = matrix.dimension
        return cls(np.zeros(n, dtype=dtype), np.zeros(n, dtype=dtype))


def project_row(u: np.ndarray, matrix: SparseRowMatrix, rhs: np.ndarray, i: int,
                omega_i: float) -> np.ndarray:
    """Relaxed projection of ``u`` onto the hyperplane of row ``i``, in place.

    ``u += omega_i * (s_i - a_i . u) * conj(a_i) / ||a_i||^2``.  For a real
    matrix the conjugate is a no-op and the update is an orthogonal
    projection even when ``u`` is complex.
    """
    norm_sq = matrix.row_norms_sq[i]
    if norm_sq <= 0.0:
        raise ValueError(f"row {i} has zero norm")
    cols, vals = matrix.row(i)
    residual = rhs[i] - vals @ u[cols]
    u[cols] += (omega_i * residual / norm_sq) * np.conj(vals)
    return u


@numba.njit(cache=True, nogil=True)
def _double_sweep_kernel(indptr, indices, data, norms, order, omega, u, s):
    n = order.size
    for t in range(2 * n):
        i = order[t] if t < n else order[2 * n - 1 - t]
        r = s[i]
        for p in range(indptr[i], indptr[i + 1]):
            r -= data[p] * u[indices[p]]
        c = omega[i] * r / norms[i]
        for p in range(indptr[i], indptr[i + 1]):
            u[indices[p]] += c * np.conj(data[p])


def _result_dtype(matrix: SparseRowMatrix, *vectors) -> np.dtype:
    return np.result_type(matrix.dtype, *(v.dtype for v in vectors))


def _check(matrix: SparseRowMatrix, plan: SweepPlan, *vectors) -> None:
    n = matrix.dimension
    if plan.size != n:
        raise ValueError(f"plan has {plan.size} rows, matrix has {n}")
    for v in vectors:
        if v.shape != (n,):
            raise ValueError(f"vector of shape {v.shape} does not match dimension {n}")


def double_sweep(u: np.ndarray, matrix: SparseRowMatrix, rhs: np.ndarray,
                 plan: SweepPlan) -> np.ndarray:
    """One symmetric Kaczmarz sweep ``u <- Q u + R s``, in place.

    Rows are visited in ``plan.order`` and then in reverse, the last row of
    the forward pass being projected twice.  ``u`` must already have a dtype
    that can hold the result (complex if either the matrix or ``rhs`` is).
    """
    rhs = np.asarray(rhs)
    _check(matrix, plan, u, rhs)
    if not np.can_cast(_result_dtype(matrix, u, rhs), u.dtype, casting="safe"):
        raise TypeError(f"iterate dtype {u.dtype} cannot hold a {_result_dtype(matrix, u, rhs)} result")
    if rhs.dtype != u.dtype:
        rhs = rhs.astype(u.dtype)
    _double_sweep_kernel(matrix.indptr, matrix.indices, matrix.data, matrix.row_norms_sq,
                         plan.order, plan.omega, u, rhs)
    return u


def apply_I_minus_Q(v: np.ndarray, matrix: SparseRowMatrix, plan: SweepPlan,
                    workspace: SweepWorkspace | None = None) -> np.ndarray:
    """Return ``(I - Q) v`` via one homogeneous double sweep."""
    dtype = _result_dtype(matrix, v)
    if workspace is None or workspace.iterate.dtype != dtype:
        workspace = SweepWorkspace.for_matrix(matrix, dtype)
    u = workspace.iterate
    u[:] = v
    double_sweep(u, matrix, workspace.zero_rhs, plan)
    return v - u


def apply_R(rhs: np.ndarray, matrix: SparseRowMatrix, plan: SweepPlan) -> np.ndarray:
    """Return ``R s``: a double sweep started from zero."""
    rhs = np.asarray(rhs)
    u = np.zeros(matrix.dimension, dtype=_result_dtype(matrix, rhs))
    return double_sweep(u, matrix, rhs, plan)
