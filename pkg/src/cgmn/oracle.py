"""Dense SSOR/Kaczmarz matrices for small systems.

The symmetric Kaczmarz sweep on ``A u = s`` is SSOR on the normal
equations ``A A^T x = s`` with ``u = A^T x``.  This module builds both
sides densely so that the relations between them can be checked entry by
entry, and so that the sparse sweep code has a ground truth to compare
against.  Everything here is O(N^3); sizes are capped at ``MAX_ORACLE_SIZE``.

Only real matrices are supported.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .discretization import HelmholtzProblem, SparseRowMatrix, build_helmholtz_1d
from .sweeps import SweepPlan, double_sweep

MAX_ORACLE_SIZE = 64

IDENTITIES = (
    "G = I - H A A^T",
    "Q = I - A^T H A",
    "Q A^T = A^T G",
    "R = A^T H",
)


def _dense(matrix) -> np.ndarray:
    A = matrix.toarray() if isinstance(matrix, SparseRowMatrix) else np.asarray(matrix)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"square matrix expected, got shape {A.shape}")
    if A.shape[0] > MAX_ORACLE_SIZE:
        raise ValueError(f"dense oracle is limited to N <= {MAX_ORACLE_SIZE}, got {A.shape[0]}")
    if np.iscomplexobj(A):
        raise TypeError("dense oracle supports real matrices only")
    return A.astype(float)


def relative_max_error(actual: np.ndarray, expected: np.ndarray) -> float:
    """``max|actual - expected| / max|expected|`` (absolute if ``expected == 0``)."""
    scale = np.max(np.abs(expected))
    err = np.max(np.abs(actual - expected))
    return float(err / scale) if scale > 0 else float(err)


def build_normal_splitting(matrix) -> tuple[np.ndarray, np.ndarray]:
    """Split ``A A^T = D + L + L^T``; returns ``(D, L)`` as dense arrays."""
    A = _dense(matrix)
    if np.any(~A.any(axis=1)):
        raise ValueError("matrix has a zero row")
    M = A @ A.T
    return np.diag(np.diag(M)), np.tril(M, -1)


def build_ssor_matrices(D: np.ndarray, L: np.ndarray, omega: float) -> tuple[np.ndarray, np.ndarray]:
    """SSOR iteration matrix ``G`` and rhs matrix ``H`` for ``D + L + L^T``.

    ``G = (D + wL^T)^-1 ((1-w)D - wL) (D + wL)^-1 ((1-w)D - wL^T)`` and
    ``H = w(2-w) (D + wL^T)^-1 D (D + wL)^-1``, evaluated with triangular
    solves.
    """
    if not 0.0 < omega < 2.0:
        raise ValueError(f"omega must lie in (0, 2), got {omega}")
    d = np.diag(D)
    if np.any(d == 0.0):
        raise np.linalg.LinAlgError("singular triangular factor: zero diagonal entry in D")
    lower = D + omega * L
    upper = D + omega * L.T
    n = D.shape[0]
    fwd = solve_triangular(lower, (1.0 - omega) * D - omega * L.T, lower=True)
    G = solve_triangular(upper, ((1.0 - omega) * D - omega * L) @ fwd, lower=False)
    H = solve_triangular(upper, D @ solve_triangular(lower, np.eye(n), lower=True), lower=False)
    return G, omega * (2.0 - omega) * H


def build_dense_QR(matrix, omega, order=None) -> tuple[np.ndarray, np.ndarray]:
    """Explicit product of the rank-one Kaczmarz factors.

    Each projection ``u -> Q_i u + w_i s_i a_i/||a_i||^2`` is applied to the
    pair ``(Q, R)`` in forward-then-backward order, so that one double sweep
    equals ``u -> Q u + R s``.  ``omega`` may be a scalar or per-row array.
    """
    A = _dense(matrix)
    n = A.shape[0]
    omega = np.broadcast_to(np.asarray(omega, dtype=float), (n,))
    if np.any(omega <= 0.0) or np.any(omega >= 2.0):
        raise ValueError("every relaxation factor must lie strictly inside (0, 2)")
    order = np.arange(n) if order is None else np.asarray(order)
    Q = np.eye(n)
    R = np.zeros((n, n))
    for i in np.concatenate([order, order[::-1]]):
        a = A[i]
        c = omega[i] / (a @ a)
        # Q_i X = X - c a (a^T X)
        Q -= c * np.outer(a, a @ Q)
        R -= c * np.outer(a, a @ R)
        R[:, i] += c * a
    return Q, R


def rank_one_factor(a: np.ndarray, omega: float) -> np.ndarray:
    """``Q_i = I - w a a^T / ||a||^2`` for a single row."""
    a = np.asarray(a, dtype=float)
    return np.eye(a.size) - omega * np.outer(a, a) / (a @ a)


def assemble_sweep_operators(matrix: SparseRowMatrix, plan: SweepPlan) -> tuple[np.ndarray, np.ndarray]:
    """Dense ``Q`` and ``R`` obtained by sweeping unit vectors."""
    n = matrix.dimension
    if n > MAX_ORACLE_SIZE:
        raise ValueError(f"dense assembly is limited to N <= {MAX_ORACLE_SIZE}")
    Q = np.zeros((n, n))
    R = np.zeros((n, n))
    zero = np.zeros(n)
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        Q[:, j] = double_sweep(e.copy(), matrix, zero, plan)
        R[:, j] = double_sweep(np.zeros(n), matrix, e, plan)
    return Q, R


@dataclass(frozen=True)
class DenseOracleSet:
    """Normal-equation splitting and the matching SSOR and Kaczmarz matrices."""

    matrix: np.ndarray
    omega: float
    normal_matrix: np.ndarray
    diag: np.ndarray
    lower: np.ndarray
    iteration: np.ndarray
    solve: np.ndarray
    kaczmarz_iteration: np.ndarray
    kaczmarz_rhs: np.ndarray

    @classmethod
    def build(cls, matrix, omega: float) -> "DenseOracleSet":
        A = _dense(matrix)
        D, L = build_normal_splitting(A)
        G, H = build_ssor_matrices(D, L, omega)
        Q, R = build_dense_QR(A, omega)
        return cls(A, float(omega), A @ A.T, D, L, G, H, Q, R)

    def identity_errors(self) -> dict[str, float]:
        """Max-entry relative error of each SSOR/Kaczmarz relation."""
        A, G, H, Q, R = self.matrix, self.iteration, self.solve, self.kaczmarz_iteration, self.kaczmarz_rhs
        eye = np.eye(A.shape[0])
        return {
            IDENTITIES[0]: relative_max_error(G, eye - H @ self.normal_matrix),
            IDENTITIES[1]: relative_max_error(Q, eye - A.T @ H @ A),
            IDENTITIES[2]: relative_max_error(Q @ A.T, A.T @ G),
            IDENTITIES[3]: relative_max_error(R, A.T @ H),
        }


@dataclass
class IdentityReport:
    """Per-identity maximum deviation over a batch of (matrix, omega) cases."""

    tolerance: float
    max_deviation: dict[str, float] = field(default_factory=lambda: dict.fromkeys(IDENTITIES, 0.0))
    cases: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(v <= self.tolerance for v in self.max_deviation.values())

    def add(self, label: str, n: int, omega: float, errors: dict[str, float]) -> None:
        self.cases.append({"family": label, "n": n, "omega": omega, **errors})
        for key, value in errors.items():
            self.max_deviation[key] = max(self.max_deviation.get(key, 0.0), value)

    def lines(self) -> list[str]:
        out = []
        for key, value in self.max_deviation.items():
            status = "PASS" if value <= self.tolerance else "FAIL"
            out.append(f"{status}  {key:<18s} max deviation {value:.3e} (tol {self.tolerance:.1e})")
        return out


def oracle_helmholtz_1d(n: int, points_per_wavelength: float = 10.0) -> HelmholtzProblem:
    """1D Helmholtz test matrix with ``k h = 2 pi / n_g`` at size ``n``."""
    h = 1.0 / (n + 1)
    return build_helmholtz_1d(2.0 * np.pi / (points_per_wavelength * h), n)


def random_well_conditioned(n: int, seed: int = 0) -> np.ndarray:
    """Diagonally dominated random matrix; condition number stays O(1)."""
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, n)) / np.sqrt(n) + 3.0 * np.eye(n)


def verify_identities(sizes, omegas, tolerance: float = 1e-12,
                      include_random: bool = False) -> IdentityReport:
    """Check the four SSOR/Kaczmarz relations on 1D Helmholtz matrices.

    With ``include_random`` the same checks also run on
    ``random_well_conditioned`` matrices.
    """
    sizes = list(sizes)
    omegas = list(omegas)
    if not sizes or not omegas:
        raise ValueError("at least one size and one omega are required")
    report = IdentityReport(tolerance)
    for n in sizes:
        families = [("helmholtz-1d", oracle_helmholtz_1d(n).matrix.toarray())]
        if include_random:
            families.append(("random", random_well_conditioned(n, seed=n)))
        for label, A in families:
            for omega in omegas:
                report.add(label, n, omega, DenseOracleSet.build(A, omega).identity_errors())
    return report


def sweep_oracle_deviation(matrix: SparseRowMatrix, plan: SweepPlan) -> tuple[float, float]:
    """Relative deviation of sweep-assembled ``(Q, R)`` from the dense product."""
    Qs, Rs = assemble_sweep_operators(matrix, plan)
    Qd, Rd = build_dense_QR(matrix, plan.omega, plan.order)
    return relative_max_error(Qs, Qd), relative_max_error(Rs, Rd)


@dataclass
class PropagationReport:
    """Result of checking error and residual propagation along a Richardson run."""

    iterations: int
    max_error_deviation: float
    max_residual_deviation: float
    error_norms: list[float]
    residual_norms: list[float]
    tolerance: float

    @property
    def passed(self) -> bool:
        return max(self.max_error_deviation, self.max_residual_deviation) <= self.tolerance


def verify_propagation(problem: HelmholtzProblem, plan: SweepPlan, iterations: int,
                       initial_guess: np.ndarray | None = None, seed: int = 0,
                       tolerance: float = 1e-10) -> PropagationReport:
    """Run ``u <- Q u + R s`` with the sweep code and check the dense predictions.

    At every step the error ``e = u - u*`` must satisfy ``e_{k+1} = Q e_k``
    and the residual ``A e`` must satisfy ``A e_{k+1} = G^T (A e_k)``.
    Deviations are max-entry errors relative to the incoming ``e_k`` (resp.
    ``A e_k``); steps whose error is already at rounding level are skipped.  The plan must use a single omega since ``G`` is defined for
    scalar relaxation only.
    """
    if not plan.is_constant():
        raise ValueError("propagation check needs a constant-omega plan")
    oracle = DenseOracleSet.build(problem.matrix, plan.omega[0])
    A = oracle.matrix
    s = np.asarray(problem.rhs, dtype=float)
    exact = np.linalg.solve(A, s)
    if initial_guess is None:
        initial_guess = np.random.default_rng(seed).standard_normal(problem.dimension)
    u = np.array(initial_guess, dtype=float)

    # Errors below this are pure cancellation noise in ``u - u*``.
    floor = 1e3 * np.finfo(float).eps * max(np.max(np.abs(exact)), np.max(np.abs(u)))
    err_dev = res_dev = 0.0
    e = u - exact
    error_norms = [float(np.linalg.norm(e))]
    residual_norms = [float(np.linalg.norm(A @ e))]
    for _ in range(iterations):
        double_sweep(u, problem.matrix, s, plan)
        e_next = u - exact
        predicted_e = oracle.kaczmarz_iteration @ e
        predicted_r = oracle.iteration.T @ (A @ e)
        scale_e = np.max(np.abs(e))
        if scale_e > floor:
            err_dev = max(err_dev, np.max(np.abs(e_next - predicted_e)) / scale_e)
            res_dev = max(res_dev, np.max(np.abs(A @ e_next - predicted_r)) / np.max(np.abs(A @ e)))
        e = e_next
        error_norms.append(float(np.linalg.norm(e)))
        residual_norms.append(float(np.linalg.norm(A @ e)))
    return PropagationReport(iterations, err_dev, res_dev, error_norms, residual_norms, tolerance)
