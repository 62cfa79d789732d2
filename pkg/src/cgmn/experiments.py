"""Reproducible experiment runners: 1D omega scans, 2D contrast media, symbol tables.

Results are plain CSV tables (17 significant digits) plus one JSON manifest
per run.  Everything written to the tables is deterministic; wall-clock
timing only goes into the manifest.
"""

from __future__ import annotations

import csv
import json
import math
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Any, Sequence, Union

import numpy as np

from .discretization import (
    Grid2D,
    HelmholtzProblem,
    Medium,
    build_helmholtz_1d,
    build_helmholtz_2d,
    plane_wave,
    scattered_field_rhs,
)
from .oracle import verify_identities, IdentityReport, oracle_helmholtz_1d, sweep_oracle_deviation
from .solver import ConvergenceHistory, SolverConfig, cgmn_solve
from .sweeps import SweepPlan
from .symbol import (
    OMEGA_SEARCH_GRID,
    OmegaCurve,
    SymbolParams,
    amplitude,
    condition_proxy_scan,
    default_theta_grid,
    local_relaxation_plan,
    omega_curve,
    optimal_omega,
)

EXPERIMENT_KINDS = ("symbol-surface", "omega-curve", "fixed-ng-1d", "fixed-h-1d", "contrast-2d", "verify-oracle")

DEFAULT_K_VALUES = (10 * math.pi, 20 * math.pi, 40 * math.pi, 80 * math.pi)
DEFAULT_OMEGA_GRID = tuple(float(v) for v in np.round(1.0 + 0.05 * np.arange(20), 10))
DEFAULT_POINTS_PER_WAVELENGTH = 10.0
DEFAULT_ORACLE_SIZES = (5, 8, 16, 32)
DEFAULT_ORACLE_OMEGAS = (0.5, 1.0, 1.5, 1.9)
DEFAULT_2D_GRID = 64
DEFAULT_2D_CONTRAST = 2.0
DEFAULT_2D_REGION = (0.25, 0.75, 0.25, 0.75)


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0.0.0+unknown"


def format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.16e}"
    return str(value)


@dataclass
class Table:
    """Named columns and rows; row order is the order of insertion."""

    columns: list[str]
    rows: list[dict[str, Any]] = field(default_factory=list)

    def append(self, **row) -> None:
        missing = set(self.columns) - set(row)
        if missing:
            raise KeyError(f"row is missing columns {sorted(missing)}")
        self.rows.append(row)

    def column(self, name: str) -> list:
        return [r[name] for r in self.rows]

    def __len__(self):
        return len(self.rows)

    def to_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow([format_value(row[c]) for c in self.columns])
        return path


@dataclass
class ExperimentSpec:
    kind: str
    parameters: dict[str, Any] = field(default_factory=dict)
    output_path: str = ""

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}; expected one of {EXPERIMENT_KINDS}")
        p = self.parameters
        for key in ("omega",):
            if p.get(key) is not None and not 0.0 < float(p[key]) < 2.0:
                raise ValueError(f"{key} must lie in (0, 2)")
        for w in p.get("omega_grid") or ():
            if not 0.0 < float(w) < 2.0:
                raise ValueError("omega grid values must lie in (0, 2)")
        if p.get("n_g") is not None and float(p["n_g"]) < 2.0:
            raise ValueError("n_g must be at least 2")
        if p.get("tolerance") is not None and not 0.0 < float(p["tolerance"]) < 1.0:
            raise ValueError("tolerance must lie in (0, 1)")


@dataclass
class RunManifest:
    spec: dict[str, Any]
    version: str
    scalar_type: str
    elapsed_seconds: float
    iterations: list[dict[str, Any]] = field(default_factory=list)
    started_at: str = ""
    python: str = platform.python_version()
    outputs: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))

    def write(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json(), encoding="utf-8")
        return path


def manifest_path(output: Union[str, Path]) -> Path:
    output = Path(output)
    return output.with_name(output.stem + ".manifest.json")


def companion_path(output: Union[str, Path], suffix: str) -> Path:
    output = Path(output)
    return output.with_name(f"{output.stem}_{suffix}{output.suffix or '.csv'}")


# ---------------------------------------------------------------- 1D scans

def source_1d(n: int, kind: str = "random", seed: int = 0) -> np.ndarray:
    """Right-hand side for the 1D experiments.

    ``"random"`` is seeded white noise (every mode excited); ``"point"`` is
    a discrete delta of unit mass at the middle gridpoint.
    """
    if kind == "random":
        return np.random.default_rng(seed).standard_normal(n)
    if kind == "point":
        s = np.zeros(n)
        s[n // 2] = n + 1.0
        return s
    raise ValueError(f"unknown source kind {kind!r}")


def interior_points_for(k: float, points_per_wavelength: float) -> int:
    """``N`` such that ``h = 1/(N+1)`` is closest to ``2 pi / (n_g k)``."""
    if not k > 0:
        raise ValueError("wavenumbers must be positive")
    return max(1, int(round(points_per_wavelength * k / (2.0 * math.pi))) - 1)


SCAN_COLUMNS = ["k", "n_interior", "spacing", "points_per_wavelength", "omega", "iterations",
                "converged", "status", "final_residual", "predicted_omega", "empirical_optimum"]


def _scan(problems: Sequence[tuple[float, HelmholtzProblem, float, float]], omega_grid, tolerance,
          max_iterations, workers) -> Table:
    config = SolverConfig(tolerance=tolerance, max_iterations=max_iterations)
    cells = [(i, w) for i in range(len(problems)) for w in omega_grid]

    def run(cell):
        i, w = cell
        problem = problems[i][1]
        _, hist = cgmn_solve(problem, SweepPlan.constant(problem.dimension, w), config)
        return hist

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            histories = list(pool.map(run, cells))
    else:
        histories = [run(c) for c in cells]

    table = Table(SCAN_COLUMNS)
    for (i, w), hist in zip(cells, histories):
        k, problem, ng, predicted = problems[i]
        table.append(k=k, n_interior=problem.dimension, spacing=problem.grid.spacing,
                     points_per_wavelength=ng, omega=float(w), iterations=hist.iterations,
                     converged=hist.converged, status=hist.status, final_residual=hist.final_residual,
                     predicted_omega=predicted, empirical_optimum=False)
    mark_empirical_optima(table)
    return table


def mark_empirical_optima(table: Table) -> None:
    """Flag, per k, the converged row with the fewest iterations (smallest omega on ties)."""
    best: dict[float, int] = {}
    for idx, row in enumerate(table.rows):
        if not row["converged"]:
            continue
        cur = best.get(row["k"])
        if cur is None or row["iterations"] < table.rows[cur]["iterations"]:
            best[row["k"]] = idx
    for idx in best.values():
        table.rows[idx]["empirical_optimum"] = True


def empirical_optima(table: Table) -> dict[float, tuple[float, float]]:
    """``{k: (empirical omega, predicted omega)}`` from a scan table."""
    return {r["k"]: (r["omega"], r["predicted_omega"]) for r in table.rows if r["empirical_optimum"]}


def run_fixed_ng_1d(k_values=DEFAULT_K_VALUES, n_g: float = DEFAULT_POINTS_PER_WAVELENGTH,
                    omega_grid=DEFAULT_OMEGA_GRID, tolerance: float = 1e-6,
                    max_iterations: int | None = None, source: str = "random", seed: int = 0,
                    workers: int = 1) -> Table:
    """CGMN iteration counts over an omega grid with ``k h = 2 pi / n_g`` for every k."""
    predicted = optimal_omega(n_g)
    problems = []
    for k in k_values:
        n = interior_points_for(k, n_g)
        problem = build_helmholtz_1d(k, n)
        problem = problem.with_rhs(source_1d(n, source, seed))
        problems.append((float(k), problem, 2.0 * math.pi / (k * problem.grid.spacing), predicted))
    return _scan(problems, omega_grid, tolerance, max_iterations, workers)


def run_fixed_h_1d(k_values=DEFAULT_K_VALUES, omega_grid=DEFAULT_OMEGA_GRID, tolerance: float = 1e-6,
                   max_iterations: int | None = None, n_g: float = DEFAULT_POINTS_PER_WAVELENGTH,
                   source: str = "random", seed: int = 0, workers: int = 1) -> Table:
    """Same scan with one grid, resolved for the largest k at ``n_g`` points per wavelength.

    Lower wavenumbers are over-resolved; each k gets its own prediction
    from its local ``n_g = 2 pi / (k h)``.
    """
    if any(not k > 0 for k in k_values):
        raise ValueError("wavenumbers must be positive")
    n = interior_points_for(max(k_values), n_g)
    s = source_1d(n, source, seed)
    problems = []
    for k in k_values:
        problem = build_helmholtz_1d(k, n).with_rhs(s)
        local_ng = 2.0 * math.pi / (k * problem.grid.spacing)
        problems.append((float(k), problem, local_ng, optimal_omega(local_ng)))
    return _scan(problems, omega_grid, tolerance, max_iterations, workers)


# ---------------------------------------------------------------- 2D contrast

@dataclass
class ContrastResult:
    problem: HelmholtzProblem
    background_k: float
    plan: SweepPlan
    scattered: np.ndarray
    total: np.ndarray
    history: ConvergenceHistory


def contrast_problem_2d(nx: int = DEFAULT_2D_GRID, ny: int | None = None, background_k: float | None = None,
                        anomaly_k: float | None = None, region=DEFAULT_2D_REGION):
    """Scattered-field problem on the unit square with a rectangular anomaly.

    Defaults: ``k0`` gives 10 points per wavelength on the grid and the
    anomaly has ``k = 2 k0``.
    """
    grid = Grid2D.unit_square(nx, ny)
    h = grid.spacing
    k0 = 2.0 * math.pi / (DEFAULT_POINTS_PER_WAVELENGTH * h) if background_k is None else float(background_k)
    k1 = DEFAULT_2D_CONTRAST * k0 if anomaly_k is None else float(anomaly_k)
    if not (k0 > 0 and k1 > 0):
        raise ValueError("wavenumbers must be positive")
    medium = Medium.with_anomaly(grid, k0, k1, tuple(region))
    problem = build_helmholtz_2d(medium, h)
    return problem.with_rhs(scattered_field_rhs(medium, k0, h)), k0


def relaxation_plan(problem: HelmholtzProblem, omega_policy: Union[float, str, SweepPlan],
                    curve: OmegaCurve | None = None) -> SweepPlan:
    """Plan from a constant omega, the string ``"local"``, or an explicit plan."""
    if isinstance(omega_policy, SweepPlan):
        return omega_policy
    if omega_policy == "local":
        return local_relaxation_plan(problem.medium.wavenumber, problem.grid.spacing, curve)
    return SweepPlan.constant(problem.dimension, float(omega_policy))


def run_contrast_2d(background_k: float | None = None, anomaly_k: float | None = None,
                    anomaly_region=DEFAULT_2D_REGION, grid: tuple[int, int] = (DEFAULT_2D_GRID, DEFAULT_2D_GRID),
                    omega_policy: Union[float, str, SweepPlan] = "local", tolerance: float = 1e-6,
                    max_iterations: int | None = None, curve: OmegaCurve | None = None,
                    record_true_residual: bool = False) -> ContrastResult:
    """Solve for the field scattered by a rectangular anomaly under a plane wave.

    ``omega_policy`` is a constant relaxation factor, ``"local"`` (omega
    from the optimal-omega curve at each point's local points per
    wavelength), or a ready-made ``SweepPlan``.
    """
    nx, ny = grid
    problem, k0 = contrast_problem_2d(nx, ny, background_k, anomaly_k, anomaly_region)
    plan = relaxation_plan(problem, omega_policy, curve)
    config = SolverConfig(tolerance, max_iterations, record_true_residual)
    u_sc, history = cgmn_solve(problem, plan, config)
    total = plane_wave(problem.medium, k0, problem.grid.spacing) + u_sc
    return ContrastResult(problem, k0, plan, u_sc, total, history)


def wavefield_table(result: ContrastResult) -> Table:
    grid = result.problem.grid
    X, Y = grid.coordinates()
    table = Table(["ix", "iy", "x", "y", "wavenumber", "omega", "total_re", "total_im",
                   "scattered_re", "scattered_im"])
    k = result.problem.medium.wavenumber.ravel()
    for idx, (x, y) in enumerate(zip(X.ravel(), Y.ravel())):
        table.append(ix=idx % grid.nx, iy=idx // grid.nx, x=x, y=y, wavenumber=k[idx],
                     omega=result.plan.omega[idx], total_re=result.total[idx].real,
                     total_im=result.total[idx].imag, scattered_re=result.scattered[idx].real,
                     scattered_im=result.scattered[idx].imag)
    return table


def history_table(history: ConvergenceHistory) -> Table:
    cols = ["iteration", "preconditioned_residual"]
    if history.true_residuals is not None:
        cols.append("true_residual")
    table = Table(cols)
    for i, r in enumerate(history.preconditioned_residuals):
        row = {"iteration": i, "preconditioned_residual": r}
        if history.true_residuals is not None:
            row["true_residual"] = history.true_residuals[i]
        table.append(**row)
    return table


# ---------------------------------------------------------------- symbol tables

def symbol_surface(n_g: float = DEFAULT_POINTS_PER_WAVELENGTH, theta_count: int = 128,
                   omega_count: int = 128) -> tuple[Table, Table, float]:
    """Amplitude on a theta x omega grid, and the condition proxy per omega.

    The proxy table uses the standard search grids (1024 angles, omega step
    0.005) independently of the surface resolution, so its argmin is
    ``optimal_omega(n_g)``.
    """
    if theta_count < 2 or omega_count < 2:
        raise ValueError("theta_count and omega_count must be at least 2")
    params = SymbolParams(n_g)
    theta = default_theta_grid(theta_count)
    omegas = np.linspace(0.01, 1.99, omega_count)
    amp = amplitude(theta[None, :], params, omegas[:, None])
    surface = Table(["theta", "omega", "amplitude"])
    for j, w in enumerate(omegas):
        for i, t in enumerate(theta):
            surface.append(theta=t, omega=w, amplitude=amp[j, i])

    proxy = condition_proxy_scan(OMEGA_SEARCH_GRID, params)
    best = int(np.argmin(proxy))
    proxy_table = Table(["omega", "condition_proxy", "is_argmin"])
    for j, (w, p) in enumerate(zip(OMEGA_SEARCH_GRID, proxy)):
        proxy_table.append(omega=float(w), condition_proxy=float(p), is_argmin=j == best)
    return surface, proxy_table, float(OMEGA_SEARCH_GRID[best])


def emit_symbol_surface(n_g: float, theta_count: int, omega_count: int, output) -> tuple[Path, Path, float]:
    """Write the amplitude surface to ``output`` and the proxy table beside it."""
    surface, proxy, argmin = symbol_surface(n_g, theta_count, omega_count)
    return surface.to_csv(output), proxy.to_csv(companion_path(output, "proxy")), argmin


def omega_curve_table(curve: OmegaCurve) -> Table:
    table = Table(["points_per_wavelength", "optimal_omega", "condition_proxy"])
    for ng, w, p in curve.samples:
        table.append(points_per_wavelength=ng, optimal_omega=w, condition_proxy=p)
    return table


# ---------------------------------------------------------------- oracle


@dataclass
class OracleVerification:
    identities: IdentityReport
    sweep_deviation: dict[str, float]
    sweep_tolerance: float = 1e-12

    @property
    def passed(self) -> bool:
        return self.identities.passed and all(v <= self.sweep_tolerance for v in self.sweep_deviation.values())

    def lines(self) -> list[str]:
        out = self.identities.lines()
        for key, value in self.sweep_deviation.items():
            status = "PASS" if value <= self.sweep_tolerance else "FAIL"
            out.append(f"{status}  {key:<18s} max deviation {value:.3e} (tol {self.sweep_tolerance:.1e})")
        return out


def verify_oracle(sizes=DEFAULT_ORACLE_SIZES, omegas=DEFAULT_ORACLE_OMEGAS,
                  tolerance: float = 1e-12) -> OracleVerification:
    """Run the identity suite on 1D Helmholtz and random matrices, plus sweep-vs-product checks."""
    sizes, omegas = list(sizes), list(omegas)
    if not sizes or not omegas:
        raise ValueError("verify_oracle needs at least one size and one omega")
    if any(n < 1 or n > 64 for n in sizes):
        raise ValueError("oracle sizes must lie in 1..64")
    report = verify_identities(sizes, omegas, tolerance, include_random=True)
    q_dev = r_dev = 0.0
    for n in sizes:
        matrix = oracle_helmholtz_1d(n).matrix
        plans = [SweepPlan.constant(n, w) for w in omegas]
        plans.append(SweepPlan.per_row(np.linspace(min(omegas), max(omegas), n)))
        for plan in plans:
            dq, dr = sweep_oracle_deviation(matrix, plan)
            q_dev, r_dev = max(q_dev, dq), max(r_dev, dr)
    return OracleVerification(report, {"sweep Q vs product": q_dev, "sweep R vs product": r_dev}, tolerance)


def timestamp() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S%z")
