"""Fourier symbol of the symmetric Kaczmarz iteration for the 1D Helmholtz stencil.

For the mode ``e_j = exp(i j theta)`` the iteration ``Q = I - A^T H A``
acts as multiplication by

    a(theta) = 1 - w(2-w) a1^2 a3 / (a2 a4)

where ``a1..a4`` are the symbols of ``A``, ``D + wL``, ``D`` and
``D + wL^T``.  With ``k h = 2 pi / n_g`` the amplitude depends only on the
points per wavelength ``n_g`` and on ``w``, which is what makes a
tabulated optimal-omega curve usable for spatially varying media.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .sweeps import SweepPlan

REFERENCE_SPACING = 1.0 / 101
OMEGA_SEARCH_GRID = np.round(0.01 + 0.005 * np.arange(397), 10)
DEFAULT_CURVE_NODES = (2.5, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 12.0, 16.0, 20.0, 30.0, 50.0)
DEGENERATE_TOL = 1e-14


def default_theta_grid(count: int = 1024) -> np.ndarray:
    """``count`` uniform angles from ``pi/count`` to ``pi - pi/count``."""
    if count < 1:
        raise ValueError("theta grid needs at least one point")
    if count == 1:
        return np.array([np.pi / 2])
    return np.linspace(np.pi / count, np.pi - np.pi / count, count)


@dataclass(frozen=True)
class SymbolParams:
    points_per_wavelength: float
    omega: float = 1.0
    spacing: float = REFERENCE_SPACING

    def __post_init__(self):
        if not self.points_per_wavelength > 0:
            raise ValueError("points per wavelength must be positive")
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / (self.points_per_wavelength * self.spacing)

    @property
    def gamma(self) -> float:
        """Diagonal entry ``k^2 - 2/h^2`` of the stencil."""
        return self.wavenumber ** 2 - 2.0 / self.spacing ** 2

    @property
    def beta(self) -> float:
        """Squared interior row norm ``gamma^2 + 2/h^4``."""
        return self.gamma ** 2 + 2.0 / self.spacing ** 4

    def with_omega(self, omega: float) -> "SymbolParams":
        return replace(self, omega=omega)


@dataclass(frozen=True)
class SymbolFactors:
    a1: np.ndarray
    a2: np.ndarray
    a3: float
    a4: np.ndarray


def symbol_factors(theta, params: SymbolParams, omega=None) -> SymbolFactors:
    """Symbols of ``A``, ``D + wL``, ``D`` and ``D + wL^T`` at ``theta``."""
    w = params.omega if omega is None else omega
    theta = np.asarray(theta, dtype=float)
    g, b, ih2 = params.gamma, params.beta, params.spacing ** -2
    a1 = g + 2.0 * ih2 * np.cos(theta)
    a2 = b + w * ih2 * (2.0 * g * np.exp(-1j * theta) + ih2 * np.exp(-2j * theta))
    a4 = b + w * ih2 * (2.0 * g * np.exp(1j * theta) + ih2 * np.exp(2j * theta))
    return SymbolFactors(a1, a2, b, a4)


def amplitude_factored(theta, params: SymbolParams, omega=None) -> np.ndarray:
    """``1 - w(2-w) a1^2 a3 / (a2 a4)``; complex-valued, real up to rounding."""
    w = params.omega if omega is None else omega
    f = symbol_factors(theta, params, w)
    return 1.0 - w * (2.0 - w) * f.a1 ** 2 * f.a3 / (f.a2 * f.a4)


def amplitude(theta, params: SymbolParams, omega=None) -> np.ndarray:
    """Real amplitude ``a(theta, omega)``.

    ``theta`` and ``omega`` broadcast against each other, so a surface is
    ``amplitude(theta[None, :], params, omegas[:, None])``.  The denominator
    ``a2 a4 = |a2|^2`` is formed as a squared modulus, which keeps full
    accuracy where the expanded polynomial cancels (omega near 2, theta
    near 0).

    Raises:
        ValueError: if ``|a2|^2`` vanishes or is not finite anywhere.
    """
    w = np.asarray(params.omega if omega is None else omega, dtype=float)
    theta = np.asarray(theta, dtype=float)
    g, b, ih2 = params.gamma, params.beta, params.spacing ** -2
    a1 = g + 2.0 * ih2 * np.cos(theta)
    re = b + w * ih2 * (2.0 * g * np.cos(theta) + ih2 * np.cos(2.0 * theta))
    im = w * ih2 * (2.0 * g * np.sin(theta) + ih2 * np.sin(2.0 * theta))
    denominator = re * re + im * im
    if not np.all(np.isfinite(denominator)) or np.any(denominator <= 0.0):
        raise ValueError("amplitude denominator vanishes: omega/theta outside the valid domain")
    return 1.0 - w * (2.0 - w) * b * a1 ** 2 / denominator


def amplitude_expanded(theta, params: SymbolParams, omega=None) -> np.ndarray:
    """The amplitude with the denominator multiplied out in cosines.

    ``beta^2 + 2 beta w (2 gamma cos t/h^2 + cos 2t/h^4) + w^2/h^4 (4 gamma^2
    + 4 gamma cos t/h^2 + 1/h^4)``.  Mathematically identical to
    ``amplitude``; loses a few digits where the sum cancels.
    """
    w = np.asarray(params.omega if omega is None else omega, dtype=float)
    theta = np.asarray(theta, dtype=float)
    g, b, ih2 = params.gamma, params.beta, params.spacing ** -2
    c1, c2 = np.cos(theta), np.cos(2.0 * theta)
    numerator = w * (2.0 - w) * b * (g + 2.0 * ih2 * c1) ** 2
    denominator = (b * b + 2.0 * b * w * (2.0 * g * ih2 * c1 + ih2 ** 2 * c2)
                   + w * w * ih2 ** 2 * (4.0 * g * g + 4.0 * g * ih2 * c1 + ih2 ** 2))
    return 1.0 - numerator / denominator


def _check_grid(theta_grid) -> np.ndarray:
    theta = np.atleast_1d(np.asarray(theta_grid, dtype=float))
    if theta.ndim != 1 or theta.size == 0:
        raise ValueError("theta grid must be a non-empty 1D sequence")
    if np.any(theta <= 0.0) or np.any(theta >= np.pi):
        raise ValueError("theta grid must lie strictly inside (0, pi)")
    return theta


def _proxy_rows(one_minus_a: np.ndarray) -> np.ndarray:
    lo = one_minus_a.min(axis=-1)
    hi = one_minus_a.max(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = hi / lo
    return np.where(lo <= DEGENERATE_TOL, np.inf, ratio)


def condition_proxy(omega: float, params: SymbolParams, theta_grid=None) -> float:
    """``max(1 - a) / min(1 - a)`` over the theta grid.

    A stand-in for the condition number of ``I - Q``.  Returns ``inf`` when
    ``min(1 - a)`` is not positive (up to ``DEGENERATE_TOL``) rather than
    clipping it.
    """
    theta = _check_grid(default_theta_grid() if theta_grid is None else theta_grid)
    return float(_proxy_rows(1.0 - amplitude(theta, params, omega)))


def condition_proxy_scan(omegas, params: SymbolParams, theta_grid=None) -> np.ndarray:
    """Vectorized ``condition_proxy`` over an array of omegas."""
    theta = _check_grid(default_theta_grid() if theta_grid is None else theta_grid)
    omegas = np.asarray(omegas, dtype=float)
    return _proxy_rows(1.0 - amplitude(theta[None, :], params, omegas[:, None]))


def optimal_omega(points_per_wavelength: float, spacing: float = REFERENCE_SPACING,
                  theta_grid=None, omega_grid=None) -> float:
    """Omega minimizing the condition proxy; ties go to the smaller omega."""
    return optimal_omega_with_proxy(points_per_wavelength, spacing, theta_grid, omega_grid)[0]


def optimal_omega_with_proxy(points_per_wavelength: float, spacing: float = REFERENCE_SPACING,
                             theta_grid=None, omega_grid=None) -> tuple[float, float]:
    if points_per_wavelength < 2:
        raise ValueError(f"need at least 2 points per wavelength, got {points_per_wavelength}")
    omegas = OMEGA_SEARCH_GRID if omega_grid is None else np.asarray(omega_grid, dtype=float)
    proxy = condition_proxy_scan(omegas, SymbolParams(points_per_wavelength, spacing=spacing), theta_grid)
    best = int(np.argmin(proxy))  # first occurrence, i.e. smallest omega
    return float(omegas[best]), float(proxy[best])


@dataclass(frozen=True)
class OmegaCurve:
    """Tabulated optimal omega against points per wavelength.

    Calling the curve interpolates linearly between nodes and clamps to the
    end values outside the tabulated range.
    """

    points_per_wavelength: np.ndarray
    optimal_omega: np.ndarray
    condition_proxy: np.ndarray

    def __post_init__(self):
        ng = np.asarray(self.points_per_wavelength, dtype=float)
        if ng.size == 0 or np.any(np.diff(ng) <= 0):
            raise ValueError("n_g values must be non-empty and strictly increasing")
        w = np.asarray(self.optimal_omega, dtype=float)
        if np.any(w <= 0) or np.any(w >= 2):
            raise ValueError("optimal omegas must lie in (0, 2)")
        object.__setattr__(self, "points_per_wavelength", ng)
        object.__setattr__(self, "optimal_omega", w)
        object.__setattr__(self, "condition_proxy", np.asarray(self.condition_proxy, dtype=float))

    def __call__(self, points_per_wavelength):
        return np.interp(points_per_wavelength, self.points_per_wavelength, self.optimal_omega)

    @property
    def samples(self) -> list[tuple[float, float, float]]:
        return list(zip(self.points_per_wavelength.tolist(), self.optimal_omega.tolist(),
                        self.condition_proxy.tolist()))


def omega_curve(n_g_values=DEFAULT_CURVE_NODES, spacing: float = REFERENCE_SPACING) -> OmegaCurve:
    ng = [float(v) for v in n_g_values]
    if any(v < 2 for v in ng):
        raise ValueError("every n_g must be at least 2")
    pairs = [optimal_omega_with_proxy(v, spacing) for v in ng]
    return OmegaCurve(np.array(ng), np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs]))


def local_points_per_wavelength(wavenumber, spacing: float) -> np.ndarray:
    """``2 pi / (k h)`` per gridpoint; ``inf`` where ``k == 0``."""
    k = np.asarray(wavenumber, dtype=float).ravel()
    with np.errstate(divide="ignore"):
        return np.where(k > 0, 2.0 * np.pi / (k * spacing), np.inf)


def local_relaxation_plan(wavenumber, spacing: float, curve: OmegaCurve | None = None) -> SweepPlan:
    """Per-row plan with ``omega_i = curve(2 pi / (k_i h))``."""
    curve = omega_curve() if curve is None else curve
    ng = local_points_per_wavelength(wavenumber, spacing)
    ng = np.minimum(ng, curve.points_per_wavelength[-1])
    return SweepPlan.per_row(curve(ng))
