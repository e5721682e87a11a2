"""Eulerian reconstruction of ray data and assembly of the oscillatory field.

The ray bundle is Lagrangian: everything is sampled along trajectories
labeled by their launch point.  Before a caustic the flow map is monotone in
1D, so it is inverted by monotone cubic interpolation and the transported
quantities are pulled back to a fixed grid.  The leading-order field is then

    amp(t,x) * chi(x/eps, grad_phi(t,x)) * exp(i omega(t,x)) * exp(i phi(t,x)/eps)

with the cell eigenfunction evaluated by fresh eigensolves at the local
momentum, phase-aligned to the band table's gauge.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from .bloch import BandEvaluator, CorrectorField, fold_momentum
from .errors import ExtrapolationWarning, GridResolutionError, PostCaustic
from .rays import RayBundle

DEFAULT_POINTS_PER_CELL = 16


@dataclass(frozen=True)
class WaveField:
    """Complex values on a uniform periodic grid, with scale metadata.

    The grid covers [x_min, x_max) with the right endpoint identified; the
    point count is a power of two so spectral steps stay radix-2.
    """

    epsilon: float
    x_min: float
    x_max: float
    values: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        n = self.values.size
        if n < 2 or (n & (n - 1)) != 0:
            raise GridResolutionError(f"n_points must be a power of two, got {n}")
        if not self.x_max > self.x_min:
            raise GridResolutionError("empty box")

    @property
    def n_points(self) -> int:
        return self.values.size

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_points

    @property
    def grid(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_points)

    @property
    def box_length(self) -> float:
        return self.x_max - self.x_min

    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.dx)

    def with_values(self, values: np.ndarray, t: float | None = None) -> "WaveField":
        return WaveField(epsilon=self.epsilon, x_min=self.x_min, x_max=self.x_max,
                         values=np.asarray(values, dtype=complex),
                         t=self.t if t is None else float(t))

    def check_grids_match(self, other: "WaveField"):
        if (self.n_points != other.n_points
                or abs(self.x_min - other.x_min) > 1e-12
                or abs(self.x_max - other.x_max) > 1e-12
                or abs(self.epsilon - other.epsilon) > 1e-15):
            raise ValueError("wave fields live on different grids")


def resolve_grid_points(x_min: float, x_max: float, epsilon: float,
                        period: float = 1.0,
                        points_per_cell: int = DEFAULT_POINTS_PER_CELL,
                        n_points: int | None = None) -> int:
    """Smallest power-of-two point count resolving the fast cell scale."""
    needed = (x_max - x_min) * points_per_cell / (epsilon * period)
    n = 2
    while n < needed:
        n *= 2
    if n_points is not None:
        if n_points < n:
            raise GridResolutionError(
                f"{n_points} points cannot resolve the fast scale; "
                f"need at least {n} for epsilon={epsilon}")
        n = n_points
    return n


def empty_field(x_min: float, x_max: float, epsilon: float, n_points: int,
                t: float = 0.0) -> WaveField:
    return WaveField(epsilon=epsilon, x_min=x_min, x_max=x_max,
                     values=np.zeros(n_points, dtype=complex), t=t)


@dataclass(frozen=True)
class EulerianFields:
    """Ray quantities pulled back to a fixed spatial grid at one time.

    ``amp`` is the ray-transported envelope without its accumulated phase
    angle (that angle is ``omega``): |amp| * sqrt(jac) equals the launch
    amplitude magnitude wherever the grid lies inside the ray fan.
    ``grad_phi`` is the raw transported momentum; fold it into the zone for
    cell-eigenfunction lookups.
    """

    t: float
    x_grid: np.ndarray
    phi: np.ndarray
    grad_phi: np.ndarray
    amp: np.ndarray
    omega: np.ndarray
    jac: np.ndarray
    inside: np.ndarray

    def grad_phi_folded(self, dual_period: float) -> np.ndarray:
        folded, _ = fold_momentum(self.grad_phi, dual_period)
        return folded


def eulerianize(bundle: RayBundle, t: float, x_grid) -> EulerianFields:
    """Invert the flow map at time t and pull ray data back to the grid.

    Grid points outside the ray fan get zero fields (the launch envelope is
    negligible there by construction of the fan margin).
    """
    if t >= bundle.caustic_time:
        raise PostCaustic(
            f"time {t} is at or beyond the first caustic {bundle.caustic_time:.6f}")
    j = bundle.time_index(t)
    x_grid = np.atleast_1d(np.asarray(x_grid, dtype=float))
    x_ray = bundle.x[j]
    if np.any(np.diff(x_ray) <= 0):
        raise PostCaustic(f"flow map is not monotone at t={t}; caustic was missed")

    inside = (x_grid >= x_ray[0]) & (x_grid <= x_ray[-1])
    if not np.all(inside):
        warnings.warn(
            f"{int(np.sum(~inside))} grid points outside the ray fan were zero-filled",
            ExtrapolationWarning, stacklevel=2)

    x0 = np.zeros_like(x_grid)
    inverse = PchipInterpolator(x_ray, bundle.x0_grid, extrapolate=False)
    x0[inside] = inverse(x_grid[inside])

    x0_nodes = bundle.x0_grid
    phi_s = CubicSpline(x0_nodes, bundle.phase[j])
    k_s = CubicSpline(x0_nodes, bundle.k[j])
    jac_s = CubicSpline(x0_nodes, bundle.jacobian[j])
    omega_s = CubicSpline(x0_nodes, bundle.berry[j] + bundle.nlphase[j])

    phi = np.where(inside, phi_s(x0), 0.0)
    grad_phi = np.where(inside, k_s(x0), 0.0)
    jac = np.where(inside, jac_s(x0), 1.0)
    omega = np.where(inside, omega_s(x0), 0.0)
    amp = np.zeros(x_grid.size, dtype=complex)
    amp[inside] = np.asarray(bundle.a_i(x0[inside]), dtype=complex) \
        / np.sqrt(jac[inside])
    return EulerianFields(t=float(t), x_grid=x_grid, phi=phi, grad_phi=grad_phi,
                          amp=amp, omega=omega, jac=jac, inside=inside)


def assemble_v0(fields: EulerianFields, band, epsilon: float,
                points_per_cell: int = DEFAULT_POINTS_PER_CELL) -> WaveField:
    """Leading-order oscillatory field on the grid carried by ``fields``.

    The grid must resolve the fast scale for this epsilon; the cell
    eigenfunction is evaluated at the transported momentum of each grid
    point, in the band table's gauge, Fourier-synthesized at x/epsilon.
    """
    evaluator = band if isinstance(band, BandEvaluator) else BandEvaluator(band)
    x = fields.x_grid
    dx = x[1] - x[0]
    x_min = float(x[0])
    x_max = float(x[0] + dx * x.size)
    if dx > epsilon * evaluator.period / points_per_cell + 1e-15:
        raise GridResolutionError(
            f"grid spacing {dx:.3e} does not resolve the cell scale "
            f"{epsilon * evaluator.period:.3e} at {points_per_cell} points per cell")

    values = np.zeros(x.size, dtype=complex)
    inside = fields.inside
    if np.any(inside):
        chi = evaluator.chi_values(fields.grad_phi[inside], x[inside] / epsilon)
        values[inside] = (fields.amp[inside] * chi
                          * np.exp(1j * fields.omega[inside])
                          * np.exp(1j * fields.phi[inside] / epsilon))
    return WaveField(epsilon=float(epsilon), x_min=x_min, x_max=x_max,
                     values=values, t=fields.t)


def wkb_field(bundle: RayBundle, t: float, epsilon: float,
              x_min: float, x_max: float,
              points_per_cell: int = DEFAULT_POINTS_PER_CELL,
              n_points: int | None = None) -> WaveField:
    """Convenience: grid construction, flow inversion, and field assembly."""
    evaluator = bundle.evaluator
    n = resolve_grid_points(x_min, x_max, epsilon, evaluator.period,
                            points_per_cell, n_points)
    grid = x_min + (x_max - x_min) / n * np.arange(n)
    fields = eulerianize(bundle, t, grid)
    return assemble_v0(fields, evaluator, epsilon, points_per_cell)


def initial_data(a_i, phi_i, band, epsilon: float, x_min: float, x_max: float,
                 corrector: CorrectorField | None = None,
                 points_per_cell: int = DEFAULT_POINTS_PER_CELL,
                 n_points: int | None = None) -> WaveField:
    """Oscillatory initial datum, optionally with its first-order corrector.

    The bare term is a_I(x) chi(x/eps, phi_I'(x)) exp(i phi_I/eps); supplying
    the corrector adds eps * phi_1(x, x/eps) under the same carrier
    oscillation, which is the well-prepared form needed for the clean
    first-order convergence rate.
    """
    evaluator = band if isinstance(band, BandEvaluator) else BandEvaluator(band)
    n = resolve_grid_points(x_min, x_max, epsilon, evaluator.period,
                            points_per_cell, n_points)
    dx = (x_max - x_min) / n
    x = x_min + dx * np.arange(n)
    momenta = np.asarray(phi_i.gradient(x), dtype=float)
    chi = evaluator.chi_values(momenta, x / epsilon)
    values = np.asarray(a_i(x), dtype=complex) * chi
    if corrector is not None:
        if corrector.x_grid.size != n or np.max(np.abs(corrector.x_grid - x)) > 1e-12:
            raise ValueError("corrector was computed on a different grid")
        values = values + epsilon * corrector.values_at(x / epsilon)
    values = values * np.exp(1j * np.asarray(phi_i(x), dtype=float) / epsilon)
    return WaveField(epsilon=float(epsilon), x_min=float(x_min), x_max=float(x_max),
                     values=values, t=0.0)
