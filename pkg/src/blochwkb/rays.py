"""Semiclassical ray transport for a single isolated band.

Rays follow the band Hamiltonian flow dx/dt = E'(k), dk/dt = -U'(x), carrying
along the tangent (variational) system for the flow Jacobian, the Lagrangian
action phase, the geometric (Berry) phase and the intensity-driven nonlinear
phase.  The Jacobian comes from the exact tangent ODE rather than from
differencing neighbor rays, so caustic detection is independent of bundle
spacing.  In one dimension the Berry phase reduces to a line integral of the
connection over momentum, which is read off a primitive tabulated in the band
table's gauge; this makes every downstream phase transform exactly under a
change of table gauge.

All quantities are 1D; the state layout mirrors the d-dimensional structure
(position, momentum, tangent pair) so a higher-dimensional extension changes
array widths, not the integrator.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bloch import BandEvaluator
from .errors import ZoneFoldWarning

CAUSTIC_TOL = 1e-6


@dataclass(frozen=True)
class ConfinementPotential:
    """Slow external potential with analytic first and second derivatives.

    Built-in kinds are sub-quadratic by construction (bounded curvature).
    """

    kind: str
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray]

    @staticmethod
    def zero() -> "ConfinementPotential":
        return ConfinementPotential(
            kind="zero",
            value=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
            gradient=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
            hessian=lambda x: np.zeros_like(np.asarray(x, dtype=float)))

    @staticmethod
    def harmonic(omega: float = 1.0) -> "ConfinementPotential":
        w2 = float(omega) ** 2
        return ConfinementPotential(
            kind=f"harmonic(omega={omega})",
            value=lambda x: 0.5 * w2 * np.asarray(x, dtype=float) ** 2,
            gradient=lambda x: w2 * np.asarray(x, dtype=float),
            hessian=lambda x: np.full_like(np.asarray(x, dtype=float), w2))

    @staticmethod
    def stark(field: float = 1.0) -> "ConfinementPotential":
        e = float(field)
        return ConfinementPotential(
            kind=f"stark(field={field})",
            value=lambda x: -e * np.asarray(x, dtype=float),
            gradient=lambda x: np.full_like(np.asarray(x, dtype=float), -e),
            hessian=lambda x: np.zeros_like(np.asarray(x, dtype=float)))

    @staticmethod
    def polynomial(coeffs) -> "ConfinementPotential":
        """U(x) = sum_j coeffs[j] x^j, capped at degree 2 (sub-quadratic)."""
        c = [float(v) for v in coeffs]
        if len(c) > 3:
            raise ValueError("polynomial confinement must have degree <= 2")
        c = c + [0.0] * (3 - len(c))

        return ConfinementPotential(
            kind=f"poly({c})",
            value=lambda x: c[0] + c[1] * np.asarray(x, dtype=float)
            + c[2] * np.asarray(x, dtype=float) ** 2,
            gradient=lambda x: c[1] + 2.0 * c[2] * np.asarray(x, dtype=float),
            hessian=lambda x: np.full_like(np.asarray(x, dtype=float), 2.0 * c[2]))


@dataclass(frozen=True)
class RayPath:
    """Samples of one semiclassical trajectory, truncated at the caustic.

    berry holds the imaginary part of the accumulated connection integral
    (the geometric phase angle); nlphase holds the accumulated
    intensity-driven phase angle.  The transported envelope along the ray is
    a_I(x0) * exp(i (berry + nlphase)), so its modulus is conserved exactly.
    """

    x0: float
    k0: float
    times: np.ndarray
    x: np.ndarray
    k: np.ndarray
    jacobian: np.ndarray
    phase: np.ndarray
    berry: np.ndarray
    nlphase: np.ndarray
    caustic_time: float      # inf when no caustic was met
    folded: bool             # momentum left the fundamental zone at some time


@dataclass(frozen=True)
class RayBundle:
    """Rays over an ordered launch grid with shared sample times."""

    x0_grid: np.ndarray
    times: np.ndarray
    x: np.ndarray            # (n_times, n_rays)
    k: np.ndarray
    jacobian: np.ndarray
    phase: np.ndarray
    berry: np.ndarray
    nlphase: np.ndarray
    alive: np.ndarray        # (n_times, n_rays) False past a ray's caustic
    caustic_times: np.ndarray
    caustic_time: float
    evaluator: BandEvaluator
    sigma: int
    a_i: object              # launch envelope, for Eulerian pullback

    @property
    def n_rays(self) -> int:
        return self.x0_grid.size

    def ray(self, index: int) -> RayPath:
        valid = self.alive[:, index]
        n_valid = int(np.sum(valid))
        sl = slice(0, n_valid)
        return RayPath(
            x0=float(self.x0_grid[index]),
            k0=float(self.k[0, index]),
            times=self.times[sl],
            x=self.x[sl, index],
            k=self.k[sl, index],
            jacobian=self.jacobian[sl, index],
            phase=self.phase[sl, index],
            berry=self.berry[sl, index],
            nlphase=self.nlphase[sl, index],
            caustic_time=float(self.caustic_times[index]),
            folded=bool(np.any(np.abs(self.k[sl, index])
                               > 0.5 * self.evaluator.g)))

    def time_index(self, t: float) -> int:
        dt = self.times[1] - self.times[0] if self.times.size > 1 else 1.0
        j = int(round(t / dt))
        if j < 0 or j >= self.times.size or abs(self.times[j] - t) > 1e-9 * max(1.0, abs(t)) + 1e-12:
            raise ValueError(f"time {t} is not a stored sample of this bundle")
        return j


def _transport_rhs(state: np.ndarray, evaluator: BandEvaluator,
                   confinement: ConfinementPotential, lam_real: float,
                   sigma: int, intensity: np.ndarray) -> np.ndarray:
    """Right-hand side of the coupled ray system.

    State rows: x, k, dx (tangent position), dk (tangent momentum), phase,
    nlphase.  The Berry angle is not integrated here; it is algebraic in k.
    """
    x, k, dx, dk, _, _ = state
    vel = evaluator.velocity(k)
    curv = evaluator.curvature(k)
    ugrad = confinement.gradient(x)
    uhess = confinement.hessian(x)
    jac_safe = np.maximum(np.abs(dx), 1e-300)
    kappa = evaluator.self_interaction(k)
    out = np.empty_like(state)
    out[0] = vel
    out[1] = -ugrad
    out[2] = curv * dk
    out[3] = -uhess * dx
    out[4] = k * vel - evaluator.energy(k) - confinement.value(x)
    out[5] = -lam_real * kappa * intensity / jac_safe ** sigma
    return out


def _as_evaluator(band, sigma: int) -> BandEvaluator:
    if isinstance(band, BandEvaluator):
        if band.sigma != int(sigma):
            raise ValueError(
                f"evaluator was built for sigma={band.sigma}, requested {sigma}")
        return band
    return BandEvaluator(band, sigma=sigma)


def trace_bundle(band, confinement: ConfinementPotential,
                 x0_grid, phi_i, sigma: int, lambda_fn, a_i,
                 t_end: float, dt: float,
                 caustic_tol: float = CAUSTIC_TOL) -> RayBundle:
    """Trace the full launch grid with a shared fixed-step RK4 clock.

    ``band`` is a BandTable or a prebuilt BandEvaluator.  lambda_fn may be a
    complex constant or a callable of time; only its real part feeds the
    transported phase (complex couplings belong to blowup_experiment).
    Per-ray caustics truncate that ray only.
    """
    evaluator = _as_evaluator(band, sigma)
    x0_grid = np.atleast_1d(np.asarray(x0_grid, dtype=float))
    if x0_grid.size > 1 and np.any(np.diff(x0_grid) <= 0):
        raise ValueError("launch grid must be strictly increasing")
    n_steps = int(round(t_end / dt))
    if abs(n_steps * dt - t_end) > 1e-9 * max(1.0, t_end):
        n_steps = math.ceil(t_end / dt - 1e-12)
    lam = _as_lambda(lambda_fn)
    sigma = int(sigma)

    n_rays = x0_grid.size
    intensity = np.abs(np.asarray(a_i(x0_grid), dtype=complex)) ** (2 * sigma)

    state = np.zeros((6, n_rays))
    state[0] = x0_grid
    state[1] = np.asarray(phi_i.gradient(x0_grid), dtype=float)
    state[2] = 1.0
    state[3] = np.asarray(phi_i.curvature(x0_grid), dtype=float)
    state[4] = np.asarray(phi_i(x0_grid), dtype=float)

    times = np.linspace(0.0, n_steps * dt, n_steps + 1)
    traj = np.zeros((n_steps + 1, 6, n_rays))
    traj[0] = state
    alive = np.ones((n_steps + 1, n_rays), dtype=bool)
    caustic_times = np.full(n_rays, np.inf)
    active = np.ones(n_rays, dtype=bool)

    for step in range(n_steps):
        t = times[step]
        k1 = _transport_rhs(state, evaluator, confinement, lam(t).real, sigma, intensity)
        k2 = _transport_rhs(state + 0.5 * dt * k1, evaluator, confinement,
                            lam(t + 0.5 * dt).real, sigma, intensity)
        k3 = _transport_rhs(state + 0.5 * dt * k2, evaluator, confinement,
                            lam(t + 0.5 * dt).real, sigma, intensity)
        k4 = _transport_rhs(state + dt * k3, evaluator, confinement,
                            lam(t + dt).real, sigma, intensity)
        new_state = state + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

        crossed = active & (new_state[2] <= caustic_tol)
        if np.any(crossed):
            # linear inversion of J(t) for the crossing time
            j_prev = state[2, crossed]
            j_next = new_state[2, crossed]
            frac = np.clip(j_prev / np.maximum(j_prev - j_next, 1e-300), 0.0, 1.0)
            caustic_times[crossed] = t + frac * dt
            active[crossed] = False
        state = np.where(active[None, :], new_state, state)
        traj[step + 1] = state
        alive[step + 1] = active

    berry = np.zeros((n_steps + 1, n_rays))
    prim0 = evaluator.berry_primitive(traj[0, 1])
    for j in range(n_steps + 1):
        berry[j] = -(evaluator.berry_primitive(traj[j, 1]) - prim0)

    if np.any(np.abs(traj[:, 1, :][alive]) > 0.5 * evaluator.g):
        warnings.warn("ray momentum left the fundamental zone and was folded",
                      ZoneFoldWarning, stacklevel=2)

    return RayBundle(
        x0_grid=x0_grid, times=times,
        x=traj[:, 0, :], k=traj[:, 1, :], jacobian=traj[:, 2, :],
        phase=traj[:, 4, :], berry=berry, nlphase=traj[:, 5, :],
        alive=alive, caustic_times=caustic_times,
        caustic_time=float(np.min(caustic_times)),
        evaluator=evaluator, sigma=sigma, a_i=a_i)


def trace_ray(band, confinement: ConfinementPotential,
              x0: float, phi_i, sigma: int, lambda_fn, a_i_abs: float,
              t_end: float, dt: float,
              caustic_tol: float = CAUSTIC_TOL) -> RayPath:
    """Trace a single launch point; see trace_bundle for conventions."""
    bundle = trace_bundle(band, confinement, np.array([x0]), phi_i, sigma,
                          lambda_fn, _ConstAmp(a_i_abs), t_end, dt, caustic_tol)
    return bundle.ray(0)


def amplitude_on_ray(path: RayPath, a_i_value: complex) -> np.ndarray:
    """Transported envelope along the ray before the 1/sqrt(J) spreading.

    Closed form of the transport law: the modulus is frozen at |a_I(x0)| and
    the phase accumulates the geometric and nonlinear angles.
    """
    return complex(a_i_value) * np.exp(1j * (path.berry + path.nlphase))


@dataclass(frozen=True)
class BlowupResult:
    """Modulus history of the transported envelope under complex coupling."""

    times: np.ndarray
    intensity: np.ndarray       # |envelope|^2 samples (inf past blow-up)
    blowup_time: float          # first time intensity exceeds the threshold
    singular_time: float        # extrapolated divergence time (inf if none)


def blowup_experiment(band, confinement: ConfinementPotential,
                      x0: float, sigma: int, lambda_complex, a_i_abs: float,
                      t_end: float, dt: float,
                      threshold: float = 1e6) -> BlowupResult:
    """Integrate the envelope-intensity law with a complex coupling.

    The intensity m = |envelope|^2 obeys dm/dt = Im(lambda) kappa m^(sigma+1)
    / J^sigma along the ray; its sigma-th inverse power q = m^(-sigma) obeys
    dq/dt = -sigma Im(lambda) kappa / J^sigma, which stays finite through the
    blow-up, so q is integrated and the singular time is read off its zero
    crossing.  The crossing estimate is refined by Richardson extrapolation
    from a half-step rerun.
    """
    sigma = int(sigma)
    lam = _as_lambda(lambda_complex)
    evaluator = _as_evaluator(band, sigma)

    def run(step: float):
        bundle = trace_bundle(evaluator, confinement, np.array([float(x0)]),
                              _FlatPhase(), sigma, lambda t: complex(lam(t)).real,
                              _ConstAmp(a_i_abs), t_end, step)
        times = bundle.times
        k = bundle.k[:, 0]
        jac = bundle.jacobian[:, 0]
        kappa = evaluator.self_interaction(k)
        rate = -sigma * np.array([lam(t).imag for t in times]) * kappa \
            / np.maximum(jac, 1e-300) ** sigma
        q = np.empty_like(times)
        q[0] = float(a_i_abs) ** (-2 * sigma)
        # trapezoid accumulation of the exactly-linear-in-t inverse power
        q[1:] = q[0] + np.cumsum(0.5 * (rate[1:] + rate[:-1]) * np.diff(times))
        return times, q

    times, q = run(dt)
    _, q_half = run(dt / 2.0)
    if q_half.size == 2 * q.size - 1:
        q_refined = q_half[::2] + (q_half[::2] - q) / 3.0
    else:
        q_refined = q

    with np.errstate(divide="ignore", over="ignore"):
        intensity = np.where(q_refined > 0.0, q_refined ** (-1.0 / sigma), np.inf)

    singular_time = _zero_crossing(times, q_refined)
    target = float(threshold) ** (-float(sigma))
    blowup_time = _zero_crossing(times, q_refined - target)
    return BlowupResult(times=times, intensity=intensity,
                        blowup_time=blowup_time, singular_time=singular_time)


def _zero_crossing(times: np.ndarray, values: np.ndarray) -> float:
    below = values <= 0.0
    if not np.any(below):
        return math.inf
    j = int(np.argmax(below))
    if j == 0:
        return float(times[0])
    t0, t1 = times[j - 1], times[j]
    v0, v1 = values[j - 1], values[j]
    return float(t0 + v0 / (v0 - v1) * (t1 - t0))


class _FlatPhase:
    def __call__(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def gradient(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def curvature(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))


class _ConstAmp:
    def __init__(self, value: float):
        self.value = float(value)

    def __call__(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.value, dtype=complex)


def _as_lambda(lambda_fn) -> Callable[[float], complex]:
    if callable(lambda_fn):
        return lambda t: complex(lambda_fn(t))
    value = complex(lambda_fn)
    return lambda t: value
