"""Experiment orchestration: scenarios, error norms, sweeps, phase space.

A Scenario bundles every parameter of one physical setup.  The heavy objects
derived from it (band table, evaluator, ray bundle, corrector) are built once
in a ScenarioContext and shared across the epsilon ladder: the ray geometry
is epsilon-independent, only the field assembly and the direct solve scale
with the small parameter.
"""

from __future__ import annotations

import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bloch import (
    BandEvaluator,
    BlochProblem,
    BandTable,
    CorrectorField,
    build_band_table,
    well_prepared_corrector,
)
from .errors import PostCaustic
from .lattice import Lattice, PeriodicPotential, cosine_potential
from .nls import NlsConfig, mass, solve_nls
from .profiles import GaussianAmplitude, PolynomialPhase
from .rays import ConfinementPotential, RayBundle, trace_bundle
from .wkb import WaveField, eulerianize, initial_data, resolve_grid_points, wkb_field

FLOOR_ERROR = 1e-10


@dataclass(frozen=True)
class Scenario:
    """Complete description of one experiment setup."""

    name: str = "full"
    potential: PeriodicPotential = field(default_factory=lambda: cosine_potential(Lattice(), 1.0))
    cutoff: int = 32
    band: int = 1
    k_points: int = 129
    confinement: ConfinementPotential = field(default_factory=ConfinementPotential.harmonic)
    amplitude: GaussianAmplitude = field(default_factory=GaussianAmplitude)
    phase: PolynomialPhase = field(default_factory=PolynomialPhase)
    sigma: int = 1
    coupling: complex = 1.0
    x_min: float = -20.0
    x_max: float = 20.0
    points_per_cell: int = 16
    ray_points: int = 1601
    ray_margin: float = 7.0     # launch fan half-width in amplitude widths
    ray_dt: float = 2e-3
    # the splitting floor scales like (dt_factor)^2 with an O(10) constant
    # for unit-strength cell potentials; 0.0025 keeps it ~100x below the
    # leading asymptotic error at the bottom of the default ladder
    dt_factor: float = 0.0025
    tau0: float = 0.5
    n_snapshots: int = 8
    corrector: bool = True
    gap_tol: float = 1e-8

    def problem(self) -> BlochProblem:
        n_bands = min(self.band + 2, 2 * self.cutoff + 1)
        return BlochProblem(self.potential, cutoff=self.cutoff, n_bands=n_bands)

    def launch_grid(self) -> np.ndarray:
        lo, hi = self.amplitude.support_interval(self.ray_margin)
        return np.linspace(lo, hi, self.ray_points)

    def snapshot_times(self) -> np.ndarray:
        return np.linspace(self.tau0 / self.n_snapshots, self.tau0, self.n_snapshots)


class ScenarioContext:
    """Shared epsilon-independent machinery for one scenario."""

    def __init__(self, scenario: Scenario, table: BandTable | None = None):
        self.scenario = scenario
        if table is not None:
            self.table = table
            self.problem = table.problem
        else:
            self.problem = scenario.problem()
            self.table = build_band_table(
                self.problem, scenario.band, scenario.k_points, scenario.gap_tol)
        self.evaluator = BandEvaluator(self.table, sigma=scenario.sigma)
        self._bundle: RayBundle | None = None
        self._correctors: dict[int, CorrectorField] = {}

    def with_table(self, table: BandTable) -> "ScenarioContext":
        return ScenarioContext(self.scenario, table=table)

    def ray_step(self) -> float:
        """Largest step at most ray_dt that lands exactly on snapshot times."""
        s = self.scenario
        interval = s.tau0 / s.n_snapshots
        return interval / math.ceil(interval / s.ray_dt - 1e-12)

    @property
    def bundle(self) -> RayBundle:
        if self._bundle is None:
            s = self.scenario
            if s.coupling.imag != 0.0:
                raise ValueError("transport scenarios require a real coupling")
            self._bundle = trace_bundle(
                self.evaluator, s.confinement, self.launch_grid_checked(),
                s.phase, s.sigma, s.coupling, s.amplitude, s.tau0, self.ray_step())
        return self._bundle

    def launch_grid_checked(self) -> np.ndarray:
        grid = self.scenario.launch_grid()
        edge = float(np.max(self.scenario.amplitude.magnitude(grid[[0, -1]])))
        peak = float(np.max(self.scenario.amplitude.magnitude(grid)))
        if peak > 0 and edge / peak > 1e-6:
            warnings.warn("launch grid may not cover the envelope support",
                          stacklevel=2)
        return grid

    def check_precaustic(self):
        if self.bundle.caustic_time <= self.scenario.tau0:
            raise PostCaustic(
                f"first caustic at {self.bundle.caustic_time:.4f} precedes the "
                f"requested horizon {self.scenario.tau0}")

    def grid_points(self, epsilon: float) -> int:
        s = self.scenario
        return resolve_grid_points(s.x_min, s.x_max, epsilon,
                                   self.problem.potential.lattice.period,
                                   s.points_per_cell)

    def corrector_field(self, epsilon: float) -> CorrectorField:
        n = self.grid_points(epsilon)
        cached = self._correctors.get(n)
        if cached is None:
            s = self.scenario
            dx = (s.x_max - s.x_min) / n
            x = s.x_min + dx * np.arange(n)
            cached = well_prepared_corrector(
                self.problem, self.table, s.amplitude, s.phase,
                lambda0=s.coupling.real, sigma=s.sigma, x_grid=x,
                confinement=s.confinement, gap_tol=s.gap_tol)
            self._correctors[n] = cached
        return cached

    def initial_field(self, epsilon: float, with_corrector: bool | None = None) -> WaveField:
        s = self.scenario
        use = s.corrector if with_corrector is None else with_corrector
        corr = self.corrector_field(epsilon) if use else None
        return initial_data(s.amplitude, s.phase, self.evaluator, epsilon,
                            s.x_min, s.x_max, corrector=corr,
                            points_per_cell=s.points_per_cell,
                            n_points=self.grid_points(epsilon))

    def nls_config(self, epsilon: float) -> NlsConfig:
        s = self.scenario
        return NlsConfig(epsilon=epsilon, sigma=s.sigma,
                         lattice_potential=s.potential,
                         confinement=s.confinement, lambda_fn=s.coupling,
                         dt_factor=s.dt_factor)

    def approximate_field(self, epsilon: float, t: float) -> WaveField:
        s = self.scenario
        return wkb_field(self.bundle, t, epsilon, s.x_min, s.x_max,
                         s.points_per_cell, n_points=self.grid_points(epsilon))


@dataclass(frozen=True)
class ErrorRecord:
    """Error norms for one epsilon, sup over the snapshot set."""

    epsilon: float
    l2_error: float
    linf_error: float
    xs_errors: dict[int, float]
    runtime_seconds: float

    @property
    def at_floor(self) -> bool:
        return self.l2_error < FLOOR_ERROR


@dataclass(frozen=True)
class ConvergenceReport:
    scenario: str
    records: list[ErrorRecord]
    fitted_order_l2: float
    fitted_order_linf: float
    floor_flagged: bool

    def epsilons(self) -> list[float]:
        return [r.epsilon for r in self.records]


def error_norms(psi: WaveField, v0: WaveField, s_max: int = 2) -> ErrorRecord:
    """Discrete L2, Linf, and scaled-derivative norms of the difference.

    The scale-s norm sums ||x^a (eps d/dx)^b w||_{L2} over a + b <= s, with
    the derivative applied spectrally and the moment applied on the grid.
    """
    psi.check_grids_match(v0)
    w = psi.values - v0.values
    dx = psi.dx
    x = psi.grid
    eps = psi.epsilon

    l2 = math.sqrt(float(np.sum(np.abs(w) ** 2)) * dx)
    linf = float(np.max(np.abs(w)))

    spectrum = np.fft.fft(w)
    xi = psi.wavenumbers()
    xs: dict[int, float] = {}
    total = 0.0
    for s in range(s_max + 1):
        for beta in range(s + 1):
            alpha = s - beta
            deriv = np.fft.ifft((1j * xi * eps) ** beta * spectrum)
            total += math.sqrt(float(np.sum(np.abs(x ** alpha * deriv) ** 2)) * dx)
        xs[s] = total
    return ErrorRecord(epsilon=eps, l2_error=l2, linf_error=linf,
                       xs_errors=xs, runtime_seconds=0.0)


def fit_order(epsilons, errors) -> float:
    eps = np.asarray(epsilons, dtype=float)
    err = np.asarray(errors, dtype=float)
    keep = err > FLOOR_ERROR
    if int(np.sum(keep)) < 2:
        return float("nan")
    slope = np.polyfit(np.log(eps[keep]), np.log(err[keep]), 1)[0]
    return float(slope)


def convergence_sweep(context: ScenarioContext, epsilons,
                      with_corrector: bool | None = None,
                      s_max: int = 2, max_workers: int | None = None,
                      snapshot_times=None) -> ConvergenceReport:
    """Run the epsilon ladder and fit the error decay orders.

    The ladder must be strictly decreasing; records at the numerical floor
    are flagged and excluded from the fits.  Epsilons run in parallel
    threads (the heavy kernels release the GIL); the report is assembled in
    ladder order regardless of completion order.
    """
    epsilons = [float(e) for e in epsilons]
    if len(epsilons) < 3:
        raise ValueError("the epsilon ladder needs at least three rungs")
    for a, b in zip(epsilons, epsilons[1:]):
        if abs(b - 0.5 * a) > 1e-9 * a:
            raise ValueError("epsilon ladder must decrease by exact factors of two")
    context.check_precaustic()
    times = (np.asarray(snapshot_times, dtype=float) if snapshot_times is not None
             else context.scenario.snapshot_times())

    def run_one(eps: float) -> ErrorRecord:
        start = time.perf_counter()
        psi0 = context.initial_field(eps, with_corrector)
        snaps = solve_nls(context.nls_config(eps), psi0, times)
        l2 = linf = 0.0
        xs = {s: 0.0 for s in range(s_max + 1)}
        for snap in snaps:
            v0 = (context.approximate_field(eps, snap.t) if snap.t > 0.0
                  else context.initial_field(eps, with_corrector=False))
            rec = error_norms(snap, v0, s_max)
            l2 = max(l2, rec.l2_error)
            linf = max(linf, rec.linf_error)
            for s in xs:
                xs[s] = max(xs[s], rec.xs_errors[s])
        return ErrorRecord(epsilon=eps, l2_error=l2, linf_error=linf,
                           xs_errors=xs,
                           runtime_seconds=time.perf_counter() - start)

    if max_workers is None:
        max_workers = min(4, len(epsilons))
    if max_workers > 1 and len(epsilons) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            records = list(pool.map(run_one, epsilons))
    else:
        records = [run_one(e) for e in epsilons]

    floor = any(r.at_floor for r in records)
    return ConvergenceReport(
        scenario=context.scenario.name,
        records=records,
        fitted_order_l2=fit_order(epsilons, [r.l2_error for r in records]),
        fitted_order_linf=fit_order(epsilons, [r.linf_error for r in records]),
        floor_flagged=floor)


@dataclass(frozen=True)
class WignerGrid:
    """Windowed discrete phase-space density on an (x, xi) grid."""

    x_centers: np.ndarray
    xi_centers: np.ndarray
    values: np.ndarray          # (n_x, n_xi), real
    eta_max: float
    epsilon: float

    @property
    def dx(self) -> float:
        return float(self.x_centers[1] - self.x_centers[0])

    @property
    def dxi(self) -> float:
        return float(self.xi_centers[1] - self.xi_centers[0])

    def marginal(self) -> np.ndarray:
        """Momentum integral, which should reproduce |psi(x)|^2."""
        return np.sum(self.values, axis=1) * self.dxi

    def total_mass(self) -> float:
        return float(np.sum(self.values) * self.dx * self.dxi)

    def l1_distance(self, other: "WignerGrid") -> float:
        return float(np.sum(np.abs(self.values - other.values)) * self.dx * self.dxi)


def wigner_transform(psi: WaveField, eta_fraction: float = 0.25,
                     x_stride: int | None = None) -> WignerGrid:
    """Windowed Wigner transform with offsets on the grid lattice.

    Correlation offsets eta are restricted to |eta| <= eta_fraction * box
    under a Hann taper; the zero-offset weight is one, which pins the
    momentum marginal to |psi(x)|^2 exactly on the dual grid.  Real output is
    enforced by the Hermitian symmetry of the correlation.  The density is
    smooth on the envelope scale in x, so by default the x axis is strided
    down to at most 2048 centers.
    """
    n = psi.n_points
    dx = psi.dx
    eps = psi.epsilon
    d_eta = 2.0 * dx / eps
    j_max = int(math.floor(eta_fraction * psi.box_length / d_eta))
    j_max = max(j_max, 1)
    offsets = np.arange(-j_max, j_max + 1)
    eta_max = (j_max + 1) * d_eta
    window = np.cos(0.5 * math.pi * offsets * d_eta / eta_max) ** 2

    if x_stride is None:
        x_stride = max(1, n // 2048)
    centers = np.arange(0, n, x_stride)

    vals = psi.values
    corr = np.zeros((centers.size, offsets.size), dtype=complex)
    for col, j in enumerate(offsets):
        minus = centers - j
        plus = centers + j
        ok = (minus >= 0) & (minus < n) & (plus >= 0) & (plus < n)
        corr[ok, col] = vals[minus[ok]] * np.conj(vals[plus[ok]]) * window[col]

    m = offsets.size
    # xi_l = 2 pi l / (m d_eta), centered; realize the sum with an FFT
    spec = np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(corr, axes=1), axis=1),
                           axes=1) * m
    values = spec.real * d_eta / (2.0 * math.pi)
    xi = 2.0 * math.pi * np.fft.fftshift(np.fft.fftfreq(m, d=d_eta))
    return WignerGrid(x_centers=psi.grid[centers], xi_centers=xi, values=values,
                      eta_max=eta_max, epsilon=eps)


def wigner_predicted(context: ScenarioContext, t: float, epsilon: float,
                     mollifier_width: float,
                     reference: WignerGrid) -> WignerGrid:
    """Band-comb phase-space density predicted by the transported envelope.

    Each grid point contributes Gaussian lines at the transported momentum
    shifted by dual-lattice vectors, weighted by the squared plane-wave
    coefficients of the cell eigenfunction and the spreading factor; the
    lines are mollified to the reference grid.
    """
    fields = eulerianize(context.bundle, t, reference.x_centers)
    ev = context.evaluator
    g = ev.g
    xi = reference.xi_centers
    values = np.zeros((reference.x_centers.size, xi.size))
    inside = np.nonzero(fields.inside)[0]
    weight_all = np.abs(fields.amp) ** 2
    norm = 1.0 / (mollifier_width * math.sqrt(2.0 * math.pi))
    for i in inside:
        k = fields.grad_phi[i]
        vec, fold = ev.eigvec_aligned(float(k))
        probs = np.abs(vec) ** 2
        keep = np.nonzero(probs > 1e-14)[0]
        centers = k + (ev.problem.modes[keep] - fold) * g
        lines = np.exp(-0.5 * ((xi[None, :] - centers[:, None]) / mollifier_width) ** 2)
        values[i] = weight_all[i] * norm * (probs[keep] @ lines)
    return WignerGrid(x_centers=reference.x_centers, xi_centers=xi, values=values,
                      eta_max=reference.eta_max, epsilon=epsilon)


def wigner_l1_discrepancy(transform: WignerGrid, predicted: WignerGrid,
                          mollifier_width: float,
                          x_window: float | None = None) -> float:
    """L1 distance between the two phase-space densities at a common scale.

    Weak-star agreement is only testable against shared test functions: the
    raw transform carries its finite-window line kernel and the cell-scale
    wobble of the fast profile in x, neither of which the band-comb measure
    has.  Both grids are therefore smoothed identically: a Gaussian of the
    prediction's mollifier width along momentum and one fast cell along
    position (default), then integrated.
    """
    from scipy.ndimage import gaussian_filter1d

    if transform.values.shape != predicted.values.shape:
        raise ValueError("grids must share their sampling")
    if x_window is None:
        x_window = transform.epsilon
    sig_xi = mollifier_width / transform.dxi
    sig_x = x_window / transform.dx
    a = gaussian_filter1d(transform.values, sigma=sig_xi, axis=1, mode="constant")
    a = gaussian_filter1d(a, sigma=sig_x, axis=0, mode="constant")
    b = gaussian_filter1d(predicted.values, sigma=sig_x, axis=0, mode="constant")
    return float(np.sum(np.abs(a - b)) * transform.dx * transform.dxi)


def gauge_phase_function(seed: int, g: float, n_harmonics: int = 3,
                         amplitude: float = 0.3):
    """Random smooth periodic gauge phase for invariance experiments."""
    rng = np.random.default_rng(seed)
    coeffs = amplitude * rng.uniform(-1.0, 1.0, size=(n_harmonics, 2))
    const = rng.uniform(-math.pi, math.pi)

    def theta(k):
        k = np.asarray(k, dtype=float)
        out = np.full_like(k, const)
        for h in range(1, n_harmonics + 1):
            out = out + coeffs[h - 1, 0] * np.sin(2.0 * math.pi * h * k / g)
            out = out + coeffs[h - 1, 1] * np.cos(2.0 * math.pi * h * k / g)
        return out

    return theta


def randomized_gauge_context(context: ScenarioContext, seed: int) -> ScenarioContext:
    theta = gauge_phase_function(seed, context.evaluator.g)
    return context.with_table(context.table.with_gauge(theta))
