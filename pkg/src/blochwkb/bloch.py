"""Plane-wave Bloch eigensolver, gauge-fixed band tables, and band evaluators.

The cell eigenvalue problem for the shifted Hamiltonian
H(k) = (1/2)(-i d/dy + k)^2 + V(y) is discretized in the plane-wave basis
exp(i m G y), m = -M..M, where G is the dual period.  In that basis H(k) is a
Hermitian banded matrix: the kinetic part is diagonal and the potential
couples modes m and m' through its Fourier coefficient V(m - m').

A BandTable stores gauge-fixed samples of one band over the Brillouin zone.
The gauge is anchored at k = 0 (largest eigenvector entry rotated to the
positive real axis) and propagated to neighbors by aligning consecutive
overlaps to the positive real axis; the leftover holonomy across the zone
edge is recorded as a winding phase.  A BandEvaluator turns the table into
smooth functions of arbitrary momentum: spline-interpolated scalars backed by
an internal dense eigensolve sweep, plus fresh, gauge-aligned eigenvectors at
any requested momentum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.interpolate import CubicSpline

from .errors import IsolatednessViolation
from .lattice import PeriodicPotential

DEFAULT_GAP_TOL = 1e-8


@dataclass(frozen=True)
class BlochProblem:
    """Plane-wave Galerkin truncation of the cell eigenvalue problem."""

    potential: PeriodicPotential
    cutoff: int = 32          # modes -cutoff..cutoff, matrix size 2*cutoff+1
    n_bands: int = 8

    def __post_init__(self):
        if self.cutoff < 2 * self.potential.max_mode:
            raise ValueError(
                f"cutoff {self.cutoff} below twice the highest potential mode "
                f"{self.potential.max_mode}")
        if not 1 <= self.n_bands <= self.n_modes:
            raise ValueError(f"n_bands must lie in [1, {self.n_modes}]")

    @property
    def n_modes(self) -> int:
        return 2 * self.cutoff + 1

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.cutoff, self.cutoff + 1)


def _banded_hamiltonian(problem: BlochProblem, k: float) -> np.ndarray:
    """Lower banded storage of H(k); row d holds the d-th subdiagonal."""
    lat = problem.potential.lattice
    g = lat.dual_period
    n = problem.n_modes
    bw = max(problem.potential.max_mode, 0)
    band = np.zeros((bw + 1, n), dtype=complex)
    band[0] = 0.5 * (k + problem.modes * g) ** 2
    band[0] += complex(problem.potential.fourier_coeffs.get(0, 0.0)).real
    for m, c in problem.potential.fourier_coeffs.items():
        if m > 0:
            # H[i, j] = V(m_i - m_j); the m-th subdiagonal carries V(+m)
            band[m, : n - m] += c
    return band


def solve_bloch_at_k(problem: BlochProblem, k: float,
                     n_bands: int | None = None,
                     band_range: tuple[int, int] | None = None):
    """Eigenpairs of H(k), ascending; eigenvectors normalized to the cell.

    Returns (energies, vectors) with vectors in columns.  ``band_range``
    selects 1-based bands (lo, hi) inclusive; ``n_bands`` selects bands
    1..n_bands.  Coefficient normalization sum |c|^2 = 1 is equivalent to the
    unit cell normalization of the eigenfunction.
    """
    if band_range is None:
        nb = problem.n_bands if n_bands is None else n_bands
        band_range = (1, nb)
    lo, hi = band_range
    if not 1 <= lo <= hi <= problem.n_modes:
        raise ValueError(f"band range {band_range} outside [1, {problem.n_modes}]")
    band = _banded_hamiltonian(problem, k)
    if np.max(np.abs(band.imag)) == 0.0:
        band = band.real
    energies, vectors = sla.eig_banded(
        band, lower=True, select="i", select_range=(lo - 1, hi - 1),
        check_finite=False)
    return energies, vectors.astype(complex)


def group_velocity(problem: BlochProblem, n: int, k: float) -> float:
    """Band slope from the eigenfunction expectation of (-i d/dy + k).

    In the plane-wave basis this is sum_m |c_m|^2 (k + m G); no differencing
    of the dispersion is involved.
    """
    _, vec = solve_bloch_at_k(problem, k, band_range=(n, n))
    g = problem.potential.lattice.dual_period
    return float(np.sum(np.abs(vec[:, 0]) ** 2 * (k + problem.modes * g)))


def _synthesis_size(problem: BlochProblem, sigma: int) -> int:
    # |chi|^(2 sigma + 2) is a trigonometric polynomial with modes up to
    # 2 (sigma + 1) cutoff; the rectangle rule is exact above that.
    need = 2 * (sigma + 1) * problem.cutoff + 2
    size = 64
    while size < need:
        size *= 2
    return size


def synthesize_cell_values(problem: BlochProblem, coeffs: np.ndarray,
                           n_samples: int) -> np.ndarray:
    """Values of (1/sqrt(a)) sum c_m exp(i m G y) on a uniform cell grid."""
    n = problem.n_modes
    spec = np.zeros(n_samples, dtype=complex)
    idx = problem.modes % n_samples
    np.add.at(spec, idx, coeffs)
    period = problem.potential.lattice.period
    return np.fft.ifft(spec) * n_samples / math.sqrt(period)


def kappa_integral(problem: BlochProblem, n: int, k: float, sigma: int) -> float:
    """Cell integral of |chi_n(., k)|^(2 sigma + 2).

    Evaluated by FFT synthesis on an oversampled grid plus the rectangle
    rule, which is exact for trigonometric polynomials at this oversampling.
    sigma = 0 is a normalization hook and returns 1 by construction.
    """
    if sigma < 0:
        raise ValueError("sigma must be a nonnegative integer")
    _, vec = solve_bloch_at_k(problem, k, band_range=(n, n))
    vals = synthesize_cell_values(problem, vec[:, 0], _synthesis_size(problem, sigma))
    period = problem.potential.lattice.period
    return float(np.mean(np.abs(vals) ** (2 * sigma + 2)) * period)


def shift_band_down(coeffs: np.ndarray) -> np.ndarray:
    """Re-express an eigenvector at momentum k as one at k + G.

    chi(., k + G) = exp(-i G y) chi(., k): plane-wave weight moves from mode
    m+1 to mode m.  The dropped edge coefficient is negligible below the
    Galerkin truncation error.
    """
    out = np.zeros_like(coeffs)
    out[:-1] = coeffs[1:]
    return out


def shift_band_up(coeffs: np.ndarray) -> np.ndarray:
    """Re-express an eigenvector at momentum k as one at k - G."""
    out = np.zeros_like(coeffs)
    out[1:] = coeffs[:-1]
    return out


def _align_phase(reference: np.ndarray, vector: np.ndarray) -> np.ndarray:
    """Rotate ``vector`` so its overlap with ``reference`` is real positive."""
    overlap = np.vdot(reference, vector)
    mag = abs(overlap)
    if mag < 1e-14:
        return vector
    return vector * (overlap.conjugate() / mag)


@dataclass(frozen=True)
class BandTable:
    """Gauge-fixed samples of one isolated band over the Brillouin zone.

    The momentum grid is symmetric and interior-offset: it contains k = 0 for
    an odd point count and stays clear of the zone edges, where free bands
    touch.  ``winding`` is the gauge holonomy accumulated when the chain of
    aligned eigenvectors is continued across the zone edge.
    """

    problem: BlochProblem
    band_index: int
    k_grid: np.ndarray
    energies: np.ndarray
    eigvecs: np.ndarray          # (n_k, n_modes), gauge-fixed
    velocities: np.ndarray
    connection: np.ndarray       # <chi, d_k chi>, centered differences
    gaps: np.ndarray             # per-node distance to nearest neighbor band
    min_gap: float
    winding: float

    @property
    def n_k(self) -> int:
        return self.k_grid.size

    def with_gauge(self, phase_fn) -> "BandTable":
        """Copy of the table with eigenvectors rotated by exp(i phase_fn(k)).

        Used by the gauge-invariance harness; the connection column is
        recomputed by the same differencing as the original build.
        """
        phases = np.exp(1j * np.asarray(phase_fn(self.k_grid), dtype=float))
        vecs = self.eigvecs * phases[:, None]
        connection, winding = _connection_and_winding(self.problem, self.k_grid, vecs)
        return BandTable(
            problem=self.problem, band_index=self.band_index, k_grid=self.k_grid,
            energies=self.energies, eigvecs=vecs, velocities=self.velocities,
            connection=connection, gaps=self.gaps, min_gap=self.min_gap,
            winding=winding)


def brillouin_grid(problem: BlochProblem, k_points: int) -> np.ndarray:
    """Symmetric interior-offset momentum grid over the Brillouin zone.

    Offsetting by half a spacing keeps the zone-edge band touchings of weak
    potentials off the grid while an odd count still samples k = 0 exactly.
    """
    g = problem.potential.lattice.dual_period
    step = g / k_points
    return -0.5 * g + (np.arange(k_points) + 0.5) * step


def _connection_and_winding(problem: BlochProblem, ks: np.ndarray,
                            vecs: np.ndarray) -> tuple[np.ndarray, float]:
    n_k = ks.size
    dk = ks[1] - ks[0]
    # periodic images across the zone edge, including the gauge holonomy
    closure = complex(np.vdot(vecs[-1], shift_band_down(vecs[0])))
    winding = float(np.angle(closure)) if abs(closure) > 1e-14 else 0.0
    left_image = shift_band_up(vecs[-1]) * np.exp(-1j * winding)
    right_image = shift_band_down(vecs[0]) * np.exp(1j * winding)
    extended = np.vstack([left_image[None, :], vecs, right_image[None, :]])
    connection = np.empty(n_k, dtype=complex)
    for j in range(n_k):
        raw = np.vdot(vecs[j], (extended[j + 2] - extended[j]) / (2.0 * dk))
        # normalization forces Re<chi, d_k chi> = 0 identically; the Hermitian
        # part of the difference quotient is pure discretization noise and is
        # discarded so the stored connection is exactly anti-Hermitian
        connection[j] = 1j * raw.imag
    return connection, winding


def build_band_table(problem: BlochProblem, n: int, k_points: int = 129,
                     gap_tol: float = DEFAULT_GAP_TOL) -> BandTable:
    """Solve, gauge-fix, and tabulate band n over the Brillouin zone."""
    if n > problem.n_bands:
        raise ValueError(f"band {n} exceeds problem.n_bands = {problem.n_bands}")
    if k_points < 16:
        raise ValueError("k_points must be at least 16")
    ks = brillouin_grid(problem, k_points)
    g = problem.potential.lattice.dual_period
    lo = max(1, n - 1)
    hi = min(problem.n_modes, n + 1)

    n_k = ks.size
    vecs = np.empty((n_k, problem.n_modes), dtype=complex)
    energies = np.empty(n_k)
    gaps = np.empty(n_k)
    for j, k in enumerate(ks):
        evals, evecs = solve_bloch_at_k(problem, k, band_range=(lo, hi))
        band_pos = n - lo
        energies[j] = evals[band_pos]
        vecs[j] = evecs[:, band_pos]
        neighbor_gaps = []
        if n > 1:
            neighbor_gaps.append(evals[band_pos] - evals[band_pos - 1])
        if band_pos + 1 < evals.size:
            neighbor_gaps.append(evals[band_pos + 1] - evals[band_pos])
        gaps[j] = min(neighbor_gaps)

    min_gap = float(np.min(gaps))
    if min_gap <= gap_tol:
        raise IsolatednessViolation(
            f"band {n} gap {min_gap:.3e} at |k| near "
            f"{abs(ks[int(np.argmin(gaps))]):.4f} is below gap_tol {gap_tol:.1e}")

    # gauge anchor at the k = 0 node, then nearest-neighbor alignment outward
    j0 = int(np.argmin(np.abs(ks)))
    anchor = vecs[j0]
    lead = anchor[int(np.argmax(np.abs(anchor)))]
    vecs[j0] = anchor * (lead.conjugate() / abs(lead))
    for j in range(j0 + 1, n_k):
        vecs[j] = _align_phase(vecs[j - 1], vecs[j])
    for j in range(j0 - 1, -1, -1):
        vecs[j] = _align_phase(vecs[j + 1], vecs[j])

    velocities = np.sum(np.abs(vecs) ** 2 * (ks[:, None] + problem.modes[None, :] * g),
                        axis=1).real
    connection, winding = _connection_and_winding(problem, ks, vecs)

    return BandTable(problem=problem, band_index=n, k_grid=ks, energies=energies,
                     eigvecs=vecs, velocities=velocities, connection=connection,
                     gaps=gaps, min_gap=min_gap, winding=winding)


def fold_momentum(k, g: float):
    """Translate momenta into the centered zone [-G/2, G/2) and count folds."""
    k = np.asarray(k, dtype=float)
    m = np.floor(k / g + 0.5).astype(int)
    folded = k - m * g
    return folded, m


class BandEvaluator:
    """Smooth band functions of arbitrary momentum, tied to a table's gauge.

    Scalar quantities (energy, velocity, curvature, self-interaction
    integral) are periodic cubic splines over an internal dense eigensolve
    sweep; their accuracy is limited only by the sweep density because the
    underlying samples are spectrally accurate.  Phase-carrying quantities
    are anchored to the table: the Berry-connection primitive is accumulated
    from the table's own overlap chain, and on-demand eigenvectors are fresh
    eigensolves aligned to that chain.  Any gauge applied to the table then
    propagates exactly to every downstream field.
    """

    CURVATURE_STEP_FACTOR = 1e-4   # FD step for E'' as a fraction of |B|

    def __init__(self, table: BandTable, sigma: int = 1, dense_factor: int = 8,
                 gap_tol: float = DEFAULT_GAP_TOL):
        self.table = table
        self.problem = table.problem
        self.band_index = table.band_index
        self.sigma = int(sigma)
        self.gap_tol = float(gap_tol)
        lat = self.problem.potential.lattice
        self.g = lat.dual_period
        self.period = lat.period
        self._h_curv = self.CURVATURE_STEP_FACTOR * self.g
        self._build_scalar_splines(max(1, dense_factor))
        self._build_gauge_chain()
        self._aligned_cache: dict[int, np.ndarray] = {}

    # -- scalar splines ----------------------------------------------------

    def _build_scalar_splines(self, dense_factor: int):
        problem, n = self.problem, self.band_index
        n_dense = dense_factor * self.table.n_k
        ks = brillouin_grid(problem, n_dense)
        lo = max(1, n - 1)
        energies = np.empty(n_dense)
        velocities = np.empty(n_dense)
        kappas = np.empty(n_dense)
        samp = _synthesis_size(problem, self.sigma)
        for j, k in enumerate(ks):
            evals, evecs = solve_bloch_at_k(problem, k, band_range=(lo, n))
            vec = evecs[:, n - lo]
            energies[j] = evals[n - lo]
            velocities[j] = np.sum(np.abs(vec) ** 2 * (k + problem.modes * self.g)).real
            vals = synthesize_cell_values(problem, vec, samp)
            kappas[j] = np.mean(np.abs(vals) ** (2 * self.sigma + 2)) * self.period

        self._energy_spline = _periodic_spline(ks, energies, self.g)
        self._velocity_spline = _periodic_spline(ks, velocities, self.g)
        self._kappa_spline = _periodic_spline(ks, kappas, self.g)

    def energy(self, k):
        kf, _ = fold_momentum(k, self.g)
        return self._energy_spline(kf)

    def velocity(self, k):
        kf, _ = fold_momentum(k, self.g)
        return self._velocity_spline(kf)

    def curvature(self, k):
        """E'' by centered differencing of the group velocity."""
        h = self._h_curv
        return (self.velocity(np.asarray(k) + h) - self.velocity(np.asarray(k) - h)) / (2.0 * h)

    def self_interaction(self, k):
        """Cell integral of |chi|^(2 sigma + 2) at folded momentum."""
        kf, _ = fold_momentum(k, self.g)
        return self._kappa_spline(kf)

    # -- gauge chain -------------------------------------------------------

    def _build_gauge_chain(self):
        table = self.table
        ks, vecs = table.k_grid, table.eigvecs
        n_k = ks.size
        links = np.angle(np.einsum("ij,ij->i", vecs[:-1].conj(), vecs[1:]))
        j0 = int(np.argmin(np.abs(ks)))
        chain = np.zeros(n_k)
        chain[1:] = np.cumsum(links)
        chain -= chain[j0]
        self.zone_holonomy = float(np.sum(links) + table.winding)
        self._anchor_k = float(ks[j0])
        # extended node set: the real grid plus a wrap image of the first
        # node one dual period up; its chain value carries the holonomy, and
        # the plain shifted image is exactly the parallel continuation of the
        # last real node's frame, so the vector itself needs no extra phase
        self._node_ks = np.append(ks, ks[0] + self.g)
        self._node_chain = np.append(chain, chain[0] + self.zone_holonomy)
        self._node_vecs = np.vstack([vecs, shift_band_down(vecs[0])[None, :]])
        self._fold_lo = float(ks[0])
        # the chain minus its mean slope is exactly periodic over the zone;
        # splining that part keeps the primitive continuous across every fold
        slope = self.zone_holonomy / self.g
        per = self._node_chain - slope * (self._node_ks - self._anchor_k)
        per[-1] = per[0]
        self._per_spline = CubicSpline(self._node_ks, per, bc_type="periodic")
        self._chain_slope = slope

    def _fold_to_chain(self, k):
        """Fold momenta into the chain domain [k_0, k_0 + G) and count folds."""
        k = np.asarray(k, dtype=float)
        m = np.floor((k - self._fold_lo) / self.g).astype(int)
        return k - m * self.g, m

    def berry_primitive(self, k):
        """Antiderivative of the Berry connection along momentum, unfolded.

        The Berry phase accumulated by a trajectory k(s) is the line integral
        of Im<chi, d_k chi>, i.e. a difference of this primitive; evaluating
        it this way instead of quadrature makes gauge changes of the table
        cancel exactly against the eigenvector phases downstream.
        """
        kf, m = self._fold_to_chain(k)
        return (self._per_spline(kf) + self._chain_slope * (kf - self._anchor_k)
                + m * self.zone_holonomy)

    def connection_imag(self, k):
        """Im<chi, d_k chi> in the table gauge (slope of the primitive)."""
        kf, _ = self._fold_to_chain(k)
        return self._per_spline(kf, 1) + self._chain_slope

    # -- gauge-aligned eigenvectors -----------------------------------------

    _CACHE_LIMIT = 65536

    def _transported_at(self, kf: float) -> tuple[np.ndarray, int]:
        """Fresh band-n eigenvector at chain-domain momentum, parallel to its node.

        Returns the vector aligned (real positive overlap) to the nearest
        extended chain node, together with that node's index; the caller adds
        the chain-relative rotation.
        """
        key = int(round(kf / 1e-10))
        cached = self._aligned_cache.get(key)
        if cached is not None:
            return cached
        if len(self._aligned_cache) >= self._CACHE_LIMIT:
            self._aligned_cache.clear()
        n = self.band_index
        _, vec = solve_bloch_at_k(self.problem, kf, band_range=(n, n))
        vec = vec[:, 0]
        step = self._node_ks[1] - self._node_ks[0]
        j = int(round((kf - self._node_ks[0]) / step))
        j = min(max(j, 0), self._node_ks.size - 1)
        vec = _align_phase(self._node_vecs[j], vec)
        entry = (vec, j)
        self._aligned_cache[key] = entry
        return entry

    def _aligned_at_folded(self, kf: float) -> np.ndarray:
        """Gauge-aligned eigenvector at a chain-domain momentum."""
        kf2, m = self._fold_to_chain(float(kf))
        kf2 = float(kf2)
        vec, j = self._transported_at(kf2)
        rotation = (self._per_spline(kf2)
                    + self._chain_slope * (kf2 - self._anchor_k)
                    + m * self.zone_holonomy - self._node_chain[j])
        return vec * np.exp(1j * rotation)

    def eigvec_aligned(self, k: float) -> tuple[np.ndarray, int]:
        """Gauge-aligned eigenvector plus the fold count at raw momentum.

        The raw-momentum eigenfunction is exp(-i m G y) times the returned
        folded eigenvector; its phase already carries the holonomy of the m
        folds so it stays consistent with the Berry primitive.
        """
        kf2, m = self._fold_to_chain(float(k))
        kf2 = float(kf2)
        vec, j = self._transported_at(kf2)
        rotation = float(self.berry_primitive(float(k))) - self._node_chain[j]
        return vec * np.exp(1j * rotation), int(m)

    def eigvec_derivative(self, k: float, step: float | None = None) -> np.ndarray:
        """d_k chi by centered differencing in the local parallel gauge.

        The component along chi is gauge freedom and is irrelevant wherever
        this derivative is used behind the complement projector.
        """
        h = step if step is not None else 1e-6 * self.g
        kf, _ = self._fold_to_chain(float(k))
        center = self._aligned_at_folded(float(kf))
        n = self.band_index
        _, vp = solve_bloch_at_k(self.problem, float(kf) + h, band_range=(n, n))
        _, vm = solve_bloch_at_k(self.problem, float(kf) - h, band_range=(n, n))
        vp = _align_phase(center, vp[:, 0])
        vm = _align_phase(center, vm[:, 0])
        return (vp - vm) / (2.0 * h)

    def chi_values(self, k, y) -> np.ndarray:
        """chi_n(y_i, k_i) in the table gauge, for paired momentum/position arrays.

        Momenta are folded with the periodicity convention
        chi(., k + G) = exp(-i G y) chi(., k), and the fold phases follow the
        Berry primitive, so the returned values are continuous in momentum
        across zone-edge folds.
        """
        k = np.atleast_1d(np.asarray(k, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if k.shape != y.shape:
            raise ValueError("momentum and position arrays must have equal shape")
        kf, folds = self._fold_to_chain(k)
        quant = np.round(kf / 1e-10).astype(np.int64)
        uniq, inverse = np.unique(quant, return_inverse=True)
        vec_table = np.empty((uniq.size, self.problem.n_modes), dtype=complex)
        node_chain_vals = np.empty(uniq.size)
        for i, q in enumerate(uniq):
            vec, j = self._transported_at(q * 1e-10)
            vec_table[i] = vec
            node_chain_vals[i] = self._node_chain[j]
        rotation = np.asarray(self.berry_primitive(k)) - node_chain_vals[inverse]
        coeffs = vec_table[inverse] * np.exp(1j * rotation)[:, None]
        # synthesize at shifted mode numbers (m' - folds) to realize the
        # raw-momentum eigenfunction
        modes = self.problem.modes[None, :] - folds[:, None]
        phases = np.exp(1j * self.g * y[:, None] * modes)
        return np.einsum("ij,ij->i", coeffs, phases) / math.sqrt(self.period)


def _periodic_spline(ks: np.ndarray, values: np.ndarray, g: float,
                     pad: int = 4) -> CubicSpline:
    xs = np.concatenate([ks[-pad:] - g, ks, ks[:pad] + g])
    ys = np.concatenate([values[-pad:], values, values[:pad]])
    return CubicSpline(xs, ys)


@dataclass(frozen=True)
class CorrectorField:
    """First-order corrector at t = 0, orthogonal to the carrier band.

    ``bloch_coeffs[i, m]`` is the component on band m+1 of the cell problem
    at momentum phi_I'(x_i); the carrier column is identically zero.
    ``plane_coeffs`` is the same field expressed on plane-wave modes.
    """

    band_index: int
    x_grid: np.ndarray
    momenta: np.ndarray
    bloch_coeffs: np.ndarray
    plane_coeffs: np.ndarray
    problem: BlochProblem

    def values_at(self, y) -> np.ndarray:
        """phi_1(x_i, y_i) for a position array paired with x_grid."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if y.shape != self.x_grid.shape:
            raise ValueError("y array must pair with the corrector x grid")
        g = self.problem.potential.lattice.dual_period
        period = self.problem.potential.lattice.period
        phases = np.exp(1j * g * y[:, None] * self.problem.modes[None, :])
        return np.einsum("ij,ij->i", self.plane_coeffs, phases) / math.sqrt(period)


def well_prepared_corrector(problem: BlochProblem, band, a_i, phi_i,
                            lambda0: float, sigma: int, x_grid,
                            confinement=None,
                            gap_tol: float = DEFAULT_GAP_TOL) -> CorrectorField:
    """Orthogonal first corrector of the initial datum, per Bloch mode.

    For each grid point the first-order residual of the carrier ansatz is
    expanded in the cell eigenbasis at k = phi_I'(x), the carrier component
    is projected out, and the rest is divided by the band-energy distances
    (partial inversion on the orthogonal complement).  The time derivative of
    the carrier envelope entering the residual is supplied by the transport
    law rather than by differencing; it only feeds the carrier component and
    is annihilated by the projection, but is kept for fidelity.

    ``band`` may be a band index or a BandTable whose gauge the carrier
    eigenvector should follow.  ``confinement`` supplies the slow potential's
    gradient; omit it for free transport.
    """
    if isinstance(band, BandTable):
        table = band
        if table.problem != problem:
            raise ValueError("band table was built for a different problem")
    else:
        table = build_band_table(problem, int(band), gap_tol=gap_tol)
    n = table.band_index
    evaluator = BandEvaluator(table, sigma=sigma)

    x_grid = np.atleast_1d(np.asarray(x_grid, dtype=float))
    ks = np.asarray(phi_i.gradient(x_grid), dtype=float)
    a_vals = np.asarray(a_i(x_grid), dtype=complex)
    a_der = np.asarray(a_i.derivative(x_grid), dtype=complex)
    curv = np.asarray(phi_i.curvature(x_grid), dtype=float)
    u_grad = (np.asarray(confinement.gradient(x_grid), dtype=float)
              if confinement is not None else np.zeros_like(x_grid))

    g = problem.potential.lattice.dual_period
    modes = problem.modes
    n_modes = problem.n_modes
    sigma = int(sigma)
    samp = _synthesis_size(problem, sigma)

    bloch_coeffs = np.zeros((x_grid.size, n_modes), dtype=complex)
    plane_coeffs = np.zeros((x_grid.size, n_modes), dtype=complex)

    quant = np.round(ks / 1e-10).astype(np.int64)
    for q in np.unique(quant):
        sel = np.nonzero(quant == q)[0]
        k = q * 1e-10
        energies, basis = solve_bloch_at_k(problem, k, band_range=(1, n_modes))
        e_n = energies[n - 1]
        denom = energies - e_n
        small = np.abs(denom) < gap_tol
        small[n - 1] = False
        if np.any(small):
            raise IsolatednessViolation(
                f"cell spectrum at k = {k:.6f} has a neighbor within "
                f"{gap_tol:.1e} of band {n}")

        chi = evaluator._aligned_at_folded(float(k))
        dchi = evaluator.eigvec_derivative(k)
        dychi = 1j * modes * g * chi
        dydk_chi = 1j * modes * g * dchi
        chi_cell = synthesize_cell_values(problem, chi, samp)
        nl_cell = np.abs(chi_cell) ** (2 * sigma) * chi_cell
        period = problem.potential.lattice.period
        nl_spec = np.fft.fft(nl_cell) / samp * math.sqrt(period)
        nl_coeffs = nl_spec[modes % samp]

        vel = float(evaluator.velocity(k))
        curv_e = float(evaluator.curvature(k))
        kappa = float(evaluator.self_interaction(k))
        conn = complex(np.vdot(chi, dchi))

        for i in sel:
            a, da, phicurv, ugrad = a_vals[i], a_der[i], curv[i], u_grad[i]
            k_dot = -(vel * phicurv + ugrad)       # d_t grad(phi) at t = 0
            beta = conn * ugrad
            # transport law: d_t a0 = -(v da + E'' phicurv a / 2) + beta a
            #                + i kappa_eff |a|^(2 sigma) a
            dt_a = (-(vel * da + 0.5 * curv_e * phicurv * a) + beta * a
                    - 1j * lambda0 * kappa * abs(a) ** (2 * sigma) * a)
            w = (1j * dt_a * chi
                 + 1j * a * k_dot * dchi
                 + 1j * k * (da * chi + a * phicurv * dchi)
                 + 0.5j * phicurv * a * chi
                 + da * dychi + a * phicurv * dydk_chi
                 - lambda0 * abs(a) ** (2 * sigma) * a * nl_coeffs)
            alpha = basis.conj().T @ w
            alpha[n - 1] = 0.0
            alpha[denom != 0] /= denom[denom != 0]
            alpha[n - 1] = 0.0
            bloch_coeffs[i] = alpha
            plane_coeffs[i] = basis @ alpha

    return CorrectorField(band_index=n, x_grid=x_grid, momenta=ks,
                          bloch_coeffs=bloch_coeffs, plane_coeffs=plane_coeffs,
                          problem=problem)
