"""Periodic lattice, fast potential, and physical-parameter rescaling.

The computational domain is a 1D Bravais lattice of period ``a``: the
fundamental cell is Y = [-a/2, a/2], the dual lattice has period 2*pi/a and
the Brillouin zone is B = [-pi/a, pi/a].  The fast potential is stored as a
truncated Fourier series so the plane-wave eigensolver can consume its
coefficients directly.  All physical scales (trap length, particle number,
scattering length) are folded into a single dimensionless small parameter
before any dynamics is run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class Lattice:
    """1D Bravais lattice with its dual and the centered fundamental cell."""

    period: float = 1.0

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError(f"lattice period must be positive, got {self.period}")

    @property
    def dual_period(self) -> float:
        return 2.0 * math.pi / self.period

    @property
    def y_domain(self) -> tuple[float, float]:
        return (-self.period / 2.0, self.period / 2.0)

    @property
    def brillouin(self) -> tuple[float, float]:
        half = math.pi / self.period
        return (-half, half)


@dataclass(frozen=True)
class PeriodicPotential:
    """Real periodic potential given by a truncated Fourier series.

    V(y) = sum_m coeff[m] * exp(i * m * dual_period * y), with Hermitian
    coefficients so the series is real-valued.
    """

    lattice: Lattice
    fourier_coeffs: dict[int, complex] = field(default_factory=dict)

    @property
    def max_mode(self) -> int:
        if not self.fourier_coeffs:
            return 0
        return max(abs(m) for m in self.fourier_coeffs)

    def __call__(self, y):
        return eval_potential(self, y)


def make_potential_from_fourier(lattice: Lattice,
                                coeffs: list[tuple[int, complex]]) -> PeriodicPotential:
    """Build a potential from (mode, coefficient) pairs.

    Pairs are symmetrized to enforce V(-m) = conj(V(m)); input whose
    asymmetry exceeds ``HERMITIAN_TOL`` is rejected because it encodes a
    complex-valued potential.
    """
    table: dict[int, complex] = {}
    for mode, c in coeffs:
        mode = int(mode)
        if mode in table:
            raise ValueError(f"duplicate Fourier mode {mode}")
        table[mode] = complex(c)

    sym: dict[int, complex] = {}
    for m, c in table.items():
        partner = table.get(-m)
        if partner is None:
            # lone mode: split it Hermitianly between +m and -m
            if m == 0:
                if abs(c.imag) > HERMITIAN_TOL:
                    raise ValueError(
                        f"zero mode has imaginary part {c.imag:.3e}; potential not real")
                sym[0] = complex(c.real, 0.0)
            else:
                sym[m] = c
                sym[-m] = c.conjugate()
        else:
            asym = abs(partner - c.conjugate())
            if asym > HERMITIAN_TOL:
                raise ValueError(
                    f"modes +-{abs(m)} violate Hermitian symmetry by {asym:.3e}; "
                    "potential would not be real-valued")
            sym[m] = c
    return PeriodicPotential(lattice=lattice, fourier_coeffs=sym)


def eval_potential(potential: PeriodicPotential, y) -> np.ndarray | float:
    """Evaluate the truncated Fourier series at y (scalar or array), real part."""
    y_arr = np.asarray(y, dtype=float)
    out = np.zeros_like(y_arr, dtype=complex)
    g = potential.lattice.dual_period
    for m, c in potential.fourier_coeffs.items():
        out += c * np.exp(1j * m * g * y_arr)
    # Hermitian symmetry was enforced at construction; the imaginary residue
    # is pure rounding and is discarded.
    out = out.real
    if np.isscalar(y) or y_arr.ndim == 0:
        return float(out)
    return out


def zero_potential(lattice: Lattice | None = None) -> PeriodicPotential:
    return make_potential_from_fourier(lattice or Lattice(), [])


def cosine_potential(lattice: Lattice | None = None, amplitude: float = 1.0) -> PeriodicPotential:
    """amplitude * cos(dual_period * y); the standard single-gap test potential."""
    half = 0.5 * amplitude
    return make_potential_from_fourier(lattice or Lattice(), [(1, half), (-1, half)])


def potential_from_samples(lattice: Lattice, samples: np.ndarray,
                           max_mode: int) -> PeriodicPotential:
    """Convert uniform cell samples to a truncated Fourier representation.

    Samples are taken on a uniform grid over [0, period), left endpoint
    included.  Modes beyond ``max_mode`` are discarded (explicit truncation).
    """
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    if n < 2 * max_mode + 1:
        raise ValueError(f"need at least {2 * max_mode + 1} samples for max_mode={max_mode}")
    spec = np.fft.fft(samples) / n
    coeffs = [(m, complex(spec[m % n])) for m in range(-max_mode, max_mode + 1)]
    return make_potential_from_fourier(lattice, coeffs)


@dataclass(frozen=True)
class ScalingReport:
    """Dimensionless parameters extracted from trap-scale physical inputs."""

    epsilon: float
    x_s: float                    # characteristic length [m]
    xi: float                     # lattice wave vector [1/m]
    lambda_ratio: str = "delta(t)/delta_bar"

    def __post_init__(self):
        if not (self.epsilon > 0 and self.x_s > 0):
            raise ValueError("scaling produced nonpositive epsilon or x_s")


def scale_physical_params(a0: float, a_bar: float, n_atoms: float,
                          omega0: float) -> ScalingReport:
    """Reduce trap-scale inputs to the dimensionless small parameter.

    a0 is the oscillator ground-state length, a_bar the reference scattering
    length, n_atoms the particle count, omega0 the trap frequency.  The strong
    interaction regime requires 4*pi*n_atoms*a_bar >> a0.
    """
    for name, val in (("a0", a0), ("a_bar", a_bar), ("n_atoms", n_atoms),
                      ("omega0", omega0)):
        if not val > 0:
            raise ValueError(f"{name} must be positive, got {val}")
    strength = 4.0 * math.pi * n_atoms * a_bar
    epsilon = (a0 / strength) ** (2.0 / 3.0)
    x_s = (strength * a0 ** 2) ** (1.0 / 3.0)
    xi = a0 ** (-4.0 / 3.0) * strength ** (1.0 / 3.0)
    return ScalingReport(epsilon=epsilon, x_s=x_s, xi=xi)
