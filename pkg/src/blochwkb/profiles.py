"""Initial envelope and phase profiles with analytic derivatives.

Ray launching, the nonlinear transport law, and the well-prepared corrector
all consume derivatives of the initial amplitude a_I and phase phi_I, so the
profiles carry them analytically instead of relying on differencing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GaussianAmplitude:
    """a_I(x) = amplitude * exp(-(x - center)^2 / (2 width^2))."""

    amplitude: complex = 1.0
    center: float = 0.0
    width: float = 1.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.amplitude * np.exp(-((x - self.center) ** 2) / (2.0 * self.width ** 2))

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        return self(x) * (-(x - self.center) / self.width ** 2)

    def magnitude(self, x):
        return np.abs(self(x))

    def l2_norm(self) -> float:
        # ||a_I||_{L^2} = |amplitude| * (pi * width^2)^{1/4}
        return abs(self.amplitude) * (math.pi * self.width ** 2) ** 0.25

    def support_interval(self, n_widths: float = 7.0) -> tuple[float, float]:
        return (self.center - n_widths * self.width, self.center + n_widths * self.width)


@dataclass(frozen=True)
class ZeroAmplitude:
    """Identically zero envelope (degenerate-input tests)."""

    def __call__(self, x):
        return np.zeros_like(np.asarray(x, dtype=float), dtype=complex)

    def derivative(self, x):
        return np.zeros_like(np.asarray(x, dtype=float), dtype=complex)

    def magnitude(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def support_interval(self, n_widths: float = 7.0) -> tuple[float, float]:
        return (-1.0, 1.0)


@dataclass(frozen=True)
class PolynomialPhase:
    """phi_I(x) = c0 + c1 x + c2 x^2/2 + c3 x^3/6.

    Covers the flat, linear (plane-wave launch) and quadratic (focusing)
    initial phases used by the scenarios; derivatives are exact.
    """

    c0: float = 0.0
    c1: float = 0.0
    c2: float = 0.0
    c3: float = 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.c0 + self.c1 * x + self.c2 * x ** 2 / 2.0 + self.c3 * x ** 3 / 6.0

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        return self.c1 + self.c2 * x + self.c3 * x ** 2 / 2.0

    def curvature(self, x):
        x = np.asarray(x, dtype=float)
        return self.c2 + self.c3 * x


def zero_phase() -> PolynomialPhase:
    return PolynomialPhase()


def linear_phase(k0: float) -> PolynomialPhase:
    return PolynomialPhase(c1=k0)


def quadratic_phase(curvature: float) -> PolynomialPhase:
    return PolynomialPhase(c2=curvature)
