import math

import numpy as np
import pytest

from blochwkb.lattice import (
    Lattice,
    cosine_potential,
    eval_potential,
    make_potential_from_fourier,
    potential_from_samples,
    scale_physical_params,
    zero_potential,
)


def test_lattice_dual_relation():
    for period in (1.0, 0.5, 3.7):
        lat = Lattice(period)
        assert lat.dual_period * lat.period == pytest.approx(2 * math.pi, abs=1e-15)
        lo, hi = lat.y_domain
        assert hi - lo == pytest.approx(period)
        blo, bhi = lat.brillouin
        assert bhi - blo == pytest.approx(lat.dual_period)


def test_lattice_rejects_bad_period():
    with pytest.raises(ValueError):
        Lattice(0.0)
    with pytest.raises(ValueError):
        Lattice(-1.0)


def test_empty_series_is_zero():
    v = zero_potential()
    assert eval_potential(v, 1.7) == 0.0
    assert np.all(eval_potential(v, np.linspace(-3, 3, 11)) == 0.0)


def test_cosine_identity():
    v = make_potential_from_fourier(Lattice(), [(1, 0.5), (-1, 0.5)])
    assert eval_potential(v, 0.25) == pytest.approx(0.0, abs=1e-14)
    assert eval_potential(v, 0.0) == pytest.approx(1.0)
    assert eval_potential(v, 0.5) == pytest.approx(-1.0)
    assert eval_potential(v, 1.5) == pytest.approx(-1.0)  # periodic image


def test_constant_zero_mode():
    v = make_potential_from_fourier(Lattice(), [(0, 0.7)])
    assert eval_potential(v, -2.3) == pytest.approx(0.7)


def test_lone_mode_symmetrized():
    v = make_potential_from_fourier(Lattice(), [(2, 0.3 + 0.1j)])
    assert v.fourier_coeffs[-2] == (0.3 - 0.1j)
    ys = np.linspace(-1, 2, 57)
    assert np.max(np.abs(np.imag([complex(eval_potential(v, y)) for y in ys]))) == 0.0


def test_rejects_non_hermitian():
    with pytest.raises(ValueError):
        make_potential_from_fourier(Lattice(), [(1, 0.5), (-1, 0.5 + 1e-6j)])
    with pytest.raises(ValueError):
        make_potential_from_fourier(Lattice(), [(0, 1e-3j)])
    with pytest.raises(ValueError):
        make_potential_from_fourier(Lattice(), [(1, 0.5), (1, 0.5)])


def test_potential_periodicity_random_points():
    rng = np.random.default_rng(42)
    lat = Lattice(1.8)
    v = make_potential_from_fourier(
        lat, [(0, 0.2), (1, 0.3 - 0.05j), (-1, 0.3 + 0.05j), (3, 0.02), (-3, 0.02)])
    ys = rng.uniform(-10, 10, 100)
    base = eval_potential(v, ys)
    shifted = eval_potential(v, ys + lat.period)
    assert np.max(np.abs(base - shifted)) < 1e-12


def test_potential_from_samples_roundtrip():
    lat = Lattice()
    target = cosine_potential(lat, amplitude=0.8)
    ys = np.arange(64) / 64.0
    rebuilt = potential_from_samples(lat, np.asarray(eval_potential(target, ys)), max_mode=2)
    probe = np.linspace(-1, 1, 41)
    assert np.max(np.abs(eval_potential(rebuilt, probe)
                         - eval_potential(target, probe))) < 1e-12


class TestScaling:
    def test_trap_regime_values(self):
        # lattice condensate numbers: the trap-derived eps and wave vector
        rep = scale_physical_params(a0=3.4e-6, a_bar=5.4e-9, n_atoms=1.5e5,
                                    omega0=2 * math.pi * 100)
        assert rep.epsilon == pytest.approx(4.3e-3, rel=0.15)
        assert rep.xi == pytest.approx(4.6e6, rel=0.15)

    def test_unit_normalized_inputs(self):
        rep = scale_physical_params(a0=1.0, a_bar=1.0 / (4 * math.pi), n_atoms=1.0,
                                    omega0=1.0)
        assert rep.epsilon == pytest.approx(1.0, abs=1e-14)
        assert rep.x_s == pytest.approx(1.0, abs=1e-14)

    def test_internal_consistency(self):
        a0 = 2.2e-6
        rep = scale_physical_params(a0=a0, a_bar=4.1e-9, n_atoms=8e4, omega0=500.0)
        assert rep.epsilon == pytest.approx((a0 / rep.x_s) ** 2, rel=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            scale_physical_params(a0=-1.0, a_bar=1.0, n_atoms=1.0, omega0=1.0)
        with pytest.raises(ValueError):
            scale_physical_params(a0=1.0, a_bar=0.0, n_atoms=1.0, omega0=1.0)
