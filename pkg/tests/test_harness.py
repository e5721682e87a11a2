import math

import numpy as np
import pytest
import scipy.integrate

from blochwkb.harness import (
    Scenario,
    ScenarioContext,
    convergence_sweep,
    error_norms,
    fit_order,
    gauge_phase_function,
    randomized_gauge_context,
    wigner_predicted,
    wigner_transform,
)
from blochwkb.lattice import Lattice, zero_potential
from blochwkb.nls import mass, solve_nls
from blochwkb.profiles import GaussianAmplitude
from blochwkb.rays import ConfinementPotential
from blochwkb.wkb import empty_field


@pytest.fixture(scope="module")
def spm_scenario():
    # self-phase modulation: flat band, no confinement
    return Scenario(name="spm", potential=zero_potential(Lattice()),
                    confinement=ConfinementPotential.zero(), tau0=1.0)


@pytest.fixture(scope="module")
def small_full_context():
    # full physics at reduced resolution, for quick end-to-end checks
    scenario = Scenario(name="full-small", tau0=0.4, n_snapshots=2,
                        dt_factor=0.01, ray_points=801, x_min=-16.0, x_max=16.0)
    return ScenarioContext(scenario)


class TestErrorNorms:
    def test_identical_fields_zero(self):
        f = empty_field(-8.0, 8.0, 0.25, 512)
        g = f.with_values(np.exp(-f.grid ** 2).astype(complex))
        rec = error_norms(g, g, s_max=2)
        assert rec.l2_error == 0.0
        assert rec.linf_error == 0.0
        assert all(v == 0.0 for v in rec.xs_errors.values())
        assert rec.at_floor

    def test_gaussian_l2_is_x0_norm(self):
        f = empty_field(-16.0, 16.0, 0.25, 1024)
        g = f.with_values(np.exp(-f.grid ** 2 / 2).astype(complex))
        rec = error_norms(g, f, s_max=0)
        assert rec.l2_error == pytest.approx(math.pi ** 0.25, abs=1e-10)
        assert rec.xs_errors[0] == pytest.approx(math.pi ** 0.25, abs=1e-10)

    def test_scaled_derivative_norm_against_quadrature(self):
        # w = exp(ix/eps) g(x): the scaled derivative cancels the fast phase,
        # (eps d) w = exp(ix/eps) (i g + eps g'), so X^1 stays eps-uniform
        eps = 1 / 32
        f = empty_field(-16.0, 16.0, eps, 8192)
        x = f.grid
        g = np.exp(-x ** 2 / 2)
        w = f.with_values(np.exp(1j * x / eps) * g)
        rec = error_norms(w, f, s_max=1)

        def integrand_d(t):
            gg = math.exp(-t ** 2 / 2)
            return abs(1j * gg + eps * (-t * gg)) ** 2

        norm_g = math.pi ** 0.25
        norm_xg, _ = scipy.integrate.quad(lambda t: t ** 2 * math.exp(-t ** 2), -16, 16)
        norm_dw, _ = scipy.integrate.quad(integrand_d, -16, 16)
        expect = norm_g + math.sqrt(norm_xg) + math.sqrt(norm_dw)
        assert rec.xs_errors[1] == pytest.approx(expect, rel=1e-8)

    def test_l2_bounded_by_linf(self):
        f = empty_field(-8.0, 8.0, 0.25, 512)
        rng = np.random.default_rng(0)
        g = f.with_values(rng.standard_normal(512) + 1j * rng.standard_normal(512))
        rec = error_norms(g, f, s_max=0)
        assert rec.l2_error <= math.sqrt(f.box_length) * rec.linf_error

    def test_grid_mismatch_rejected(self):
        a = empty_field(-8.0, 8.0, 0.25, 512)
        b = empty_field(-8.0, 8.0, 0.25, 256)
        with pytest.raises(ValueError):
            error_norms(a, b)


class TestOrderFitting:
    def test_clean_first_order(self):
        eps = [1 / 8, 1 / 16, 1 / 32]
        assert fit_order(eps, [0.4 * e for e in eps]) == pytest.approx(1.0, abs=1e-12)

    def test_floor_points_excluded(self):
        eps = [1 / 8, 1 / 16, 1 / 32, 1 / 64]
        errors = [0.4 / 8, 0.4 / 16, 1e-13, 5e-14]
        assert fit_order(eps, errors) == pytest.approx(1.0, abs=1e-10)

    def test_all_floor_is_nan(self):
        assert math.isnan(fit_order([1 / 8, 1 / 16], [1e-14, 1e-15]))


class TestConvergence:
    def test_floor_flag_at_time_zero(self, spm_scenario):
        # with the snapshot at t = 0 and no corrector, psi0 equals v0 exactly
        ctx = ScenarioContext(spm_scenario)
        rep = convergence_sweep(ctx, [1 / 4, 1 / 8, 1 / 16], with_corrector=False,
                                snapshot_times=[0.0], max_workers=1)
        assert rep.floor_flagged
        assert all(r.l2_error < 1e-12 for r in rep.records)
        assert math.isnan(rep.fitted_order_l2)

    def test_ladder_validation(self, spm_scenario):
        ctx = ScenarioContext(spm_scenario)
        with pytest.raises(ValueError):
            convergence_sweep(ctx, [1 / 16, 1 / 8, 1 / 4])   # increasing
        with pytest.raises(ValueError):
            convergence_sweep(ctx, [1 / 4, 1 / 8])           # too short
        with pytest.raises(ValueError):
            convergence_sweep(ctx, [1 / 4, 1 / 8, 1 / 20])   # not factor two

    def test_spm_first_order(self, spm_scenario):
        ctx = ScenarioContext(spm_scenario)
        rep = convergence_sweep(ctx, [1 / 4, 1 / 8, 1 / 16], max_workers=3)
        assert 0.75 <= rep.fitted_order_l2 <= 1.25
        errs = [r.l2_error for r in rep.records]
        assert errs[1] < errs[0]

    def test_corrector_does_not_hurt(self, small_full_context):
        eps = [1 / 4, 1 / 8, 1 / 16]
        corrected = convergence_sweep(small_full_context, eps, with_corrector=True,
                                      max_workers=3)
        bare = convergence_sweep(small_full_context, eps, with_corrector=False,
                                 max_workers=3)
        assert corrected.fitted_order_l2 >= bare.fitted_order_l2 - 0.1


class TestGaugeInvariance:
    def test_field_modulus_and_errors_invariant(self, small_full_context):
        eps = 1 / 8
        times = [0.2, 0.4]
        base = small_full_context
        gauged = randomized_gauge_context(base, seed=11)

        v_base = base.approximate_field(eps, 0.4)
        v_gauge = gauged.approximate_field(eps, 0.4)
        assert np.max(np.abs(np.abs(v_base.values) - np.abs(v_gauge.values))) < 1e-8

        def errors(ctx):
            psi0 = ctx.initial_field(eps)
            snaps = solve_nls(ctx.nls_config(eps), psi0, times)
            return [error_norms(s, ctx.approximate_field(eps, s.t), 0).l2_error
                    for s in snaps]

        e_base = errors(base)
        e_gauge = errors(gauged)
        assert np.max(np.abs(np.array(e_base) - np.array(e_gauge))) < 1e-9

    def test_gauge_phase_alignment_pointwise(self, small_full_context):
        # after aligning the global phase at one reference point, the gauged
        # field matches pointwise in phase wherever the field is substantial
        eps = 1 / 8
        base = small_full_context.approximate_field(eps, 0.4)
        gauged_ctx = randomized_gauge_context(small_full_context, seed=5)
        gauged = gauged_ctx.approximate_field(eps, 0.4)
        ref = int(np.argmax(np.abs(base.values)))
        align = base.values[ref] / gauged.values[ref]
        align /= abs(align)
        sel = np.abs(base.values) > 1e-3
        phase_diff = np.angle(gauged.values[sel] * align / base.values[sel])
        assert np.max(np.abs(phase_diff)) < 1e-6

    def test_gauge_phase_function_smooth_periodic(self):
        g = 2 * math.pi
        theta = gauge_phase_function(3, g)
        ks = np.linspace(-3.0, 3.0, 17)
        assert np.max(np.abs(theta(ks + g) - theta(ks))) < 1e-12


class TestWigner:
    def test_plane_wave_concentration(self):
        eps = 1 / 16
        f = empty_field(0.0, 2 * math.pi, eps, 1024)
        k = 16 * eps  # on-lattice wavenumber
        psi = f.with_values(np.exp(1j * k * f.grid / eps))
        grid = wigner_transform(psi)
        l_peak = int(np.argmin(np.abs(grid.xi_centers - k)))
        dxi = grid.dxi
        near = np.abs(grid.xi_centers - k) <= 2 * dxi + 1e-12
        fraction = np.sum(grid.values[:, near]) / np.sum(grid.values)
        assert fraction > 0.95
        assert abs(grid.xi_centers[l_peak] - k) < dxi

    def test_gaussian_against_closed_form(self):
        # W(x, xi) = exp(-x^2 - xi^2)/sqrt(pi) for psi = exp(-x^2/2), eps = 1;
        # the box sets the taper range, whose deficit falls off quadratically
        f = empty_field(-384.0, 384.0, 1.0, 16384)
        psi = f.with_values(np.exp(-f.grid ** 2 / 2).astype(complex))
        grid = wigner_transform(psi)
        xx = grid.x_centers[:, None]
        xi = grid.xi_centers[None, :]
        exact = np.exp(-xx ** 2 - xi ** 2) / math.sqrt(math.pi)
        l1 = np.sum(np.abs(grid.values - exact)) * grid.dx * grid.dxi
        assert l1 < 1e-3

    def test_marginal_reproduces_density(self):
        rng = np.random.default_rng(2)
        f = empty_field(-16.0, 16.0, 0.25, 1024)
        envelope = np.exp(-f.grid ** 2 / 3) * (1 + 0.3 * np.sin(f.grid))
        psi = f.with_values(envelope * np.exp(1j * f.grid / 0.25))
        grid = wigner_transform(psi, x_stride=1)
        defect = np.sum(np.abs(grid.marginal() - np.abs(psi.values) ** 2)) * f.dx
        assert defect < 1e-10  # structurally exact on the dual grid

    def test_predicted_at_t0(self, small_full_context):
        eps = 1 / 8
        ctx = small_full_context
        field = ctx.approximate_field(eps, ctx.scenario.tau0 / 2)
        ref = wigner_transform(field)
        pred = wigner_predicted(ctx, ctx.scenario.tau0 / 2, eps,
                                mollifier_width=3 * ref.dxi, reference=ref)
        # total mass equals the envelope mass by the change of variables
        a_norm = ctx.scenario.amplitude.l2_norm()
        assert pred.total_mass() == pytest.approx(a_norm ** 2, rel=1e-4)
        # and the transform's own mass approaches it too
        assert ref.total_mass() == pytest.approx(a_norm ** 2, rel=2e-2)
