"""Certification machinery: u_delta quotients, cutoff energies, 1-D oracle."""

import math

import numpy as np
import pytest
from scipy.interpolate import CubicSpline

from hardycone.params import ConeSpec, HardyParams, hardy_exponent
from hardycone.quadrature import sphere_weight_mass
from hardycone.spherical import DiscretizedFunction, graded_mesh, solve_M
from hardycone.verifier import (
    CertificationError,
    LogCutoff,
    PowerLawSplit,
    PowerWindow,
    SeparatedTestFunction,
    cutoff_decay,
    denominator_blowup,
    eta_cutoff,
    eta_cutoff_prime,
    evaluate_quotient_udelta,
    radial_hardy_quotient,
    smooth_step,
    verify_inequality,
)

HALF_PI = math.pi / 2


def log_grid(r_min=1e-6, r_max=1e6, n=4096):
    return np.exp(np.linspace(math.log(r_min), math.log(r_max), n))


def udelta_radial_family(delta, H=0.5, plateau_factor=4.0, ramp=1.0, n=2**13):
    """r^(-H+delta) / r^(-H-delta) split profile on a plateau of half-width
    plateau_factor/delta e-folds: the window must widen as delta -> 0 for the
    truncation terms (relative size ~ e^(-2 p delta L)) to stay negligible."""
    L = plateau_factor / delta
    s = np.linspace(-L - 4 * ramp, L + 4 * ramp, n)
    r = np.exp(s)
    window = smooth_step((s + L + ramp) / ramp) * (1.0 - smooth_step((s - L) / ramp))
    power = np.where(r < 1.0, -H + delta, -H - delta)
    return r, r**power * window


class TestCutoffShape:
    def test_eta_plateau_and_support(self):
        t = np.array([-1.0, 0.0, 0.5, 1.0])
        assert np.allclose(eta_cutoff(t), 1.0)
        assert np.allclose(eta_cutoff(np.array([2.0, 3.0, 10.0])), 0.0)
        mid = eta_cutoff(np.array([1.5]))[0]
        assert 0.0 < mid < 1.0

    def test_eta_prime_support_and_sign(self):
        t = np.linspace(1.01, 1.99, 9)
        assert np.all(eta_cutoff_prime(t) < 0)
        assert np.allclose(eta_cutoff_prime(np.array([0.5, 2.5])), 0.0)

    def test_eta_prime_matches_finite_differences(self):
        t = np.linspace(1.05, 1.95, 7)
        h = 1e-6
        fd = (eta_cutoff(t + h) - eta_cutoff(t - h)) / (2 * h)
        assert np.allclose(eta_cutoff_prime(t), fd, atol=1e-7)


class TestUdeltaQuotient:
    def setup_method(self):
        self.params = HardyParams(3, 1, 2.0, 0.0, 0.0)
        self.cone = ConeSpec.complement_sigma0()
        self.result = solve_M(self.params, self.cone, 256)

    def test_p2_quotient_is_M_plus_delta_squared(self):
        # algebraic identity: ((H-d)^2 + (H+d)^2)/2 = H^2 + d^2 makes the
        # quotient exceed the discrete minimum by exactly delta^2
        for delta in (0.2, 0.1, 0.05):
            ev = evaluate_quotient_udelta(self.params, self.result.minimizer, delta)
            assert ev.quotient - self.result.M == pytest.approx(delta**2, rel=1e-9)

    def test_second_order_approach(self):
        qs = [
            evaluate_quotient_udelta(self.params, self.result.minimizer, d).quotient
            for d in (0.2, 0.1, 0.05)
        ]
        order = math.log((qs[0] - qs[1]) / (qs[1] - qs[2])) / math.log(2.0)
        assert order >= 1.9

    def test_constant_profile_any_p(self):
        params = HardyParams(3, 1, 3.0, 2.0, 0.0)  # natural/natural superdegenerate
        mesh = graded_mesh(0.0, HALF_PI, 64, 2.0)
        Phi = DiscretizedFunction(mesh, np.ones(mesh.size))
        H = hardy_exponent(params).H
        for delta in (0.3, 0.1):
            ev = evaluate_quotient_udelta(params, Phi, delta)
            expected = (abs(H - delta) ** 3 + abs(H + delta) ** 3) / 2
            assert ev.quotient == pytest.approx(expected, rel=1e-12)

    def test_nonpositive_delta_rejected(self):
        with pytest.raises(ValueError):
            evaluate_quotient_udelta(self.params, self.result.minimizer, 0.0)

    def test_reference_recorded(self):
        ev = evaluate_quotient_udelta(self.params, self.result.minimizer, 0.1, reference=2.25)
        assert ev.closed_form_reference == 2.25


class TestDenominatorBlowup:
    def setup_method(self):
        self.params = HardyParams(3, 1, 2.0, 0.0, 0.0)
        mesh = graded_mesh(0.0, HALF_PI, 64, 2.0)
        self.Phi = DiscretizedFunction(mesh, np.ones(mesh.size))

    def test_closed_form_value(self):
        # constant profile on the full sphere: denominator = (2/(p delta)) * total mass
        den = denominator_blowup(self.params, self.Phi, 0.1)
        expected = 2.0 / (2.0 * 0.1) * sphere_weight_mass(self.params)
        assert den == pytest.approx(expected, rel=1e-12)

    def test_exact_inverse_delta_scaling(self):
        d1 = denominator_blowup(self.params, self.Phi, 0.2)
        d2 = denominator_blowup(self.params, self.Phi, 0.1)
        assert d2 == pytest.approx(2.0 * d1, rel=1e-14)

    def test_product_with_delta_constant(self):
        products = [
            denominator_blowup(self.params, self.Phi, d) * d for d in (0.1, 0.01, 0.001)
        ]
        spread = (max(products) - min(products)) / products[0]
        assert spread < 1e-12

    def test_matches_quotient_denominator(self):
        ev = evaluate_quotient_udelta(self.params, self.Phi, 0.05)
        den = denominator_blowup(self.params, self.Phi, 0.05)
        assert den == pytest.approx(ev.denominator, rel=1e-14)


class TestCutoffDecay:
    def test_threshold_rate(self):
        # k + a = p = 2: I_h ~ h^(1-p), so I_h * h stays within a bounded band
        params = HardyParams(3, 1, 2.0, 1.0, 0.0)
        scaled = [cutoff_decay(params, (0.05, 20.0), h) * h for h in (4, 8, 16)]
        assert max(scaled) / min(scaled) < 2.0

    def test_exponential_decay_above_threshold(self):
        params = HardyParams(3, 1, 2.0, 2.5, 0.0)  # k + a - p = 1.5
        values = [cutoff_decay(params, (0.05, 20.0), h) for h in (4, 8, 16)]
        slopes = [
            math.log2(values[0] / values[1]),
            math.log2(values[1] / values[2]),
        ]
        assert slopes[1] > slopes[0]  # steeper than any fixed power
        assert slopes[1] > 3.0

    def test_no_cutoff_variation_leaves_base_energy(self):
        params = HardyParams(3, 1, 2.0, 1.0, 0.0)
        ones = lambda t: np.ones_like(np.asarray(t, dtype=float))
        zeros = lambda t: np.zeros_like(np.asarray(t, dtype=float))
        base = cutoff_decay(params, (0.05, 20.0), 6, eta=ones, eta_prime=zeros)
        active = cutoff_decay(params, (0.05, 20.0), 6)
        assert base < 1e-2 * active
        # independent oracle: dense midpoint grid over the strip in (nu, tau)
        oracle = _strip_energy_midpoint_oracle(params, (0.05, 20.0), 6)
        assert base == pytest.approx(oracle, rel=1e-5)

    def test_threshold_separable_asymptotics(self):
        # at k+a = p = 2 and c = e^(-tau-nu) -> 0 the strip integral factors:
        # I_h -> pref * [int e^((d-b-k)nu) g^2 dnu] * [int eta'(t)^2 dt] / h,
        # with corrections decaying like e^(-2h); independent 1-D oracles
        from hardycone.quadrature import AngularWeight
        from hardycone.verifier import _gauss_panels, _plateau_window

        params = HardyParams(3, 1, 2.0, 1.0, 0.0)
        support = (0.05, 20.0)
        window = _plateau_window(*support)
        nu, w_nu = _gauss_panels(*window.log_support(), 64)
        g, _ = window.profile(nu)
        radial = float(w_nu @ (np.exp(nu * (params.d - params.b - params.k)) * g**2))
        t, w_t = _gauss_panels(1.0, 2.0, 32)
        cutoff_mass = float(w_t @ eta_cutoff_prime(t) ** 2)
        pref = AngularWeight.for_params(params).prefactor
        for h, tol in ((10, 1e-8), (16, 1e-10)):
            oracle = pref * radial * cutoff_mass / h
            assert cutoff_decay(params, support, h) == pytest.approx(oracle, rel=tol)

    def test_preconditions(self):
        params = HardyParams(3, 1, 2.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            cutoff_decay(params, (0.05, 20.0), 0)
        with pytest.raises(ValueError):
            cutoff_decay(HardyParams(3, 1, 2.0, 0.5, 0.0), (0.05, 20.0), 4)  # k+a < p
        with pytest.raises(ValueError):
            cutoff_decay(params, (0.005, 20.0), 4)  # strip reaches into r < delta_inner


def _strip_energy_midpoint_oracle(params, support, h, n_nu=3000, n_tau=3000):
    """Midpoint-rule strip integral of |grad u|^p with no cutoff factor."""
    from hardycone.quadrature import AngularWeight
    from hardycone.verifier import _plateau_window

    window = _plateau_window(*support)
    nu_lo, nu_hi = window.log_support()
    nu = np.linspace(nu_lo, nu_hi, n_nu + 1)
    nu = 0.5 * (nu[:-1] + nu[1:])
    dnu = (nu_hi - nu_lo) / n_nu
    tau = np.linspace(h, 2.0 * h, n_tau + 1)
    tau = 0.5 * (tau[:-1] + tau[1:])
    dtau = float(h) / n_tau
    g, gp = window.profile(nu)
    r = np.exp(nu)
    c = np.exp(-(tau[None, :] + nu[:, None]))
    one_mc2 = 1.0 - c**2
    grad_p = np.abs((gp / r)[:, None] * np.ones_like(tau)[None, :]) ** params.p
    d, k, a, b = params.d, params.k, params.a, params.b
    kernel = np.exp(nu * (d - b - k))[:, None] * np.exp(-tau * (k + a))[None, :]
    kernel *= one_mc2 ** ((d - k - 2) / 2)
    pref = AngularWeight.for_params(params).prefactor
    return float(pref * (kernel * grad_p).sum() * dnu * dtau)


class TestRadialHardyQuotient:
    def test_lower_bound_instance(self):
        # f supported near r = 1, p = 2, H = 1/2: quotient >= 1/4
        r = log_grid(1e-2, 1e2, 2048)
        f = np.exp(-np.log(r) ** 2)
        q = radial_hardy_quotient(2.0, 3 - 1, r, f)  # m = d+a-b-1 = 2
        assert q >= 0.25

    def test_udelta_family_approaches_sharp_constant(self):
        H = 0.5
        quotients = []
        for delta in (0.1, 0.05, 0.025):
            r, f = udelta_radial_family(delta, H)
            quotients.append(radial_hardy_quotient(2.0, 2.0, r, f))
        assert quotients[0] > quotients[1] > quotients[2]
        assert abs(quotients[-1] - H**2) <= 1e-3

    def test_random_splines_respect_bound(self):
        rng = np.random.default_rng(9)
        r = log_grid(1e-4, 1e4, 4096)
        s = np.log(r)
        for _ in range(10):
            knots = np.linspace(-6, 6, 9)
            vals = np.concatenate([[0.0], rng.uniform(-1, 1, 7), [0.0]])
            spline = CubicSpline(knots, vals, bc_type="clamped")
            f = np.where(np.abs(s) < 6, spline(np.clip(s, -6, 6)), 0.0)
            q = radial_hardy_quotient(2.0, 2.0, r, f)
            assert q >= 0.25

    def test_grid_refinement_oracle(self):
        coarse_r, coarse_f = udelta_radial_family(0.05, n=2**13)
        fine_r, fine_f = udelta_radial_family(0.05, n=2**16)
        qc = radial_hardy_quotient(2.0, 2.0, coarse_r, coarse_f)
        qf = radial_hardy_quotient(2.0, 2.0, fine_r, fine_f)
        assert qc == pytest.approx(qf, rel=1e-4)

    def test_zero_profile_rejected(self):
        r = log_grid(1e-2, 1e2, 128)
        with pytest.raises(ValueError):
            radial_hardy_quotient(2.0, 2.0, r, np.zeros_like(r))


class TestVerifyInequality:
    def test_full_space_windowed_power(self):
        params = HardyParams(3, 1, 2.0, 0.0, 0.0)
        cone = ConeSpec.full_space()
        mesh = graded_mesh(0.0, HALF_PI, 64, 2.0)
        Phi = DiscretizedFunction(mesh, np.ones(mesh.size))
        testfn = SeparatedTestFunction(PowerWindow(-0.3, 0.1, 10.0), Phi)
        ev = verify_inequality(params, cone, testfn, reference=0.25)
        assert ev.quotient >= 0.25

    def test_fractional_extension_half_space_family(self):
        # d = 4, a = 0, b = 0 on the half space: sharp constant ((3+1)/2)^2 = 4
        params = HardyParams(4, 1, 2.0, 0.0, 0.0)
        cone = ConeSpec.half_space()
        result = solve_M(params, cone, 512)
        quotients = []
        for delta in (0.2, 0.1, 0.05):
            testfn = SeparatedTestFunction(PowerLawSplit(delta), result.minimizer)
            ev = verify_inequality(params, cone, testfn, reference=4.0, tol=1e-4)
            quotients.append(ev.quotient)
        extrap = (quotients[-1] * 0.1**2 - quotients[-2] * 0.05**2) / (0.1**2 - 0.05**2)
        assert extrap == pytest.approx(4.0, abs=1e-3)

    def test_dilation_invariance(self):
        params = HardyParams(4, 2, 1.5, 0.3, 0.4)
        cone = ConeSpec.punctured_space()
        mesh = graded_mesh(0.0, HALF_PI, 48, 2.0)
        Phi = DiscretizedFunction(mesh, 1.0 + 0.3 * np.cos(mesh) ** 2)
        base = verify_inequality(
            params, cone, SeparatedTestFunction(PowerWindow(-0.7, 0.5, 50.0), Phi)
        )
        for scale in (1e-3, 7.0, 1e4):
            moved = verify_inequality(
                params,
                cone,
                SeparatedTestFunction(PowerWindow(-0.7, 0.5 * scale, 50.0 * scale), Phi),
            )
            assert moved.quotient == pytest.approx(base.quotient, rel=1e-12)

    def test_matches_radial_oracle_for_constant_profile(self):
        params = HardyParams(3, 1, 2.0, 0.5, 0.2)
        cone = ConeSpec.punctured_space()
        mesh = graded_mesh(0.0, HALF_PI, 48, 2.0)
        Phi = DiscretizedFunction(mesh, np.ones(mesh.size))
        window = PowerWindow(-0.4, 0.05, 20.0)
        ev = verify_inequality(params, cone, SeparatedTestFunction(window, Phi))
        r = log_grid(window.r0 / 40, window.r1 * 40, 2**15)
        nu = np.log(r)
        g, _ = window.profile(nu)
        f = r**window.exponent * g
        oracle = radial_hardy_quotient(
            params.p, params.d + params.a - params.b - 1.0, r, f
        )
        assert ev.quotient == pytest.approx(oracle, rel=1e-5)

    def test_band_cone_quotients_stay_above_minimum(self):
        params = HardyParams(3, 1, 2.0, 0.3, 0.0)
        band = ConeSpec.band(0.4, 1.3)
        result = solve_M(params, band, 160)
        for delta in (0.2, 0.05):
            testfn = SeparatedTestFunction(PowerLawSplit(delta), result.minimizer)
            ev = verify_inequality(params, band, testfn, reference=result.M, tol=1e-9)
            assert ev.quotient == pytest.approx(result.M + delta**2, rel=1e-9)

    def test_udelta_on_cone_equals_evaluate_quotient(self):
        params = HardyParams(3, 1, 2.0, 0.0, 0.0)
        cone = ConeSpec.complement_sigma0()
        result = solve_M(params, cone, 128)
        testfn = SeparatedTestFunction(PowerLawSplit(0.1), result.minimizer)
        ev1 = verify_inequality(params, cone, testfn)
        ev2 = evaluate_quotient_udelta(params, result.minimizer, 0.1)
        assert ev1.quotient == ev2.quotient

    def test_log_cutoff_unsupported(self):
        params = HardyParams(3, 1, 2.0, 1.5, 0.0)
        mesh = graded_mesh(0.0, HALF_PI, 32, 2.0)
        Phi = DiscretizedFunction(mesh, np.ones(mesh.size))
        with pytest.raises(ValueError):
            verify_inequality(
                params, ConeSpec.complement_sigma0(), SeparatedTestFunction(LogCutoff(4), Phi)
            )

    def test_dirichlet_violation_rejected(self):
        params = HardyParams(3, 1, 2.0, 0.0, 0.0)
        mesh = graded_mesh(0.0, HALF_PI, 32, 2.0)
        Phi = DiscretizedFunction(mesh, np.ones(mesh.size))  # nonzero at pi/2
        with pytest.raises(ValueError):
            verify_inequality(
                params,
                ConeSpec.complement_sigma0(),
                SeparatedTestFunction(PowerLawSplit(0.1), Phi),
            )

    def test_certification_error_when_reference_too_high(self):
        params = HardyParams(3, 1, 2.0, 0.0, 0.0)
        cone = ConeSpec.complement_sigma0()
        result = solve_M(params, cone, 128)
        testfn = SeparatedTestFunction(PowerLawSplit(0.1), result.minimizer)
        with pytest.raises(CertificationError):
            verify_inequality(params, cone, testfn, reference=10.0)

    def test_sharpness_pinched_from_both_sides(self):
        # every family member sits above m; the best one is within 5 delta^2 |m|
        params = HardyParams(3, 1, 2.0, 0.0, 0.0)
        cone = ConeSpec.complement_sigma0()
        m_ref = 2.25
        result = solve_M(params, cone, 256)
        deltas = (0.2, 0.1, 0.05)
        quotients = [
            verify_inequality(
                params, cone, SeparatedTestFunction(PowerLawSplit(d), result.minimizer),
                reference=m_ref, tol=1e-8,
            ).quotient
            for d in deltas
        ]
        assert min(quotients) - m_ref <= 5 * min(deltas) ** 2 * abs(m_ref)
