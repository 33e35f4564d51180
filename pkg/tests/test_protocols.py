import cmath
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entconc.errors import ParameterGuardError, TruncationError, ZeroSuccessError
from entconc.fock import DensityMatrix, fock_state, superposition
from entconc.measures import log_negativity, log_negativity_pure, trace_distance
from entconc.protocols import (
    Displacement,
    NoLocalOp,
    ProtocolParams,
    Squeezing,
    _tap,
    click_probabilities,
    heralded_state,
    ideal_displaced_filter,
    ideal_nonlocal_filter,
    ideal_squeezed_filter,
    ideal_subtraction_filter,
    inclusion_exclusion_terms,
    pre_tap_state,
    realistic_to_ideal_limit,
    run_bruteforce_oracle,
    run_realistic,
    shared_state,
)
from entconc.states import TmsvSpec, tmsv_pure

C = 10


def tmsv(lam):
    return tmsv_pure(TmsvSpec(lam, C))


def _swap_modes(m, cutoff):
    d = cutoff + 1
    return m.reshape(d, d, d, d).transpose(1, 0, 3, 2).reshape(d * d, d * d)


class TestIdealFilters:
    def test_subtraction_on_tmsv(self):
        lam = 0.2
        out = ideal_subtraction_filter(tmsv(lam))
        for n in range(C):
            assert out.amplitude(n, n) == pytest.approx(
                math.sqrt(1 - lam**2) * (n + 1) * lam ** (n + 1), rel=1e-13
            )

    def test_subtraction_of_vacuum_flagged(self):
        with pytest.raises(ZeroSuccessError):
            ideal_subtraction_filter(fock_state((0, 0), C))
        zero = ideal_subtraction_filter(fock_state((0, 0), C), allow_zero=True)
        assert zero.norm_squared == 0

    def test_subtraction_of_11(self):
        out = ideal_subtraction_filter(fock_state((1, 1), C))
        np.testing.assert_array_equal(out.amplitudes, fock_state((0, 0), C).amplitudes)

    @pytest.mark.parametrize("lam, alpha", [(0.01, 0.1), (0.05, 0.3), (0.15, 0.2), (0.25, 0.5), (0.4, 1.0)])
    def test_vacuum_cancellation(self, lam, alpha):
        out = ideal_displaced_filter(tmsv(lam), alpha, -lam / alpha)
        assert abs(out.amplitude(0, 0)) <= 1e-12

    def test_displaced_reduces_to_subtraction_exactly(self):
        psi = tmsv(0.3)
        np.testing.assert_array_equal(
            ideal_displaced_filter(psi, 0, 0).amplitudes, ideal_subtraction_filter(psi).amplitudes
        )

    def test_one_ebit_limit_of_displacement(self):
        out = ideal_displaced_filter(tmsv(0.01), 0.1, -0.1).normalized()
        singlet = superposition({(1, 0): 1, (0, 1): -1}, C)
        assert abs(np.vdot(singlet.amplitudes, out.amplitudes)) ** 2 >= 0.99

    def test_squeezed_filter_s0_is_subtraction(self):
        psi = tmsv(0.2)
        np.testing.assert_allclose(
            ideal_squeezed_filter(psi, 0.0).amplitudes, ideal_subtraction_filter(psi).amplitudes, atol=0
        )

    def test_squeezed_filter_leading_order(self):
        lam = 0.01
        out = ideal_squeezed_filter(tmsv(lam), math.atanh(math.sqrt(lam)))
        main = out.amplitude(0, 0)
        assert out.amplitude(1, 1) == pytest.approx(main, rel=0.05)
        # |02>, |20> admixture suppressed by sqrt(lambda) relative to the main terms
        ratio = out.amplitude(0, 2) / main
        assert ratio == pytest.approx(math.sqrt(2) * math.sqrt(lam), rel=0.05)
        assert out.amplitude(2, 0) == pytest.approx(out.amplitude(0, 2), rel=1e-12)

    def test_nonlocal_filter_on_tmsv(self):
        lam = 0.2
        out = ideal_nonlocal_filter(tmsv(lam))
        norm = math.sqrt(1 - lam**2)
        assert out.amplitude(0, 1) == pytest.approx(norm * lam, rel=1e-14)
        assert out.amplitude(1, 0) == pytest.approx(norm * lam, rel=1e-14)
        assert out.amplitude(0, 0) == 0
        with pytest.raises(ZeroSuccessError):
            ideal_nonlocal_filter(fock_state((0, 0), C))

    def test_nonlocal_equivalence_at_small_lambda(self):
        lam = 0.01
        e_nl = log_negativity_pure(ideal_nonlocal_filter(tmsv(lam)))
        e_d = log_negativity_pure(ideal_displaced_filter(tmsv(lam), 0.1, -0.1))
        assert abs(e_nl - e_d) <= 0.01

    def test_filters_need_two_modes(self):
        with pytest.raises(ValueError):
            ideal_subtraction_filter(fock_state((1, 1, 1), 3))


class TestParams:
    def test_guards(self):
        with pytest.raises(TruncationError):
            ProtocolParams(0.1, cutoff=3)
        with pytest.raises(TruncationError):
            ProtocolParams(0.9)
        with pytest.raises(ParameterGuardError):
            ProtocolParams(0.1, reflectance=1.0)
        with pytest.raises(ParameterGuardError):
            ProtocolParams(0.1, eta=0.0)
        with pytest.raises(ParameterGuardError):
            ProtocolParams(0.1, nu=-0.1)
        with pytest.raises(TruncationError):
            Displacement(2.5, 0)
        with pytest.raises(TruncationError):
            Squeezing(1.6)
        with pytest.raises(ParameterGuardError):
            ProtocolParams(0.1, detector_model="pnr")

    def test_displaced_defaults_to_antidiagonal(self):
        p = ProtocolParams(0.1).displaced(0.3)
        assert p.local_op == Displacement(0.3, -0.3)


class TestRealistic:
    def test_inclusion_exclusion_terms_sum_to_heralded_state(self):
        p = ProtocolParams(0.2, 0.1, nu=0.1).displaced(0.3)
        r, w = _tap(p)
        ll, vl, lv, vv = inclusion_exclusion_terms(pre_tap_state(p), r, w)
        rho = heralded_state(p).matrix
        assert np.abs(ll - vl - lv + vv - rho).max() <= 1e-15
        # Lambda_A Lambda_B is trace preserving
        assert np.trace(ll).real == pytest.approx(pre_tap_state(p).trace, abs=1e-13)

    @pytest.mark.parametrize(
        "params",
        [
            ProtocolParams(0.15, 0.1).displaced(0.35),
            ProtocolParams(0.2, 0.05),
            ProtocolParams(0.1, 0.2, local_op=Squeezing(0.25)),
            ProtocolParams(0.2, 0.05, eta=0.8, detector_model="ancilla_loss"),
        ],
    )
    def test_matches_bruteforce(self, params):
        a, b = run_realistic(params), run_bruteforce_oracle(params)
        assert np.abs(a.rho_out_unnormalized.matrix - b.rho_out_unnormalized.matrix).max() <= 1e-9
        assert a.success_probability == pytest.approx(b.success_probability, rel=1e-9)

    def test_bruteforce_vacuum_input(self):
        with pytest.raises(ZeroSuccessError):
            run_bruteforce_oracle(ProtocolParams(0.0, 0.1))
        with pytest.raises(ZeroSuccessError):
            run_realistic(ProtocolParams(0.0, 0.1))

    def test_bruteforce_guards(self):
        with pytest.raises(ParameterGuardError):
            run_bruteforce_oracle(ProtocolParams(0.1, nu=0.1))
        with pytest.raises(ParameterGuardError):
            run_bruteforce_oracle(ProtocolParams(0.1, cutoff=11))

    def test_vacuum_projection_when_nothing_is_tapped(self):
        with pytest.raises(ZeroSuccessError):
            run_realistic(ProtocolParams(0.2, 0.0))

    def test_normalized_output(self):
        out = run_realistic(ProtocolParams(0.15, 0.1).displaced(0.35))
        assert out.rho_out_normalized.trace == pytest.approx(1.0, abs=1e-13)
        assert out.rho_out_unnormalized.trace == pytest.approx(out.success_probability, rel=1e-15)
        assert out.log_negativity == out.entanglement.log_negativity

    def test_antidiagonal_beats_diagonal(self):
        base = ProtocolParams(0.15, 0.1)
        anti = run_realistic(base.displaced(0.35, -0.35)).log_negativity
        diag = run_realistic(base.displaced(0.35, 0.35)).log_negativity
        plain = run_realistic(base).log_negativity
        assert anti > plain > diag

    def test_loss_lowers_entanglement(self):
        base = ProtocolParams(0.25, 0.1).displaced(0.35)
        assert run_realistic(replace(base, nu=0.2)).log_negativity < run_realistic(base).log_negativity

    @pytest.mark.parametrize("ab", [(0.3, -0.1), (0.2 + 0.1j, -0.4), (0.5, 0.25j)])
    def test_mode_swap_symmetry(self, ab):
        alpha, beta = ab
        base = ProtocolParams(0.2, 0.1, nu=0.05)
        one = run_realistic(base.displaced(alpha, beta))
        two = run_realistic(base.displaced(beta, alpha))
        assert one.log_negativity == pytest.approx(two.log_negativity, abs=1e-12)
        assert one.success_probability == pytest.approx(two.success_probability, rel=1e-12)
        swapped = _swap_modes(two.rho_out_unnormalized.matrix, C)
        assert np.abs(one.rho_out_unnormalized.matrix - swapped).max() <= 1e-15

    @settings(max_examples=8, deadline=None)
    @given(phi=st.floats(0, 2 * math.pi))
    def test_global_phase_invariance(self, phi):
        base = ProtocolParams(0.15, 0.1)
        ref = run_realistic(base.displaced(0.35, -0.2)).log_negativity
        rot = cmath.exp(1j * phi)
        got = run_realistic(base.displaced(0.35 * rot, -0.2 / rot)).log_negativity
        assert got == pytest.approx(ref, abs=1e-10)

    @pytest.mark.parametrize("lam", [0.01, 0.03, 0.05])
    def test_vacuum_cancellation_lowers_success(self, lam):
        base = ProtocolParams(lam, 0.1)
        alpha = math.sqrt(lam)
        assert (
            run_realistic(base.displaced(alpha, -lam / alpha)).success_probability
            < run_realistic(base).success_probability
        )

    @pytest.mark.parametrize(
        "params",
        [
            ProtocolParams(0.2, 0.1),
            ProtocolParams(0.3, 0.3, nu=0.2).displaced(0.4, -0.1),
            ProtocolParams(0.15, 0.1, eta=0.6, local_op=Squeezing(0.3)),
        ],
    )
    def test_success_below_single_click(self, params):
        p = run_realistic(params).success_probability
        pa, pb = click_probabilities(params)
        assert p <= min(pa, pb)

    def test_output_is_physical_state(self):
        out = run_realistic(ProtocolParams(0.25, 0.1, nu=0.3, eta=0.7).displaced(0.3))
        mu = np.linalg.eigvalsh(out.rho_out_normalized.matrix)
        assert mu[0] >= -1e-12


class TestDetectorModels:
    @pytest.mark.parametrize("op", [NoLocalOp(), Displacement(0.3, -0.3), Squeezing(0.2)])
    def test_reparametrization_equals_ancilla_loss(self, op):
        base = ProtocolParams(0.2, 0.05, eta=0.8, local_op=op)
        a = run_realistic(base)
        b = run_realistic(replace(base, detector_model="ancilla_loss"))
        assert trace_distance(a.rho_out_normalized, b.rho_out_normalized) <= 1e-8
        assert a.success_probability == pytest.approx(b.success_probability, rel=1e-8)

    def test_dropping_extra_loss_is_an_approximation(self):
        base = ProtocolParams(0.2, 0.1, eta=0.5)
        exact = run_realistic(base)
        approx = run_realistic(replace(base, drop_inefficiency_loss=True))
        d = trace_distance(exact.rho_out_normalized, approx.rho_out_normalized)
        assert 0 < d < 0.05

    def test_perfect_detector_unchanged_by_model(self):
        base = ProtocolParams(0.2, 0.1)
        a = run_realistic(base).rho_out_unnormalized.matrix
        b = run_realistic(replace(base, detector_model="ancilla_loss")).rho_out_unnormalized.matrix
        assert np.abs(a - b).max() <= 1e-16


class TestIdealLimit:
    @pytest.mark.parametrize(
        "params", [ProtocolParams(0.1), ProtocolParams(0.05).displaced(math.sqrt(0.05))]
    )
    def test_monotone_convergence(self, params):
        rec = realistic_to_ideal_limit(params)
        assert rec.reflectances == (0.1, 0.05, 0.02, 0.01)
        assert all(b < a for a, b in zip(rec.trace_distances, rec.trace_distances[1:]))
        assert rec.trace_distances[-1] < 0.05

    def test_residual_mixedness_caps_entanglement(self):
        # at fixed R the realistic output is mixed and stays below the pure ideal state
        p = ProtocolParams(0.01, 0.1).displaced(0.1)
        out = run_realistic(p)
        purity = np.trace(out.rho_out_normalized.matrix @ out.rho_out_normalized.matrix).real
        rec = realistic_to_ideal_limit(p, reflectances=(0.1,))
        assert purity < 0.99
        assert out.log_negativity < rec.ideal_log_negativity
        assert out.log_negativity < 1

    def test_needs_pure_input(self):
        with pytest.raises(ParameterGuardError):
            realistic_to_ideal_limit(ProtocolParams(0.1, nu=0.1))


def test_shared_state_trace():
    rho = shared_state(ProtocolParams(0.25, nu=0.2))
    assert isinstance(rho, DensityMatrix)
    assert rho.trace == pytest.approx(1 - TmsvSpec(0.25, C).norm_deficit, abs=1e-12)
