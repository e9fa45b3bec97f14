import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polariton.constants import HBAR_C
from polariton.core import Variant, rwa_eigenvalues
from polariton.dispersion import (
    Branch,
    CouplingModel,
    DispersionPoint,
    GeometryParams,
    ParametricCavity,
    SystemParams,
    TabulatedCavity,
    bare_cavity_at_angle,
    branch_energy_at_angle,
    branch_energy_at_k,
    calibrate_parametric_cavity,
    cavity_energy,
    dispersion_curve,
    k_of_angle_energy,
    resonant_k,
)
from polariton.errors import EmptyInputError, ParameterError, RangeError, ResonanceNotFoundError

E12 = 152.0


def table_from(model, k_lo, k_hi, n=20):
    ks = np.linspace(k_lo, k_hi, n)
    return TabulatedCavity(tuple(ks), tuple(model.energy(ks)))


class TestAngleToK:
    def test_zero_energy(self):
        assert k_of_angle_energy(GeometryParams(60.0), 0.0) == 0.0

    def test_grazing_light_line(self):
        geom = GeometryParams(89.999999, 1.000001)
        assert k_of_angle_energy(geom, 152.0) == pytest.approx(152.0 / HBAR_C, rel=1e-6)

    def test_hand_arithmetic(self):
        # 152 * 3.3 = 501.6; * sin 60 = 434.40014; / 197326.98
        assert k_of_angle_energy(GeometryParams(60.0, 3.3), 152.0) == pytest.approx(2.201414e-3, rel=1e-6)

    @settings(max_examples=500, deadline=None)
    @given(st.floats(1, 89), st.floats(1, 89), st.floats(1, 500), st.floats(1, 500))
    def test_strictly_increasing(self, t1, t2, e1, e2):
        lo_t, hi_t = sorted((t1, t2))
        lo_e, hi_e = sorted((e1, e2))
        if hi_t > lo_t:
            assert k_of_angle_energy(GeometryParams(lo_t), e1) < k_of_angle_energy(GeometryParams(hi_t), e1)
        if hi_e > lo_e:
            assert k_of_angle_energy(GeometryParams(t1), lo_e) < k_of_angle_energy(GeometryParams(t1), hi_e)

    @pytest.mark.parametrize("theta,n", [(0.0, 3.3), (90.0, 3.3), (45.0, 1.0)])
    def test_geometry_validation(self, theta, n):
        with pytest.raises(ParameterError):
            GeometryParams(theta, n)


class TestCavity:
    def test_parametric_at_zero(self):
        assert cavity_energy(ParametricCavity(76.0), 0.0) == 76.0

    def test_parametric_symmetry_point(self):
        model = ParametricCavity(100.0, 3.3)
        k = 100.0 * 3.3 / HBAR_C
        assert cavity_energy(model, k) == pytest.approx(100.0 * math.sqrt(2), rel=1e-14)

    def test_tabulated_reproduces_parametric(self):
        model = calibrate_parametric_cavity(E12, 60.0)
        # table over the bare-cavity wavevectors seen between 45 and 75 degrees
        k_lo = k_of_angle_energy(GeometryParams(45.0), bare_cavity_at_angle(model, GeometryParams(45.0)))
        k_hi = k_of_angle_energy(GeometryParams(75.0), bare_cavity_at_angle(model, GeometryParams(75.0)))
        table = table_from(model, k_lo, k_hi)
        ks = np.linspace(k_lo, k_hi, 997)
        assert np.max(np.abs(table.energy(ks) - model.energy(ks))) < 0.1

    def test_tabulated_monotone_no_overshoot(self):
        ks = (0.0, 1e-3, 1.1e-3, 3e-3, 3.05e-3, 5e-3)
        es = (80.0, 90.0, 140.0, 141.0, 200.0, 201.0)
        table = TabulatedCavity(ks, es)
        dense = table.energy(np.linspace(0, 5e-3, 5001))
        assert np.all(np.diff(dense) >= -1e-12)
        for (k0, e0), (k1, e1) in zip(zip(ks, es), zip(ks[1:], es[1:])):
            seg = table.energy(np.linspace(k0, k1, 50))
            assert seg.min() >= e0 - 1e-12 and seg.max() <= e1 + 1e-12

    def test_tabulated_refuses_extrapolation(self):
        table = TabulatedCavity((1e-3, 2e-3, 3e-3, 4e-3), (100.0, 120.0, 150.0, 190.0))
        with pytest.raises(RangeError):
            cavity_energy(table, 5e-3)
        with pytest.raises(RangeError):
            cavity_energy(table, 0.5e-3)

    @pytest.mark.parametrize("ks,es", [
        ((1.0, 2.0, 3.0), (1.0, 2.0, 3.0)),
        ((1.0, 2.0, 2.0, 3.0), (1.0, 2.0, 3.0, 4.0)),
        ((1.0, 2.0, 3.0, 4.0), (1.0, -2.0, 3.0, 4.0)),
    ])
    def test_table_validation(self, ks, es):
        with pytest.raises(ParameterError):
            TabulatedCavity(ks, es)

    def test_calibration_puts_bare_cavity_on_resonance(self):
        model = calibrate_parametric_cavity(E12, 60.0)
        assert model.e_z == pytest.approx(76.0, rel=1e-14)
        assert bare_cavity_at_angle(model, GeometryParams(60.0)) == pytest.approx(E12, abs=1e-8)


class TestResonantK:
    def test_band_bottom(self):
        assert resonant_k(ParametricCavity(152.0), 152.0) == 0.0

    def test_analytic_inversion(self):
        expected = 3.3 * math.sqrt(152.0**2 - 100.0**2) / HBAR_C
        assert resonant_k(ParametricCavity(100.0, 3.3), 152.0) == pytest.approx(expected, rel=1e-10)

    def test_tabulated(self):
        model = ParametricCavity(100.0, 3.3)
        expected = 3.3 * math.sqrt(152.0**2 - 100.0**2) / HBAR_C
        table = table_from(model, 0.0, 4e-3)
        assert resonant_k(table, 152.0) == pytest.approx(expected, rel=1e-4)

    def test_not_found(self):
        with pytest.raises(ResonanceNotFoundError):
            resonant_k(ParametricCavity(160.0), 152.0)
        with pytest.raises(ResonanceNotFoundError):
            resonant_k(TabulatedCavity((0.0, 1e-3, 2e-3, 3e-3), (60.0, 70.0, 80.0, 90.0)), 152.0)


class TestBranchAtK:
    def test_uncoupled_lower_branch(self, reference_params):
        p = reference_params.with_rabi(0.0)
        for k in (0.0, 1e-3, 2.2e-3, 4e-3):
            lp = branch_energy_at_k(p, Variant.FULL, k, "LP")
            assert lp == pytest.approx(min(cavity_energy(p.cavity, k), E12), rel=1e-12)

    def test_rwa_at_resonance(self, reference_params):
        k_res = resonant_k(reference_params.cavity, E12)
        lp = branch_energy_at_k(reference_params, Variant.NO_ANTIRES_NO_DIA, k_res, Branch.LP)
        up = branch_energy_at_k(reference_params, Variant.NO_ANTIRES_NO_DIA, k_res, Branch.UP)
        assert lp == pytest.approx(E12 - 16.5, rel=1e-10)
        assert up == pytest.approx(E12 + 16.5, rel=1e-10)

    def test_full_at_resonance_matches_oracle(self, reference_params):
        from polariton.fock import oracle_spectrum

        k_res = resonant_k(reference_params.cavity, E12)
        oracle = oracle_spectrum(reference_params.mode_inputs(k_res), Variant.FULL)
        assert branch_energy_at_k(reference_params, Variant.FULL, k_res, "LP") == pytest.approx(oracle.e_lp, abs=1e-6)
        assert branch_energy_at_k(reference_params, Variant.FULL, k_res, "UP") == pytest.approx(oracle.e_up, abs=1e-6)

    def test_scaled_coupling_equals_constant_at_resonance(self, reference_params):
        k_res = resonant_k(reference_params.cavity, E12)
        scaled = SystemParams(E12, reference_params.cavity, CouplingModel(16.5, "scaled"))
        assert scaled.mode_inputs(k_res).omega_r == pytest.approx(16.5, rel=1e-12)
        assert scaled.mode_inputs(1e-3).omega_r > 16.5  # cavity below e_12 there


class TestBranchAtAngle:
    def test_uncoupled(self, reference_params):
        p = reference_params.with_rabi(0.0)
        for theta in (50.0, 70.0):
            geom = p.geometry(theta)
            bare = bare_cavity_at_angle(p.cavity, geom)
            lp = branch_energy_at_angle(p, Variant.FULL, geom, "LP")
            up = branch_energy_at_angle(p, Variant.FULL, geom, "UP")
            assert lp == pytest.approx(min(bare, E12), abs=1e-8)
            assert up == pytest.approx(max(bare, E12), abs=1e-8)

    def test_bare_cavity_closed_form(self, reference_params):
        for theta in (30.0, 60.0, 80.0):
            geom = reference_params.geometry(theta)
            assert bare_cavity_at_angle(reference_params.cavity, geom) == pytest.approx(
                76.0 / math.cos(math.radians(theta)), rel=1e-10)

    def test_self_consistency(self, reference_params):
        geom = reference_params.geometry(65.0)
        for branch in Branch:
            e = branch_energy_at_angle(reference_params, Variant.FULL, geom, branch)
            k = k_of_angle_energy(geom, e)
            assert branch_energy_at_k(reference_params, Variant.FULL, k, branch) == pytest.approx(e, abs=1e-8)

    @pytest.mark.parametrize("theta", [50.0, 60.0, 72.5, 85.0])
    @pytest.mark.parametrize("variant", list(Variant))
    def test_idempotent_from_own_solution(self, reference_params, theta, variant):
        geom = reference_params.geometry(theta)
        for branch in Branch:
            e = branch_energy_at_angle(reference_params, variant, geom, branch)
            again = branch_energy_at_angle(reference_params, variant, geom, branch, guess=e)
            assert abs(again - e) < 1e-8

    def test_branches_straddle_transition(self, reference_params):
        for theta in np.linspace(40, 88, 25):
            geom = reference_params.geometry(theta)
            for variant in Variant:
                lp = branch_energy_at_angle(reference_params, variant, geom, "LP")
                up = branch_energy_at_angle(reference_params, variant, geom, "UP")
                assert lp < E12 < up

    def test_fixed_angle_splitting_exceeds_fixed_k(self, reference_params):
        rwa_min = 2 * 16.5
        for theta in np.linspace(40, 88, 25):
            geom = reference_params.geometry(theta)
            lp = branch_energy_at_angle(reference_params, Variant.NO_ANTIRES_NO_DIA, geom, "LP")
            up = branch_energy_at_angle(reference_params, Variant.NO_ANTIRES_NO_DIA, geom, "UP")
            assert up - lp > rwa_min

    def test_tabulated_and_parametric_agree(self, reference_params):
        table = table_from(reference_params.cavity, 1.2e-3, 4.8e-3, 20)
        tab = SystemParams(E12, table, reference_params.coupling)
        for theta in np.linspace(50, 70, 9):
            for variant in Variant:
                for branch in Branch:
                    a = branch_energy_at_angle(reference_params, variant, reference_params.geometry(theta), branch)
                    b = branch_energy_at_angle(tab, variant, tab.geometry(theta), branch)
                    assert abs(a - b) < 0.2


class TestCurve:
    def test_singleton_matches_scalar(self, reference_params):
        curve = dispersion_curve(reference_params, Variant.FULL, angles=[63.0])
        assert len(curve) == 2
        lp, up = curve.branch("LP")[0], curve.branch("UP")[0]
        geom = reference_params.geometry(63.0)
        assert lp.energy == branch_energy_at_angle(reference_params, Variant.FULL, geom, "LP")
        assert up.energy == branch_energy_at_angle(reference_params, Variant.FULL, geom, "UP")
        assert lp.k == k_of_angle_energy(geom, lp.energy)

    def test_k_grid(self, reference_params):
        curve = dispersion_curve(reference_params, Variant.NO_ANTIRES_NO_DIA, ks=[resonant_k(reference_params.cavity, E12)])
        energies = sorted(p.energy for p in curve.points)
        assert energies == pytest.approx(list(rwa_eigenvalues(E12, E12, 16.5)), rel=1e-10)

    def test_hundred_angles_monotone(self, reference_params):
        curve = dispersion_curve(reference_params, Variant.FULL, angles=np.linspace(55, 85, 100))
        assert not curve.partial
        for branch in Branch:
            energies = [p.energy for p in curve.branch(branch)]
            assert len(energies) == 100
            assert np.all(np.diff(energies) > 0)
        # far above resonance the upper branch rides just above the bare cavity
        geom = reference_params.geometry(85.0)
        assert curve.branch("UP")[-1].energy > bare_cavity_at_angle(reference_params.cavity, geom)

    def test_partial_curve_collects_errors(self, reference_params):
        table = table_from(reference_params.cavity, 1.2e-3, 4.8e-3, 20)
        tab = SystemParams(E12, table, reference_params.coupling)
        curve = dispersion_curve(tab, Variant.FULL, angles=[60.0, 88.0])
        assert curve.partial
        assert {e[0] for e in curve.errors} == {88.0}
        assert len(curve.branch("LP")) >= 1

    def test_parallel_matches_serial(self, reference_params):
        grid = list(np.linspace(50, 70, 6))
        serial = dispersion_curve(reference_params, Variant.FULL, angles=grid)
        parallel = dispersion_curve(reference_params, Variant.FULL, angles=grid, workers=2)
        assert [p.energy for p in serial.points] == [p.energy for p in parallel.points]

    def test_empty_grid(self, reference_params):
        with pytest.raises(EmptyInputError):
            dispersion_curve(reference_params, Variant.FULL, angles=[])

    def test_unsorted_grid(self, reference_params):
        with pytest.raises(ParameterError):
            dispersion_curve(reference_params, Variant.FULL, angles=[70, 60])


def test_point_needs_abscissa():
    with pytest.raises(ParameterError):
        DispersionPoint(150.0, "LP")
    with pytest.raises(ParameterError):
        DispersionPoint(150.0, "XP", theta_int=60.0)
