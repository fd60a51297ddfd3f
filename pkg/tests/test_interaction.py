"""Tests for the transformed potentials and the current-coupling table."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lvphoton import dispersion as dp
from lvphoton import fock_space as fs
from lvphoton import interaction as ia
from lvphoton import kappa_tensor as kt


@pytest.fixture(scope="module")
def space():
    return fs.build_space(1)


@pytest.fixture(scope="module")
def frame():
    return dp.polarization_frame(np.array([0.0, 0.0, 1.0]))


def _table_distance(a, b):
    return max(
        abs(a.j1_pol1 - b.j1_pol1),
        abs(a.j2_pol1 - b.j2_pol1),
        abs(a.j1_pol2 - b.j1_pol2),
        abs(a.j2_pol2 - b.j2_pol2),
    )


def _e_minus(xx, yy, xy):
    m = np.zeros((3, 3))
    m[0, 0] = xx
    m[1, 1] = yy
    m[2, 2] = -(xx + yy)
    m[0, 1] = m[1, 0] = xy
    return m


def test_zero_kappa_identity_table():
    table = ia.vint_coefficients(kt.KappaSet())
    assert table.j1_pol1 == 1.0
    assert table.j2_pol2 == 1.0
    assert table.j2_pol1 == 0.0
    assert table.j1_pol2 == 0.0
    assert table.polarization_asymmetry == 0.0


def test_zero_kappa_potentials_unchanged(space, frame):
    a1_prime, a2_prime = ia.transformed_potentials(space, kt.KappaSet(), frame)
    assert np.array_equal(a1_prime, ia.transverse_potential(space, 1).toarray())
    assert np.array_equal(a2_prime, ia.transverse_potential(space, 2).toarray())


def test_z_axis_closed_forms():
    # diagonal anisotropy: pure rescaling, no cross coupling
    table = ia.vint_coefficients(kt.KappaSet(e_minus=_e_minus(0.02, -0.01, 0.0)))
    assert table.j1_pol1 == pytest.approx((4 - 0.02 - 0.01) / 4, abs=1e-15)
    assert table.j2_pol2 == pytest.approx((4 + 0.02 + 0.01) / 4, abs=1e-15)
    assert table.j2_pol1 == 0.0
    assert table.j1_pol2 == 0.0
    # off-diagonal only: cross coefficients -c/2 on both polarizations
    table = ia.vint_coefficients(kt.KappaSet(e_minus=_e_minus(0.0, 0.0, 0.012)))
    assert table.j2_pol1 == pytest.approx(-0.006, abs=1e-15)
    assert table.j1_pol2 == pytest.approx(-0.006, abs=1e-15)
    assert table.j1_pol1 == pytest.approx(1.0, abs=1e-15)
    assert table.j2_pol2 == pytest.approx(1.0, abs=1e-15)
    # mixed case with an isotropic part riding along
    e = _e_minus(0.011, -0.007, 0.004)
    table = ia.vint_coefficients(kt.KappaSet(e_minus=e, tr=0.002))
    assert table.j1_pol1 == pytest.approx((4 - 0.011 - 0.007) / 4, abs=1e-15)
    assert table.j2_pol2 == pytest.approx((4 + 0.011 + 0.007) / 4, abs=1e-15)
    assert table.j2_pol1 == pytest.approx(-0.002, abs=1e-15)
    assert table.polarization_asymmetry == pytest.approx(
        (e[1, 1] - e[0, 0]) / 2, abs=1e-15
    )


def test_isotropic_part_cancels():
    # kappa_tr alone is invisible to the coupling: it cancels in the
    # diagonal difference and the frame vectors are orthogonal
    table = ia.vint_coefficients(kt.KappaSet(tr=0.05))
    assert _table_distance(table, ia.vint_coefficients(kt.KappaSet())) == 0.0


@given(
    xx=st.floats(-0.01, 0.01),
    yy=st.floats(-0.01, 0.01),
    xy=st.floats(-0.01, 0.01),
    tr=st.floats(-0.01, 0.01),
)
@settings(max_examples=50, deadline=None)
def test_table_structure_property(xx, yy, xy, tr):
    table = ia.vint_coefficients(kt.KappaSet(e_minus=_e_minus(xx, yy, xy), tr=tr))
    assert table.j2_pol1 == table.j1_pol2
    assert table.polarization_asymmetry == pytest.approx((yy - xx) / 2, abs=1e-15)
    assert table.j1_pol1 + table.j2_pol2 == pytest.approx(2.0, abs=1e-15)


def test_mixing_deltas_match_bilinear_definitions(frame):
    rng = np.random.default_rng(71)
    kappas = kt.random_kappas(rng, 1e-2)
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    oblique = dp.polarization_frame(direction)
    for fr in (frame, oblique):
        emt = kappas.e_minus + np.eye(3) * kappas.tr
        want1 = 0.25 * (fr.eps1 @ emt @ fr.eps1 - fr.eps2 @ emt @ fr.eps2)
        want2 = 0.5 * (fr.eps1 @ emt @ fr.eps2)
        delta1, delta2 = ia.mixing_deltas(kappas, fr)
        assert delta1 == pytest.approx(want1, abs=1e-15)
        assert delta2 == pytest.approx(want2, abs=1e-15)


def test_general_direction_matches_frame_extraction(space):
    rng = np.random.default_rng(72)
    kappas = kt.random_kappas(rng, 1e-2)
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    fr = dp.polarization_frame(direction)
    first_1, first_2 = ia.first_order_potentials(space, kappas, fr)
    extracted = ia.extract_couplings(space, first_1, first_2)
    assert _table_distance(extracted, ia.vint_coefficients(kappas, direction)) < 1e-12


def test_transverse_potential_structure(space):
    for pol in (1, 2):
        a_plus = fs.annihilator(space, fs.ModeId(fs.PLUS_K, pol)).toarray()
        a_minus = fs.annihilator(space, fs.ModeId(fs.MINUS_K, pol)).toarray()
        want = (a_plus + a_minus.conj().T) / np.sqrt(2)
        got = ia.transverse_potential(space, pol).toarray()
        assert np.max(np.abs(got - want)) < 1e-15
    with pytest.raises(ValueError):
        ia.transverse_potential(space, 3)


def test_first_order_agreement_is_quadratic(space, frame):
    # on columns with transverse headroom the exact conjugation matches
    # the printed mixing to O(kappa^2); saturated columns carry O(kappa)
    # clipping and stay out of the comparison
    columns = ia.transverse_interior(space)
    assert columns.sum() == 16
    residuals = []
    for scale in (1e-2, 1e-3):
        kappas = kt.random_kappas(np.random.default_rng(11), scale)
        exact_1, exact_2 = ia.transformed_potentials(space, kappas, frame)
        first_1, first_2 = ia.first_order_potentials(space, kappas, frame)
        residuals.append(
            max(
                np.max(np.abs((exact_1 - first_1.toarray())[:, columns])),
                np.max(np.abs((exact_2 - first_2.toarray())[:, columns])),
            )
        )
    slope = np.log10(residuals[0] / residuals[1])
    assert 1.8 < slope < 2.2


def test_extraction_consistency(space, frame):
    rng = np.random.default_rng(5)
    # the first-order form reproduces the table identically
    kappas = kt.random_kappas(rng, 1e-2)
    first_1, first_2 = ia.first_order_potentials(space, kappas, frame)
    got = ia.extract_couplings(space, first_1, first_2)
    assert _table_distance(got, ia.vint_coefficients(kappas)) < 1e-12
    # the exact conjugation reproduces it on interior columns once the
    # quadratic corrections drop below the tolerance
    tiny = kt.random_kappas(rng, 1e-7)
    exact_1, exact_2 = ia.transformed_potentials(space, tiny, frame)
    got = ia.extract_couplings(
        space, exact_1, exact_2, ia.transverse_interior(space)
    )
    assert _table_distance(got, ia.vint_coefficients(tiny)) < 1e-12


def test_preconditions(space, frame):
    rng = np.random.default_rng(73)
    birefringent = kt.random_kappas(rng, 1e-3, birefringent=True)
    with pytest.raises(ValueError, match="e_plus"):
        ia.transformed_potentials(space, birefringent, frame)
    big = kt.KappaSet(e_minus=_e_minus(0.3, -0.1, 0.0))
    with pytest.raises(ValueError, match="perturbative"):
        ia.first_order_potentials(space, big, frame)
