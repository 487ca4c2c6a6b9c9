"""Winding numbers, the spectral index, and the index-jump identity."""
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from photonband import media, presets, topology
from photonband.errors import (BasePointOnCurve, NoInterior, OnSpectrum,
                               RefinementBudgetExceeded, UnstableIndex)
from photonband.spectra import DispersionCurve


def synthetic_curve(fn, n=512, band=1):
    ks = np.linspace(-np.pi, np.pi, n + 1)
    return DispersionCurve(band, tuple((float(k), complex(fn(k)))
                                       for k in ks), True)


def test_circle_windings():
    wb = 1.5 - 0.5j
    plus = synthetic_curve(lambda k: wb + 0.4 * np.exp(1j * k))
    minus = synthetic_curve(lambda k: wb + 0.4 * np.exp(-1j * k))
    assert topology.winding_number(plus, wb).winding == 1
    assert topology.winding_number(minus, wb).winding == -1
    assert topology.winding_number(plus, wb + 1.0).winding == 0
    assert topology.winding_number(minus, wb - 2.0j).winding == 0


def test_two_lobe_windings():
    # omega(k) = e^{2ik} + 0.3 e^{ik}: winding 2 inside the inner lobe,
    # 1 in the outer sweep, 0 outside (closed-form reference curve)
    lobe = synthetic_curve(lambda k: np.exp(2j * k) + 0.3 * np.exp(1j * k))
    for p, expected in [(0j, 2), (0.5 + 0j, 2), (-0.8 + 0j, 2),
                        (1.0 + 0j, 1), (1.2 + 0j, 1),
                        (2.0 + 0j, 0), (-1.2 + 0j, 0)]:
        res = topology.winding_number(lobe, p)
        assert res.winding == expected
        assert isinstance(res.winding, int)


def test_winding_cyclic_invariance():
    lobe = synthetic_curve(lambda k: np.exp(2j * k) + 0.3 * np.exp(1j * k),
                           n=256)
    base = 0.4 + 0.1j
    ref = topology.winding_number(lobe, base).winding
    samples = list(lobe.samples[:-1])
    for shift in (17, 101, 200):
        rotated = samples[shift:] + samples[:shift]
        curve = DispersionCurve(1, tuple(rotated + [rotated[0]]), True)
        assert topology.winding_number(curve, base).winding == ref


def test_winding_refinement_invariance():
    wb = -0.3 + 0.7j
    for n in (32, 64, 128, 1024):
        c = synthetic_curve(lambda k: wb + 1.1 * np.exp(1j * k), n=n)
        assert topology.winding_number(c, wb).winding == 1


def test_winding_base_on_curve():
    c = synthetic_curve(lambda k: np.exp(1j * k))
    with pytest.raises(BasePointOnCurve):
        topology.winding_number(c, c.samples[10][1])


def test_winding_needs_refinement_without_cell():
    # 4 samples put the base phase steps at exactly pi/2; with no cell
    # behind the curve there is nothing to refine with
    c = synthetic_curve(lambda k: np.exp(1j * k), n=4)
    with pytest.raises(RefinementBudgetExceeded):
        topology.winding_number(c, 0j)


def test_winding_result_fields():
    wb = 0.2 - 0.1j
    c = synthetic_curve(lambda k: wb + 0.5 * np.exp(1j * k), n=128)
    res = topology.winding_number(c, wb + 0.2)
    assert res.base_point == wb + 0.2
    assert res.min_distance == pytest.approx(0.3, abs=1e-3)
    assert res.samples_used >= 128


def test_spectral_index_vacuum_off_axis():
    vac = media.vacuum_cell()
    for w in (1.0 + 0.3j, 2.0 - 0.7j, 0.5 + 1.0j):
        si = topology.spectral_index(vac, w)
        assert si.value == 0
        assert si.n_inside == 2 and si.n_outside == 2
        assert si.n_inside + si.n_outside == 4
        assert si.min_gap > 1e-3


def test_spectral_index_hermitian_gap(herm_cell):
    si = topology.spectral_index(herm_cell, 1.386 + 0j)
    assert si.value == 0
    assert si.min_gap > 0.01


def test_spectral_index_on_spectrum(herm_cell):
    with pytest.raises(OnSpectrum) as exc:
        topology.spectral_index(herm_cell, 0.5 + 0j)
    assert exc.value.min_gap <= 1e-8


def test_loop_centroid_index_matches_winding(nh_cell, nh_diagram):
    # bands 1 and 5 wind negatively (left edge modes), 2-4 positively
    expected_sign = {1: -1, 2: 1, 3: 1, 4: 1, 5: 1}
    expected_sign[5] = -1
    for curve in nh_diagram.curves:
        p = topology.interior_point(curve, cell=nh_cell)
        w = topology.winding_number(curve, p, cell=nh_cell).winding
        si = topology.spectral_index(nh_cell, p)
        assert abs(w) == 1
        assert si.value == w
        assert w == expected_sign[curve.band_index]


def test_interior_point_thin_loops(nh_cell, nh_diagram):
    # band 3 is a thin crescent whose bounding-box center lies outside;
    # the interior search must still land inside every loop
    for curve in nh_diagram.curves:
        p = topology.interior_point(curve, cell=nh_cell)
        assert topology.winding_number(curve, p, cell=nh_cell).winding != 0


def test_interior_point_degenerate_segment(herm_diagram):
    with pytest.raises(NoInterior):
        topology.interior_point(herm_diagram.curves[0])


def test_component_index_gap_point(herm_cell, herm_diagram):
    si = topology.component_index(herm_cell, 1.386 + 0j, herm_diagram)
    assert si.value == 0


def test_component_index_far_point(nh_cell, nh_diagram):
    si = topology.component_index(nh_cell, 4.0 - 1.5j, nh_diagram)
    assert si.value == 0


def test_component_index_inside_loop(nh_cell, nh_diagram):
    band2 = nh_diagram.curves[1]
    p = topology.interior_point(band2, cell=nh_cell)
    si = topology.component_index(nh_cell, p, nh_diagram)
    assert si.value == 1


def test_component_index_near_curve_raises(nh_cell, nh_diagram):
    p = nh_diagram.curves[0].samples[40][1]
    with pytest.raises(BasePointOnCurve):
        topology.component_index(nh_cell, p, nh_diagram)


def test_component_index_unstable_near_spectrum(nh_cell, nh_diagram):
    # a point midway between curve samples: far from the sampled points but
    # nearly on the true curve, so widened perturbations straddle the loop
    band3 = nh_diagram.curves[2]
    w1, w2 = band3.samples[100][1], band3.samples[101][1]
    mid = 0.5 * (w1 + w2)
    with pytest.raises((UnstableIndex, OnSpectrum)):
        topology.component_index(nh_cell, mid, nh_diagram, tol_curve=1e-3)


def test_verify_index_jump_bands(nh_cell, nh_diagram):
    outer = 4.0 - 1.5j
    for curve in nh_diagram.curves[:3]:
        inner = topology.interior_point(curve, cell=nh_cell)
        others = [c for c in nh_diagram.curves if c is not curve]
        rep = topology.verify_index_jump(nh_cell, curve, inner, outer,
                                         others=others)
        assert rep["passed"] is True
        assert rep["ind_outer"] == 0
        assert rep["jump"] == rep["winding_inner"]
        assert abs(rep["winding_inner"]) == 1


def test_verify_index_jump_hermitian_degenerate(herm_cell, herm_diagram):
    with pytest.raises(NoInterior):
        topology.verify_index_jump(herm_cell, herm_diagram.curves[0],
                                   0.4 + 0j, 4.0 - 1.5j)


def test_verify_index_jump_synthetic_two_lobe():
    lobe = synthetic_curve(lambda k: np.exp(2j * k) + 0.3 * np.exp(1j * k))
    rep = topology.verify_index_jump(None, lobe, 0j, 3.0 + 0j)
    assert rep["winding_inner"] == 2
    assert rep["winding_outer"] == 0
    assert rep["passed"] is None and rep["ind_inner"] is None


def test_homotopy_constant_family(herm_cell):
    fam = media.HomotopyFamily(cell_start=herm_cell, cell_end=herm_cell)
    track = topology.homotopy_track(fam, 1.386 + 0j, 8)
    assert len(track) == 8
    for t, g, si in track:
        assert si.value == 0
        assert g == 1.386 + 0j  # clearance stays large: no re-centering


def test_homotopy_full_family():
    fam = presets.example3_family()
    track = topology.homotopy_track(fam, 1.386 + 0j, 16)
    ts = [t for t, _, _ in track]
    assert ts[0] == 0.0 and ts[-1] == 1.0
    assert all(si.value == 0 for _, _, si in track)


def test_homotopy_reversed_family(herm_cell, nh_cell):
    fam = media.HomotopyFamily(cell_start=nh_cell, cell_end=herm_cell)
    track = topology.homotopy_track(fam, 1.386 + 0j, 16)
    assert all(si.value == 0 for _, _, si in track)
    # the linear tensor path is symmetric, and this witness never needs
    # re-centering, so both directions hold the same point throughout
    assert all(g == 1.386 + 0j for _, g, _ in track)


def test_homotopy_auto_witness():
    fam = presets.example3_family()
    track = topology.homotopy_track(fam, "auto", 8)
    assert all(si.value == 0 for _, _, si in track)
    # the auto witness starts inside the first Hermitian gap
    assert 1.2 < track[0][1].real < 1.6


def test_homotopy_validation(herm_cell):
    fam = media.HomotopyFamily(cell_start=herm_cell, cell_end=herm_cell)
    with pytest.raises(ValueError):
        topology.homotopy_track(fam, 1.386 + 0j, 1)


def test_assumption_check_hermitian(herm_cell):
    rep = topology.assumption_check(herm_cell, (0.0, 3.4, -0.5, 0.5))
    assert rep["passed"] is True
    assert rep["gap_found"]
    lo, hi = rep["gap"]
    assert 1.15 < lo < hi < 1.65
    assert rep["two_on_circle"] and rep["distinct"]


def test_assumption_check_vacuum():
    rep = topology.assumption_check(media.vacuum_cell(), (0.0, 6.0, -0.5, 0.5))
    assert rep["passed"] is False
    assert not rep["two_on_circle"]
    assert rep["on_circle_count"] == 4


def test_assumption_check_gapless():
    # a homogeneous dielectric has no gap at all: hypothesis (i) fails
    cell = media.isotropic_cell(2.0)
    rep = topology.assumption_check(cell, (0.0, 4.0, -0.5, 0.5))
    assert rep["passed"] is False
    assert not rep["gap_found"]


def test_assumption_check_requires_hermitian(nh_cell):
    with pytest.raises(ValueError):
        topology.assumption_check(nh_cell, (0.0, 3.4, -0.5, 0.5))


@settings(max_examples=12, deadline=None)
@given(st.floats(min_value=0.3, max_value=3.3),
       st.floats(min_value=-0.9, max_value=-0.05))
def test_index_perturbation_invariance(re, im):
    cell = presets.get_preset("example3-nonhermitian").cell
    w = complex(re, im)
    try:
        si = topology.spectral_index(cell, w)
    except OnSpectrum:
        assume(False)
    # lambda moduli move at most ~|dlambda/domega| * r; keep r well under
    # the observed gap so the counts cannot change
    r = min(1e-3, si.min_gap / 50.0)
    for j in range(8):
        d = r * np.exp(2j * math.pi * j / 8.0)
        si2 = topology.spectral_index(cell, w + d)
        assert si2.value == si.value
