"""Material tensors, layers, unit cells, symmetry predicates, homotopy."""
import numpy as np
import pytest

from photonband import media
from photonband.errors import InvalidThickness, StructureMismatch


def test_a_layer_principal_axes():
    lay = media.a_layer(13, 6, 0.0, 0.25)
    assert np.allclose(lay.eps.inplane(), [[19, 0], [0, 7]])
    assert np.allclose(lay.mu.inplane(), np.eye(2))
    assert lay.kind == "A"
    assert lay.thickness == 0.25


def test_a_layer_zero_delta_isotropic():
    for phi in (0.0, 0.3, 1.2):
        lay = media.a_layer(4.0, 0.0, phi, 0.1)
        assert np.allclose(lay.eps.inplane(), 4.0 * np.eye(2))


def test_a_layer_rotated_off_diagonal():
    lay = media.a_layer(13 + 5j, 6, 0.8, 0.25)
    assert abs(lay.eps.xy - 6 * np.sin(1.6)) < 1e-14
    assert abs(lay.eps.yx - 6 * np.sin(1.6)) < 1e-14
    assert abs(lay.eps.xx - (13 + 5j + 6 * np.cos(1.6))) < 1e-14


def test_a_layer_rotation_preserves_eigenvalues():
    rng = np.random.default_rng(0)
    for _ in range(50):
        eps0 = complex(rng.uniform(1, 20), rng.uniform(-2, 2))
        delta = rng.uniform(0, 8)
        phi = rng.uniform(-np.pi, np.pi)
        ev = np.linalg.eigvals(media.a_layer(eps0, delta, phi, 0.5).eps.inplane())
        from oracles import match_multisets
        assert match_multisets(ev, [eps0 + delta, eps0 - delta]) < 1e-10


def test_f_layer_entries():
    lay = media.f_layer(1, 0.5, 0.5, 0.5)
    assert np.allclose(lay.eps.inplane(), [[1, 0.5j], [-0.5j, 1]])
    assert np.allclose(lay.mu.inplane(), [[1, 0.5j], [-0.5j, 1]])
    assert lay.kind == "F"


def test_f_layer_trivial_is_vacuum():
    lay = media.f_layer(1, 0, 0, 0.3)
    assert np.allclose(lay.eps.inplane(), np.eye(2))
    assert np.allclose(lay.mu.inplane(), np.eye(2))


def test_f_layer_hermitian_for_real_params():
    lay = media.f_layer(2.5, 0.7, -0.4, 0.2)
    assert lay.eps.is_hermitian(1e-14)
    assert lay.mu.is_hermitian(1e-14)


def test_layer_thickness_validation():
    with pytest.raises(InvalidThickness):
        media.a_layer(13, 6, 0, 0.0)
    with pytest.raises(InvalidThickness):
        media.f_layer(1, 0.5, 0.5, -0.1)


def test_afa_cell_structure():
    cell = media.afa_cell(13, 6, 0.0, 0.8, 0.5, 0.5, L=0.25)
    kinds = [lay.kind for lay in cell.layers]
    assert kinds == ["A", "F", "A"]
    assert [lay.thickness for lay in cell.layers] == [0.25, 0.5, 0.25]
    assert sum(lay.thickness for lay in cell.layers) == 1.0


def test_afa_cell_period_exact_for_awkward_L():
    for L in (0.1, 0.17, 0.333, 0.49):
        cell = media.afa_cell(13, 6, 0.0, 0.8, 0.5, 0.5, L=L)
        assert abs(sum(lay.thickness for lay in cell.layers) - 1.0) < 1e-15


def test_afa_cell_rejects_bad_L():
    for L in (0.0, 0.5, 0.7, -0.1):
        with pytest.raises(InvalidThickness):
            media.afa_cell(13, 6, 0.0, 0.8, 0.5, 0.5, L=L)


def test_unit_cell_boundaries_and_lookup():
    cell = media.afa_cell(13, 6, 0.0, 0.8, 0.5, 0.5, L=0.25)
    assert np.allclose(cell.boundaries(), [0, 0.25, 0.75, 1.0])
    assert cell.layer_at(0.1).kind == "A"
    assert cell.layer_at(0.5).kind == "F"
    assert cell.layer_at(0.9).kind == "A"
    assert cell.layer_at(1.1).kind == "A"  # periodic wrap


def test_unit_cell_thickness_sum_enforced():
    lay = media.a_layer(2, 0, 0, 0.4)
    with pytest.raises(InvalidThickness):
        media.UnitCell(layers=(lay, lay))  # sums to 0.8


def test_is_hermitian_examples():
    herm = media.afa_cell(13, 6, 0.0, 0.8, 0.5, 0.5)
    nonherm = media.afa_cell(13 + 5j, 6, 0.0, 0.8, 0.5, 0.5)
    assert media.is_hermitian(herm, 1e-12)
    assert not media.is_hermitian(nonherm, 1e-12)
    assert media.is_hermitian(media.vacuum_cell(), 1e-12)


def test_inversion_symmetry():
    assert media.has_inversion_symmetry(media.vacuum_cell(), 1e-12)
    sym = media.afa_cell(13, 6, 0.3, 0.3, 0.5, 0.5)
    asym = media.afa_cell(13, 6, 0.0, 0.8, 0.5, 0.5)
    assert media.has_inversion_symmetry(sym, 1e-12)
    assert not media.has_inversion_symmetry(asym, 1e-12)


def test_isotropic_cell_scalar_parts():
    cell = media.isotropic_cell(4.0, 1.5)
    parts = cell.layers[0].scalar_parts()
    assert parts == (4.0, 1.5)
    assert cell.is_isotropic()
    aniso = media.afa_cell(13, 6, 0.0, 0.8, 0.5, 0.5)
    assert not aniso.is_isotropic()


def test_homotopy_endpoints_exact():
    herm = media.afa_cell(13, 6, 0.0, 0.8, 0.5, 0.5)
    nonherm = media.afa_cell(13 + 5j, 6, 0.0, 0.8, 0.5, 0.5)
    fam = media.HomotopyFamily(cell_start=herm, cell_end=nonherm)
    c0 = media.homotopy_at(fam, 0.0)
    c1 = media.homotopy_at(fam, 1.0)
    for got, want in [(c0, herm), (c1, nonherm)]:
        for lg, lw in zip(got.layers, want.layers):
            assert lg.eps.isclose(lw.eps, 0.0)
            assert lg.mu.isclose(lw.mu, 0.0)


def test_homotopy_midpoint_linear():
    herm = media.afa_cell(13, 6, 0.0, 0.8, 0.5, 0.5)
    nonherm = media.afa_cell(13 + 5j, 6, 0.0, 0.8, 0.5, 0.5)
    fam = media.HomotopyFamily(cell_start=herm, cell_end=nonherm)
    mid = media.homotopy_at(fam, 0.5)
    first = mid.layers[0]
    assert abs(first.eps.xx - (19 + 2.5j)) < 1e-12
    assert first.kind == "A"
    assert abs(first.params["eps0"] - (13 + 2.5j)) < 1e-12


def test_homotopy_continuity_bound():
    herm = media.afa_cell(13, 6, 0.0, 0.8, 0.5, 0.5)
    nonherm = media.afa_cell(13 + 5j, 6, 0.0, 0.8, 0.5, 0.5)
    fam = media.HomotopyFamily(cell_start=herm, cell_end=nonherm)
    C = 5.0  # entrywise max difference of the endpoints
    t1, t2 = 0.3, 0.31
    a, b = media.homotopy_at(fam, t1), media.homotopy_at(fam, t2)
    for la, lb in zip(a.layers, b.layers):
        d = np.abs(la.eps.inplane() - lb.eps.inplane()).max()
        assert d <= C * abs(t1 - t2) + 1e-12


def test_homotopy_structure_mismatch():
    herm = media.afa_cell(13, 6, 0.0, 0.8, 0.5, 0.5, L=0.25)
    other = media.afa_cell(13, 6, 0.0, 0.8, 0.5, 0.5, L=0.3)
    with pytest.raises(StructureMismatch):
        media.HomotopyFamily(cell_start=herm, cell_end=other)
    with pytest.raises(StructureMismatch):
        media.HomotopyFamily(cell_start=herm, cell_end=media.vacuum_cell())
