import numpy as np
import pytest

from pulse_cns import Grid, ScalarField, VectorField


def test_grid_rejects_bad_sizes():
    for n in (4, 6, 12, 20, 33):
        with pytest.raises(ValueError):
            Grid(n)
    with pytest.raises(ValueError):
        Grid(16, 0.0)
    with pytest.raises(ValueError):
        Grid(16, -1.0)


def test_grid_basic_geometry():
    g = Grid(16, 2.0)
    assert g.dx == 0.125
    assert g.cell_volume == pytest.approx(0.125**3)
    assert g.nyquist == pytest.approx(np.pi * 16 / 2.0)


def test_scalar_field_validation(grid16):
    with pytest.raises(ValueError):
        ScalarField(grid16, np.zeros((8, 8, 8)))
    bad = np.zeros((16, 16, 16))
    bad[0, 0, 0] = np.nan
    with pytest.raises(ValueError):
        ScalarField(grid16, bad)
    f = ScalarField.zeros(grid16)
    assert f.values.shape == (16, 16, 16)


def test_vector_field_requires_shared_grid(grid16):
    other = Grid(32)
    cx = ScalarField.zeros(grid16)
    cy = ScalarField.zeros(grid16)
    cz = ScalarField.zeros(other)
    with pytest.raises(ValueError):
        VectorField.from_components(cx, cy, cz)
    v = VectorField.from_components(cx, cy, cx.copy())
    assert v.values.shape == (3, 16, 16, 16)


def test_dealias_mask_radius(grid16):
    KX, KY, KZ = grid16._kint
    kmag = np.sqrt(KX**2 + KY**2 + KZ**2)
    m = grid16.dealias_mask
    assert m[kmag <= 16 / 3.0].all()
    assert not m[kmag > 16 / 3.0].any()


def test_spectral_weights_count_modes(grid16):
    # weighted mode count equals the full n^3 spectrum
    assert grid16.spectral_weights.sum() == pytest.approx(16**3)
