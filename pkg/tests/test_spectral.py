import numpy as np
import pytest

from pulse_cns import Grid, ScalarField, lp_norm, spectral_derivative
from pulse_cns import spectral as sp
from pulse_cns.samples import random_scalar, random_vector


def sin_field(grid, axis=0):
    x = grid.x[axis]
    return ScalarField(grid, np.sin(2 * np.pi * x / grid.length))


@pytest.mark.parametrize("length", [1.0, 2.5])
def test_laplacian_eigenfunction(length):
    g = Grid(16, length)
    f = sin_field(g)
    lap = spectral_derivative(f, "laplacian")
    expected = -((2 * np.pi / length) ** 2) * f.values
    assert np.abs(lap.values - expected).max() < 1e-11


def test_div_curl_identity(grid32, rng):
    v = random_vector(grid32, rng)
    dc = spectral_derivative(spectral_derivative(v, "curl"), "div")
    scale = np.abs(v.values).max()
    assert np.abs(dc.values).max() / scale < 1e-12


def test_curl_grad_identity(grid32, rng):
    f = random_scalar(grid32, rng)
    cg = spectral_derivative(spectral_derivative(f, "grad"), "curl")
    assert np.abs(cg.values).max() < 1e-12


def test_inverse_laplacian_pair(grid32, rng):
    # laplacian of the (-lap)^-1 solve returns the negated mean-removed field
    f = random_scalar(grid32, rng, zero_mean=True)
    out = spectral_derivative(spectral_derivative(f, "inv_laplacian"), "laplacian")
    assert np.abs(out.values + f.values).max() < 1e-12
    # zero-mean output
    inv = spectral_derivative(f, "inv_laplacian")
    assert abs(inv.values.mean()) < 1e-14


def test_grad_inv_laplacian_divergence(grid32, rng):
    f = random_scalar(grid32, rng, zero_mean=True)
    v = spectral_derivative(f, "grad_inv_laplacian")
    d = spectral_derivative(v, "div")
    assert np.abs(d.values + f.values).max() < 1e-11


def test_unknown_kind_rejected(grid16):
    with pytest.raises(ValueError):
        spectral_derivative(ScalarField.zeros(grid16), "hessian")


def test_nonfinite_rejected(grid16):
    f = ScalarField.zeros(grid16)
    f.values[0, 0, 0] = np.inf  # bypass constructor validation
    with pytest.raises(ValueError):
        spectral_derivative(f, "laplacian")


def test_lp_norm_constant_field():
    g = Grid(16, 2.0)  # volume 8
    f = ScalarField.constant(g, -3.0)
    assert lp_norm(f, 2) == pytest.approx(3.0 * np.sqrt(8.0), rel=1e-14)
    assert lp_norm(f, np.inf) == pytest.approx(3.0)
    assert lp_norm(f, 1) == pytest.approx(3.0 * 8.0, rel=1e-14)


def test_lp_norm_sine_closed_form():
    # integral of sin^2 over one period is 1/2
    g = Grid(64, 1.0)
    f = sin_field(g)
    assert lp_norm(f, 2) == pytest.approx(1.0 / np.sqrt(2.0), abs=1e-12)


def test_lp_norm_homogeneous(grid16, rng):
    f = random_scalar(grid16, rng)
    for p in (1.0, 2.0, 3.5, np.inf):
        assert lp_norm(ScalarField(grid16, 4.5 * f.values), p) == pytest.approx(
            4.5 * lp_norm(f, p), rel=1e-13)


def test_lp_norm_rejects_bad_p(grid16):
    with pytest.raises(ValueError):
        lp_norm(ScalarField.zeros(grid16), 0.5)


def test_vector_norm_uses_euclidean_magnitude(grid16):
    vals = np.zeros((3, 16, 16, 16))
    vals[0] = 3.0
    vals[1] = 4.0
    from pulse_cns import VectorField

    v = VectorField(grid16, vals)
    assert lp_norm(v, np.inf) == pytest.approx(5.0)


def test_parseval(grid32, rng):
    f = random_scalar(grid32, rng, zero_mean=False)
    quad = lp_norm(f, 2) ** 2
    spec = sp.parseval_l2_sq(f)
    assert abs(quad - spec) / quad < 1e-10


def test_dealias_kills_high_modes(grid16):
    x = grid16.x[0]
    high = ScalarField(grid16, np.cos(2 * np.pi * 7 * x))  # |k| = 7 > 16/3
    out = sp.dealias(high)
    assert np.abs(out.values).max() < 1e-13
    low = ScalarField(grid16, np.cos(2 * np.pi * 3 * x))
    out = sp.dealias(low)
    assert np.abs(out.values - low.values).max() < 1e-13
