import numpy as np
import pytest

from mfdirac.algebra import build_algebra, symbol
from mfdirac.grid import DiracModes, FourierGrid, SpinorField, apply_symbol


def random_field(grid, rng):
    return rng.normal(size=(4,) + grid.shape) + 1j * rng.normal(size=(4,) + grid.shape)


@pytest.mark.parametrize("N", [7, 6, 9, 0, 10.5])
def test_rejects_bad_sizes(N):
    with pytest.raises(ValueError):
        FourierGrid(N, 10.0)


def test_rejects_bad_length():
    with pytest.raises(ValueError):
        FourierGrid(16, -1.0)


def test_resolution_warning():
    with pytest.warns(UserWarning):
        FourierGrid(8, 32.0).check_resolution(1.0)
    with pytest.raises(ValueError):
        FourierGrid(8, 32.0).check_resolution(1.0, strict=True)
    assert FourierGrid(64, 32.0).check_resolution(1.0) == pytest.approx(2 * np.pi)


def test_origin_at_index_zero(grid32):
    x, y, z = grid32.x
    assert x[0, 0, 0] == 0 and grid32.r[0, 0, 0] == 0
    assert grid32.xi2[0, 0, 0] == 0


def test_fft_roundtrip_and_parseval(grid32, rng):
    f = random_field(grid32, rng)
    fh = grid32.fft(f)
    assert np.allclose(grid32.ifft(fh), f, atol=1e-12)
    assert grid32.inner_hat(fh, fh).real == pytest.approx(grid32.inner_pos(f, f).real, rel=1e-12)


def test_gaussian_transform_matches_continuum():
    # exp(-|x|^2/2) has transform (2 pi)^{3/2} exp(-|xi|^2/2); both tails resolved
    grid = FourierGrid(48, 16.0)
    g = np.exp(-grid.r**2 / 2)
    exact = (2 * np.pi) ** 1.5 * np.exp(-grid.xi2 / 2)
    assert np.max(np.abs(grid.fft(g) - exact)) < 1e-10


def test_spinor_field_spaces(grid32, rng):
    psi = SpinorField(grid32, random_field(grid32, rng), "position")
    back = psi.to_momentum().to_position()
    assert np.allclose(back.data, psi.data)
    s = psi + 2.0 * psi.to_momentum()
    assert s.space == "position" and np.allclose(s.data, 3 * psi.data)
    with pytest.raises(ValueError):
        SpinorField(grid32, np.zeros((4, 8, 8, 8)))
    with pytest.raises(ValueError):
        SpinorField(grid32, psi.data, "fourier")


def test_shells_cover_lattice(grid32):
    radii, inv = grid32.shells
    assert np.allclose(radii[inv].reshape(grid32.shape), np.sqrt(grid32.xi2))
    assert radii[0] == 0 and np.all(np.diff(radii) > 0)


def test_modes_unitary_and_diagonalizing(grid32, rng):
    m = 1.3
    modes = DiracModes(grid32, m)
    f = random_field(grid32, rng)
    e = modes.to_eig(f)
    assert np.allclose(modes.from_eig(e), f, atol=1e-13)
    assert np.vdot(e, e).real == pytest.approx(np.vdot(f, f).real, rel=1e-13)
    # D acts as +lam on the first two components and -lam on the last two
    De = modes.to_eig(apply_symbol(grid32, m, f))
    lam = modes.lam
    assert np.allclose(De[:2], lam * e[:2], atol=1e-11)
    assert np.allclose(De[2:], -lam * e[2:], atol=1e-11)


def test_apply_symbol_matches_dense(grid32, rng):
    m = 0.7
    f = random_field(grid32, rng)
    kx, ky, kz = grid32.xi
    xi = np.stack(np.broadcast_arrays(kx, ky, kz), axis=-1)
    d = symbol(build_algebra(m), xi).d
    dense = np.einsum("...ab,b...->a...", d, f)
    assert np.allclose(apply_symbol(grid32, m, f), dense, atol=1e-12)
