import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mfdirac.model import PolynomialPotential, profile_sigma_hat, sigma
from mfdirac.solitary import (amplitude_poly, amplitude_roots, build_atlas, build_wave,
                              profile_charge, residual)


def certify(U, s, r):
    return abs(s * U.g(r * s * s) + 1.0)


@given(st.floats(-5.0, -1e-3))
def test_quartic_root_closed_form(s):
    U = PolynomialPotential((0.0, 1.0))
    r = amplitude_roots(U, s)
    assert r.size == 1
    assert r[0] == pytest.approx(-1.0 / (4 * s**3), rel=1e-12)
    assert certify(U, s, r[0]) <= 1e-12


@given(st.floats(1e-3, 5.0))
def test_no_roots_for_positive_sigma(s):
    assert amplitude_roots(PolynomialPotential((0.0, 1.0)), s).size == 0


def test_degenerate_inputs():
    assert amplitude_roots(PolynomialPotential((0.0, 1.0)), 0.0).size == 0
    assert amplitude_roots(PolynomialPotential.zero(), -1.0).size == 0


def test_amplitude_poly():
    c = amplitude_poly(PolynomialPotential((1.0, 2.0)), -0.5)
    # 1 + sigma*(2 u1 + 4 u2 r sigma^2)
    assert np.allclose(c, [1 - 1.0, 4 * 2.0 * -0.5 * 0.25])


def test_sextic_two_branches():
    # g(s) = 2 - 6 s + 6 s^2 meets 1/|sigma| = 1 twice
    U = PolynomialPotential((1.0, -1.5, 1.0))
    r = amplitude_roots(U, -1.0)
    assert r == pytest.approx([(3 - np.sqrt(3)) / 6, (3 + np.sqrt(3)) / 6], rel=1e-12)
    assert all(certify(U, -1.0, x) <= 1e-12 for x in r)


def test_quartic_sigma0_root(rho, quartic):
    s, _ = sigma(rho, 0.0)
    r = amplitude_roots(quartic, s)
    assert r[0] == pytest.approx(-1 / (4 * s**3), rel=1e-12)
    assert r[0] == pytest.approx(2.2015, abs=1e-3)


@pytest.fixture(scope="module")
def wave05(rho, quartic, grid64):
    s, _ = sigma(rho, 0.5)
    r = amplitude_roots(quartic, s)[0]
    return build_wave(0.5, r, 0.0, profile_sigma_hat(rho, 0.5, grid64), s, quartic)


def test_wave_residual_small(wave05, rho, quartic):
    assert residual(wave05, rho, quartic) <= 1e-3


def test_wrong_amplitude_is_detected(wave05, rho, quartic):
    with pytest.raises(ValueError):
        build_wave(0.5, 2.25 * abs(wave05.C) ** 2, 0.0, profile_sigma_hat(rho, 0.5, wave05.grid),
                   wave05.sigma_value, quartic)
    # bypass the consistency check by scaling the field directly
    from dataclasses import replace

    scaled = replace(wave05, profile_hat=1.5 * wave05.profile_hat, C=1.5 * wave05.C)
    assert residual(scaled, rho, quartic) > 0.05


def test_phase_invariance(wave05, rho, quartic):
    base = residual(wave05, rho, quartic)
    for th in (0.3, 2.0, -1.2):
        w = build_wave(0.5, abs(wave05.C) ** 2, th, profile_sigma_hat(rho, 0.5, wave05.grid),
                       wave05.sigma_value, quartic)
        assert residual(w, rho, quartic) == pytest.approx(base, abs=1e-12)
        assert w.charge == pytest.approx(wave05.charge, rel=1e-13)


def test_mirror_branch(rho, quartic, grid64):
    s, _ = sigma(rho, -0.5)
    r = amplitude_roots(quartic, s)
    assert r.size == 1
    w = build_wave(-0.5, r[0], 0.0, profile_sigma_hat(rho, -0.5, grid64), s, quartic)
    assert residual(w, rho, quartic) <= 1e-3


def test_grid_charge_matches_continuum(wave05, rho):
    q = abs(wave05.C) ** 2 * profile_charge(rho, 0.5)
    assert wave05.charge == pytest.approx(q, rel=1e-8)


def test_y0_is_c_sigma(wave05, rho, grid64):
    y = grid64.inner_hat(rho.hat_grid(grid64), wave05.profile_hat)
    assert y == pytest.approx(wave05.y0, abs=1e-10)


def test_zero_wave_residual_rejected(wave05, rho, quartic):
    from dataclasses import replace

    with pytest.raises(ValueError):
        residual(replace(wave05, profile_hat=0 * wave05.profile_hat), rho, quartic)


# atlas --------------------------------------------------------------------
@pytest.mark.parametrize("om", [1.0, -1.0, 1.5, -3.0])
def test_atlas_exclusion(rho, quartic, om):
    with pytest.raises(ValueError, match="no nonzero solitary"):
        build_atlas(rho, quartic, omega_grid=[0.0, om] if om > 0 else [om, 0.0])


def test_atlas_wave_at_exclusion(rho, quartic, grid64):
    atlas = build_atlas(rho, quartic, omega_grid=[0.0], grid=grid64)
    with pytest.raises(ValueError):
        atlas.wave_at(1.0)


def test_empty_atlas(rho, quartic, tmp_path):
    atlas = build_atlas(rho, quartic, omega_grid=[])
    assert len(atlas) == 0 and list(atlas.entries()) == []
    atlas.to_csv(tmp_path / "a.csv")
    assert (tmp_path / "a.csv").read_text() == "omega,sigma,branchIndex,rootR,charge\n"


def test_atlas_one_branch_per_point(rho, quartic):
    om = np.linspace(-0.95, 0.95, 39)
    atlas = build_atlas(rho, quartic, omega_grid=om)
    assert all(len(b) == 1 for b in atlas.branches)
    for i, b, w, s, r in atlas.entries():
        assert certify(quartic, s, r) <= 1e-12
    q = np.array([c[0] for c in atlas.charges()])
    # continuity: no jumps beyond the local slope scale
    dq = np.abs(np.diff(q))
    assert np.all(dq[1:] < 5 * dq[:-1] + 1e-3)


def test_near_singular_flag(rho, quartic):
    atlas = build_atlas(rho, quartic, omega_grid=[-1 + 1e-8, 0.0])
    assert atlas.near_singular.tolist() == [True, False]
    assert len(atlas.branches[0]) == 0
    assert atlas.metadata()["near_singular_omegas"] == [-1 + 1e-8]


def test_multiple_branches_distinct_charges(rho, grid64):
    U = PolynomialPotential((1.0, -1.5, 1.0))
    # find an omega where sigma makes g(r sigma^2) = 1/|sigma| hit the dip twice
    om = np.linspace(-0.9, 0.9, 19)
    atlas = build_atlas(rho, U, omega_grid=om, grid=grid64)
    multi = [i for i, b in enumerate(atlas.branches) if len(b) >= 2]
    assert multi
    i = multi[0]
    qs = [atlas.wave(i, b).charge for b in range(len(atlas.branches[i]))]
    assert len(set(np.round(qs, 10))) == len(qs)


def test_atlas_rows_and_metadata(rho, quartic, grid64):
    atlas = build_atlas(rho, quartic, omega_grid=[-0.5, 0.5], grid=grid64)
    rows = atlas.rows(residuals=True)
    assert len(rows) == 2 and all(r[5] <= 1e-3 for r in rows)
    meta = atlas.metadata()
    assert meta["potential"] == [0.0, 1.0] and meta["grid"] == {"N": 64, "L": 32.0}


def test_atlas_rejects_unsorted(rho, quartic):
    with pytest.raises(ValueError):
        build_atlas(rho, quartic, omega_grid=[0.5, 0.1])
