"""Solitary waves phi_omega = C * Sigma(., omega) and the atlas of the solitary manifold.

Writing r = |C|^2, the amplitude condition becomes the scalar polynomial
equation ``sigma * g(r * sigma^2) = -1`` with ``g(s) = sum_k 2k u_k s^{k-1}``;
the phase of C is free (the U(1) orbit).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .grid import FourierGrid, apply_symbol
from .model import (
    RADIAL_PREFACTOR,
    CouplingProfile,
    PolynomialPotential,
    QuadratureError,
    SigmaCurve,
    SolitaryProfile,
    profile_sigma_hat,
    sigma,
    sigma_curve,
    sphere_mass,
)

logger = logging.getLogger(__name__)

NEAR_SINGULAR = 1e-6


def amplitude_poly(U: PolynomialPotential, sigma_value: float) -> np.ndarray:
    """Ascending coefficients of P(r) = 1 + sigma * g(r sigma^2)."""
    s2 = sigma_value * sigma_value
    c = np.array([2.0 * (k + 1) * uk * sigma_value * s2**k for k, uk in enumerate(U.u)])
    c[0] += 1.0
    return c


def amplitude_roots(U: PolynomialPotential, sigma_value: float, root_tol: float = 1e-12) -> np.ndarray:
    """All r > 0 with sigma * g(r sigma^2) = -1, ascending.

    Roots come from the companion matrix of the degree p-1 polynomial in r
    and are Newton-polished; complex and non-positive candidates are dropped,
    and a candidate that cannot be certified to ``root_tol`` is dropped with
    a warning.
    """
    if sigma_value == 0.0 or U.is_zero:
        return np.empty(0)
    c = amplitude_poly(U, sigma_value)
    while c.size > 1 and c[-1] == 0.0:
        c = c[:-1]
    if c.size < 2:
        return np.empty(0)
    cand = np.polynomial.polynomial.polyroots(c)
    dc = np.polynomial.polynomial.polyder(c)
    out = []
    for z in cand:
        if abs(z.imag) > 1e-6 * max(1.0, abs(z)) or z.real <= 0:
            continue
        r = z.real
        for _ in range(50):
            f = np.polynomial.polynomial.polyval(r, c)
            d = np.polynomial.polynomial.polyval(r, dc)
            if d == 0:
                break
            step = f / d
            r -= step
            if abs(step) <= 1e-16 * abs(r):
                break
        if r <= 0:
            continue
        res = abs(np.polynomial.polynomial.polyval(r, c))
        if res > root_tol:
            logger.warning("dropping uncertified root r=%g (residual %.2e)", r, res)
            continue
        out.append(r)
    out = np.sort(np.array(out, dtype=float))
    if out.size > 1:
        keep = np.concatenate([[True], np.diff(out) > 1e-12 * out[1:]])
        out = out[keep]
    return out


@dataclass
class SolitaryWave:
    omega: float
    C: complex
    grid: FourierGrid
    profile_hat: np.ndarray  # (4, N, N, N)
    charge: float
    sigma_value: float
    residual: float | None = None

    @property
    def field(self):
        from .grid import SpinorField

        return SpinorField(self.grid, self.profile_hat, "momentum")

    @property
    def y0(self) -> complex:
        """<rho, phi> in the continuum: C * sigma(omega)."""
        return self.C * self.sigma_value


def build_wave(omega: float, root_r: float, phase: float, profile: SolitaryProfile,
               sigma_value: float, U: PolynomialPotential, tol: float = 1e-10) -> SolitaryWave:
    if abs(profile.omega - omega) > 0:
        raise ValueError("profile was sampled at a different omega")
    if root_r <= 0:
        raise ValueError("amplitude root must be positive")
    C = np.sqrt(root_r) * np.exp(1j * phase)
    if abs(C - complex(U.F(C * sigma_value))) > tol * abs(C):
        raise ValueError("(omega, r, sigma) does not satisfy the amplitude condition")
    phi = C * profile.sigma_hat
    grid = profile.grid
    charge = float(np.vdot(phi, phi).real / grid.L**3)
    return SolitaryWave(float(omega), complex(C), grid, phi, charge, float(sigma_value))


def residual(wave: SolitaryWave, rho: CouplingProfile, U: PolynomialPotential,
             rho_hat_grid: np.ndarray | None = None) -> float:
    """Relative L2 residual of the stationary equation, evaluated in momentum space."""
    grid = wave.grid
    phi = wave.profile_hat
    nphi = np.sqrt(np.vdot(phi, phi).real)
    if nphi == 0:
        raise ValueError("relative residual undefined for the zero wave")
    h = rho.hat_grid(grid) if rho_hat_grid is None else rho_hat_grid
    y = grid.inner_hat(h, phi)
    r = apply_symbol(grid, rho.m, phi) - wave.omega * phi + h * complex(U.F(y))
    return float(np.sqrt(np.vdot(r, r).real) / nphi)


def profile_charge(rho: CouplingProfile, omega: float, tol: float = 1e-12) -> float:
    """Continuum ||Sigma(., omega)||^2 by radial quadrature to relative accuracy ``tol``."""
    m = rho.m

    def f(r):
        n, b = rho.densities(r)
        lam2 = r * r + m * m
        return r * r * ((omega**2 + lam2) * n + 2 * omega * m * b) / (omega**2 - lam2) ** 2

    v, _ = integrate.quad(f, 0.0, 30.0 / rho.widths.min(), epsabs=0.0, epsrel=tol, limit=400)
    return float(v * RADIAL_PREFACTOR)


@dataclass
class ManifoldAtlas:
    omega_grid: np.ndarray
    sigma: SigmaCurve
    branches: list  # per-omega arrays of roots r = |C|^2
    near_singular: np.ndarray
    rho: CouplingProfile
    U: PolynomialPotential
    grid: FourierGrid | None = None
    notes: dict = field(default_factory=dict)
    _rho_hat: np.ndarray | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.omega_grid)

    @property
    def m(self) -> float:
        return self.rho.m

    def entries(self):
        """Yield (index, branch, omega, sigma, r) for every stored root."""
        for i, (w, s, rs) in enumerate(zip(self.omega_grid, self.sigma.sigma, self.branches)):
            for b, r in enumerate(rs):
                yield i, b, float(w), float(s), float(r)

    def rho_hat(self, grid: FourierGrid) -> np.ndarray:
        if self._rho_hat is None or self._rho_hat.shape[1] != grid.N or grid != self.grid:
            self._rho_hat = self.rho.hat_grid(grid)
        return self._rho_hat

    def wave(self, index: int, branch: int = 0, phase: float = 0.0,
             grid: FourierGrid | None = None) -> SolitaryWave:
        grid = grid or self.grid
        if grid is None:
            raise ValueError("atlas has no grid; pass one explicitly")
        w = float(self.omega_grid[index])
        r = float(self.branches[index][branch])
        prof = profile_sigma_hat(self.rho, w, grid, self.rho_hat(grid))
        return build_wave(w, r, phase, prof, float(self.sigma.sigma[index]), self.U)

    def wave_at(self, omega: float, branch: int = 0, phase: float = 0.0,
                grid: FourierGrid | None = None, tol: float = 1e-12) -> SolitaryWave:
        """Wave at an arbitrary omega in (-m, m), not necessarily on the grid."""
        grid = grid or self.grid
        _check_interior(omega, self.m)
        s, _ = sigma(self.rho, omega, tol)
        roots = amplitude_roots(self.U, s)
        if branch >= roots.size:
            raise ValueError(f"no branch {branch} at omega={omega}")
        prof = profile_sigma_hat(self.rho, omega, grid, self.rho_hat(grid))
        return build_wave(omega, float(roots[branch]), phase, prof, s, self.U)

    def charges(self) -> list:
        out = []
        for i, rs in enumerate(self.branches):
            w = float(self.omega_grid[i])
            if self.grid is not None:
                out.append([self.wave(i, b).charge for b in range(len(rs))])
            else:
                q = profile_charge(self.rho, w) if len(rs) else 0.0
                out.append([float(r) * q for r in rs])
        return out

    def metadata(self) -> dict:
        return {
            "potential": list(self.U.u),
            "coupling": self.rho.descriptor(),
            "m": self.m,
            "grid": self.grid.spec() if self.grid is not None else None,
            "near_singular_threshold": NEAR_SINGULAR,
            "near_singular_omegas": [float(w) for w, f in zip(self.omega_grid, self.near_singular) if f],
            "sigma_zeros": list(self.sigma.zeros),
            "notes": self.notes,
        }

    def rows(self, residuals: bool = False) -> list:
        charges = self.charges()
        rows = []
        rho_hat = self.rho_hat(self.grid) if (residuals and self.grid is not None) else None
        for i, b, w, s, r in self.entries():
            row = [w, s, b, r, charges[i][b]]
            if residuals:
                row.append(residual(self.wave(i, b), self.rho, self.U, rho_hat))
            rows.append(row)
        return rows

    def to_csv(self, path, residuals: bool = False):
        from .io import write_csv

        header = ["omega", "sigma", "branchIndex", "rootR", "charge"]
        if residuals:
            header.append("residual")
        return write_csv(path, header, self.rows(residuals))


def _check_interior(omega: float, m: float) -> None:
    if not abs(omega) < m:
        raise ValueError(
            f"omega={omega} not in (-m, m): there are no nonzero solitary waves for |omega| > m "
            "and the endpoints are not supported"
        )


def build_atlas(rho: CouplingProfile, U: PolynomialPotential, m: float | None = None,
                omega_grid=(), grid: FourierGrid | None = None, tol: float = 1e-10,
                root_tol: float = 1e-12) -> ManifoldAtlas:
    m = rho.m if m is None else float(m)
    if m != rho.m:
        raise ValueError("mass mismatch between coupling and atlas request")
    om = np.asarray(omega_grid, dtype=float).ravel()
    for w in om:
        _check_interior(w, m)
    if om.size and np.any(np.diff(om) <= 0):
        raise ValueError("omega grid must be strictly increasing")
    vals = np.empty(om.size)
    errs = np.empty(om.size)
    notes: dict = {}
    for i, w in enumerate(om):
        try:
            vals[i], errs[i] = sigma(rho, w, tol)
        except QuadratureError as exc:
            vals[i], errs[i] = exc.value, exc.err
            notes[f"{w:.12g}"] = str(exc)
    zeros = []
    for i in range(om.size - 1):
        if np.sign(vals[i]) != np.sign(vals[i + 1]):
            zeros.append(float(0.5 * (om[i] + om[i + 1])))
    curve = SigmaCurve(om, vals, errs, zeros, m)
    branches = []
    near = np.abs(vals) < NEAR_SINGULAR
    for i, s in enumerate(vals):
        branches.append(np.empty(0) if near[i] else amplitude_roots(U, s, root_tol))
    return ManifoldAtlas(om, curve, branches, near, rho, U, grid, notes)


def check_assumptions(rho: CouplingProfile, U: PolynomialPotential, m: float | None = None,
                      lambda_probes=(), omega_grid=None, tol: float = 1e-10,
                      mass_floor: float = 1e-14) -> dict:
    """Report on the two coupling assumptions.

    Item 1 probes the sphere masses of rho_hat_+ and rho_hat_- at each
    radius in ``lambda_probes``; item 2 counts the zeros of sigma on
    [-m, m] using ``omega_grid`` (default 201 points including endpoints).
    """
    m = rho.m if m is None else float(m)
    probes = [float(x) for x in lambda_probes]
    masses = []
    for lam in probes:
        p, q = sphere_mass(rho, lam)
        masses.append({"lambda": lam, "plus": p, "minus": q, "ok": bool(p > mass_floor and q > mass_floor)})
    item1 = "untested" if not probes else ("pass" if all(e["ok"] for e in masses) else "fail")
    if omega_grid is None:
        omega_grid = np.linspace(-m, m, 201)
    curve = sigma_curve(rho, omega_grid, tol)
    nz = len(curve.zeros)
    item2 = "pass" if nz <= 1 else "fail"
    return {
        "m": m,
        "potential": list(U.u),
        "coupling": rho.descriptor(),
        "item1": {"status": item1, "probes": masses},
        "item2": {
            "status": item2,
            "zero_count": nz,
            "zeros": list(curve.zeros),
            "omega_sigma": curve.omega_sigma,
        },
        "pass": item1 != "fail" and item2 == "pass",
    }
