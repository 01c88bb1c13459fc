"""Static model data: the polynomial potential, the coupling function rho,
the spectral function sigma(omega) and the stationary profiles Sigma.

The coupling family is a finite sum of Gaussian-radial terms times constant
spinors,

    rho(x) = sum_k a_k exp(-|x|^2 / (2 w_k^2)) v_k,

whose Fourier transform ``rho_hat(xi) = sum_k a_k (2 pi)^{3/2} w_k^3
exp(-w_k^2 |xi|^2 / 2) v_k`` is known in closed form and depends on xi only
through |xi|.  Consequently every angular integral of ``rho_hat^dagger
alpha.xi rho_hat`` vanishes and sigma reduces to a one-dimensional radial
integral.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize

from .algebra import DiracAlgebra, build_algebra, projectors, symbol
from .grid import FourierGrid, apply_symbol

TWO_PI_32 = (2.0 * np.pi) ** 1.5
RADIAL_PREFACTOR = 1.0 / (2.0 * np.pi**2)  # (2 pi)^-3 * 4 pi


class QuadratureError(RuntimeError):
    """Raised when an integral misses its tolerance; carries the best estimate."""

    def __init__(self, msg, value=None, err=None):
        super().__init__(msg)
        self.value = value
        self.err = err


# ---------------------------------------------------------------------------
# potential
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class PolynomialPotential:
    """U(z) = sum_{k=1}^p u_k |z|^{2k}.

    ``validate=False`` admits coefficient lists that break the growth
    assumption (for instance all zeros, which switches the nonlinearity off).
    """

    u: tuple
    validate: bool = True

    def __post_init__(self):
        u = tuple(float(c) for c in self.u)
        object.__setattr__(self, "u", u)
        if not all(np.isfinite(u)):
            raise ValueError("potential coefficients must be finite")
        if self.validate:
            if len(u) < 2:
                raise ValueError("potential needs degree p >= 2")
            if u[-1] <= 0:
                raise ValueError("leading coefficient u_p must be positive")

    @classmethod
    def zero(cls) -> "PolynomialPotential":
        return cls((0.0, 0.0), validate=False)

    @property
    def p(self) -> int:
        return len(self.u)

    @property
    def is_zero(self) -> bool:
        return not any(self.u)

    def a(self, s):
        """Radial profile a(s) with U(z) = a(|z|^2)."""
        s = np.asarray(s, dtype=float)
        return sum(c * s ** (k + 1) for k, c in enumerate(self.u))

    def g(self, s):
        """g(s) = 2 a'(s) = sum_k 2k u_k s^{k-1}, so that F(z) = -g(|z|^2) z."""
        s = np.asarray(s, dtype=float)
        return sum(2.0 * (k + 1) * c * s**k for k, c in enumerate(self.u))

    def U(self, z):
        return self.a(np.abs(z) ** 2)

    def F(self, z):
        z = np.asarray(z, dtype=complex)
        return -self.g(np.abs(z) ** 2) * z


def evaluate_F(U: PolynomialPotential, z):
    return U.F(z)


# ---------------------------------------------------------------------------
# coupling
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class GaussianTerm:
    amplitude: complex
    width: float
    direction: tuple  # unit 4-spinor

    def __post_init__(self):
        v = np.asarray(self.direction, dtype=complex).ravel()
        if v.shape != (4,):
            raise ValueError("spinor direction must have 4 components")
        nv = np.linalg.norm(v)
        if nv == 0:
            raise ValueError("spinor direction must be nonzero")
        object.__setattr__(self, "direction", tuple(v / nv))
        object.__setattr__(self, "amplitude", complex(self.amplitude))
        if not (np.isfinite(self.width) and self.width > 0):
            raise ValueError("width must be positive")
        object.__setattr__(self, "width", float(self.width))

    @property
    def v(self) -> np.ndarray:
        return np.asarray(self.direction, dtype=complex)

    @property
    def hat_scale(self) -> complex:
        return self.amplitude * TWO_PI_32 * self.width**3


@dataclass(frozen=True)
class CouplingProfile:
    terms: tuple
    m: float = 1.0
    algebra: DiracAlgebra = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        terms = tuple(self.terms)
        object.__setattr__(self, "terms", terms)
        if not terms:
            raise ValueError("coupling needs at least one term")
        if self.m <= 0:
            raise ValueError("mass must be positive")
        if self.algebra is None:
            object.__setattr__(self, "algebra", build_algebra(self.m))
        # Gaussians of distinct widths are linearly independent, so rho == 0
        # iff the spinor sum vanishes within every width group.
        groups: dict = {}
        for t in terms:
            groups[t.width] = groups.get(t.width, 0) + t.amplitude * t.v
        if all(np.linalg.norm(s) <= 1e-14 * sum(abs(t.amplitude) for t in terms) for s in groups.values()):
            raise ValueError("coupling function vanishes identically")

    # constructors -------------------------------------------------------
    @classmethod
    def gaussian(cls, amplitude=np.pi ** (-0.75), width=1.0, direction=(1, 0, 0, 0), m=1.0):
        """Single Gaussian term; the defaults give the L2-normalised beta(+1) coupling."""
        return cls((GaussianTerm(amplitude, width, tuple(direction)),), m=m)

    @classmethod
    def from_dict(cls, d: dict, m: float) -> "CouplingProfile":
        terms = []
        for t in d:
            amp = t["amplitude"]
            amp = complex(*amp) if isinstance(amp, (list, tuple)) else complex(amp)
            direc = [complex(*c) if isinstance(c, (list, tuple)) else complex(c) for c in t["direction"]]
            terms.append(GaussianTerm(amp, float(t["width"]), tuple(direc)))
        return cls(tuple(terms), m=m)

    def descriptor(self) -> list:
        return [
            {
                "amplitude": [t.amplitude.real, t.amplitude.imag],
                "width": t.width,
                "direction": [[c.real, c.imag] for c in t.direction],
            }
            for t in self.terms
        ]

    # evaluation ---------------------------------------------------------
    @property
    def widths(self) -> np.ndarray:
        return np.array([t.width for t in self.terms])

    @property
    def _V(self) -> np.ndarray:
        return np.array([t.v for t in self.terms])  # (K, 4)

    @property
    def _c(self) -> np.ndarray:
        return np.array([t.hat_scale for t in self.terms])

    def radial_coeffs(self, r) -> np.ndarray:
        """f_k(r) = a_k (2 pi)^{3/2} w_k^3 exp(-w_k^2 r^2 / 2), shape (..., K)."""
        r = np.asarray(r, dtype=float)[..., None]
        return self._c * np.exp(-0.5 * (self.widths * r) ** 2)

    def hat_radial(self, r) -> np.ndarray:
        """rho_hat as a function of |xi|; shape (..., 4)."""
        return self.radial_coeffs(r) @ self._V

    def hat(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        return self.hat_radial(np.sqrt(np.sum(xi * xi, axis=-1)))

    def densities(self, r) -> tuple[np.ndarray, np.ndarray]:
        """(|rho_hat|^2, rho_hat^dagger beta rho_hat) at radius r; both real."""
        f = self.radial_coeffs(r)
        V = self._V
        gram = V.conj() @ V.T
        bgram = V.conj() @ self.algebra.beta @ V.T
        n = np.einsum("...k,kl,...l->...", f.conj(), gram, f)
        b = np.einsum("...k,kl,...l->...", f.conj(), bgram, f)
        return n.real, b.real

    def hat_grid(self, grid: FourierGrid) -> np.ndarray:
        out = np.zeros((4,) + grid.shape, dtype=complex)
        for t in self.terms:
            rad = t.hat_scale * np.exp(-0.5 * t.width**2 * grid.xi2)
            out += t.v[:, None, None, None] * rad
        return out

    def position_grid(self, grid: FourierGrid) -> np.ndarray:
        r2 = grid.r**2
        out = np.zeros((4,) + grid.shape, dtype=complex)
        for t in self.terms:
            out += (t.amplitude * t.v)[:, None, None, None] * np.exp(-0.5 * r2 / t.width**2)
        return out

    def norm2(self) -> float:
        """Exact ||rho||^2_{L2}."""
        tot = 0.0
        for s in self.terms:
            for t in self.terms:
                a = 0.5 / s.width**2 + 0.5 / t.width**2
                tot += np.conj(s.amplitude) * t.amplitude * np.vdot(s.v, t.v) * (np.pi / a) ** 1.5
        return float(np.real(tot))

    def hat_at_origin(self) -> np.ndarray:
        return self._c @ self._V

    def is_beta_eigen(self) -> int:
        """+1 / -1 when every term is a beta eigenvector of that sign, else 0."""
        beta = self.algebra.beta
        for sign in (1, -1):
            if all(np.allclose(beta @ t.v, sign * t.v, atol=1e-14) for t in self.terms):
                return sign
        return 0


def fourier_rho(rho: CouplingProfile, xi) -> np.ndarray:
    return rho.hat(xi)


# ---------------------------------------------------------------------------
# angular quadrature
# ---------------------------------------------------------------------------
def sphere_rule(n_theta: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Product Gauss-Legendre (in cos theta) x trapezoid (in phi) rule.

    Returns unit vectors ``(M, 3)`` and weights summing to 4 pi.  Integrates
    spherical polynomials of degree <= 2*n_theta - 1 exactly.
    """
    mu, wmu = np.polynomial.legendre.leggauss(n_theta)
    n_phi = 2 * n_theta
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    st = np.sqrt(1.0 - mu**2)
    dirs = np.stack(
        [
            (st[:, None] * np.cos(phi)[None, :]).ravel(),
            (st[:, None] * np.sin(phi)[None, :]).ravel(),
            np.repeat(mu, n_phi),
        ],
        axis=-1,
    )
    w = np.repeat(wmu, n_phi) * (2.0 * np.pi / n_phi)
    return dirs, w


def _as_hat_callable(rho) -> Callable:
    if isinstance(rho, CouplingProfile):
        return rho.hat
    return rho


# ---------------------------------------------------------------------------
# sigma(omega)
# ---------------------------------------------------------------------------
def _rmax(rho: CouplingProfile) -> float:
    # exp(-w^2 r^2) < 1e-300 beyond w r ~ 26.3
    return 30.0 / rho.widths.min()


def sigma(rho: CouplingProfile, omega: float, tol: float = 1e-10, method: str = "radial",
          n_theta: int = 12) -> tuple[float, float]:
    """sigma(omega) = (2 pi)^-3 int rho_hat^+ (omega + D) rho_hat / (omega^2 - |xi|^2 - m^2).

    ``method="radial"`` uses the analytic angular reduction valid for the
    Gaussian family; ``method="angular"`` integrates the full integrand over
    a product sphere rule at each radius and works for any callable rho_hat
    (pass ``m`` through a CouplingProfile or use ``sigma_general``).
    """
    m = rho.m
    if not (-m <= omega <= m):
        raise ValueError(f"omega={omega} outside [-m, m]")
    if method == "angular":
        return sigma_general(rho.hat, rho.algebra, omega, tol=tol, rmax=_rmax(rho), n_theta=n_theta)
    if method != "radial":
        raise ValueError(f"unknown method {method!r}")
    delta = m * m - omega * omega

    def integrand(r):
        n, b = rho.densities(r)
        ratio = r * r / (r * r + delta) if (r > 0 or delta > 0) else 1.0
        return -(omega * n + m * b) * ratio

    val, err = integrate.quad(integrand, 0.0, _rmax(rho), epsabs=tol / RADIAL_PREFACTOR / 10,
                              epsrel=0.0, limit=400)
    val *= RADIAL_PREFACTOR
    err *= RADIAL_PREFACTOR
    if not err <= tol:
        raise QuadratureError(f"sigma({omega}) quadrature error {err:.2e} > {tol:.2e}", val, err)
    return float(val), float(err)


def sigma_general(rho_hat: Callable, alg: DiracAlgebra, omega: float, tol: float = 1e-10,
                  rmax: float = 30.0, n_theta: int = 12) -> tuple[float, float]:
    """sigma(omega) for an arbitrary callable rho_hat(xi) with xi of shape (..., 3).

    The imaginary residue of the quadrature is folded into the returned error.
    """
    m = alg.m
    delta = m * m - omega * omega
    dirs, w = sphere_rule(n_theta)

    def ang(r, part):
        xi = r * dirs
        h = rho_hat(xi)
        sym = symbol(alg, xi)
        q = np.einsum("na,nab,nb->n", h.conj(), omega * np.eye(4) + sym.d, h)
        s = np.dot(w, q)
        ratio = r * r / (r * r + delta) if (r > 0 or delta > 0) else 1.0
        s = -s * ratio
        return s.real if part == 0 else s.imag

    pref = 1.0 / (2.0 * np.pi) ** 3
    eps = tol / pref / 10
    re, e1 = integrate.quad(ang, 0.0, rmax, args=(0,), epsabs=eps, epsrel=0.0, limit=400)
    im, e2 = integrate.quad(ang, 0.0, rmax, args=(1,), epsabs=eps, epsrel=0.0, limit=400)
    val = re * pref
    err = (e1 + e2) * pref + abs(im) * pref
    if not err <= tol:
        raise QuadratureError(f"sigma({omega}) quadrature error {err:.2e} > {tol:.2e}", val, err)
    return float(val), float(err)


@dataclass
class SigmaCurve:
    omega: np.ndarray
    sigma: np.ndarray
    err: np.ndarray
    zeros: list
    m: float

    @property
    def omega_sigma(self):
        return self.zeros[0] if len(self.zeros) == 1 else None

    def to_csv(self, path) -> None:
        from .io import write_csv

        write_csv(path, ["omega", "sigma", "err"], zip(self.omega, self.sigma, self.err))


def sigma_curve(rho: CouplingProfile, omegas: Sequence[float], tol: float = 1e-10,
                zero_tol: float | None = None) -> SigmaCurve:
    """Sample sigma on a sorted omega grid and locate its zeros.

    Interior zeros are bracketed by sign changes and refined with Brent's
    method; an endpoint counts as a zero when |sigma| there is below
    ``zero_tol`` (default ``10*tol``).  A grid point that is itself a zero is
    reported once.
    """
    om = np.asarray(omegas, dtype=float)
    if om.size and np.any(np.diff(om) <= 0):
        raise ValueError("omega grid must be strictly increasing")
    vals = np.empty(om.size)
    errs = np.empty(om.size)
    for i, w in enumerate(om):
        vals[i], errs[i] = sigma(rho, w, tol)
    zt = 10 * tol if zero_tol is None else zero_tol
    zeros: list = []
    for i, (w, v) in enumerate(zip(om, vals)):
        if abs(v) <= zt:
            zeros.append(float(w))
    for i in range(om.size - 1):
        a, b = vals[i], vals[i + 1]
        if abs(a) > zt and abs(b) > zt and np.sign(a) != np.sign(b):
            z = optimize.brentq(lambda w: sigma(rho, w, tol)[0], om[i], om[i + 1], xtol=1e-12)
            zeros.append(float(z))
    m = rho.m
    for end in (-m, m):
        if not np.any(np.isclose(om, end, atol=0)):
            v, _ = sigma(rho, end, tol)
            if abs(v) <= zt:
                zeros.append(float(end))
    zeros = sorted(set(zeros))
    return SigmaCurve(om, vals, errs, zeros, m)


# ---------------------------------------------------------------------------
# sphere masses
# ---------------------------------------------------------------------------
def sphere_mass(rho, lam_radius: float, alg: DiracAlgebra | None = None,
                n_theta: int = 16) -> tuple[float, float]:
    """Solid-angle integrals of |Pi_+ rho_hat|^2 and |Pi_- rho_hat|^2 on |xi| = lam_radius.

    ``rho`` is a CouplingProfile or any callable rho_hat(xi); a callable needs
    ``alg`` for the mass.
    """
    if lam_radius <= 0:
        raise ValueError("sphere radius must be positive")
    if alg is None:
        alg = rho.algebra
    h_fn = _as_hat_callable(rho)
    dirs, w = sphere_rule(n_theta)
    xi = lam_radius * dirs
    h = h_fn(xi)
    pp, pm = projectors(symbol(alg, xi))
    hp = np.einsum("nab,nb->na", pp, h)
    hm = np.einsum("nab,nb->na", pm, h)
    return float(np.dot(w, np.sum(np.abs(hp) ** 2, axis=1))), float(np.dot(w, np.sum(np.abs(hm) ** 2, axis=1)))


def sphere_mass_lower_bound(rho, lam_radius: float, alg: DiracAlgebra | None = None,
                            n_theta: int = 16) -> float:
    """int (1 - m/sqrt(lam^2+m^2)) |rho_hat|^2 dOmega over the sphere |xi| = lam."""
    if alg is None:
        alg = rho.algebra
    dirs, w = sphere_rule(n_theta)
    h = _as_hat_callable(rho)(lam_radius * dirs)
    fac = 1.0 - alg.m / np.sqrt(lam_radius**2 + alg.m**2)
    return float(fac * np.dot(w, np.sum(np.abs(h) ** 2, axis=1)))


# ---------------------------------------------------------------------------
# stationary profile
# ---------------------------------------------------------------------------
@dataclass
class SolitaryProfile:
    omega: float
    grid: FourierGrid
    sigma_hat: np.ndarray  # (4, N, N, N), momentum samples of Sigma(., omega)


def profile_sigma_hat(rho: CouplingProfile, omega: float, grid: FourierGrid,
                      rho_hat_grid: np.ndarray | None = None) -> SolitaryProfile:
    """Sample Sigma_hat(xi, omega) = (omega + D(xi)) rho_hat / (omega^2 - |xi|^2 - m^2)."""
    m = rho.m
    if abs(omega) > m:
        raise ValueError(f"|omega|={abs(omega)} > m: Sigma is not square integrable")
    if abs(omega) == m:
        h0 = rho.hat_at_origin()
        proj = 0.5 * (h0 + np.sign(omega) * (rho.algebra.beta @ h0))
        if np.linalg.norm(proj) > 1e-14 * max(1.0, np.linalg.norm(h0)):
            raise ValueError("omega = +-m requires the matching projection of rho_hat(0) to vanish")
    h = rho.hat_grid(grid) if rho_hat_grid is None else rho_hat_grid
    num = omega * h + apply_symbol(grid, m, h)
    den = omega * omega - grid.xi2 - m * m
    with np.errstate(invalid="ignore", divide="ignore"):
        out = num / den
    out[~np.isfinite(out)] = 0.0  # only the xi = 0 node at an admissible endpoint
    return SolitaryProfile(float(omega), grid, out)
