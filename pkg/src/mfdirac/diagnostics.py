"""Charge, energy, the weighted local H^-eps metric, distance to the solitary
manifold, and windowed time-spectra of y(t)."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, signal

from .grid import FourierGrid, SpinorField, apply_symbol
from .model import CouplingProfile, PolynomialPotential
from .solitary import ManifoldAtlas


def charge(psi: SpinorField) -> float:
    """Q = int |psi|^2, by Parseval in momentum space or directly in position space."""
    g = psi.grid
    if psi.space == "momentum":
        return float(np.vdot(psi.data, psi.data).real / g.L**3)
    return float(np.vdot(psi.data, psi.data).real * g.dx**3)


def energy(psi: SpinorField, rho: CouplingProfile, U: PolynomialPotential,
           rho_hat: np.ndarray | None = None) -> float:
    """E = 1/2 <psi, D psi> - U(<rho, psi>).

    With F = -grad U this is the functional conserved by the evolution; the
    opposite sign of U is not (see tests/test_dynamics.py).
    """
    return kinetic(psi, rho.m) - float(U.U(overlap(psi, rho, rho_hat)))


def kinetic(psi: SpinorField, m: float) -> float:
    g = psi.grid
    h = psi.hat
    return float(0.5 * np.vdot(h, apply_symbol(g, m, h)).real / g.L**3)


def overlap(psi: SpinorField, rho: CouplingProfile, rho_hat: np.ndarray | None = None) -> complex:
    """y = <rho, psi> on the grid."""
    g = psi.grid
    h = rho.hat_grid(g) if rho_hat is None else rho_hat
    return complex(g.inner_hat(h, psi.hat))


# ---------------------------------------------------------------------------
# Y metric
# ---------------------------------------------------------------------------
def smoothstep_cutoff(r):
    """chi(r) = 1 for r <= 1, 0 for r >= 2, quintic smoothstep in between (C^2)."""
    r = np.asarray(r, dtype=float)
    s = np.clip(r - 1.0, 0.0, 1.0)
    return 1.0 - s**3 * (10.0 - 15.0 * s + 6.0 * s * s)


@dataclass(frozen=True)
class YMetricSpec:
    epsilon: float = 0.5
    Rmax: int | None = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    def resolve(self, grid: FourierGrid) -> int:
        rmax_box = int(np.floor(grid.L / 4.0))
        R = rmax_box if self.Rmax is None else int(self.Rmax)
        if R < 1:
            raise ValueError("box too small for a single cutoff ball")
        if 2 * R > grid.L / 2.0:
            raise ValueError(f"Rmax={R} needs a box with L >= {4 * R}")
        return R


class YMetric:
    """sum_{R=1}^{Rmax} 2^-R || chi(x/R) psi ||_{H^-eps} on a fixed grid.

    ``H^s`` norms use the multiplier ``(m^2 + |xi|^2)^{s/2}``.
    """

    def __init__(self, grid: FourierGrid, m: float, spec: YMetricSpec = YMetricSpec()):
        self.grid = grid
        self.m = float(m)
        self.spec = spec
        self.Rmax = spec.resolve(grid)
        self.weights = 2.0 ** -np.arange(1, self.Rmax + 1)
        self._mult = (self.m**2 + grid.xi2) ** (-spec.epsilon / 2.0)
        r = grid.r
        self._chi = [smoothstep_cutoff(r / R) for R in range(1, self.Rmax + 1)]

    def _pos(self, psi) -> np.ndarray:
        # a bare array is taken to be momentum samples
        if isinstance(psi, SpinorField):
            return psi.to_position().data
        return self.grid.ifft(psi)

    def local_hat(self, pos: np.ndarray, j: int) -> np.ndarray:
        """M (chi_R psi)^ for the j-th ball (R = j + 1)."""
        return self._mult * self.grid.fft(self._chi[j] * pos)

    def terms(self, psi) -> np.ndarray:
        """Per-ball norms ||chi(x/R) psi||_{H^-eps}, R = 1..Rmax."""
        pos = self._pos(psi)
        L3 = self.grid.L**3
        return np.array([np.sqrt(np.vdot(h, h).real / L3) for h in (self.local_hat(pos, j) for j in range(self.Rmax))])

    def norm(self, psi) -> float:
        return float(self.weights @ self.terms(psi))

    def truncation_bound(self, psi) -> float:
        """Bound on the omitted tail sum_{R > Rmax}: 2^-Rmax m^-eps ||psi||_{L2}."""
        q = charge(psi) if isinstance(psi, SpinorField) else np.vdot(psi, psi).real / self.grid.L**3
        return float(2.0 ** -self.Rmax * self.m ** -self.spec.epsilon * np.sqrt(q))


def ynorm(psi: SpinorField, spec: YMetricSpec = YMetricSpec(), m: float = 1.0,
          metric: YMetric | None = None) -> float:
    metric = metric if metric is not None else YMetric(psi.grid, m, spec)
    return metric.norm(psi)


# ---------------------------------------------------------------------------
# distance to S
# ---------------------------------------------------------------------------
@dataclass
class DistanceResult:
    d: float
    omega_star: float | None
    theta_star: float
    branch: int | None
    d_zero: float
    candidates: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"d": self.d, "omegaStar": self.omega_star, "thetaStar": self.theta_star,
                "branch": self.branch, "d_zero": self.d_zero}


class ManifoldDistance:
    """dist_Y(psi, S) over the atlas waves, their phases, and the zero wave.

    Per-ball quantities are expanded by sesquilinearity: for a candidate
    wave phi and phase theta,
    ``||chi_R (psi - e^{i theta} phi)||^2 = P_R - 2 Re(e^{-i theta} X_R) + Q_R``
    with ``X_R = <chi_R phi, chi_R psi>_{H^-eps}``.  theta is fixed in closed
    form as ``arg sum_R 2^-R X_R``.  Per-wave quantities ``Q_R`` are cached,
    so repeated calls on the same atlas only pay for psi.
    """

    def __init__(self, atlas: ManifoldAtlas, spec: YMetricSpec = YMetricSpec(),
                 grid: FourierGrid | None = None):
        self.atlas = atlas
        self.grid = grid or atlas.grid
        if self.grid is None:
            raise ValueError("distance needs a grid")
        self.metric = YMetric(self.grid, atlas.m, spec)
        self._wave_cache: dict = {}

    def _wave_terms(self, key, wave):
        # only the per-ball norms are cached; profiles are cheap to rebuild
        if key not in self._wave_cache:
            self._wave_cache[key] = self.metric.terms(wave.profile_hat) ** 2
        return wave.profile_hat, self._wave_cache[key]

    def _psi_terms(self, psi: SpinorField):
        pos = psi.to_position().data
        L3 = self.grid.L**3
        P = np.empty(self.metric.Rmax)
        G = []
        for j in range(self.metric.Rmax):
            h = self.metric.local_hat(pos, j)
            P[j] = np.vdot(h, h).real / L3
            # X_R = <phi, chi_R M^2 chi_R psi>, evaluated against phi_hat
            g = self.grid.fft(self.metric._chi[j] * self.grid.ifft(self.metric._mult * h))
            G.append(g)
        return P, G

    def _evaluate(self, P, G, phi_hat, Q):
        L3 = self.grid.L**3
        X = np.array([np.vdot(phi_hat, g) / L3 for g in G])
        w = self.metric.weights
        theta = float(np.angle(w @ X)) if np.any(X) else 0.0
        sq = P - 2.0 * np.real(np.exp(-1j * theta) * X) + Q
        return float(w @ np.sqrt(np.maximum(sq, 0.0))), theta

    def __call__(self, psi: SpinorField, refine: bool = True, tol: float = 1e-6) -> DistanceResult:
        P, G = self._psi_terms(psi)
        w = self.metric.weights
        d_zero = float(w @ np.sqrt(P))
        best = (d_zero, None, 0.0, None)
        cands = []
        for i, b, om, s, r in self.atlas.entries():
            phi_hat, Q = self._wave_terms((i, b), self.atlas.wave(i, b, grid=self.grid))
            d, th = self._evaluate(P, G, phi_hat, Q)
            cands.append((om, b, d, th))
            if d < best[0]:
                best = (d, om, th, b)
        if refine and best[1] is not None:
            best = self._refine(P, G, best, tol)
        d, om, th, b = best
        if om is not None:
            # the expansion loses about half the digits near zero; recompute directly
            wave = self.atlas.wave_at(om, b, phase=th, grid=self.grid)
            d = self.metric.norm(psi.hat - wave.profile_hat)
        return DistanceResult(d, om, th, b, d_zero, cands)

    def _refine(self, P, G, best, tol):
        d0, om0, th0, b = best
        grid_om = self.atlas.omega_grid
        i = int(np.argmin(np.abs(grid_om - om0)))
        lo = grid_om[max(i - 1, 0)]
        hi = grid_om[min(i + 1, grid_om.size - 1)]
        if hi <= lo:
            return best

        def f(om):
            try:
                wave = self.atlas.wave_at(float(om), b, grid=self.grid)
            except ValueError:
                return np.inf, 0.0
            Q = self.metric.terms(wave.profile_hat) ** 2
            return self._evaluate(P, G, wave.profile_hat, Q)

        res = optimize.minimize_scalar(lambda om: f(om)[0], bounds=(lo, hi),
                                       method="bounded", options={"xatol": tol})
        d, th = f(res.x)
        if d < d0:
            return (d, float(res.x), th, b)
        return best


def dist_to_manifold(psi: SpinorField, atlas: ManifoldAtlas, spec: YMetricSpec = YMetricSpec(),
                     refine: bool = True) -> tuple[float, float | None, float]:
    r = ManifoldDistance(atlas, spec, psi.grid)(psi, refine=refine)
    return r.d, r.omega_star, r.theta_star


# ---------------------------------------------------------------------------
# time spectrum
# ---------------------------------------------------------------------------
@dataclass
class SpectrumReport:
    window: tuple
    omega: np.ndarray
    density: np.ndarray
    mass_inside: float
    mass_outside: float
    total: float
    peak_omega: float
    peak_width: float
    gap: tuple

    def as_dict(self) -> dict:
        return {
            "window": list(self.window),
            "massInsideGap": self.mass_inside,
            "massOutsideGap": self.mass_outside,
            "total": self.total,
            "outsideFraction": self.mass_outside / self.total if self.total > 0 else 0.0,
            "peakOmega": self.peak_omega,
            "peakWidth": self.peak_width,
            "gap": list(self.gap),
            "peakCount": self.peak_count(),
        }

    def peak_count(self, rel: float = 0.1) -> int:
        """Local maxima of the density above ``rel`` times the global maximum.

        Hann side lobes sit about 31 dB below the main lobe, so the default
        threshold counts only genuine tones.
        """
        order = np.argsort(self.omega)
        d = self.density[order]
        if d.size == 0 or d.max() <= 0:
            return 0
        # pad with zeros so a maximum on the array edge is still found
        peaks, _ = signal.find_peaks(np.concatenate(([0.0], d, [0.0])), height=rel * d.max())
        return int(peaks.size)

    def to_csv(self, path):
        from .io import write_csv

        order = np.argsort(self.omega)
        return write_csv(path, ["omega", "density"], zip(self.omega[order], self.density[order]))


def time_spectrum(t, y, window, gap_delta: float = 0.1, m: float = 1.0, pad: int = 8,
                  min_samples: int = 256) -> SpectrumReport:
    """Hann-windowed discrete spectrum of y on ``window = (t0, t1)``.

    The frequency axis follows y ~ exp(-i omega t), so a solitary orbit
    peaks at its own omega.  ``density[k] = |Y_k|^2 / M`` on the zero-padded
    grid of length M, which makes ``sum(density)`` equal the windowed energy
    ``sum |w_n y_n|^2`` exactly; masses split at ``|omega| <= m + gap_delta``.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=complex)
    t0, t1 = window
    if t0 < t[0] - 1e-9 or t1 > t[-1] + 1e-9 or t1 <= t0:
        raise ValueError("window outside the recorded horizon")
    sel = (t >= t0 - 1e-9) & (t <= t1 + 1e-9)
    ys = y[sel]
    n = ys.size
    if n < min_samples:
        raise ValueError(f"window holds {n} samples, need >= {min_samples}")
    dt = float(np.mean(np.diff(t[sel])))
    win = signal.get_window("hann", n)
    xw = win * ys
    M = pad * n
    Y = np.fft.ifft(xw, n=M) * M  # sum_n x_n exp(+i omega_k n dt)
    omega = 2.0 * np.pi * np.fft.fftfreq(M, d=dt)
    dens = np.abs(Y) ** 2 / M
    total = float(np.sum(np.abs(xw) ** 2))
    edge = m + gap_delta
    inside = np.abs(omega) <= edge
    m_in = float(np.sum(dens[inside]))
    m_out = float(np.sum(dens[~inside]))
    k = int(np.argmax(dens))
    peak = float(omega[k])
    # parabolic refinement of the peak on the padded grid
    if M > 2:
        a, b, c = dens[(k - 1) % M], dens[k], dens[(k + 1) % M]
        den = a - 2 * b + c
        if den < 0:
            peak += 0.5 * (a - c) / den * (omega[1] - omega[0])
    half = dens[k] / 2.0
    j0 = k
    while dens[(j0 - 1) % M] > half and (k - j0) < M // 2:
        j0 -= 1
    j1 = k
    while dens[(j1 + 1) % M] > half and (j1 - k) < M // 2:
        j1 += 1
    width = float((j1 - j0 + 1) * (omega[1] - omega[0]))
    return SpectrumReport((float(t0), float(t1)), omega, dens, m_in, m_out, total, peak, width,
                          (-edge, edge))
