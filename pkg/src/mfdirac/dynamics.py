"""Time evolution by two independent engines.

Spectral engine
    Strang splitting on the periodic box.  The free flow is exact per mode;
    the rank-one flow ``i psi' = rho F(y)`` only moves psi along rho, so the
    scalar ``y = <rho, psi>`` obeys the closed ODE ``y' = -i ||rho||^2 F(y)``,
    integrated by RK4 together with ``J = int F(y) ds``.  The solver keeps
    its state in the per-mode eigenbasis of D(xi) (see ``DiracModes``), where
    the free flow is a diagonal phase.

Volterra engine
    Duhamel's formula projected on rho gives the scalar equation
    ``y(t) = Y0(t) - i int_0^t K(t-s) F(y(s)) ds`` with the memory kernel
    ``K(tau) = <rho, exp(-i D tau) rho>`` computed by continuum radial
    quadrature.  Product-trapezoidal marching, O(steps^2).
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from .grid import DiracModes, FourierGrid, SpinorField
from .model import RADIAL_PREFACTOR, CouplingProfile, PolynomialPotential, sigma
from .solitary import amplitude_roots, build_wave, profile_sigma_hat

logger = logging.getLogger(__name__)

MAX_VOLTERRA_STEPS = 20000


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------
def gaussian_packet_hat(grid: FourierGrid, amplitude=1.0, width=1.0, center=(0, 0, 0),
                        momentum=(0, 0, 0), direction=(1, 0, 0, 0)) -> np.ndarray:
    """Momentum samples of A exp(-|x-c|^2/(2w^2)) exp(i k.x) v (exact transform)."""
    v = np.asarray(direction, dtype=complex)
    v = v / np.linalg.norm(v)
    kx, ky, kz = grid.xi
    c = np.asarray(center, dtype=float)
    k = np.asarray(momentum, dtype=float)
    qx, qy, qz = kx - k[0], ky - k[1], kz - k[2]
    env = amplitude * (2 * np.pi) ** 1.5 * width**3 * np.exp(-0.5 * width**2 * (qx**2 + qy**2 + qz**2))
    env = env * np.exp(-1j * (qx * c[0] + qy * c[1] + qz * c[2]))
    return v[:, None, None, None] * env


def smooth_noise_hat(grid: FourierGrid, seed: int, m: float = 1.0, n_packets: int = 8,
                     radius: float = 3.0, kmax: float = 2.0, band: float = 4.0) -> np.ndarray:
    """Seeded localized random field with momentum support |xi| <= band*m.

    A sum of unit-width Gaussian packets with random centres (|c| <= radius),
    random carrier momenta (|k| <= kmax) and random spinors, multiplied in
    momentum space by the taper (1 - |xi|^2/(band m)^2)^2.  The field is
    defined in the continuum, so different grids sample the same function.
    """
    rng = np.random.default_rng(seed)
    out = np.zeros((4,) + grid.shape, dtype=complex)
    for _ in range(n_packets):
        c = _ball(rng, radius)
        k = _ball(rng, kmax)
        v = rng.normal(size=4) + 1j * rng.normal(size=4)
        a = rng.normal() + 1j * rng.normal()
        out += gaussian_packet_hat(grid, a, 1.0, c, k, v)
    kb2 = (band * m) ** 2
    taper = np.where(grid.xi2 < kb2, (1.0 - grid.xi2 / kb2) ** 2, 0.0)
    return out * taper


def _ball(rng, radius):
    d = rng.normal(size=3)
    d /= np.linalg.norm(d)
    return d * radius * rng.uniform() ** (1.0 / 3.0)


def solitary_hat(grid, rho, U, omega, branch=0, phase=0.0, tol=1e-12):
    s, _ = sigma(rho, omega, tol)
    roots = amplitude_roots(U, s)
    if branch >= roots.size:
        raise ValueError(f"no solitary branch {branch} at omega={omega}")
    prof = profile_sigma_hat(rho, omega, grid)
    return build_wave(omega, float(roots[branch]), phase, prof, s, U)


def initial_data(kind: str, params: dict, grid: FourierGrid, rho: CouplingProfile | None = None,
                 U: PolynomialPotential | None = None) -> SpinorField:
    """Deterministic initial field in momentum space.

    kinds: ``gaussianPacket`` (amplitude, width, center, momentum, direction),
    ``solitaryWave`` (omega, branch, phase), ``perturbedSolitary`` (omega,
    branch, phase, delta, seed) and ``superposition`` (parts: list of
    ``{"kind", "params", "weight"}``).
    """
    p = dict(params)
    if kind == "gaussianPacket":
        amp = complex(p.get("amplitude", 1.0))
        if amp == 0:
            warnings.warn("zero-amplitude packet: the field is identically zero", stacklevel=2)
        data = gaussian_packet_hat(grid, amp, p.get("width", 1.0), p.get("center", (0, 0, 0)),
                                   p.get("momentum", (0, 0, 0)), p.get("direction", (1, 0, 0, 0)))
    elif kind in ("solitaryWave", "perturbedSolitary"):
        if rho is None or U is None:
            raise ValueError(f"{kind} needs the coupling and the potential")
        wave = solitary_hat(grid, rho, U, float(p["omega"]), int(p.get("branch", 0)),
                            float(p.get("phase", 0.0)))
        data = wave.profile_hat
        if kind == "perturbedSolitary":
            delta = float(p.get("delta", 0.0))
            if delta != 0.0:
                eta = smooth_noise_hat(grid, int(p.get("seed", 0)), rho.m)
                scale = delta * np.sqrt(np.vdot(data, data).real / np.vdot(eta, eta).real)
                data = (1.0 + delta) * data + scale * eta
    elif kind == "superposition":
        data = np.zeros((4,) + grid.shape, dtype=complex)
        for part in p["parts"]:
            sub = initial_data(part["kind"], part.get("params", {}), grid, rho, U)
            data = data + complex(part.get("weight", 1.0)) * sub.data
    else:
        raise ValueError(f"unknown initial data kind {kind!r}")
    return SpinorField(grid, data, "momentum")


# ---------------------------------------------------------------------------
# spectral engine
# ---------------------------------------------------------------------------
@dataclass
class TrajectoryRecord:
    t: np.ndarray
    y: np.ndarray
    diag_t: np.ndarray = field(default_factory=lambda: np.empty(0))
    charge: np.ndarray = field(default_factory=lambda: np.empty(0))
    energy: np.ndarray = field(default_factory=lambda: np.empty(0))
    dist: dict = field(default_factory=dict)
    snapshots: dict = field(default_factory=dict)

    def to_csv(self, path):
        from .io import write_csv

        idx = np.searchsorted(self.t, self.diag_t)
        rows = [(self.t[i], self.y[i].real, self.y[i].imag, q, e)
                for i, q, e in zip(idx, self.charge, self.energy)]
        return write_csv(path, ["t", "Re_y", "Im_y", "Q", "E"], rows)


class SplitStepSolver:
    """Strang splitting A(dt/2) B(dt) A(dt/2) on a fixed grid.

    ``dt`` may be negative (backward evolution).  ``substeps`` is the number
    of RK4 steps used for the rank-one flow within one B(dt).
    """

    def __init__(self, grid: FourierGrid, rho: CouplingProfile, U: PolynomialPotential,
                 dt: float, substeps: int = 4, modes: DiracModes | None = None):
        if dt == 0 or not np.isfinite(dt):
            raise ValueError("dt must be finite and nonzero")
        if substeps < 4:
            raise ValueError("the rank-one flow uses at least 4 RK4 substeps")
        self.grid, self.rho, self.U = grid, rho, U
        self.dt = float(dt)
        self.substeps = int(substeps)
        self.modes = modes if modes is not None else DiracModes(grid, rho.m)
        self.rho_hat = rho.hat_grid(grid)
        self.rho_eig = self.modes.to_eig(self.rho_hat)
        self.kappa = float(np.vdot(self.rho_eig, self.rho_eig).real / grid.L**3)
        lam = self.modes.lam
        self._ph = np.exp(-1j * lam * self.dt)
        self._ph_c = self._ph.conj()
        self._hph = np.exp(-0.5j * lam * self.dt)
        self._hph_c = self._hph.conj()
        # y at integer times from the half-advanced state: <rho, A(-dt/2) chi> = <A(dt/2) rho, chi>
        self._rho_fwd = self._phase(self.rho_eig.copy(), self._hph, self._hph_c)

    # sub-flows ----------------------------------------------------------
    @staticmethod
    def _phase(chi, ph, ph_c):
        chi[:2] *= ph
        chi[2:] *= ph_c
        return chi

    def free(self, chi: np.ndarray, half: bool = False) -> np.ndarray:
        """Exact free flow over dt (or dt/2), in place on eigenbasis data."""
        return self._phase(chi, self._hph, self._hph_c) if half else self._phase(chi, self._ph, self._ph_c)

    def rank_one_flow(self, y0: complex, h: float) -> tuple[complex, complex]:
        """RK4 for (y, J): y' = -i kappa F(y), J' = F(y).  Returns (y(h), J(h))."""
        F = self.U.F
        k = self.kappa
        n = self.substeps
        dh = h / n
        y = complex(y0)
        J = 0j
        for _ in range(n):
            f1 = complex(F(y))
            f2 = complex(F(y - 0.5j * dh * k * f1))
            f3 = complex(F(y - 0.5j * dh * k * f2))
            f4 = complex(F(y - 1j * dh * k * f3))
            inc = dh * (f1 + 2 * f2 + 2 * f3 + f4) / 6.0
            J += inc
            y -= 1j * k * inc
        return y, J

    def nonlinear(self, chi: np.ndarray) -> np.ndarray:
        y0 = np.vdot(self.rho_eig, chi) / self.grid.L**3
        _, J = self.rank_one_flow(y0, self.dt)
        chi += (-1j * J) * self.rho_eig
        return chi

    def step_eig(self, psi_eig: np.ndarray) -> np.ndarray:
        chi = self.free(psi_eig.copy(), half=True)
        self.nonlinear(chi)
        return self.free(chi, half=True)

    def step(self, psi: SpinorField) -> SpinorField:
        psi_eig = self.modes.to_eig(psi.hat)
        return SpinorField(self.grid, self.modes.from_eig(self.step_eig(psi_eig)), "momentum")

    # observables on eigenbasis data ------------------------------------
    def charge_eig(self, chi) -> float:
        return float(np.vdot(chi, chi).real / self.grid.L**3)

    def kinetic_eig(self, chi) -> float:
        a = np.abs(chi[:2]) ** 2
        b = np.abs(chi[2:]) ** 2
        return float(0.5 * np.sum(self.modes.lam * (a.sum(0) - b.sum(0))) / self.grid.L**3)

    # driver ---------------------------------------------------------------
    def run(self, psi0: SpinorField, T: float, diag_stride: int = 10, snapshot_times=(),
            callback=None) -> TrajectoryRecord:
        """Integrate to time T, recording y every step and (Q, E) every ``diag_stride`` steps.

        ``snapshot_times`` are rounded to the nearest step; snapshot fields are
        stored in the standard basis (momentum space).  ``callback(t, field)``
        is called at each snapshot time instead of storing when given.
        """
        n = int(round(T / abs(self.dt)))
        L3 = self.grid.L**3
        snap_steps = {int(round(ts / abs(self.dt))): ts for ts in snapshot_times}
        chi = self.free(self.modes.to_eig(psi0.hat), half=True)
        t = self.dt * np.arange(n + 1)
        y = np.empty(n + 1, dtype=complex)
        dt_, q_, e_ = [], [], []
        snaps = {}
        for k in range(n + 1):
            yk = np.vdot(self._rho_fwd, chi) / L3
            y[k] = yk
            if k % diag_stride == 0 or k == n:
                dt_.append(t[k])
                q_.append(self.charge_eig(chi))
                e_.append(self.kinetic_eig(chi) - float(self.U.U(yk)))
            if k in snap_steps:
                back = chi.copy()
                self._phase(back, self._hph_c, self._hph)  # undo the leading half step
                fld = SpinorField(self.grid, self.modes.from_eig(back), "momentum")
                if callback is not None:
                    callback(t[k], fld)
                else:
                    snaps[float(t[k])] = fld
            if k == n:
                break
            self.nonlinear(chi)
            self.free(chi)
        return TrajectoryRecord(t, y, np.array(dt_), np.array(q_), np.array(e_), {}, snaps)


def step_strang(state: SpinorField, rho: CouplingProfile, U: PolynomialPotential, dt: float,
                substeps: int = 4) -> SpinorField:
    """One Strang step A(dt/2) B(dt) A(dt/2); input and output in momentum space."""
    return SplitStepSolver(state.grid, rho, U, dt, substeps).step(state)


# ---------------------------------------------------------------------------
# Volterra engine
# ---------------------------------------------------------------------------
@dataclass
class MemoryKernel:
    tau: np.ndarray
    K: np.ndarray
    err: float

    @property
    def dt(self) -> float:
        return float(self.tau[1] - self.tau[0]) if self.tau.size > 1 else 0.0


class KernelError(RuntimeError):
    def __init__(self, msg, kernel=None):
        super().__init__(msg)
        self.kernel = kernel


def kernel(rho: CouplingProfile, m: float | None, dtK: float, T: float, tol: float = 1e-10) -> MemoryKernel:
    """K(tau) = <rho, exp(-i D tau) rho> on tau = 0, dtK, ..., T.

    After angular integration (rho_hat is radial) the integrand is
    r^2 [cos(lam tau) |rho_hat|^2 - i sin(lam tau)/lam * m rho_hat^+ beta rho_hat];
    all tau samples are integrated together by adaptive Gauss-Kronrod on r
    with a max-norm error control.
    """
    m = rho.m if m is None else float(m)
    n = int(round(T / dtK))
    if n < 1 or abs(n * dtK - T) > 1e-9 * max(1.0, T):
        raise ValueError("T must be a positive multiple of dtK")
    tau = dtK * np.arange(n + 1)
    rmax = 9.0 / rho.widths.min()

    def f(r):
        nn, bb = rho.densities(r)
        lam = np.sqrt(r * r + m * m)
        ph = lam * tau
        return np.concatenate([r * r * nn * np.cos(ph), -r * r * m * bb * np.sin(ph) / lam])

    eps = tol / RADIAL_PREFACTOR
    val, err = integrate.quad_vec(f, 0.0, rmax, epsabs=eps, epsrel=0.0, norm="max", limit=20000)
    K = RADIAL_PREFACTOR * (val[: n + 1] + 1j * val[n + 1:])
    err = float(err * RADIAL_PREFACTOR)
    mk = MemoryKernel(tau, K, err)
    if not err <= tol:
        raise KernelError(f"kernel quadrature error {err:.2e} > {tol:.2e}", mk)
    return mk


def _shell_coeffs(grid: FourierGrid, modes: DiracModes, rho_eig: np.ndarray, psi_eig: np.ndarray):
    radii, inv = grid.shells
    cp = (rho_eig[0].conj() * psi_eig[0] + rho_eig[1].conj() * psi_eig[1]).ravel()
    cm = (rho_eig[2].conj() * psi_eig[2] + rho_eig[3].conj() * psi_eig[3]).ravel()
    ns = radii.size
    Cp = np.bincount(inv, cp.real, ns) + 1j * np.bincount(inv, cp.imag, ns)
    Cm = np.bincount(inv, cm.real, ns) + 1j * np.bincount(inv, cm.imag, ns)
    lam = np.sqrt(radii**2 + modes.m**2)
    return lam, Cp / grid.L**3, Cm / grid.L**3


def free_projection(rho: CouplingProfile, psi0: SpinorField, t_grid, chunk: int = 256) -> np.ndarray:
    """Y0(t) = <rho, exp(-i D t) psi0> on the grid, exactly per mode.

    Modes on the same lattice shell share lambda, so the sum collapses to one
    term per distinct |n|^2.
    """
    grid = psi0.grid
    modes = DiracModes(grid, rho.m)
    lam, Cp, Cm = _shell_coeffs(grid, modes, modes.to_eig(rho.hat_grid(grid)), modes.to_eig(psi0.hat))
    t = np.asarray(t_grid, dtype=float)
    out = np.empty(t.size, dtype=complex)
    for s in range(0, t.size, chunk):
        ph = np.exp(-1j * np.outer(t[s:s + chunk], lam))
        out[s:s + chunk] = ph @ Cp + ph.conj() @ Cm
    return out


class VolterraError(RuntimeError):
    def __init__(self, msg, step=None):
        super().__init__(msg)
        self.step = step


def solve_volterra(K: MemoryKernel, Y0, U: PolynomialPotential, dt: float | None = None,
                   tol: float = 1e-12, max_iter: int = 200) -> np.ndarray:
    """March y_n = Y0_n - i dt [K_0 F(y_n)/2 + sum_{j<n} w_j K_{n-j} F(y_j)].

    ``w_0 = 1/2`` and ``w_j = 1`` otherwise (product trapezoid).  Each step
    is solved by damped fixed-point iteration, with Newton on R^2 as a
    fallback.
    """
    Y0 = np.asarray(Y0, dtype=complex)
    if dt is None:
        dt = K.dt
    if K.tau.size > 1 and abs(dt - K.dt) > 1e-12 * dt:
        raise ValueError("Volterra step must equal the kernel sampling step")
    n = Y0.size
    if K.K.size < n:
        raise ValueError("kernel does not cover the horizon")
    if n - 1 > MAX_VOLTERRA_STEPS:
        raise ValueError(f"horizon exceeds {MAX_VOLTERRA_STEPS} steps")
    Kv = K.K
    K0 = Kv[0]
    y = np.empty(n, dtype=complex)
    Fv = np.empty(n, dtype=complex)
    y[0] = Y0[0]
    Fv[0] = U.F(y[0])
    c = -0.5j * dt * K0
    for k in range(1, n):
        hist = 0.5 * Kv[k] * Fv[0]
        if k > 1:
            hist += np.dot(Kv[k - 1:0:-1], Fv[1:k])
        b = Y0[k] - 1j * dt * hist
        y[k] = _implicit_solve(b, c, U, y[k - 1], tol, max_iter, k)
        Fv[k] = U.F(y[k])
    return y


def _implicit_solve(b, c, U, guess, tol, max_iter, step):
    # solve y = b + c F(y)
    F = U.F
    scale = max(1.0, abs(b))
    y = complex(guess)
    theta = 1.0
    prev = np.inf
    for _ in range(max_iter):
        ynew = b + c * complex(F(y))
        d = abs(ynew - y)
        y = (1 - theta) * y + theta * ynew
        if d <= tol * scale:
            return y
        if d >= prev:
            theta *= 0.5
        prev = d

    def g(v):
        z = v[0] + 1j * v[1]
        r = z - b - c * complex(F(z))
        return [r.real, r.imag]

    sol = optimize.root(g, [y.real, y.imag], method="hybr", tol=tol * 1e-2)
    z = sol.x[0] + 1j * sol.x[1]
    if not sol.success or abs(z - b - c * complex(F(z))) > 10 * tol * scale:
        raise VolterraError(f"implicit step {step} did not converge", step)
    return z


def reconstruct_field(y_series, psi0: SpinorField, t: float, dt: float, rho: CouplingProfile,
                      U: PolynomialPotential) -> SpinorField:
    """psi(t) = exp(-iDt) psi0 - i int_0^t exp(-iD(t-s)) rho F(y(s)) ds, trapezoid in s."""
    n = t / dt
    k = int(round(n))
    if abs(n - k) > 1e-9 or k < 0 or k >= len(y_series):
        raise ValueError(f"t={t} is not on the Volterra grid")
    grid = psi0.grid
    modes = DiracModes(grid, rho.m)
    psi_eig = modes.to_eig(psi0.hat)
    rho_eig = modes.to_eig(rho.hat_grid(grid))
    ph = np.exp(-1j * modes.lam * (k * dt))
    out = psi_eig.copy()
    out[:2] *= ph
    out[2:] *= ph.conj()
    if k > 0:
        radii, inv = grid.shells
        lam = np.sqrt(radii**2 + rho.m**2)
        Fv = np.asarray(U.F(np.asarray(y_series[: k + 1])), dtype=complex)
        w = np.ones(k + 1)
        w[0] = w[-1] = 0.5
        s = dt * np.arange(k + 1)
        wf = w * Fv * dt
        Ip = np.empty(lam.size, dtype=complex)
        for a in range(0, lam.size, 512):
            e = np.exp(-1j * np.outer(lam[a:a + 512], k * dt - s))
            Ip[a:a + 512] = e @ wf
        Im = np.empty(lam.size, dtype=complex)
        for a in range(0, lam.size, 512):
            e = np.exp(1j * np.outer(lam[a:a + 512], k * dt - s))
            Im[a:a + 512] = e @ wf
        Ip = Ip[inv].reshape(grid.shape)
        Im = Im[inv].reshape(grid.shape)
        out[:2] -= 1j * rho_eig[:2] * Ip
        out[2:] -= 1j * rho_eig[2:] * Im
    return SpinorField(grid, modes.from_eig(out), "momentum")


def run_volterra(rho: CouplingProfile, U: PolynomialPotential, psi0: SpinorField, dt: float, T: float,
                 tol: float = 1e-10, K: MemoryKernel | None = None) -> tuple[np.ndarray, np.ndarray, MemoryKernel]:
    """Convenience driver: kernel, free projection and the march.  Returns (t, y, K)."""
    n = int(round(T / dt))
    if K is None:
        K = kernel(rho, rho.m, dt, n * dt, tol)
    t = dt * np.arange(n + 1)
    Y0 = free_projection(rho, psi0, t)
    return t, solve_volterra(K, Y0, U, dt), K
