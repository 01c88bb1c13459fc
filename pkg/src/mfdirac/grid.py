"""Periodic box, its dual lattice, and spinor fields living on it.

Arrays are kept in numpy FFT order throughout: position samples sit at
``x = j*dx`` for ``j < N/2`` and ``(j - N)*dx`` otherwise, so the origin is
index 0.  Fourier convention: ``f_hat(xi) = sum_x f(x) exp(-i xi.x) dx^3``,
which approximates the continuum transform without 2*pi factors; the inverse
carries ``(2*pi)^-3`` and the grid inner product in momentum space is
``L^-3 * sum conj(f_hat) g_hat``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft


@dataclass(frozen=True)
class FourierGrid:
    """Cubic periodic box of edge ``L`` sampled with ``N`` points per axis."""

    N: int
    L: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 8 or self.N % 2:
            raise ValueError(f"N must be an even integer >= 8, got {self.N!r}")
        if not np.isfinite(self.L) or self.L <= 0:
            raise ValueError(f"L must be positive, got {self.L!r}")

    def check_resolution(self, m: float, factor: float = 4.0, strict: bool = False) -> float:
        """Return the Nyquist wavenumber; warn (or raise) if below ``factor*m``."""
        nyq = np.pi * self.N / self.L
        if nyq < factor * m:
            msg = f"Nyquist wavenumber {nyq:.3g} below {factor:g}*m = {factor * m:.3g}"
            if strict:
                raise ValueError(msg)
            warnings.warn(msg, stacklevel=2)
        return nyq

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.N, self.N, self.N)

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def dk(self) -> float:
        return 2.0 * np.pi / self.L

    @property
    def dual_cell(self) -> float:
        return self.dk**3

    @cached_property
    def k1(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.N, d=self.dx)

    @cached_property
    def x1(self) -> np.ndarray:
        return np.fft.fftfreq(self.N, d=1.0 / self.L)

    @cached_property
    def xi(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        k = self.k1
        return k[:, None, None], k[None, :, None], k[None, None, :]

    @cached_property
    def x(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = self.x1
        return x[:, None, None], x[None, :, None], x[None, None, :]

    @cached_property
    def xi2(self) -> np.ndarray:
        kx, ky, kz = self.xi
        return kx**2 + ky**2 + kz**2

    @cached_property
    def r(self) -> np.ndarray:
        X, Y, Z = self.x
        return np.sqrt(X**2 + Y**2 + Z**2)

    @cached_property
    def shells(self) -> tuple[np.ndarray, np.ndarray]:
        """Group lattice modes by integer |n|^2.

        Returns ``(radii, inverse)`` where ``radii`` are the distinct |xi|
        values and ``inverse`` maps each mode (flattened) to its shell.
        """
        n = np.fft.fftfreq(self.N, d=1.0 / self.N).astype(np.int64)
        q = n[:, None, None] ** 2 + n[None, :, None] ** 2 + n[None, None, :] ** 2
        uq, inv = np.unique(q.ravel(), return_inverse=True)
        return self.dk * np.sqrt(uq.astype(float)), inv

    # transforms ---------------------------------------------------------
    def fft(self, f: np.ndarray) -> np.ndarray:
        return sfft.fftn(f, axes=(-3, -2, -1)) * self.dx**3

    def ifft(self, f_hat: np.ndarray) -> np.ndarray:
        return sfft.ifftn(f_hat, axes=(-3, -2, -1)) / self.dx**3

    def inner_hat(self, f_hat: np.ndarray, g_hat: np.ndarray) -> complex:
        """<f, g> = integral f^dagger g, evaluated from momentum samples."""
        return np.vdot(f_hat, g_hat) / self.L**3

    def inner_pos(self, f: np.ndarray, g: np.ndarray) -> complex:
        return np.vdot(f, g) * self.dx**3

    def spec(self) -> dict:
        return {"N": int(self.N), "L": float(self.L)}


@dataclass
class SpinorField:
    """Four-component complex field of shape ``(4, N, N, N)``."""

    grid: FourierGrid
    data: np.ndarray
    space: str = "momentum"

    def __post_init__(self):
        if self.space not in ("position", "momentum"):
            raise ValueError(f"unknown space tag {self.space!r}")
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.shape != (4,) + self.grid.shape:
            raise ValueError(f"field shape {self.data.shape} does not match grid {self.grid.shape}")

    def to_momentum(self) -> "SpinorField":
        if self.space == "momentum":
            return self
        return SpinorField(self.grid, self.grid.fft(self.data), "momentum")

    def to_position(self) -> "SpinorField":
        if self.space == "position":
            return self
        return SpinorField(self.grid, self.grid.ifft(self.data), "position")

    @property
    def hat(self) -> np.ndarray:
        return self.to_momentum().data

    def copy(self) -> "SpinorField":
        return SpinorField(self.grid, self.data.copy(), self.space)

    def __mul__(self, c) -> "SpinorField":
        return SpinorField(self.grid, self.data * c, self.space)

    __rmul__ = __mul__

    def __add__(self, other: "SpinorField") -> "SpinorField":
        other = other.to_momentum() if self.space == "momentum" else other.to_position()
        return SpinorField(self.grid, self.data + other.data, self.space)

    def __sub__(self, other: "SpinorField") -> "SpinorField":
        return self + (-1.0) * other


class DiracModes:
    """Per-mode eigendecomposition of D(xi) on the dual lattice.

    The columns of the unitary V(xi) are two positive-energy spinors
    ``N (chi; S chi/(lam+m))`` and two negative-energy spinors
    ``N (-S chi/(lam+m); chi)`` with ``S = sigma.xi`` and
    ``N = sqrt((lam+m)/(2 lam))``; the formulas are regular at xi = 0.
    In this basis the free flow is the diagonal phase ``exp(-+i lam t)``.
    """

    def __init__(self, grid: FourierGrid, m: float):
        self.grid = grid
        self.m = float(m)
        kx, ky, kz = grid.xi
        self.lam = np.sqrt(grid.xi2 + self.m**2)
        inv = 1.0 / (self.lam + self.m)
        self._nrm = np.sqrt((self.lam + self.m) / (2.0 * self.lam))
        self._zp = np.broadcast_to(kz * inv, grid.shape)
        self._pp = (kx + 1j * ky) * inv  # xi_+ / (lam + m)
        self._mp = (kx - 1j * ky) * inv  # xi_- / (lam + m)

    def _s(self, p, q):
        # (sigma.xi)/(lam+m) acting on the 2-spinor (p, q)
        return (self._zp * p + self._mp * q, self._pp * p - self._zp * q)

    def to_eig(self, psi_hat: np.ndarray) -> np.ndarray:
        a0, a1, b0, b1 = psi_hat
        sb0, sb1 = self._s(b0, b1)
        sa0, sa1 = self._s(a0, a1)
        n = self._nrm
        return np.stack([n * (a0 + sb0), n * (a1 + sb1), n * (b0 - sa0), n * (b1 - sa1)])

    def from_eig(self, psi_eig: np.ndarray) -> np.ndarray:
        p0, p1, q0, q1 = psi_eig
        sq0, sq1 = self._s(q0, q1)
        sp0, sp1 = self._s(p0, p1)
        n = self._nrm
        return np.stack([n * (p0 - sq0), n * (p1 - sq1), n * (sp0 + q0), n * (sp1 + q1)])


def apply_symbol(grid: FourierGrid, m: float, psi_hat: np.ndarray) -> np.ndarray:
    """D(xi) psi_hat mode by mode, in the standard representation."""
    kx, ky, kz = grid.xi
    kp = kx + 1j * ky
    km = kx - 1j * ky
    a0, a1, b0, b1 = psi_hat
    return np.stack(
        [
            m * a0 + kz * b0 + km * b1,
            m * a1 + kp * b0 - kz * b1,
            kz * a0 + km * a1 - m * b0,
            kp * a0 - kz * a1 - m * b1,
        ]
    )
