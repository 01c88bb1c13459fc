"""Finite-dimensional Dirac algebra in the standard (Dirac) representation.

All objects here are dense 4x4 complex matrices.  Functions accept either a
single momentum ``xi`` of shape ``(3,)`` or a stack of shape ``(..., 3)``; the
returned matrices then carry the same leading shape.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

I4 = np.eye(4, dtype=complex)


@dataclass(frozen=True)
class DiracAlgebra:
    """The matrices alpha_1..3, beta and the mass m."""

    alpha: np.ndarray  # (3, 4, 4)
    beta: np.ndarray  # (4, 4)
    m: float

    def anticommutator_defects(self) -> dict:
        """Max-abs entrywise defects of all defining algebraic identities."""
        a, b = self.alpha, self.beta
        out = {"alpha_alpha": 0.0, "alpha_beta": 0.0, "beta_sq": 0.0, "hermitian": 0.0}
        for j in range(3):
            for k in range(3):
                ac = a[j] @ a[k] + a[k] @ a[j] - 2.0 * (j == k) * I4
                out["alpha_alpha"] = max(out["alpha_alpha"], np.abs(ac).max())
            out["alpha_beta"] = max(out["alpha_beta"], np.abs(a[j] @ b + b @ a[j]).max())
            out["hermitian"] = max(out["hermitian"], np.abs(a[j] - a[j].conj().T).max())
        out["beta_sq"] = np.abs(b @ b - I4).max()
        out["hermitian"] = max(out["hermitian"], np.abs(b - b.conj().T).max())
        return out


@dataclass(frozen=True)
class SymbolMatrix:
    """D(xi) = alpha.xi + beta*m together with lambda = sqrt(|xi|^2 + m^2)."""

    d: np.ndarray  # (..., 4, 4)
    lam: np.ndarray | float


def build_algebra(m: float = 1.0) -> DiracAlgebra:
    """Standard Dirac representation with mass ``m``.

    beta = diag(1, 1, -1, -1) and alpha_j carries the Pauli matrix sigma_j in
    both off-diagonal 2x2 blocks.
    """
    if not np.isfinite(m) or m <= 0:
        raise ValueError(f"mass must be positive, got {m!r}")
    alpha = np.zeros((3, 4, 4), dtype=complex)
    for j in range(3):
        alpha[j, :2, 2:] = PAULI[j]
        alpha[j, 2:, :2] = PAULI[j]
    beta = np.diag([1.0, 1.0, -1.0, -1.0]).astype(complex)
    return DiracAlgebra(alpha=alpha, beta=beta, m=float(m))


def symbol(alg: DiracAlgebra, xi) -> SymbolMatrix:
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != 3:
        raise ValueError("momentum must have 3 components")
    if not np.all(np.isfinite(xi)):
        raise ValueError("momentum components must be finite")
    d = np.einsum("...j,jab->...ab", xi, alg.alpha) + alg.m * alg.beta
    lam = np.sqrt(np.sum(xi * xi, axis=-1) + alg.m**2)
    return SymbolMatrix(d=d, lam=lam)


def projectors(sym: SymbolMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Spectral projectors onto the +lambda and -lambda eigenspaces of D(xi)."""
    lam = np.asarray(sym.lam)[..., None, None]
    dn = sym.d / lam
    return 0.5 * (I4 + dn), 0.5 * (I4 - dn)


def propagator(sym: SymbolMatrix, t) -> np.ndarray:
    """exp(-i D(xi) t) = cos(lambda t) I - i sin(lambda t)/lambda D(xi).

    ``t`` may be a scalar or broadcast against the leading shape of ``sym``.
    """
    lam = np.asarray(sym.lam)
    lt = lam * np.asarray(t, dtype=float)
    c = np.cos(lt)[..., None, None]
    s = (np.sin(lt) / lam)[..., None, None]
    return c * I4 - 1j * s * sym.d
