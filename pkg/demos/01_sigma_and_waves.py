"""Walk through the dispersion function and the solitary waves it produces.

For a Gaussian coupling, sigma(omega) is negative and strictly decreasing on
the spectral gap, vanishing only at omega = -m.  Each interior frequency then
has one positive amplitude root of sigma * g(r * sigma^2) = -1 for the quartic
potential, so the waves form a single smooth branch.
"""
import numpy as np

from mfdirac.grid import FourierGrid
from mfdirac.model import CouplingProfile, PolynomialPotential, sigma
from mfdirac.solitary import build_atlas, check_assumptions, residual

rho = CouplingProfile.gaussian()
U = PolynomialPotential((0.0, 1.0))

print("sigma across the gap")
for w in (-0.99, -0.5, 0.0, 0.5, 0.99):
    s, err = sigma(rho, w)
    print(f"  omega={w:+.2f}  sigma={s:+.10f}  (quadrature error {err:.1e})")

report = check_assumptions(rho, U, lambda_probes=(0.5, 1.0, 2.0))
print("assumption checks pass:", report["pass"], "| zeros of sigma:", report["item2"]["zeros"])

grid = FourierGrid(48, 24.0)
atlas = build_atlas(rho, U, omega_grid=np.linspace(-0.8, 0.8, 9), grid=grid)
print("\nwaves on a 48^3 grid")
for i, w in enumerate(atlas.omega_grid):
    wave = atlas.wave(i)
    print(f"  omega={w:+.2f}  r={atlas.branches[i][0]:.6f}  residual={residual(wave, rho, U):.1e}")
