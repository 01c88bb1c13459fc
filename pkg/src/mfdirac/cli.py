"""Command-line runner for the five canonical experiments.

Each ``cmd_*`` function takes a :class:`RunConfig`, writes its files into the
configured output directory next to an echo of the normalized config, and
returns a JSON-serializable report.  ``main`` maps failures onto exit codes.
"""
from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

import numpy as np
from scipy import special, stats

from . import config as cfgmod
from .algebra import DiracAlgebra, build_algebra, projectors, propagator, symbol
from .config import ConfigError, RunConfig
from .diagnostics import ManifoldDistance, YMetricSpec, charge, time_spectrum
from .dynamics import (MAX_VOLTERRA_STEPS, KernelError, SplitStepSolver, VolterraError,
                       initial_data, run_volterra)
from .io import write_csv, write_json, write_snapshot
from .model import CouplingProfile, PolynomialPotential, QuadratureError, sigma, sigma_curve
from .solitary import amplitude_roots, build_atlas, check_assumptions

log = logging.getLogger("mfdirac")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_SELFTEST = 0, 1, 2, 3


class NumericalError(RuntimeError):
    pass


def _out(cfg: RunConfig) -> Path:
    out = Path(cfg.data["output"])
    out.mkdir(parents=True, exist_ok=True)
    cfg.save(out / "config.json")
    return out


def _model(cfg: RunConfig, free: bool = False):
    rho = cfg.coupling()
    U = PolynomialPotential.zero() if free else cfg.potential()
    return rho, U


def _initial(cfg: RunConfig, grid, rho, U):
    init = cfg.params["initial"]
    params = dict(init.get("params", {}))
    params["seed"] = cfg.seed
    # solitary data always comes from the model potential, even in free-flow runs
    return initial_data(init["kind"], params, grid, rho, cfg.potential())


def _finite(y, what: str):
    if not np.all(np.isfinite(y)):
        raise NumericalError(f"{what} produced non-finite values")


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------
def cmd_sigma(cfg: RunConfig) -> dict:
    out = _out(cfg)
    p = cfg.params
    rho, U = _model(cfg)
    omegas = cfgmod.omega_grid(p["omegaMin"], p["omegaMax"], p["omegaCount"])
    curve = sigma_curve(rho, omegas, cfg.tol["sigma"])
    curve.to_csv(out / "sigma.csv")
    report = check_assumptions(rho, U, cfg.m, p["lambdaProbes"], omegas if omegas.size else None,
                               cfg.tol["sigma"])
    write_json(out / "assumptions.json", report)
    return {"rows": int(omegas.size), "zeros": list(curve.zeros), "assumptions": report["pass"]}


def cmd_atlas(cfg: RunConfig) -> dict:
    out = _out(cfg)
    p = cfg.params
    rho, U = _model(cfg)
    grid = cfg.grid()
    omegas = cfgmod.omega_grid(p["omegaMin"], p["omegaMax"], p["omegaCount"])
    atlas = build_atlas(rho, U, cfg.m, omegas, grid, cfg.tol["sigma"], cfg.tol["root"])
    rows = atlas.rows(residuals=bool(p["residuals"]))
    header = ["omega", "sigma", "branchIndex", "rootR", "charge"] + (["residual"] if p["residuals"] else [])
    write_csv(out / "atlas.csv", header, rows)
    meta = atlas.metadata()
    write_json(out / "atlas.json", meta)
    res = [r[5] for r in rows] if p["residuals"] else []
    return {"waves": len(rows), "maxResidual": max(res) if res else None,
            "nearSingular": meta["near_singular_omegas"]}


def _spectral(cfg: RunConfig, grid, rho, U, psi0, snapshot_times=(), callback=None):
    t = cfg.time
    solver = SplitStepSolver(grid, rho, U, float(t["dt"]))
    rec = solver.run(psi0, float(t["T"]), int(t["diagStride"]), snapshot_times, callback)
    _finite(rec.y, "spectral engine")
    return rec


def cmd_evolve(cfg: RunConfig) -> dict:
    out = _out(cfg)
    p = cfg.params
    rho, U = _model(cfg, free=bool(p["freeFlow"]))
    grid = cfg.grid()
    psi0 = _initial(cfg, grid, rho, U)
    dt, T = float(cfg.time["dt"]), float(cfg.time["T"])
    engine = p["engine"]
    report: dict = {"engine": engine, "charge0": charge(psi0)}
    ys = yv = None
    if engine in ("spectral", "both"):
        rec = _spectral(cfg, grid, rho, U, psi0, p["snapshotTimes"])
        rec.to_csv(out / "trajectory.csv")
        write_csv(out / "y_spectral.csv", ["t", "Re_y", "Im_y"], zip(rec.t, rec.y.real, rec.y.imag))
        for ts, fld in sorted(rec.snapshots.items()):
            write_snapshot(out / "snapshots" / f"t{ts:010.4f}.bin", fld, cfg.m, ts)
        q, e = rec.charge, rec.energy
        report["chargeDrift"] = float(np.max(np.abs(q - q[0])) / q[0]) if q[0] > 0 else 0.0
        report["energyDrift"] = float(np.max(np.abs(e - e[0])) / max(abs(e[0]), 1e-300))
        ys = rec.y
    if engine in ("volterra", "both"):
        if int(round(T / dt)) > MAX_VOLTERRA_STEPS:
            raise ConfigError(f"Volterra horizon limited to {MAX_VOLTERRA_STEPS} steps")
        t, yv, _ = run_volterra(rho, U, psi0, dt, T, cfg.tol["kernel"])
        _finite(yv, "Volterra engine")
        write_csv(out / "y_volterra.csv", ["t", "Re_y", "Im_y"], zip(t, yv.real, yv.imag))
    if engine == "both":
        gap = float(np.max(np.abs(ys - yv)))
        tol = float(cfg.tol["engineGap"])
        report["engineGap"] = gap
        report["withinTolerance"] = gap <= tol
        write_json(out / "crossval.json", {"gap": gap, "tol": tol, "withinTolerance": gap <= tol,
                                           "dt": dt, "T": T, "grid": grid.spec()})
        if gap > tol:
            log.warning("engine gap %.3e exceeds tolerance %.1e", gap, tol)
    write_json(out / "summary.json", report)
    return report


def cmd_attract(cfg: RunConfig) -> dict:
    out = _out(cfg)
    p = cfg.params
    rho, U = _model(cfg)
    grid = cfg.grid()
    psi0 = _initial(cfg, grid, rho, U)
    om = cfgmod.omega_grid(p["atlasOmegaMin"], p["atlasOmegaMax"], p["atlasOmegaCount"])
    atlas = build_atlas(rho, U, cfg.m, om, grid, cfg.tol["sigma"], cfg.tol["root"])
    md = ManifoldDistance(atlas, YMetricSpec(float(p["epsilon"])), grid)
    T = float(cfg.time["T"])
    times = [float(s) for s in p["distTimes"] if float(s) <= T + 1e-9]
    dist_rows = []

    def on_snapshot(t, fld):
        r = md(fld)
        dist_rows.append((t, r.d, np.nan if r.omega_star is None else r.omega_star, r.theta_star,
                          r.d_zero, md.metric.truncation_bound(fld)))
        log.info("t=%.2f dist=%.6e omega*=%s", t, r.d, r.omega_star)

    rec = _spectral(cfg, grid, rho, U, psi0, times, on_snapshot)
    rec.to_csv(out / "trajectory.csv")
    write_csv(out / "y.csv", ["t", "Re_y", "Im_y"], zip(rec.t, rec.y.real, rec.y.imag))
    write_csv(out / "dist.csv", ["t", "dist", "omegaStar", "thetaStar", "distZero", "truncationBound"],
              dist_rows)
    spectra = []
    for k, w in enumerate(p["windows"]):
        if w[1] > T + 1e-9:
            continue
        s = time_spectrum(rec.t, rec.y, tuple(w), float(p["gapDelta"]) * cfg.m, cfg.m)
        s.to_csv(out / f"spectrum_{k}.csv")
        spectra.append(s.as_dict())
    write_json(out / "spectra.json", spectra)
    summary = attraction_summary(dist_rows, spectra, om)
    write_json(out / "summary.json", summary)
    return summary


def attraction_summary(dist_rows, spectra, atlas_omegas) -> dict:
    """Trend fit of dist(t) and the early/late spectral comparison."""
    t = np.array([r[0] for r in dist_rows])
    d = np.array([r[1] for r in dist_rows])
    s: dict = {"times": t.tolist(), "dist": d.tolist()}
    if t.size >= 2:
        slope, icpt, lo, hi = stats.theilslopes(d, t)
        s["distTrend"] = {"slope": float(slope), "slopeLow": float(lo), "slopeHigh": float(hi),
                          "decreasing": bool(hi < 0)}

    def at(tt):
        i = np.flatnonzero(np.isclose(t, tt))
        return float(d[i[0]]) if i.size else None

    d5, d50 = at(5.0), at(50.0)
    if d5 is not None and d50 is not None and d5 > 0:
        s["distRatio_50_5"] = d50 / d5
    if spectra:
        frac = [x["outsideFraction"] for x in spectra]
        s["outsideFraction"] = frac
        s["outsideDecay"] = frac[0] / frac[-1] if frac[-1] > 0 else np.inf
        late = spectra[-1]
        s["latePeakOmega"] = late["peakOmega"]
        s["latePeakCount"] = late["peakCount"]
    if dist_rows and spectra and np.isfinite(dist_rows[-1][2]):
        spacing = float(np.min(np.diff(atlas_omegas))) if len(atlas_omegas) > 1 else 0.0
        s["finalOmegaStar"] = float(dist_rows[-1][2])
        s["peakMatchesMinimizer"] = bool(abs(s["latePeakOmega"] - s["finalOmegaStar"]) <= spacing)
    return s


# ---------------------------------------------------------------------------
# selftest
# ---------------------------------------------------------------------------
def _check(name, value, tol) -> dict:
    value = float(value)
    return {"name": name, "value": value, "tol": float(tol), "pass": bool(np.isfinite(value) and value <= tol)}


def algebra_checks(alg: DiracAlgebra, n: int = 200, seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    xi = rng.normal(scale=3.0, size=(n, 3))
    sym = symbol(alg, xi)
    I = np.eye(4)
    Pp, Pm = projectors(sym)
    lam = sym.lam[:, None, None]
    checks = [_check(f"anticommutator:{k}", v, 1e-12) for k, v in alg.anticommutator_defects().items()]
    checks.append(_check("symbol_square", np.max(np.abs(sym.d @ sym.d - lam**2 * I)), 1e-10))
    checks.append(_check("projector_sum", np.max(np.abs(Pp + Pm - I)), 1e-12))
    checks.append(_check("projector_idempotent", np.max(np.abs(Pp @ Pp - Pp)), 1e-12))
    t1, t2 = 0.7, -1.9
    U1, U2, U12 = propagator(sym, t1), propagator(sym, t2), propagator(sym, t1 + t2)
    UH = np.conj(np.swapaxes(U1, -1, -2))
    checks.append(_check("propagator_unitary", np.max(np.abs(UH @ U1 - I)), 1e-12))
    checks.append(_check("propagator_group", np.max(np.abs(U1 @ U2 - U12)), 1e-12))
    return checks


def oracle_checks(tol: float = 1e-10) -> list:
    rho = CouplingProfile.gaussian()
    closed = -(4.0 / np.sqrt(np.pi)) * (np.sqrt(np.pi) / 2.0 - (np.pi / 2.0) * np.e * special.erfc(1.0))
    s0, _ = sigma(rho, 0.0, tol)
    sm, _ = sigma(rho, -1.0, tol)
    U = PolynomialPotential((0.0, 1.0))
    s5, _ = sigma(rho, 0.5, tol)
    r = amplitude_roots(U, s5)
    cert = abs(s5 * U.g(r[0] * s5**2) + 1.0) if r.size else np.inf
    return [
        _check("sigma0_closed_form", abs(s0 - closed), 1e-8),
        _check("sigma_minus_m", abs(sm), 1e-8),
        _check("amplitude_root_certified", cert, 1e-12),
    ]


def dynamics_checks(cfg: RunConfig) -> list:
    p = cfg.params
    N, L = p["orderGrid"]
    from .grid import FourierGrid

    grid = FourierGrid(int(N), float(L))
    rho, U = cfg.coupling(), cfg.potential()
    psi0 = initial_data("perturbedSolitary", {"omega": 0.2, "delta": 0.2, "seed": cfg.seed}, grid, rho, U)
    T, dt = float(p["orderT"]), float(p["orderDt"])
    ys, drifts = [], []
    for k in range(3):
        rec = SplitStepSolver(grid, rho, U, dt / 2**k).run(psi0, T, diag_stride=10)
        ys.append(rec.y[-1])
        drifts.append(float(np.max(np.abs(rec.charge - rec.charge[0])) / rec.charge[0]))
    order = np.log2(abs(ys[0] - ys[1]) / abs(ys[1] - ys[2]))
    return [
        _check("dt_halving_order", abs(order - 2.0), 0.2),
        _check("charge_drift", drifts[-1], 1e-10),
    ]


def cmd_selftest(cfg: RunConfig, algebra: DiracAlgebra | None = None) -> dict:
    """Run the invariant suite; ``algebra`` replaces the standard matrices (test hook)."""
    out = _out(cfg)
    alg = algebra if algebra is not None else build_algebra(cfg.m)
    checks = algebra_checks(alg) + oracle_checks(cfg.tol["sigma"]) + dynamics_checks(cfg)
    failed = [c["name"] for c in checks if not c["pass"]]
    report = {"pass": not failed, "failed": failed, "checks": checks}
    write_json(out / "selftest.json", report)
    return report


COMMANDS = {
    "sigma": cmd_sigma,
    "atlas": cmd_atlas,
    "evolve": cmd_evolve,
    "attract": cmd_attract,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mfdirac", description="Mean-field Dirac numerical laboratory")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="JSON configuration file")
    ap.add_argument("--out", help="output directory (overrides the config)")
    ap.add_argument("--engine", choices=["spectral", "volterra", "both"], help="evolve engine")
    ap.add_argument("--seed", type=int, help="random seed (overrides the config)")
    ap.add_argument("--quiet", action="store_true", help="suppress progress output")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s")
    if args.quiet:
        warnings.simplefilter("ignore")
    try:
        cfg = cfgmod.load(args.config, args.command) if args.config else cfgmod.default(args.command)
        cfg = cfg.with_overrides(args.seed, args.out, args.engine)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    try:
        report = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (QuadratureError, KernelError, VolterraError, NumericalError, FloatingPointError,
            np.linalg.LinAlgError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    if args.command == "selftest" and not report["pass"]:
        log.error("selftest failed: %s", ", ".join(report["failed"]))
        return EXIT_SELFTEST
    if not args.quiet:
        print(f"{args.command}: done, output in {cfg.data['output']}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
