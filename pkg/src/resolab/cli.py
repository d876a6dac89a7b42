"""Batch front-end: subcommands over an INI config, CSV/JSON outputs.

Every output file starts with a header recording the artifact version and
the sha256 of the canonical config, so runs are diffable.  Numeric CSV
cells use 17 significant digits.  Parallel grid evaluations are collected
by index and reduced in fixed order, so outputs are byte-identical for
any --threads value.
"""

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import ARTIFACT_VERSION, ExperimentConfig, config_from_file
from .counterexample import blowup_scan, dz_phi, phi_via_autocorr
from .determinants import DeterminantCache
from .distortion import (ScalingProfile, build_distorted, distorted_spectrum,
                         theta_independence_check)
from .errors import ConfigError, ResolabError
from .freefield import SpectralRegion
from .resonances import (SearchConfig, WindowGrid, factor_background,
                         locate_resonances, scaling_study)
from .ssf import birman_krein_check, breit_wigner_decompose, ssf_profile
from .zeta import (HeatTraceEngine, dpzeta, fit_heat_expansion,
                   heat_trace_samples)

log = logging.getLogger("resolab")


def _fmt(x) -> str:
    return f"{x:.17g}"


def _header(cfg: ExperimentConfig, columns):
    return [f"# resolab {ARTIFACT_VERSION}",
            f"# config {cfg.sha256()}",
            f"# columns: {','.join(columns)}"]


def _write_csv(path: Path, cfg: ExperimentConfig, columns, rows):
    lines = _header(cfg, columns)
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, float) else str(v)
                              for v in row))
    path.write_text("\n".join(lines) + "\n")
    log.info("wrote %s (%d rows)", path, len(rows))


def _write_json(path: Path, cfg: ExperimentConfig, payload: dict):
    payload = dict(payload)
    payload["artifact_version"] = ARTIFACT_VERSION
    payload["config_sha256"] = cfg.sha256()
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    log.info("wrote %s", path)


def _pmap(fn, items, threads: int):
    """Deterministic parallel map: results ordered by input index."""
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_det(cfg: ExperimentConfig, out: Path, threads: int) -> int:
    pot = cfg.potential()
    region = cfg.region()
    search = cfg.search()
    rows = []
    nr = nphi = 20
    rs = np.linspace(region.r_min, region.r_max, nr)
    phis = np.linspace(region.phi_lo + search.phi_pad,
                       region.phi_hi - search.phi_pad, nphi)
    zgrid = [r * np.exp(1j * p) for r in rs for p in phis]
    for h in cfg.get("run", "h"):
        for p in cfg.get("run", "p_orders"):
            cache = DeterminantCache(pot, h, region.branch,
                                     search.n_per_piece,
                                     search.kink_correction)
            vals = _pmap(lambda z: cache.det(z, p), zgrid, threads)
            for z, d in zip(zgrid, vals):
                rows.append((float(h), int(p), float(z.real), float(z.imag),
                             float(d.real), float(d.imag)))
    _write_csv(out / "det.csv", cfg,
               ["h", "p", "re_z", "im_z", "re_D", "im_D"], rows)
    return 0


def cmd_resonances(cfg: ExperimentConfig, out: Path, threads: int) -> int:
    pot = cfg.potential()
    region = cfg.region()
    search = cfg.search()
    all_rows = []
    for h in cfg.get("run", "h"):
        rset = locate_resonances(pot, region, h, search)
        payload = {
            "h": h,
            "region": {"r_min": region.r_min, "r_max": region.r_max,
                       "theta0": region.theta0, "eps": region.eps},
            "resonances": [{"re": r.w.real, "im": r.w.imag,
                            "multiplicity": r.multiplicity,
                            "residual": r.newton_residual}
                           for r in rset],
            "boundary_winding": rset.boundary_winding,
        }
        _write_json(out / f"resonances_h{_fmt(float(h))}.json", cfg, payload)
        for r in rset:
            all_rows.append((float(h), r.w.real, r.w.imag, r.multiplicity))
    _write_csv(out / "resonances.csv", cfg,
               ["h", "re_w", "im_w", "mult"], all_rows)
    return 0


def cmd_ssf(cfg: ExperimentConfig, out: Path, threads: int) -> int:
    pot = cfg.potential()
    region = cfg.region()
    numerics = cfg.numerics()
    search = cfg.search()
    sec = cfg["ssf"]
    lams = np.linspace(sec["lambda_lo"], sec["lambda_hi"],
                       sec["lambda_count"])
    summary = {}
    for h in cfg.get("run", "h"):
        profile = ssf_profile(1, pot, lams, h, sec["eps_boundary"], numerics)
        rset = locate_resonances(pot, region, h, search)
        decomp = breit_wigner_decompose(profile, rset)
        rows = [(float(l), float(x), float(lo), float(bgv))
                for l, x, lo, bgv in zip(lams, profile.xi_prime,
                                         decomp.lorentzian_part,
                                         decomp.background_part)]
        _write_csv(out / f"ssf_h{_fmt(float(h))}.csv", cfg,
                   ["lambda", "xi_prime", "lorentzian", "background"], rows)
        bk = birman_krein_check(pot, lams, h, sec["eps_boundary"], numerics)
        summary[_fmt(float(h))] = {
            "bk_max_deviation": bk["max_deviation"],
            "max_abs_xi_prime": bk["max_abs_xi_prime"],
            "n_resonances": len(rset),
        }
    _write_json(out / "ssf_summary.json", cfg, {"per_h": summary})
    return 0


def cmd_counterexample(cfg: ExperimentConfig, out: Path, threads: int) -> int:
    pot = cfg.potential()
    region = cfg.region()
    search = cfg.search()
    sec = cfg["counterexample"]
    window = cfg.blowup_window()
    delta = sec["delta_fraction"] * pot.half_width
    scan = blowup_scan(pot, cfg.get("run", "h"), delta, region, window,
                       search)
    rows = [(float(h), float(w), float(u))
            for h, w, u in zip(scan.h_values, scan.weighted_sups,
                               scan.unweighted_p2_sups)]
    _write_csv(out / "blowup.csv", cfg,
               ["h", "weighted_sup_p3", "unweighted_sup_p2"], rows)
    _write_json(out / "blowup_manifest.json", cfg, {
        "delta": delta,
        "window": {"r_lo": window.r_lo, "r_hi": window.r_hi,
                   "phi_lo": window.phi_lo, "phi_hi": window.phi_hi,
                   "nr": window.nr, "nphi": window.nphi},
        "potential": pot.label,
        "h_values": scan.h_values,
        "weighted_sups": scan.weighted_sups,
        "unweighted_p2_sups": scan.unweighted_p2_sups,
    })
    return 0


def cmd_zeta_check(cfg: ExperimentConfig, out: Path, threads: int) -> int:
    pot = cfg.potential()
    region = cfg.region()
    numerics = cfg.numerics()
    sec = cfg["zeta"]
    grid_spec = (sec["heat_l"], int(sec["heat_n"]))
    points = sec["test_points"]
    h = cfg.get("run", "h")[0]
    cache = DeterminantCache(pot, h, region.branch, numerics.n_per_piece,
                             numerics.kink_correction)
    results = {}
    worst = 0.0
    for p in [p for p in cfg.get("run", "p_orders") if p in (1, 2)]:
        engine = HeatTraceEngine(pot, h, p, grid_spec)
        ts = np.logspace(math.log10(sec["fit_lo"]), math.log10(sec["fit_hi"]),
                         sec["fit_count"])
        samples = heat_trace_samples(pot, h, p, grid_spec, ts)
        expansion = fit_heat_expansion(samples, sec["j_terms"])
        per_point = {}
        for z in points:
            dz = dpzeta(z, expansion, samples, engine.lu,
                        lambda_min=engine.lambda_min)
            dfred = cache.det(z, p)
            dev = abs(dz / dfred - 1.0)
            worst = max(worst, dev)
            per_point[str(z)] = {"zeta": [dz.real, dz.imag],
                                 "fredholm": [dfred.real, dfred.imag],
                                 "rel_dev": dev}
        results[f"p{p}"] = per_point
    _write_json(out / "zeta_check.json", cfg, {
        "h": h, "per_order": results, "fredholm_zeta_rel_dev": worst})
    return 0


def cmd_distort_check(cfg: ExperimentConfig, out: Path, threads: int) -> int:
    pot = cfg.potential()
    region = cfg.region()
    search = cfg.search()
    sec = cfg["distortion"]
    h = cfg.get("run", "h")[0]
    rset = locate_resonances(pot, region, h, search)
    thetas = sec["thetas"]
    rows = []
    spectra = []
    for theta in thetas:
        sp = ScalingProfile(R1=sec["r1"], theta=theta, t_inf=sec["t_inf"])
        op = build_distorted(pot, sp, h, sec["L"], int(sec["n_grid"]))
        clusters = distorted_spectrum(op, region)
        spectra.append(clusters)
        for c in clusters:
            rows.append((float(theta), float(h), c.lam.real, c.lam.imag,
                         c.cluster_size, int(c.isolated)))
    _write_csv(out / "distorted_spectrum.csv", cfg,
               ["theta", "h", "re", "im", "cluster_size", "isolated_flag"],
               rows)
    mismatch = 0.0
    for r in rset:
        isolated = [c.lam for c in spectra[-1] if c.isolated]
        if isolated:
            mismatch = max(mismatch,
                           min(abs(r.w - lam) for lam in isolated))
        else:
            mismatch = math.inf
    report = theta_independence_check(
        pot,
        [ScalingProfile(R1=sec["r1"], theta=t, t_inf=sec["t_inf"])
         for t in thetas],
        region, h, sec["L"], int(sec["n_grid"]))
    _write_json(out / "distort_check.json", cfg, {
        "h": h,
        "max_resonance_mismatch": mismatch,
        "theta_stability": report.max_distance,
        "counts_match": report.counts_match,
        "n_det_zeros": len(rset),
    })
    return 0


def cmd_scaling_study(cfg: ExperimentConfig, out: Path, threads: int) -> int:
    pot = cfg.potential()
    region = cfg.region()
    search = cfg.search()
    window = cfg.blowup_window()
    delta = cfg["counterexample"]["delta_fraction"] * pot.half_width
    rows = []
    shared = {}
    for p in cfg.get("run", "p_orders"):
        table = scaling_study(p, pot, region, cfg.get("run", "h"), window,
                              search, delta=delta if p == 3 else None,
                              resonance_sets=shared)
        for entry in table:
            rows.append((int(p), float(entry["h"]), float(entry["sup"]),
                         float(entry.get("weighted_sup", math.nan))))
    _write_csv(out / "scaling_study.csv", cfg,
               ["p", "h", "sup_dz_phi", "weighted_sup"], rows)
    return 0


_COMMANDS = {
    "det": cmd_det,
    "resonances": cmd_resonances,
    "ssf": cmd_ssf,
    "counterexample": cmd_counterexample,
    "zeta-check": cmd_zeta_check,
    "distort-check": cmd_distort_check,
    "scaling-study": cmd_scaling_study,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="resolab",
        description="1D resonance laboratory batch runner")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="INI config path")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--h", default=None,
                       help="override h list, e.g. 0.4,0.2,0.1")
    return ap


def main(argv=None) -> int:
    level = os.environ.get("RESOLAB_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_file(args.config)
        if args.h is not None:
            cfg.values["run"]["h"] = [float(tok) for tok in args.h.split(",")
                                      if tok.strip()]
        threads = args.threads if args.threads is not None \
            else cfg.get("run", "threads")
        out = Path(args.out if args.out is not None
                   else cfg.get("run", "out_dir"))
        out.mkdir(parents=True, exist_ok=True)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](cfg, out, threads)
    except (ResolabError, FloatingPointError, np.linalg.LinAlgError) as exc:
        diag = {"command": args.command, "error": type(exc).__name__,
                "message": str(exc)}
        (out / "failure.json").write_text(json.dumps(diag, indent=2) + "\n")
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
