"""Resonance location and background extraction.

Resonances are the zeros of det_1 on the continued sheet.  The search
subdivides the region (a polar rectangle) by the argument principle:
boxes with winding 0 are dropped, winding 1 goes to Newton, winding >= 2
splits until the zeros separate.  After factoring the located zeros out
of D_p, the remaining log is the holomorphic background phi_p.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .determinants import (DET_FLOOR, DeterminantCache, LogDetPath,
                           _wrap_imag, track_log_along_path)
from .errors import (BoundaryZero, BranchError, BudgetExceeded,
                     NonIntegerWinding, PathTooCloseToResonance, ZeroOnPath)
from .freefield import SpectralRegion
from .potentials import Potential

log = logging.getLogger("resolab")

__all__ = [
    "Resonance",
    "ResonanceSet",
    "BackgroundProfile",
    "SearchConfig",
    "WindowGrid",
    "winding_number",
    "locate_resonances",
    "factor_background",
    "scaling_study",
]


@dataclass(frozen=True)
class Resonance:
    w: complex
    multiplicity: int
    newton_residual: float


@dataclass
class ResonanceSet:
    resonances: List[Resonance]
    region: SpectralRegion
    h: float
    boundary_winding: int = 0
    boundary_logdet_max: float = -np.inf

    def __iter__(self):
        return iter(self.resonances)

    def __len__(self):
        return len(self.resonances)

    @property
    def positions(self) -> np.ndarray:
        return np.array([r.w for r in self.resonances])

    @property
    def total_multiplicity(self) -> int:
        return sum(r.multiplicity for r in self.resonances)


@dataclass
class BackgroundProfile:
    samples: List[Tuple[complex, complex, complex]]  # (z, phi_p, dz_phi_p)
    p_order: int
    h: float
    branch_anchor: complex

    @property
    def z_values(self) -> np.ndarray:
        return np.array([s[0] for s in self.samples])

    @property
    def phi_values(self) -> np.ndarray:
        return np.array([s[1] for s in self.samples])

    @property
    def dz_phi_values(self) -> np.ndarray:
        return np.array([s[2] for s in self.samples])


@dataclass
class SearchConfig:
    """Knobs for the argument-principle subdivision."""

    n_per_piece: int = 128
    kink_correction: bool = True
    edge_points: int = 10
    phi_pad: float = 0.02
    phi_top_max: float = 0.5       # zeros never lie above this argument
    boundary_floor: float = 1e-8
    max_depth: int = 40
    multi_zero_size: float = 1e-8
    newton_max_iter: int = 80
    residual_factor: float = 1e-9  # |det(w)| < factor * boundary max
    split_fractions: Tuple[float, ...] = (0.5, 0.43, 0.57, 0.35, 0.65)


@dataclass
class WindowGrid:
    """Polar-rectangle sample grid; serpentine order keeps path steps short."""

    r_lo: float
    r_hi: float
    phi_lo: float
    phi_hi: float
    nr: int = 20
    nphi: int = 20

    def points(self) -> np.ndarray:
        rs = np.linspace(self.r_lo, self.r_hi, self.nr)
        ps = np.linspace(self.phi_lo, self.phi_hi, self.nphi)
        out = []
        for i, r in enumerate(rs):
            row = [r * np.exp(1j * p) for p in ps]
            if i % 2:
                row.reverse()
            out.extend(row)
        return np.array(out)


def winding_number(path_log: LogDetPath) -> int:
    """round(total Im increment / 2 pi); the path must be closed."""
    if abs(path_log.path[0] - path_log.path[-1]) > 1e-12:
        raise ValueError("winding_number needs a closed path")
    turns = path_log.total_imag_increment / (2.0 * math.pi)
    nearest = round(turns)
    if abs(turns - nearest) >= 0.05:
        raise NonIntegerWinding(f"winding residual {turns - nearest:+.4f}")
    return int(nearest)


# ---------------------------------------------------------------------------
# subdivision search
# ---------------------------------------------------------------------------

def _sheet_k(r: float, phi: float) -> complex:
    return math.sqrt(r) * complex(math.cos(phi / 2), math.sin(phi / 2))


def phase_budget_points(z_from: tuple, z_to: tuple, h: float, width: float,
                        base: int, cap: int = 2000) -> int:
    """Sample count needed to resolve the determinant phase along an edge.

    On the continued sheet log det is dominated by eigenvalue factors
    exp(2 i k spread / h); their total phase change along the edge is about
    2 width |dk| / h per large eigenvalue, and roughly |Im k| width/(pi h)
    eigenvalues are large.  Sampling below this budget can alias a full
    turn past the pi/2 refinement threshold.
    """
    k0 = _sheet_k(*z_from)
    k1 = _sheet_k(*z_to)
    dk = abs(k1 - k0)
    im = max(0.0, -min(k0.imag, k1.imag))
    k_eff = 1.0 + im * width / (math.pi * h)
    budget = 2.0 * width * dk / h * k_eff
    return max(base, min(cap, int(math.ceil(budget / 1.2)) + 1))


def _rect_boundary(rect, base_pts: int, h: float = None,
                   width: float = None) -> List[tuple]:
    """Closed boundary of a polar rectangle as (r, phi) parameters."""
    r1, r2, p1, p2 = rect
    path: List[tuple] = []

    def npts(a, b):
        if h is None or width is None:
            return base_pts
        return phase_budget_points(a, b, h, width, base_pts)

    def radial(r_from, r_to, phi):
        n = npts((r_from, phi), (r_to, phi))
        rs = np.linspace(r_from, r_to, n + 1)[:-1]
        path.extend((float(r), float(phi)) for r in rs)

    def arc(phi_from, phi_to, r):
        n = npts((r, phi_from), (r, phi_to))
        ps = np.linspace(phi_from, phi_to, n + 1)[:-1]
        path.extend((float(r), float(p)) for p in ps)

    radial(r1, r2, p1)
    arc(p1, p2, r2)
    radial(r2, r1, p2)
    arc(p2, p1, r1)
    path.append(path[0])
    return path


def _polar_point(p) -> complex:
    return p[0] * complex(math.cos(p[1]), math.sin(p[1]))


def _polar_mid(p0, p1):
    return (0.5 * (p0[0] + p1[0]), 0.5 * (p0[1] + p1[1]))


def _rect_diameter(rect) -> float:
    r1, r2, p1, p2 = rect
    return max(r2 - r1, r2 * (p2 - p1))


def _rect_center(rect) -> complex:
    r1, r2, p1, p2 = rect
    return 0.5 * (r1 + r2) * np.exp(0.5j * (p1 + p2))


def _rect_contains(rect, z: complex, slack: float = 0.0) -> bool:
    r1, r2, p1, p2 = rect
    r = abs(z)
    phi = np.angle(z)
    for cand in (phi, phi - 2 * math.pi, phi + 2 * math.pi):
        if p1 - slack <= cand <= p2 + slack and \
                r1 - slack <= r <= r2 + slack:
            return True
    return False


class _Search:
    def __init__(self, cache: DeterminantCache, cfg: SearchConfig):
        self.cache = cache
        self.cfg = cfg
        self.width = cache.pot.half_width
        self.h = cache.h
        self.found: List[Resonance] = []
        self.boundary_logmax = -np.inf

    def winding_of(self, rect) -> Tuple[int, float, float]:
        """(winding, max Re log det, min Re log det) over the boundary."""
        pts = _rect_boundary(rect, self.cfg.edge_points, self.h, self.width)
        try:
            tracked = track_log_along_path(
                lambda z: self.cache.logdet(z, 1), pts,
                to_point=_polar_point, midpoint=_polar_mid)
        except ZeroOnPath as exc:
            raise BoundaryZero(str(exc)) from exc
        res = [lv.real for lv in tracked.log_values]
        return winding_number(tracked), float(max(res)), float(min(res))

    def newton(self, rect) -> Optional[Resonance]:
        # Newton on the logarithmic derivative: z <- z - 1/(d/dz log det),
        # immune to the huge determinant magnitudes on the continued sheet
        diam = _rect_diameter(rect)
        z = _rect_center(rect)
        delta = 1e-6 * diam
        try:
            for _ in range(self.cfg.newton_max_iter):
                dlog = _wrap_imag(self.cache.logdet(z + delta, 1)
                                  - self.cache.logdet(z - delta, 1))
                if dlog == 0:
                    return None
                step = 2 * delta / dlog
                if abs(step) > 0.5 * diam:
                    step *= 0.5 * diam / abs(step)
                z = z - step
                # keep the difference stencil well inside the contraction
                # basin: the log derivative needs delta << |z - w|
                delta = max(min(delta, 0.1 * abs(step)),
                            1e-12 * max(abs(z), 1e-3))
                if not _rect_contains(rect, z, slack=0.3 * diam):
                    return None
                if abs(step) < 1e-13 * max(abs(z), 1.0):
                    break
            # accept only a zero strictly inside this box: a capture from a
            # neighboring box would double-count against the winding sum
            if not _rect_contains(rect, z, slack=1e-12 * max(abs(z), 1.0)):
                return None
            resid_log = self.cache.logdet(z, 1).real
        except BranchError:
            return None
        if resid_log > math.log(self.cfg.residual_factor) + self.boundary_logmax:
            return None
        resid = float(np.exp(np.clip(resid_log, -745.0, 700.0)))
        return Resonance(w=complex(z), multiplicity=1, newton_residual=resid)

    def split(self, rect) -> List[Tuple]:
        r1, r2, p1, p2 = rect
        for frac in self.cfg.split_fractions:
            rm = r1 + frac * (r2 - r1)
            pm = p1 + frac * (p2 - p1)
            kids = [(r1, rm, p1, pm), (rm, r2, p1, pm),
                    (r1, rm, pm, p2), (rm, r2, pm, p2)]
            # reject a split whose new interior lines pass near a zero
            probe = []
            for kid in kids:
                probe.extend(
                    _rect_boundary(kid, max(4, self.cfg.edge_points // 2),
                                   self.h, self.width))
            if min(self.cache.logdet(_polar_point(p), 1).real
                   for p in probe) > math.log(DET_FLOOR * 10):
                return kids
        raise BoundaryZero(f"could not split {rect} away from zeros")

    def process(self, rect, depth: int):
        if depth > self.cfg.max_depth:
            raise BudgetExceeded(f"subdivision depth {depth} at {rect}")
        wind, logmax, logmin = self.winding_of(rect)
        self.boundary_logmax = max(self.boundary_logmax, logmax)
        if depth == 0 and logmin < math.log(self.cfg.boundary_floor):
            raise BoundaryZero(
                f"min log|det1| = {logmin:.2f} on the region boundary")
        if wind == 0:
            return
        if wind == 1:
            res = self.newton(rect)
            if res is not None:
                self.found.append(res)
                return
        if _rect_diameter(rect) < self.cfg.multi_zero_size:
            resid_log = self.cache.logdet(_rect_center(rect), 1).real
            resid = float(np.exp(np.clip(resid_log, -745.0, 700.0)))
            log.warning("reporting multiple zero m=%d at %s", wind,
                        _rect_center(rect))
            self.found.append(Resonance(w=_rect_center(rect),
                                        multiplicity=wind,
                                        newton_residual=resid))
            return
        for kid in self.split(rect):
            self.process(kid, depth + 1)


def locate_resonances(p: Potential, region: SpectralRegion, h: float,
                      cfg: SearchConfig = None) -> ResonanceSet:
    """Zeros of det_1 in the region, with multiplicities from windings."""
    cfg = cfg or SearchConfig()
    cache = DeterminantCache(p, h, region.branch, cfg.n_per_piece,
                             cfg.kink_correction)
    phi_lo = region.phi_lo + cfg.phi_pad
    phi_hi = min(region.phi_hi - cfg.phi_pad, cfg.phi_top_max)
    if phi_hi <= phi_lo:
        raise ValueError("empty search window after padding")
    rect0 = (region.r_min, region.r_max, phi_lo, phi_hi)
    search = _Search(cache, cfg)
    wind0, logmax0, logmin0 = search.winding_of(rect0)
    search.boundary_logmax = logmax0
    if logmin0 < math.log(cfg.boundary_floor):
        raise BoundaryZero(
            f"min log|det1| = {logmin0:.2f} on the region boundary")
    if wind0 != 0:
        search.process(rect0, 0)
    total = sum(r.multiplicity for r in search.found)
    if total != wind0:
        raise NonIntegerWinding(
            f"boundary winding {wind0} but located multiplicity sum {total}")
    found = sorted(search.found, key=lambda r: (r.w.real, r.w.imag))
    log.info("located %d resonances (winding %d) at h=%g with %d det evals",
             len(found), wind0, h, cache.evaluations)
    return ResonanceSet(resonances=found, region=region, h=h,
                        boundary_winding=wind0, boundary_logdet_max=logmax0)


# ---------------------------------------------------------------------------
# background factoring
# ---------------------------------------------------------------------------

MIN_RESONANCE_DISTANCE = 1e-4


def factor_background(p_order: int, pot: Potential, rs: ResonanceSet,
                      sample_path: Sequence[complex],
                      cfg: SearchConfig = None,
                      cache: DeterminantCache = None) -> BackgroundProfile:
    """phi_p along the path after dividing out the located zeros.

    The tracked quantity is q(z) = D_p(z) / prod (z - w)^m, which is
    nonvanishing and holomorphic on the region, so the continuous log is
    well defined even between resonances.  dz_phi uses a 5-point stencil
    on log D_p minus the exact pole sum.
    """
    cfg = cfg or SearchConfig()
    if cache is None:
        cache = DeterminantCache(pot, rs.h, rs.region.branch,
                                 cfg.n_per_piece, cfg.kink_correction)
    ws = [(r.w, r.multiplicity) for r in rs.resonances]
    pts = [complex(z) for z in sample_path]
    for z in pts:
        for w, _ in ws:
            if abs(z - w) < MIN_RESONANCE_DISTANCE:
                raise PathTooCloseToResonance(
                    f"sample {z} within {abs(z - w):.2e} of resonance {w}")

    def log_quotient(z):
        val = cache.logdet(z, p_order)
        for w, m in ws:
            val -= m * np.log(z - w)
        return val

    # densify between samples so the exponential phase never aliases a
    # full turn past the tracker's refinement threshold
    width = pot.half_width
    branch = rs.region.branch
    dense = [pts[0]]
    for z0, z1 in zip(pts[:-1], pts[1:]):
        n = phase_budget_points((abs(z0), branch.arg(z0)),
                                (abs(z1), branch.arg(z1)),
                                rs.h, width, 1)
        dense.extend(z0 + (z1 - z0) * j / n for j in range(1, n))
        dense.append(z1)  # keep the sample itself bit-exact for lookup

    # D_p for p >= 2 carries exp(trace corrections) whose real part is
    # legitimately huge-negative at small h; only a stalled refinement
    # (an actual zero on the path) should abort, not a magnitude floor.
    tracked = track_log_along_path(log_quotient, dense, floor=-1e9)
    # original samples are a subsequence of the refined path
    phi_at = {}
    it = iter(zip(tracked.path, tracked.log_values))
    for z in pts:
        for zp, lv in it:
            if zp == z:
                phi_at[z] = lv
                break

    r_scale = min(abs(z) for z in pts)
    delta = 1e-4 * max(r_scale, 1e-6)
    samples = []
    for z in pts:
        l0 = cache.logdet(z, p_order)
        lvals = [_wrap_imag(cache.logdet(z + off, p_order) - l0)
                 for off in (-2 * delta, -delta, delta, 2 * delta)]
        dlog = (lvals[0] - 8 * lvals[1] + 8 * lvals[2] - lvals[3]) / (12 * delta)
        dphi = dlog - sum(m / (z - w) for w, m in ws)
        samples.append((z, phi_at[z], dphi))
    return BackgroundProfile(samples=samples, p_order=p_order, h=rs.h,
                             branch_anchor=pts[0])


def scaling_study(p_order: int, pot: Potential, region: SpectralRegion,
                  h_list: Sequence[float], W: WindowGrid,
                  cfg: SearchConfig = None, delta: float = None,
                  resonance_sets: dict = None):
    """Table of (h, sup_W |dz phi_p| [, weighted sup for the p=3 check]).

    ``resonance_sets`` may carry pre-located ResonanceSet objects keyed by
    h to share work between sweeps at different p.
    """
    cfg = cfg or SearchConfig()
    rows = []
    for h in h_list:
        rs = None if resonance_sets is None else resonance_sets.get(h)
        if rs is None:
            rs = locate_resonances(pot, region, h, cfg)
            if resonance_sets is not None:
                resonance_sets[h] = rs
        path = W.points()
        bg = factor_background(p_order, pot, rs, path, cfg)
        dz = bg.dz_phi_values
        sup = float(np.max(np.abs(dz)))
        row = {"h": h, "sup": sup}
        if delta is not None:
            zs = bg.z_values
            roots = np.array([region.sqrt(z) for z in zs])
            weight = np.exp(delta * roots.imag / h)
            row["weighted_sup"] = float(np.max(np.abs(h * weight * dz)))
        rows.append(row)
    return rows
