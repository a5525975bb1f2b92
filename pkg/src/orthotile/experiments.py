"""Convergence harness: run the refinement pipeline on a domain, compare
the interpolated discrete maps against the exact affine reference (when
the domain is a rectangle with corner marks) or against the next level
(Cauchy criterion), and collect gradient statistics and defect metrics
into a machine-readable report.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.spatial import cKDTree

from . import geom, gridgen, harmonic, holo, tiling
from .extremal import duality_product
from .gridgen import DomainSpec, GenerationError
from .odmap import MarkedRectangleMap

SCHEMA = "orthotile.convergence@1"


# -- reference map ---------------------------------------------------------------


def reference_map(spec: DomainSpec) -> Optional[tuple[Callable[[complex], complex], float]]:
    """Exact conformal reference for rectangle domains whose four marks are
    the four corners: the affine map z -> i (z - B) / (A - B), which sends
    B to 0, A to i and C to L = |CB| / |AB|.  None otherwise."""
    poly = spec.boundary.vertices
    if len(poly) != 4:
        return None
    marks = spec.marked_points
    tol = 1e-9 * max(spec.boundary.diameter(), 1.0)
    perm = []
    for p in marks:
        d = np.sqrt(((poly - p) ** 2).sum(-1))
        k = int(np.argmin(d))
        if d[k] > tol:
            return None
        perm.append(k)
    if sorted(perm) != [0, 1, 2, 3]:
        return None
    va, vb, vc, vd = (poly[k] for k in perm)
    ab = vb - va
    bc = vc - vb
    cd = vd - vc
    if abs(float(ab @ bc)) > tol * np.hypot(*ab) * np.hypot(*bc):
        return None
    if abs(np.hypot(*cd) - np.hypot(*ab)) > tol:
        return None
    A = complex(*va)
    B = complex(*vb)
    C = complex(*vc)
    L_ref = abs(C - B) / abs(A - B)

    def phi(z: complex) -> complex:
        return 1j * (z - B) / (A - B)

    return phi, L_ref


def probe_points(spec: DomainSpec, margin: Optional[float] = None,
                 pitch: Optional[float] = None) -> np.ndarray:
    """Fixed probe compact: a lattice of pitch diameter/64 restricted to
    points at least `margin` (default 0.1 diameter) from the boundary."""
    diam = spec.boundary.diameter()
    if margin is None:
        margin = 0.1 * diam
    if pitch is None:
        pitch = diam / 64.0
    v = spec.boundary.vertices
    x0, y0 = v[:, 0].min(), v[:, 1].min()
    x1, y1 = v[:, 0].max(), v[:, 1].max()
    xs = np.arange(x0 + pitch / 2, x1, pitch)
    ys = np.arange(y0 + pitch / 2, y1, pitch)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel()], 1)
    cls = geom.polygon_contains_many(spec.boundary, pts, 1e-12 * diam)
    inside = np.array([c == geom.INSIDE for c in cls])
    ring = np.vstack([v, v[:1]])
    d = geom.points_to_segments_distance(pts, ring[:-1], ring[1:])
    return pts[inside & (d >= margin)]


# -- gradient statistics ----------------------------------------------------------


@dataclass
class ModulusProfile:
    chi: float           # max primal-edge increment of h
    chi_dual: float      # max dual-edge increment of htilde
    K_hat: float         # chi * log(d_hat_prime / mesh_eps)
    d_hat: float         # distance proxy between the A..B and C..D chains
    d_hat_prime: float   # distance proxy between the B..C and D..A chains
    eps: float


def modulus_profile(m: MarkedRectangleMap, h: harmonic.HarmonicField,
                    h_tilde: harmonic.HarmonicField) -> ModulusProfile:
    """Gradient statistics of a tiled map and the empirical constant
    K_hat = chi log(d_hat' / eps); the arc-distance proxies are lower
    bounds for the crossing diameters, so K_hat over-estimates soundly."""
    gp = m.map.extract_primal()
    gd = m.map.extract_dual()
    iu, iv = harmonic.edge_indices(gp)
    ha = h.as_array()
    chi = float(np.abs(ha[iv] - ha[iu]).max()) if gp.m else 0.0
    iu, iv = harmonic.edge_indices(gd)
    ta = h_tilde.as_array()
    chi_dual = float(np.abs(ta[iv] - ta[iu]).max()) if gd.m else 0.0
    chains = m.arc_chains()
    d_hat = geom.polyline_min_distance(chains[0], chains[2])
    d_hat_p = geom.polyline_min_distance(chains[1], chains[3])
    eps = m.map.mesh_eps
    K_hat = chi * math.log(d_hat_p / eps) if d_hat_p > eps else math.inf
    return ModulusProfile(chi, chi_dual, K_hat, d_hat, d_hat_p, eps)


@dataclass
class PointwiseEntry:
    x: int
    y: int
    separation: float
    increment: float
    product: float       # |h(y)-h(x)| * log(d_hat' / (|y-x| v eps))


@dataclass
class PointwiseReport:
    entries: list[PointwiseEntry] = field(default_factory=list)
    skipped: list[tuple[int, int, str]] = field(default_factory=list)
    K_cal: float = math.inf

    @property
    def max_product(self) -> float:
        return max((e.product for e in self.entries), default=0.0)

    @property
    def ok(self) -> bool:
        return self.max_product <= self.K_cal


def modulus_pointwise_check(m: MarkedRectangleMap, h: harmonic.HarmonicField,
                            pairs, K_cal: float,
                            profile: Optional[ModulusProfile] = None,
                            h_tilde: Optional[harmonic.HarmonicField] = None
                            ) -> PointwiseReport:
    """Bulk modulus-of-continuity check: for vertex pairs with
    |x - y| <= dist to the mesh boundary on both sides, record
    |h(y) - h(x)| log(d_hat' / (|y - x| v eps)) and compare the maximum
    against the calibrated constant.  Non-bulk pairs are skipped with a
    note."""
    if profile is None:
        if h_tilde is None:
            raise ValueError("need either a profile or h_tilde")
        profile = modulus_profile(m, h, h_tilde)
    rep = PointwiseReport(K_cal=K_cal)
    ring = m.map.boundary_polyline()
    pos = m.map.positions
    eps = profile.eps
    for x, y in pairs:
        x, y = int(x), int(y)
        if x == y:
            rep.entries.append(PointwiseEntry(x, y, 0.0, 0.0, 0.0))
            continue
        px, py = pos[x], pos[y]
        r = float(np.hypot(*(px - py)))
        dx = geom.points_to_polyline_distance(np.array([px]), ring)[0]
        dy = geom.points_to_polyline_distance(np.array([py]), ring)[0]
        if r > min(dx, dy):
            rep.skipped.append((x, y, "not in the bulk"))
            continue
        denom = max(r, eps)
        if denom >= profile.d_hat_prime:
            rep.skipped.append((x, y, "separation beyond the bound's range"))
            continue
        inc = abs(h.values[x] - h.values[y])
        rep.entries.append(PointwiseEntry(
            x, y, r, inc, inc * math.log(profile.d_hat_prime / denom)))
    return rep


# -- square symmetry ---------------------------------------------------------------


def rotation_color_swap_symmetric(m: MarkedRectangleMap) -> bool:
    """True when a quarter rotation about the bounding-box center maps the
    map onto itself with the two color classes swapped and carries the
    primal Dirichlet arcs onto the dual arcs (which forces the extremal
    length to be exactly 1 by duality)."""
    mp = m.map
    pos = mp.positions
    lo = pos.min(axis=0)
    hi = pos.max(axis=0)
    c = (lo + hi) / 2.0
    tol = 1e-9 * max(float(np.hypot(*(hi - lo))), 1.0)
    tree = cKDTree(pos)
    for sgn in (1.0, -1.0):
        rel = pos - c
        rot = np.stack([-sgn * rel[:, 1], sgn * rel[:, 0]], 1) + c
        d, idx = tree.query(rot)
        if d.max() > tol:
            continue
        if len(set(idx.tolist())) != mp.n_vertices:
            continue
        if not np.all(mp.colors[idx] == 1 - mp.colors):
            continue
        img_ab = {int(idx[v]) for v in m.arc_ab}
        img_cd = {int(idx[v]) for v in m.arc_cd}
        bc, da = set(m.arc_bc), set(m.arc_da)
        if (img_ab == bc and img_cd == da) or (img_ab == da and img_cd == bc):
            return True
    return False


# -- the harness --------------------------------------------------------------------


@dataclass
class LevelRecord:
    eps: float
    error: Optional[str] = None
    delta: float = math.nan
    L_n: float = math.nan
    face_count: int = 0
    sup_dev_vs_reference: Optional[float] = None
    sup_dev_vs_next_level: Optional[float] = None
    chi: float = math.nan
    chi_dual: float = math.nan
    K_hat: float = math.nan
    d_hat: float = math.nan
    d_hat_prime: float = math.nan
    mesh_eps: float = math.nan
    duality_defect: float = math.nan
    cr_residual: float = math.nan
    phi_gap_bound: float = math.nan
    area_defect: float = math.nan
    overlap_count: int = 0
    containment_count: int = 0
    symmetric_square: bool = False
    runtime_s: float = math.nan

    def to_json_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class ConvergenceReport:
    spec: DomainSpec
    eps0: float
    probe_margin: float
    levels: list[LevelRecord]
    L_ref: Optional[float] = None
    C_sup_dev: Optional[float] = None
    K_hat_coarsest: Optional[float] = None
    probe_count: int = 0

    def to_json_dict(self) -> dict:
        return {"schema": SCHEMA,
                "spec": self.spec.to_json_dict(),
                "eps0": self.eps0,
                "probe_margin": self.probe_margin,
                "probe_count": self.probe_count,
                "L_ref": self.L_ref,
                "C_sup_dev": self.C_sup_dev,
                "K_hat_coarsest": self.K_hat_coarsest,
                "calibration_policy": ("C_sup_dev and K_hat_coarsest are fixed at "
                                       "the coarsest level; calibrated gradient "
                                       "constants use 4x K_hat_coarsest"),
                "levels": [lv.to_json_dict() for lv in self.levels]}

    def to_csv(self) -> str:
        cols = list(LevelRecord.__dataclass_fields__)
        lines = [",".join(cols)]
        for lv in self.levels:
            lines.append(",".join("" if getattr(lv, c) is None else str(getattr(lv, c))
                                  for c in cols))
        return "\n".join(lines) + "\n"


def save_report(path: str, rep: ConvergenceReport) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(rep.to_json_dict(), fh, indent=1)
        fh.write("\n")


def _worker_count() -> int:
    try:
        return max(1, int(os.environ.get("ORTHOTILE_THREADS", "1")))
    except ValueError:
        return 1


def _run_level(spec: DomainSpec, eps: float, probes: np.ndarray,
               solver_tol: float, verify_tol: float,
               save_dir: Optional[str] = None, level: int = 0):
    rec = LevelRecord(eps=eps)
    t0 = time.perf_counter()
    try:
        mm, cert = gridgen.grid_approximation(spec, eps)
    except GenerationError as exc:
        rec.error = str(exc)
        rec.runtime_s = time.perf_counter() - t0
        return rec, None
    rec.delta = cert.delta
    rec.face_count = mm.map.n_faces
    rec.mesh_eps = mm.map.mesh_eps
    t, h, ht = tiling.build_tiling(mm, tol=solver_tol)
    rec.L_n = t.L
    vrep = tiling.verify_tiling(t, tol=verify_tol)
    rec.area_defect = vrep.area_defect
    rec.overlap_count = len(vrep.overlaps)
    rec.containment_count = len(vrep.containment)
    lp, ld, prod = duality_product(mm, tol=solver_tol)
    rec.duality_defect = abs(prod - 1.0)
    F = holo.assemble(mm, h, ht)
    rec.cr_residual = F.max_cr_residual
    prof = modulus_profile(mm, h, ht)
    rec.chi = prof.chi
    rec.chi_dual = prof.chi_dual
    rec.K_hat = prof.K_hat
    rec.d_hat = prof.d_hat
    rec.d_hat_prime = prof.d_hat_prime
    # per-face tiling map vs interpolated extension: both land in the same
    # tile rectangle up to one gradient step, bounded by the modulus shape
    dmin = min(prof.d_hat, prof.d_hat_prime)
    if dmin > prof.eps and math.isfinite(prof.K_hat):
        rec.phi_gap_bound = (prof.K_hat * max(t.L, 1.0)
                             / math.log(dmin / prof.eps))
    rec.symmetric_square = rotation_color_swap_symmetric(mm)
    if save_dir is not None:
        from . import odmap as _odmap
        base = os.path.join(save_dir, f"level{level:02d}")
        _odmap.save_map(base + ".map.json", mm.map, mm.marked)
        with open(base + ".cert.json", "w", encoding="utf-8") as fh:
            json.dump(cert.to_json_dict(), fh, indent=1)
            fh.write("\n")
        tiling.save_tiling(base + ".tiling.json", t)
    interp = tiling.InterpolatedMap(mm, h, ht)
    vals = np.full(len(probes), np.nan + 0j, dtype=complex)
    for i, p in enumerate(probes):
        try:
            vals[i] = interp.evaluate(p)
        except ValueError:
            pass
    rec.runtime_s = time.perf_counter() - t0
    return rec, vals


def convergence_run(spec: DomainSpec, eps0: float, levels: int,
                    probe_margin: Optional[float] = None,
                    solver_tol: float = 1e-12, verify_tol: float = 1e-9,
                    save_dir: Optional[str] = None) -> ConvergenceReport:
    """Generate, tile, verify and probe `levels` refinements with
    eps = eps0 / 2^k.  Per-level generation errors are recorded and the
    run continues.  Deviations are measured against the affine reference
    when one exists, and against the next level always.  With save_dir the
    per-level map, certificate and tiling files are persisted for
    re-verification."""
    if levels < 2:
        raise ValueError("need at least 2 levels")
    diam = spec.boundary.diameter()
    if probe_margin is None:
        probe_margin = 0.1 * diam
    if save_dir is not None:
        os.makedirs(save_dir, exist_ok=True)
    probes = probe_points(spec, probe_margin)
    probes_c = probes[:, 0] + 1j * probes[:, 1]

    ref = reference_map(spec)
    eps_list = [eps0 * 2.0 ** (-k) for k in range(levels)]
    workers = min(_worker_count(), levels)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(
                lambda ke: _run_level(spec, ke[1], probes, solver_tol, verify_tol,
                                      save_dir, ke[0]), enumerate(eps_list)))
    else:
        results = [_run_level(spec, e, probes, solver_tol, verify_tol, save_dir, k)
                   for k, e in enumerate(eps_list)]

    recs = [r for r, _ in results]
    vals = [v for _, v in results]

    if ref is not None:
        phi, L_ref = ref
        phi_vals = np.array([phi(z) for z in probes_c])
    for k, (rec, v) in enumerate(zip(recs, vals)):
        if v is None:
            continue
        good = ~np.isnan(v.real)
        if ref is not None and good.any():
            rec.sup_dev_vs_reference = float(np.abs(v[good] - phi_vals[good]).max())
        if k + 1 < levels and vals[k + 1] is not None:
            both = good & ~np.isnan(vals[k + 1].real)
            if both.any():
                rec.sup_dev_vs_next_level = float(
                    np.abs(v[both] - vals[k + 1][both]).max())

    rep = ConvergenceReport(spec=spec, eps0=eps0, probe_margin=probe_margin,
                            levels=recs, probe_count=len(probes))
    if ref is not None:
        rep.L_ref = ref[1]
    first_ok = next((r for r in recs if r.error is None), None)
    if first_ok is not None:
        rep.K_hat_coarsest = first_ok.K_hat
        if first_ok.sup_dev_vs_reference is not None:
            rep.C_sup_dev = first_ok.sup_dev_vs_reference * math.log(1.0 / first_ok.eps)
    return rep
