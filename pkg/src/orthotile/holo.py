"""Discrete holomorphicity diagnostics: per-face Cauchy-Riemann residuals,
discrete contour integrals, and the discrete Green identity.

A discrete holomorphic function carries its real part on primal vertices
and its imaginary part on dual vertices; on each face (v1, w1, v2, w2) the
difference quotients along the two diagonals agree:
(F(v2) - F(v1)) / (z(v2) - z(v1)) = (F(w2) - F(w1)) / (z(w2) - z(w1)).

Contours are simple closed walks in the quadrangulation, alternating
primal/dual vertices.  Admissibility (the walk encloses only faces of the
map) is checked by comparing the walk polygon's area with the total area
of the enclosed faces.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import harmonic
from .odmap import DUAL, PRIMAL, MarkedRectangleMap, OrthodiagonalMap


class ContourError(ValueError):
    """Walk is not a simple closed admissible contour."""


@dataclass
class DiscreteHolomorphic:
    """F with Re on primal vertices and Im on dual vertices, plus the
    per-face CR residuals of the pair."""

    m: OrthodiagonalMap
    real_part: dict[int, float]
    imag_part: dict[int, float]

    def __post_init__(self):
        self.z = self.m.positions[:, 0] + 1j * self.m.positions[:, 1]
        vals = np.zeros(self.m.n_vertices, dtype=complex)
        for k, v in self.real_part.items():
            vals[int(k)] = v
        for k, v in self.imag_part.items():
            vals[int(k)] = 1j * v
        self.values = vals
        f = self.m.faces
        dz_p = self.z[f[:, 2]] - self.z[f[:, 0]]
        dz_d = self.z[f[:, 3]] - self.z[f[:, 1]]
        dF_p = vals[f[:, 2]] - vals[f[:, 0]]
        dF_d = vals[f[:, 3]] - vals[f[:, 1]]
        self.face_residuals = np.abs(dF_p / dz_p - dF_d / dz_d)

    @property
    def max_cr_residual(self) -> float:
        return float(self.face_residuals.max()) if len(self.face_residuals) else 0.0

    def max_abs(self) -> float:
        return float(np.abs(self.values).max())


def assemble(m: MarkedRectangleMap, h: harmonic.HarmonicField,
             h_tilde: harmonic.HarmonicField) -> DiscreteHolomorphic:
    """Bundle a conjugate tiling pair as F = h + i htilde."""
    return DiscreteHolomorphic(m.map,
                               {int(k): float(v) for k, v in h.values.items()},
                               {int(k): float(v) for k, v in h_tilde.values.items()})


def from_function(m: OrthodiagonalMap, fn: Callable[[complex], complex]
                  ) -> DiscreteHolomorphic:
    """Sample a complex function: Re(fn) on primal vertices, Im(fn) on dual."""
    real, imag = {}, {}
    for v in range(m.n_vertices):
        z = complex(m.positions[v, 0], m.positions[v, 1])
        if m.colors[v] == PRIMAL:
            real[v] = fn(z).real
        else:
            imag[v] = fn(z).imag
    return DiscreteHolomorphic(m, real, imag)


# -- contours ---------------------------------------------------------------------


def _normalize_walk(m: OrthodiagonalMap, walk: Sequence[int]) -> list[int]:
    w = [int(x) for x in walk]
    if len(w) >= 2 and w[0] == w[-1]:
        w = w[:-1]
    if len(w) < 4:
        raise ContourError("walk too short")
    if len(set(w)) != len(w):
        raise ContourError("walk is not simple")
    sides = m.side_edges()
    for a, b in zip(w, w[1:] + w[:1]):
        if (min(a, b), max(a, b)) not in sides:
            raise ContourError(f"walk step {a}->{b} is not an edge of the map")
        if m.colors[a] == m.colors[b]:
            raise ContourError("walk does not alternate colors")
    return w


def enclosed_faces(m: OrthodiagonalMap, walk: Sequence[int]) -> np.ndarray:
    """Face ids whose centroid lies inside the walk polygon (even-odd)."""
    w = _normalize_walk(m, walk)
    poly = m.positions[np.array(w, dtype=np.int64)]
    cent = m.face_centroids()
    x, y = cent[:, 0], cent[:, 1]
    x1, y1 = poly[:, 0], poly[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
    cond = (y1[None, :] > y[:, None]) != (y2[None, :] > y[:, None])
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = x1[None, :] + (y[:, None] - y1[None, :]) * (x2 - x1)[None, :] / (y2 - y1)[None, :]
    crossings = np.sum(cond & (x[:, None] < xint), axis=1)
    return np.flatnonzero(crossings % 2 == 1)


def _check_admissible(m: OrthodiagonalMap, walk: list[int]) -> np.ndarray:
    """Enclosed interior faces must tile the walk polygon exactly."""
    from .geom import signed_area
    poly = m.positions[np.array(walk, dtype=np.int64)]
    area = signed_area(poly)
    inside = enclosed_faces(m, walk)
    face_area = float(m.face_areas()[inside].sum())
    if abs(abs(area) - face_area) > 1e-9 * max(abs(area), 1e-12):
        raise ContourError("walk encloses a region not tiled by interior faces")
    return inside


def contour_integral(F: DiscreteHolomorphic, contour: Sequence[int]) -> complex:
    """Discrete contour integral sum (F(e-) + F(e+)) (z(e+) - z(e-)) over
    the directed walk; vanishes for discrete holomorphic F on admissible
    contours."""
    w = _normalize_walk(F.m, contour)
    _check_admissible(F.m, w)
    idx = np.array(w + [w[0]], dtype=np.int64)
    fv = F.values[idx]
    zv = F.z[idx]
    return complex(np.sum((fv[:-1] + fv[1:]) * (zv[1:] - zv[:-1])))


def face_integral(F: DiscreteHolomorphic, fi: int) -> complex:
    """Single-face contour integral; equals
    (dF_primal)(dz_dual) - (dF_dual)(dz_primal), i.e. the CR defect."""
    f = F.m.faces[fi]
    idx = np.array(list(f) + [f[0]], dtype=np.int64)
    fv = F.values[idx]
    zv = F.z[idx]
    return complex(np.sum((fv[:-1] + fv[1:]) * (zv[1:] - zv[:-1])))


def sidewalks(m: OrthodiagonalMap, walk: Sequence[int]) -> tuple[list[int], list[int]]:
    """Split an alternating walk into its primal and dual vertex cycles."""
    w = _normalize_walk(m, walk)
    prim = [v for v in w if m.colors[v] == PRIMAL]
    dual = [v for v in w if m.colors[v] == DUAL]
    return prim, dual


def _paired_sum(F: DiscreteHolomorphic, walk: list[int]) -> complex:
    """sum_i F(w_i) (z(x_i) - z(x_{i-1})) over primal w_i with flanking
    dual walk vertices x_{i-1}, x_i."""
    w = list(walk)
    if F.m.colors[w[0]] != PRIMAL:
        w = w[1:] + w[:1]
    total = 0j
    n = len(w)
    for i in range(0, n, 2):
        wp = w[i]
        x_prev = w[(i - 1) % n]
        x_next = w[(i + 1) % n]
        total += F.values[wp].real * (F.z[x_next] - F.z[x_prev])
    return complex(total)


def green_residual(F: DiscreteHolomorphic, outer: Sequence[int],
                   inner: Sequence[int]) -> complex:
    """Defect of the discrete Green identity on the annulus between two
    counterclockwise contours:

        P(outer) - P(inner) - sum_{faces in annulus} (F(u2)-F(u1))(z(v2)-z(v1))

    where P pairs the real part at primal walk vertices with the flanking
    dual position increments.  Zero (to rounding) for any real primal data.
    """
    from .geom import signed_area
    wo = _normalize_walk(F.m, outer)
    wi = _normalize_walk(F.m, inner)
    if signed_area(F.m.positions[np.array(wo)]) <= 0:
        raise ContourError("outer walk must be counterclockwise")
    if signed_area(F.m.positions[np.array(wi)]) <= 0:
        raise ContourError("inner walk must be counterclockwise")
    fo = set(_check_admissible(F.m, wo).tolist())
    fi_ = set(_check_admissible(F.m, wi).tolist())
    if not fi_ <= fo:
        raise ContourError("inner walk is not nested inside the outer walk")
    annulus = sorted(fo - fi_)
    f = F.m.faces[np.array(annulus, dtype=np.int64)] if annulus else np.zeros((0, 4), dtype=np.int64)
    dF_p = F.values[f[:, 2]].real - F.values[f[:, 0]].real
    dz_d = F.z[f[:, 3]] - F.z[f[:, 1]]
    face_sum = complex(np.sum(dF_p * dz_d))
    return _paired_sum(F, wo) - _paired_sum(F, wi) - face_sum


def boundary_walk_of_faces(m: OrthodiagonalMap, face_ids: Sequence[int]) -> list[int]:
    """Counterclockwise boundary walk of a simply-connected union of faces
    (the standard way to build an admissible contour)."""
    face_ids = sorted(set(int(x) for x in face_ids))
    count: dict[tuple[int, int], int] = {}
    directed: dict[int, int] = {}
    pinched = False
    for fi in face_ids:
        f = m.faces[fi]
        for k in range(4):
            a, b = int(f[k]), int(f[(k + 1) % 4])
            key = (min(a, b), max(a, b))
            count[key] = count.get(key, 0) + 1
    for fi in face_ids:
        f = m.faces[fi]
        for k in range(4):
            a, b = int(f[k]), int(f[(k + 1) % 4])
            if count[(min(a, b), max(a, b))] == 1:
                if a in directed:
                    pinched = True
                directed[a] = b
    if pinched or not directed:
        raise ContourError("face set has a pinched or empty boundary")
    start = min(directed)
    walk = [start]
    cur = directed[start]
    while cur != start:
        walk.append(cur)
        cur = directed[cur]
        if len(walk) > len(directed):
            raise ContourError("face-set boundary did not close")
    if len(walk) != len(directed):
        raise ContourError("face set is not simply connected")
    return walk
