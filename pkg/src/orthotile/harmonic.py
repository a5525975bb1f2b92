"""Discrete potential theory on weighted graphs.

Dirichlet solves use conjugate gradient on the reduced SPD system (free
vertices in ascending-id order, Jacobi preconditioner), so results are
deterministic.  A dense direct solve is provided as an independent oracle,
and a random-walk estimator gives a third route to the same values.
"""

from __future__ import annotations

import collections
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse import csgraph

from .odmap import MarkedRectangleMap, WeightedGraph

DEFAULT_TOL = 1e-10


class SolverError(RuntimeError):
    """Dirichlet solve failed (disconnected free region, no convergence)."""

    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message)
        self.residual = residual


class ConjugacyError(RuntimeError):
    """Cycle residuals of the integrated conjugate exceed tolerance."""


def _graph_cache(g: WeightedGraph) -> dict:
    cache = getattr(g, "_cache", None)
    if cache is None:
        cache = {}
        object.__setattr__(g, "_cache", cache)
    return cache


def edge_indices(g: WeightedGraph) -> tuple[np.ndarray, np.ndarray]:
    """Edge endpoints as indices into g.ids (which is sorted)."""
    cache = _graph_cache(g)
    if "eidx" not in cache:
        iu = np.searchsorted(g.ids, g.edge_u)
        iv = np.searchsorted(g.ids, g.edge_v)
        cache["eidx"] = (iu, iv)
    return cache["eidx"]


def values_array(g: WeightedGraph, values: Mapping[int, float]) -> np.ndarray:
    return np.array([values[int(i)] for i in g.ids], dtype=float)


def dirichlet_energy_arr(g: WeightedGraph, varr: np.ndarray) -> float:
    iu, iv = edge_indices(g)
    d = varr[iv] - varr[iu]
    return float(np.sum(g.edge_c * d * d))


def dirichlet_energy(g: WeightedGraph, values: Mapping[int, float]) -> float:
    """sum over edges of c(e) (f(e+) - f(e-))^2."""
    return dirichlet_energy_arr(g, values_array(g, values))


def laplacian_arr(g: WeightedGraph, varr: np.ndarray) -> np.ndarray:
    iu, iv = edge_indices(g)
    lap = np.zeros(g.n)
    flux = g.edge_c * (varr[iv] - varr[iu])
    np.add.at(lap, iu, flux)
    np.add.at(lap, iv, -flux)
    return lap


@dataclass
class HarmonicField:
    """Vertex potential on one color class with its boundary record.

    values maps every vertex id of the graph to a float; boundary maps the
    pinned ids to their pinned values.  residual is max |Laplacian| over
    free vertices, checked against tol at construction, and energy is
    sum_e c(e) (df(e))^2.  The maximum principle is enforced up to
    tol * gap slack.
    """

    graph: WeightedGraph
    values: dict[int, float]
    boundary: dict[int, float]
    tol: float
    residual: float = field(init=False)
    energy: float = field(init=False)

    def __post_init__(self):
        varr = values_array(self.graph, self.values)
        free = np.array([int(i) not in self.boundary for i in self.graph.ids])
        lap = laplacian_arr(self.graph, varr)
        self.residual = float(np.abs(lap[free]).max()) if free.any() else 0.0
        self.energy = dirichlet_energy_arr(self.graph, varr)
        scale = max(max(abs(v) for v in self.boundary.values()), 1.0)
        if self.residual > self.tol * scale:
            raise SolverError(
                f"free-vertex residual {self.residual:.3e} exceeds tol {self.tol:.3e}",
                residual=self.residual)
        bvals = list(self.boundary.values())
        lo, hi = min(bvals), max(bvals)
        slack = max(self.tol, 1e-12) * max(hi - lo, 1.0)
        if varr.min() < lo - slack or varr.max() > hi + slack:
            raise SolverError("maximum principle violated by solved field")
        self._arr = varr

    def gap(self) -> float:
        b = list(self.boundary.values())
        return max(b) - min(b)

    def as_array(self) -> np.ndarray:
        return self._arr


def _reduced_system(g: WeightedGraph, pinned: Mapping[int, float]):
    """Laplacian restricted to free vertices (ascending id) and its rhs."""
    ids = g.ids
    pin_mask = np.isin(ids, np.fromiter((int(k) for k in pinned), dtype=np.int64,
                                        count=len(pinned)))
    if int(pin_mask.sum()) != len(pinned):
        raise SolverError("a pinned vertex is not in the graph")
    pin_val = np.zeros(g.n)
    idx_of = {int(v): i for i, v in enumerate(ids)}
    for k, v in pinned.items():
        pin_val[idx_of[int(k)]] = float(v)

    free_ids = ids[~pin_mask]
    fidx = np.full(g.n, -1, dtype=np.int64)
    fidx[~pin_mask] = np.arange(len(free_ids))
    nf = len(free_ids)

    iu, iv = edge_indices(g)
    c = g.edge_c
    diag = np.zeros(g.n)
    np.add.at(diag, iu, c)
    np.add.at(diag, iv, c)

    both = (~pin_mask[iu]) & (~pin_mask[iv])
    rows = np.concatenate([fidx[iu[both]], fidx[iv[both]], np.arange(nf)])
    cols = np.concatenate([fidx[iv[both]], fidx[iu[both]], np.arange(nf)])
    data = np.concatenate([-c[both], -c[both], diag[~pin_mask]])
    A = sp.csr_matrix((data, (rows, cols)), shape=(nf, nf))

    b = np.zeros(nf)
    u_free = (~pin_mask[iu]) & pin_mask[iv]
    v_free = pin_mask[iu] & (~pin_mask[iv])
    np.add.at(b, fidx[iu[u_free]], c[u_free] * pin_val[iv[u_free]])
    np.add.at(b, fidx[iv[v_free]], c[v_free] * pin_val[iu[v_free]])
    return free_ids, A, b, diag[~pin_mask]


def _check_connectivity(g: WeightedGraph, pinned: Mapping[int, float]) -> None:
    iu, iv = edge_indices(g)
    adj = sp.csr_matrix((np.ones(g.m), (iu, iv)), shape=(g.n, g.n))
    _, labels = csgraph.connected_components(adj, directed=False)
    idx_of = {int(v): i for i, v in enumerate(g.ids)}
    pinned_labels = {labels[idx_of[int(k)]] for k in pinned}
    bad = np.flatnonzero(~np.isin(labels, list(pinned_labels)))
    if bad.size:
        raise SolverError(f"{bad.size} free vertices unreachable from the pinned set "
                          f"(first: {int(g.ids[bad[0]])})")


def solve_dirichlet(g: WeightedGraph, pinned: Mapping[int, float],
                    tol: float = DEFAULT_TOL,
                    maxiter: Optional[int] = None) -> HarmonicField:
    """Solve the Dirichlet problem: pinned values on the given vertices,
    zero Laplacian everywhere else.

    Conjugate gradient with Jacobi preconditioning on the reduced system,
    relative residual <= tol.  Raises SolverError for an empty pinned set,
    a free component with no pinned neighbor, or non-convergence.
    """
    if not pinned:
        raise SolverError("pinned set is empty")
    pinned = {int(k): float(v) for k, v in pinned.items()}
    _check_connectivity(g, pinned)
    free_ids, A, b, diag = _reduced_system(g, pinned)
    values = dict(pinned)
    if len(free_ids):
        if maxiter is None:
            maxiter = max(int(20 * math.isqrt(len(free_ids)) + 1), 10_000)
        M = sp.diags(1.0 / diag)
        x0 = np.full(len(free_ids), float(np.mean(list(pinned.values()))))
        x, info = spla.cg(A, b, x0=x0, rtol=tol, atol=0.0, maxiter=maxiter, M=M)
        if info != 0:
            res = float(np.linalg.norm(b - A @ x) / max(np.linalg.norm(b), 1e-300))
            raise SolverError(f"CG did not converge in {maxiter} iterations", residual=res)
        values.update({int(vv): float(x[i]) for i, vv in enumerate(free_ids)})
    # the l2 residual bound controls the vertexwise Laplacian only up to a
    # norm factor; the field check keeps a safety margin
    field_tol = max(tol * 1e4, 1e-13)
    return HarmonicField(g, values, pinned, field_tol)


def solve_dirichlet_dense(g: WeightedGraph, pinned: Mapping[int, float]) -> HarmonicField:
    """Independent oracle: direct dense solve of the reduced system."""
    if not pinned:
        raise SolverError("pinned set is empty")
    pinned = {int(k): float(v) for k, v in pinned.items()}
    _check_connectivity(g, pinned)
    free_ids, A, b, _ = _reduced_system(g, pinned)
    values = dict(pinned)
    if len(free_ids):
        x = np.linalg.solve(A.toarray(), b)
        values.update({int(vv): float(x[i]) for i, vv in enumerate(free_ids)})
    return HarmonicField(g, values, pinned, 1e-8)


@dataclass
class Flow:
    """Antisymmetric edge function, stored once per undirected edge in the
    graph's edge order, oriented edge_u -> edge_v."""

    graph: WeightedGraph
    theta: np.ndarray
    source_set: frozenset[int]
    sink_set: frozenset[int]

    def divergence_arr(self) -> np.ndarray:
        iu, iv = edge_indices(self.graph)
        div = np.zeros(self.graph.n)
        np.add.at(div, iu, self.theta)
        np.add.at(div, iv, -self.theta)
        return div

    def divergence(self) -> dict[int, float]:
        div = self.divergence_arr()
        return {int(v): float(div[i]) for i, v in enumerate(self.graph.ids)}

    @property
    def strength(self) -> float:
        div = self.divergence()
        return sum(div[v] for v in self.source_set)

    def energy(self) -> float:
        return float(np.sum(self.theta * self.theta / self.graph.edge_c))

    def scaled(self, s: float) -> "Flow":
        return Flow(self.graph, self.theta * s, self.source_set, self.sink_set)

    def check(self, rel: float = 1e-10) -> None:
        div = self.divergence()
        s = self.strength
        scale = max(abs(s), max(abs(d) for d in div.values()), 1e-300)
        for i in self.graph.ids:
            v = int(i)
            if v in self.source_set or v in self.sink_set:
                continue
            if abs(div[v]) > rel * scale:
                raise ValueError(f"nonzero divergence {div[v]:.3e} at free vertex {v}")
        sink_total = sum(div[v] for v in self.sink_set)
        if abs(s + sink_total) > rel * scale:
            raise ValueError("source and sink strengths do not balance")


def gradient_flow(f: HarmonicField) -> Flow:
    """Current flow c * df of a solved field; sources are the pinned
    vertices at the minimum value, sinks at the maximum, so the strength
    is positive and E(flow) = E(f)."""
    g = f.graph
    iu, iv = edge_indices(g)
    varr = f.as_array()
    theta = g.edge_c * (varr[iv] - varr[iu])
    bvals = f.boundary
    lo, hi = min(bvals.values()), max(bvals.values())
    sources = frozenset(v for v, val in bvals.items() if val == lo)
    sinks = frozenset(v for v, val in bvals.items() if val == hi)
    return Flow(g, theta, sources, sinks)


def effective_resistance(g: WeightedGraph, S, T, tol: float = DEFAULT_TOL) -> float:
    """R_eff(S <-> T) = 1 / E(h) for h pinned 0 on S, 1 on T.

    Pinning both whole sets is the vertex identification of the set
    version of effective resistance.
    """
    S, T = {int(s) for s in S}, {int(t) for t in T}
    if not S or not T:
        raise SolverError("S and T must be nonempty")
    if S & T:
        raise SolverError("S and T overlap")
    pinned = {s: 0.0 for s in S}
    pinned.update({t: 1.0 for t in T})
    h = solve_dirichlet(g, pinned, tol)
    return 1.0 / h.energy


def harmonic_conjugate(m: MarkedRectangleMap, h: HarmonicField,
                       cycle_tol_rel: float = 1e-8) -> tuple[HarmonicField, float]:
    """Integrate the conjugate dual field of a primal tiling solution.

    Across each face (v1, w1, v2, w2) the increment is
    htilde(w2) - htilde(w1) = c(v1, v2) (h(v2) - h(v1)); integration runs
    over a breadth-first spanning tree of the dual graph rooted at the
    smallest-id vertex of the arc [D, A], and the result is shifted so the
    minimum over that arc is 0.  The maximum leftover CR residual on
    non-tree dual edges is checked against cycle_tol_rel * max(gap, 1) and
    returned alongside the field.
    """
    g_dual = m.map.extract_dual()
    scale = max(h.gap(), 1.0)

    hv = np.zeros(m.map.n_vertices)
    for k, v in h.values.items():
        hv[int(k)] = v
    f = m.map.faces
    gp_c = m.map.extract_primal().edge_c
    inc = gp_c * (hv[f[:, 2]] - hv[f[:, 0]])
    w1_idx = np.searchsorted(g_dual.ids, f[:, 1]).tolist()
    w2_idx = np.searchsorted(g_dual.ids, f[:, 3]).tolist()

    n = g_dual.n
    nf = len(f)
    adj: list[list[tuple[int, int, float]]] = [[] for _ in range(n)]
    for fi in range(nf):
        a, b = w1_idx[fi], w2_idx[fi]
        adj[a].append((b, fi, 1.0))
        adj[b].append((a, fi, -1.0))
    for lst in adj:
        lst.sort()

    root = int(np.searchsorted(g_dual.ids, min(m.arc_da)))
    inc_l = inc.tolist()
    vals_l = [0.0] * n
    seen = [False] * n
    seen[root] = True
    tree_face = np.zeros(nf, dtype=bool)
    dq = collections.deque([root])
    reached = 1
    while dq:
        u = dq.popleft()
        vu = vals_l[u]
        for nb, fi, s in adj[u]:
            if not seen[nb]:
                seen[nb] = True
                tree_face[fi] = True
                vals_l[nb] = vu + s * inc_l[fi]
                dq.append(nb)
                reached += 1
    if reached != n:
        raise ConjugacyError("dual graph is not connected")

    vals = np.array(vals_l)
    res = np.abs(vals[np.array(w2_idx)] - vals[np.array(w1_idx)] - inc)
    max_res = float(res[~tree_face].max()) if (~tree_face).any() else 0.0
    if max_res > cycle_tol_rel * scale:
        raise ConjugacyError(
            f"max non-tree CR residual {max_res:.3e} exceeds {cycle_tol_rel:.1e} * {scale:.3g}; "
            "the primal field is not harmonic enough")

    da_idx = np.searchsorted(g_dual.ids, sorted(m.arc_da))
    vals -= vals[da_idx].min()

    values = {int(v): float(vals[i]) for i, v in enumerate(g_dual.ids)}
    boundary = {int(v): values[int(v)] for v in list(m.arc_bc) + list(m.arc_da)}
    field_tol = max(cycle_tol_rel * 10.0, 1e-12)
    conj = HarmonicField(g_dual, values, boundary, field_tol)
    return conj, max_res


def random_walk_oracle(g: WeightedGraph, pinned: Mapping[int, float], v: int,
                       n_walks: int, seed: int,
                       max_total_steps: int = 10 ** 8) -> tuple[float, float]:
    """Monte Carlo estimate of the harmonic value at v: expected pinned
    value at the first hit of the pinned set, walking with transition
    probabilities c(x, y) / pi_x.  Deterministic for a fixed seed."""
    pinned = {int(k): float(val) for k, val in pinned.items()}
    v = int(v)
    if v in pinned:
        raise SolverError("probe vertex is pinned")
    if n_walks < 100:
        raise SolverError("need at least 100 walks")
    adj = g.adjacency()
    neigh: dict[int, np.ndarray] = {}
    cdf: dict[int, np.ndarray] = {}
    for u, lst in adj.items():
        neigh[u] = np.array([x for x, _ in lst], dtype=np.int64)
        ws = np.array([c for _, c in lst])
        cdf[u] = np.cumsum(ws) / ws.sum()
    rng = np.random.default_rng(seed)
    hits = np.empty(n_walks)
    total = 0
    for k in range(n_walks):
        cur = v
        while cur not in pinned:
            r = rng.random()
            cur = int(neigh[cur][np.searchsorted(cdf[cur], r)])
            total += 1
            if total > max_total_steps:
                raise SolverError(f"random walk exceeded {max_total_steps} total steps")
        hits[k] = pinned[cur]
    est = float(hits.mean())
    stderr = float(hits.std(ddof=1) / math.sqrt(n_walks)) if n_walks > 1 else 0.0
    return est, stderr
