import numpy as np
import pytest

from conftest import star_map, strip_map
from orthotile import tiling


def test_star_tiling_hand_oracle():
    # hand-solved: L = 1, four half-side squares of [0, 1]^2
    t, h, ht = tiling.build_tiling(star_map())
    assert t.L == 1.0
    boxes = sorted((tl.x0, tl.x1, tl.y0, tl.y1) for tl in t.tiles)
    assert boxes == [(0.0, 0.5, 0.0, 0.5), (0.0, 0.5, 0.5, 1.0),
                     (0.5, 1.0, 0.0, 0.5), (0.5, 1.0, 0.5, 1.0)]
    assert t.degenerate_count == 0
    assert abs(h.energy - t.L) < 1e-12
    assert abs(ht.energy - h.energy) < 1e-12


def test_strip_tiling_hand_oracle():
    # hand-solved on the 10-face strip: L = 3, two half-height columns at
    # each end, three full-height middle tiles, four degenerate tiles
    t, h, ht = tiling.build_tiling(strip_map())
    assert abs(t.L - 3.0) < 1e-12
    live = sorted((round(tl.x0, 12), round(tl.x1, 12), round(tl.y0, 12),
                   round(tl.y1, 12)) for tl in t.tiles if not tl.degenerate)
    assert live == [(0.0, 0.5, 0.0, 0.5), (0.0, 0.5, 0.5, 1.0),
                    (0.5, 1.5, 0.0, 1.0), (1.5, 2.5, 0.0, 1.0),
                    (2.5, 3.0, 0.0, 0.5), (2.5, 3.0, 0.5, 1.0)]
    assert t.degenerate_count == 4
    # columns share y-intervals
    left = [tl for tl in t.tiles if not tl.degenerate and tl.x0 == 0.0]
    assert sorted((tl.y0, tl.y1) for tl in left) == [(0.0, 0.5), (0.5, 1.0)]


def test_energy_area_identity(rect_map16):
    mm, _ = rect_map16
    t, h, ht = tiling.build_tiling(mm)
    assert abs(t.total_area() - t.L) <= 1e-9 * max(t.L, 1.0)
    assert abs(h.energy - t.L) <= 1e-9 * max(t.L, 1.0)
    assert abs(ht.energy - h.energy) <= 1e-10 * max(h.energy, 1.0)


def test_tile_coordinates_reused_bitwise(rect_map16):
    mm, _ = rect_map16
    t, h, ht = tiling.build_tiling(mm)
    for tl in t.tiles[:100]:
        f = mm.map.faces[tl.face]
        xs = sorted((h.values[int(f[0])], h.values[int(f[2])]))
        ys = sorted((ht.values[int(f[1])], ht.values[int(f[3])]))
        assert (tl.x0, tl.x1) == tuple(xs)
        assert (tl.y0, tl.y1) == tuple(ys)


def test_aspect_ratio_identity(rect_map16):
    mm, _ = rect_map16
    t, h, ht = tiling.build_tiling(mm)
    c = mm.map.extract_primal().edge_c
    for tl in t.tiles:
        if tl.degenerate:
            continue
        r = 1.0 / c[tl.face]
        assert abs(tl.height / tl.width - r) <= 1e-8 * (1.0 + r)


def test_verify_tiling_passes_and_detects_faults():
    t, _, _ = tiling.build_tiling(strip_map())
    assert tiling.verify_tiling(t).ok
    # widen one tile: an overlap appears and is named
    bad = [tiling.Tile(tl.face, tl.edge, tl.x0, tl.x1 + (1e-3 if tl.x0 == 0.0 and tl.y0 == 0.0 else 0),
                       tl.y0, tl.y1, tl.degenerate) for tl in t.tiles]
    rep = tiling.verify_tiling(tiling.Tiling(t.L, bad))
    assert not rep.ok
    assert rep.overlaps
    pair = rep.overlaps[0][:2]
    assert 0 in pair  # face 0 is the widened bottom-left tile
    # shift one tile out of the target rectangle
    bad2 = [tiling.Tile(tl.face, tl.edge, tl.x0 - (1.0 if tl.face == 0 else 0),
                        tl.x1, tl.y0, tl.y1, tl.degenerate) for tl in t.tiles]
    rep2 = tiling.verify_tiling(tiling.Tiling(t.L, bad2))
    assert any(face == 0 for face, _ in rep2.containment)


def test_verify_empty_tiling_vacuous():
    rep = tiling.verify_tiling(tiling.Tiling(0.0, []))
    assert rep.ok and rep.area_defect == 0.0


def test_interpolated_map_exactness(rect_map16):
    mm, _ = rect_map16
    t, h, ht = tiling.build_tiling(mm)
    f = tiling.InterpolatedMap(mm, h, ht)
    pos = mm.map.positions
    for v in list(h.values)[:40]:
        assert abs(f.evaluate(pos[int(v)]).real - h.values[int(v)]) < 1e-12
    for w in list(ht.values)[:40]:
        assert abs(f.evaluate(pos[int(w)]).imag - ht.values[int(w)]) < 1e-12
    with pytest.raises(ValueError):
        f.evaluate((50.0, 50.0))


def test_interpolated_map_centroid_average():
    mm = star_map()
    t, h, ht = tiling.build_tiling(mm)
    f = tiling.InterpolatedMap(mm, h, ht)
    for fi, face in enumerate(mm.map.faces):
        c = mm.map.positions[face].mean(axis=0)
        v1, w1, v2, w2 = (int(x) for x in face)
        want = ((h.values[v1] + h.values[v2]) / 2
                + 0.5j * (ht.values[w1] + ht.values[w2]))
        # the diamonds' centroids coincide with the primal-diagonal midpoint
        assert abs(f.evaluate(c) - want) < 1e-12


def test_interpolated_map_continuity_across_edges(rect_map16):
    mm, _ = rect_map16
    t, h, ht = tiling.build_tiling(mm)
    f = tiling.InterpolatedMap(mm, h, ht)
    rng = np.random.default_rng(3)
    pos = mm.map.positions
    sides = list(mm.map.side_edges())
    for k in rng.integers(0, len(sides), 25):
        a, b = sides[int(k)]
        lam = rng.uniform(0.2, 0.8)
        p = (1 - lam) * pos[a] + lam * pos[b]
        va = f.evaluate(p)
        vb = (1 - lam) * f.vertex_values[a] + lam * f.vertex_values[b]
        assert abs(va - vb) < 1e-9


def test_interpolation_lipschitz_per_face(rect_map16):
    mm, _ = rect_map16
    t, h, ht = tiling.build_tiling(mm)
    f = tiling.InterpolatedMap(mm, h, ht)
    rng = np.random.default_rng(5)
    cents = mm.map.face_centroids()
    for fi in rng.integers(0, mm.map.n_faces, 20):
        face = mm.map.faces[int(fi)]
        corners = f.vertex_values[face]
        spread = np.abs(corners[:, None] - corners[None, :]).max()
        c = cents[int(fi)]
        for _ in range(5):
            q = c + rng.uniform(-0.2, 0.2, 2) * mm.map.mesh_eps
            try:
                val = f.evaluate(q)
            except ValueError:
                continue
            assert np.abs(val - f.evaluate(c)) <= spread + 1e-12


def test_render_svg_deterministic_and_counts():
    t, _, _ = tiling.build_tiling(strip_map())
    svg1 = tiling.render_svg(t)
    svg2 = tiling.render_svg(t)
    assert svg1 == svg2
    assert svg1.count("<rect") == len(t.tiles) - t.degenerate_count
    assert "degenerate tiles omitted: 4" in svg1
    t2, _, _ = tiling.build_tiling(star_map())
    assert tiling.render_svg(t2).count("<rect") == 4


def test_tiling_json_roundtrip(tmp_path):
    t, _, _ = tiling.build_tiling(strip_map())
    p = tmp_path / "t.json"
    tiling.save_tiling(str(p), t)
    t2 = tiling.load_tiling(str(p))
    assert t2.L == t.L
    assert [(a.x0, a.x1, a.y0, a.y1) for a in t2.tiles] == \
        [(a.x0, a.x1, a.y0, a.y1) for a in t.tiles]
    p2 = tmp_path / "t2.json"
    tiling.save_tiling(str(p2), t2)
    assert p.read_bytes() == p2.read_bytes()


def test_degenerate_tiles_flagged_not_dropped():
    t, _, _ = tiling.build_tiling(strip_map())
    assert len(t.tiles) == 10
    assert t.degenerate_count == 4
    degs = [tl for tl in t.tiles if tl.degenerate]
    assert all(tl.area == 0.0 for tl in degs)
    assert abs(t.total_area() - t.L) < 1e-12
