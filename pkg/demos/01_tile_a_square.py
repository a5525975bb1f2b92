"""Walkthrough: from a polygon to a rectangle tiling.

Builds a diamond-grid approximation of the unit square with marks at the
four corners, solves the two boundary value problems, assembles the BSST
tiling and writes an SVG next to this script.
"""

import pathlib

from orthotile import gridgen, tiling

spec = gridgen.DomainSpec(
    boundary=[[0, 0], [1, 0], [1, 1], [0, 1]],
    marked_points=[[0, 1], [0, 0], [1, 0], [1, 1]],
)

mm, cert = gridgen.grid_approximation(spec, eps=1 / 32)
print(f"generated {mm.map.n_faces} faces, mesh eps = {mm.map.mesh_eps:.4f}, "
      f"certified crosscut delta = {cert.delta:.4f}")

t, h, h_tilde = tiling.build_tiling(mm)
print(f"extremal length L = {t.L:.8f} (continuum value: 1)")
print(f"tiles: {len(t.tiles)}, degenerate: {t.degenerate_count}")
print(f"Dirichlet energy of h = {h.energy:.8f} = total tile area "
      f"= {t.total_area():.8f}")

report = tiling.verify_tiling(t)
print(f"containment violations: {len(report.containment)}, "
      f"overlaps: {len(report.overlaps)}, area defect: {report.area_defect:.2e}")

out = pathlib.Path(__file__).with_name("square_tiling.svg")
out.write_text(tiling.render_svg(t))
print(f"wrote {out}")
