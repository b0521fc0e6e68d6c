"""SVG pictures of apartments of relative rank 1 or 2.

The picture shows the alcoves near the base point, the nu-walls and the
reflection walls of the wall group (two stroke classes), the dominant
retained alcoves labeled with their expected dimension ``N - sep``, and the
shaded fundamental alcove.  Retained alcoves whose clan contributes nothing
get the ``label-empty`` style.  Output is deterministic: coordinates are
printed with three decimals and elements are emitted in sorted order.
"""
from __future__ import annotations

from typing import Dict, List, Optional, Sequence, Tuple
from xml.sax.saxutils import escape

import numpy as np

from . import kernels
from .apartment import Apartment, clan_decomposition
from .coinvariant import build_quotient, image_hilbert
from .rootdata import InvalidSpec

STYLE = """
.alcove { fill: none; stroke: #c8c8c8; stroke-width: 0.6 }
.fundamental { fill: #b0b0b0; stroke: #808080; stroke-width: 0.8 }
.retained { fill: #fde9e4; stroke: #a0a0a0; stroke-width: 0.8 }
.nu-wall { stroke: #1f5fbf; stroke-width: 1.6; stroke-dasharray: 6 3 }
.wall { stroke: #202020; stroke-width: 2.2 }
.base { fill: #000000 }
.label { fill: #c0392b; font: 12px sans-serif; text-anchor: middle; dominant-baseline: central }
.label-empty { fill: #1e8449; font: 12px sans-serif; text-anchor: middle; dominant-baseline: central }
""".strip()


def _embedding(ap: Apartment) -> np.ndarray:
    """Matrix M with Euclidean position = M @ x for x in simple-root coordinates.

    Rank-1 apartments are drawn on the horizontal axis, so M is always 2 x r.
    """
    g = np.array([[float(v) for v in row] for row in ap.datum.gram])
    M = np.linalg.cholesky(np.linalg.inv(g)).T
    if ap.r == 1:
        M = np.vstack([M, np.zeros((1, 1))])
    return M


def _fmt(v: float) -> str:
    s = f"{v:.3f}"
    return "0.000" if s == "-0.000" else s


def _clip_line(normal, b, box) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """Segment of {p : normal . p = b} inside an axis-parallel box."""
    x0, y0, x1, y1 = box
    n = np.asarray(normal, dtype=float)
    p0 = n * b / float(n @ n)
    d = np.array([-n[1], n[0]])
    lo, hi = -np.inf, np.inf
    for k, (a, c) in enumerate(((x0, x1), (y0, y1))):
        if abs(d[k]) < 1e-12:
            if not a <= p0[k] <= c:
                return None
            continue
        t1, t2 = (a - p0[k]) / d[k], (c - p0[k]) / d[k]
        lo, hi = max(lo, min(t1, t2)), min(hi, max(t1, t2))
    if lo >= hi:
        return None
    return p0 + lo * d, p0 + hi * d


def _window_alcoves(ap: Apartment, M: np.ndarray, box, limit: int = 5000) -> List[np.ndarray]:
    """Vertex arrays (scaled coordinates) of all alcoves meeting the box."""
    x0, y0, x1, y1 = box
    r = ap.r
    W = np.eye(r, dtype=np.int64)[None]
    T = np.zeros((1, r), dtype=np.int64)
    seen = {ap.B0.tobytes()}
    out = [ap.vertices_scaled.copy()]
    empty = np.zeros((0, r), dtype=np.int64)
    while len(W) and len(out) < limit:
        B, Wn, Tn, _, _ = kernels.expand(W, T, ap.SB, ap.C, ap.A, ap.n0, empty, np.zeros(0, np.int64),
                                         empty, np.zeros(0, np.int64))
        nW, nT = [], []
        for q in range(B.shape[0]):
            for i in range(B.shape[1]):
                k = B[q, i].tobytes()
                if k in seen:
                    continue
                seen.add(k)
                verts = ap.vertices_scaled @ Wn[q, i].T + Tn[q, i][None, :]
                pts = (verts / ap.D) @ M.T
                if pts[:, 0].max() < x0 or pts[:, 0].min() > x1 or pts[:, 1].max() < y0 or pts[:, 1].min() > y1:
                    continue
                out.append(verts)
                nW.append(Wn[q, i])
                nT.append(Tn[q, i])
        W = np.array(nW, dtype=np.int64).reshape(-1, r, r)
        T = np.array(nT, dtype=np.int64).reshape(-1, r)
    return out


def apartment_svg(ap: Apartment, alcoves: Optional[Sequence] = None, size: int = 480) -> Tuple[str, Dict]:
    """Render the apartment; returns (svg text, structural summary)."""
    if ap.r not in (1, 2):
        raise InvalidSpec("apartment pictures need relative rank at most 2")
    if alcoves is None:
        alcoves = ap.enumerate()
    M = _embedding(ap)
    D = ap.D
    base = (ap.P / D) @ M.T
    clans = clan_decomposition(ap, alcoves)
    group = ap.walls.group
    Q = build_quotient(group)
    empty_masks = set()
    for c in clans:
        lam = [group.project(f) for f in c.lambda_factors]
        if len(lam) > group.reflection_count or sum(image_hilbert(Q, lam)) == 0:
            empty_masks.add("".join(c.sign_vector))

    # window: retained alcoves, fundamental alcove, and the foot of every wall from the base point
    pts = [(ap.vertices_scaled / D) @ M.T, base[None, :]]
    for a in alcoves:
        pts.append((a.vertices_scaled() / D) @ M.T)
    walls = []
    for cls, lin, off in (("nu-wall", ap.nu_lin, ap.nu_off), ("wall", ap.wall_lin, ap.wall_off)):
        for c, o in zip(lin, off):
            normal = np.linalg.pinv(M).T @ c.astype(float)  # c . x = normal . p
            b = -float(o) / D
            foot = normal * b / float(normal @ normal)
            pts.append(foot[None, :])
            walls.append((cls, normal, b))
    allp = np.vstack(pts)
    lo, hi = allp.min(axis=0), allp.max(axis=0)
    pad = 0.25 * float(max(hi - lo)) + 1e-3
    box = (lo[0] - pad, lo[1] - pad, hi[0] + pad, hi[1] + pad)
    scale = size / max(box[2] - box[0], box[3] - box[1])

    def tx(p):
        return _fmt((p[0] - box[0]) * scale), _fmt((box[3] - p[1]) * scale)

    band = 0.08 * (box[2] - box[0])

    def poly(verts, cls, extra=""):
        ptsE = (verts / D) @ M.T
        if ap.r == 1:
            # a rank-1 alcove is a segment; draw it as a thin band
            ptsE = np.array([ptsE[0] + [0, band], ptsE[1] + [0, band], ptsE[1] - [0, band], ptsE[0] - [0, band]])
        # order vertices counter-clockwise around the centroid
        cen = ptsE.mean(axis=0)
        ang = np.arctan2(ptsE[:, 1] - cen[1], ptsE[:, 0] - cen[0])
        ptsE = ptsE[np.argsort(ang, kind="stable")]
        s = " ".join(",".join(tx(p)) for p in ptsE)
        return f'<polygon class="{cls}" points="{s}"{extra}/>'

    width = _fmt((box[2] - box[0]) * scale)
    height = _fmt((box[3] - box[1]) * scale)
    title = f"{ap.datum.spec.label} nu={ap.slope.label}"
    body = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f"<title>{escape(title)}</title>",
        f"<style>{STYLE}</style>",
    ]
    background = []
    for verts in _window_alcoves(ap, M, box):
        background.append(poly(verts, "alcove"))
    body.extend(sorted(background))
    body.append(poly(ap.vertices_scaled, "fundamental"))
    labels = []
    for a in alcoves:
        mask = ap.negative_mask(a)
        sv = "".join("-" if n else "+" for n in mask)
        body.append(poly(a.vertices_scaled(), "retained", f' data-clan="{sv}"'))
        cls = "label-empty" if sv in empty_masks else "label"
        val = ap.N - a.sep_count
        x, y = tx((a.barycenter_scaled / D) @ M.T)
        labels.append((val, cls, f'<text class="{cls}" x="{x}" y="{y}" data-clan="{sv}">{val}</text>'))
    wall_lines = []
    for cls, normal, b in walls:
        seg = _clip_line(normal, b, box)
        if seg is None:
            raise AssertionError("wall misses the drawing window")
        (xa, ya), (xb, yb) = tx(seg[0]), tx(seg[1])
        wall_lines.append(f'<line class="{cls}" x1="{xa}" y1="{ya}" x2="{xb}" y2="{yb}"/>')
    body.extend(wall_lines)
    bx, by = tx(base)
    body.append(f'<circle class="base" cx="{bx}" cy="{by}" r="3"/>')
    body.extend(t for _, _, t in labels)
    body.append("</svg>")
    summary = {
        "type": ap.datum.spec.label,
        "slope": ap.slope.label,
        "nu_walls": int(len(ap.nu_lin)),
        "walls": int(len(ap.wall_lin)),
        "clans": len(clans),
        "labels": sorted(v for v, _, _ in labels),
        "empty_labels": sorted(v for v, cls, _ in labels if cls == "label-empty"),
    }
    return "\n".join(body) + "\n", summary
