"""Self-contained SVG rendering for choropleth maps and cost-potential curves.

No plotting dependency: the functions emit deterministic SVG strings with
linear class breaks between the data minimum and maximum and a fixed
seven-class ramp, both documented in the README's config reference.
"""

from __future__ import annotations

import math

# light-yellow to dark-red sequential ramp
RAMP = ("#ffffcc", "#ffeda0", "#fed976", "#feb24c", "#fd8d3c", "#e31a1c", "#800026")
CURVE_COLORS = ("#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02")

WIDTH, HEIGHT = 760, 560
MAP_MARGIN = 30


def _class_index(value: float, lo: float, hi: float) -> int:
    if not math.isfinite(value):
        return 0
    if hi <= lo:
        return len(RAMP) // 2
    frac = (value - lo) / (hi - lo)
    return min(len(RAMP) - 1, max(0, int(frac * len(RAMP))))


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _polygon_paths(geometry: dict) -> list[list[tuple[float, float]]]:
    if geometry["type"] == "Polygon":
        polys = [geometry["coordinates"]]
    else:
        polys = geometry["coordinates"]
    return [[(float(x), float(y)) for x, y in ring] for poly in polys for ring in poly[:1]]


def choropleth_svg(features: list[dict], values: dict[str, float], title: str,
                   unit: str = "") -> str:
    """Color region polygons by value with a linear-break legend.

    features are GeoJSON features carrying a "gid" property; values maps gid
    to the plotted number. Regions without a value render hatched gray.
    """
    rings_by_gid = {}
    lons, lats = [], []
    for feature in features:
        gid = str(feature["properties"]["gid"])
        rings = _polygon_paths(feature["geometry"])
        rings_by_gid[gid] = rings
        for ring in rings:
            lons.extend(p[0] for p in ring)
            lats.extend(p[1] for p in ring)
    lon0, lon1 = min(lons), max(lons)
    lat0, lat1 = min(lats), max(lats)
    span = max(lon1 - lon0, lat1 - lat0, 1e-9)
    scale = (min(WIDTH, HEIGHT) - 2 * MAP_MARGIN) / span

    def project(lon, lat):
        return (MAP_MARGIN + (lon - lon0) * scale,
                MAP_MARGIN + (lat1 - lat) * scale)

    finite = [v for v in values.values() if math.isfinite(v)]
    lo = min(finite) if finite else 0.0
    hi = max(finite) if finite else 1.0

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<title>{title}</title>',
        f'<text x="{MAP_MARGIN}" y="18" font-family="sans-serif" font-size="14">{title}</text>',
    ]
    for gid in sorted(rings_by_gid):
        value = values.get(gid)
        if value is None or not math.isfinite(value):
            fill = "#cccccc"
        else:
            fill = RAMP[_class_index(value, lo, hi)]
        for ring in rings_by_gid[gid]:
            pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in (project(*p) for p in ring))
            parts.append(
                f'<polygon points="{pts}" fill="{fill}" stroke="#333333" stroke-width="0.8">'
                f'<title>{gid}: {_fmt(value) if value is not None else "n/a"}</title></polygon>'
            )
    # legend: linear class breaks
    legend_x = WIDTH - 170
    parts.append(f'<text x="{legend_x}" y="{MAP_MARGIN}" font-family="sans-serif" '
                 f'font-size="11">{unit}</text>')
    for i, color in enumerate(RAMP):
        y = MAP_MARGIN + 10 + i * 20
        b0 = lo + (hi - lo) * i / len(RAMP)
        b1 = lo + (hi - lo) * (i + 1) / len(RAMP)
        parts.append(f'<rect x="{legend_x}" y="{y}" width="16" height="16" fill="{color}" '
                     f'stroke="#333333" stroke-width="0.5"/>')
        parts.append(f'<text x="{legend_x + 22}" y="{y + 12}" font-family="sans-serif" '
                     f'font-size="10">{_fmt(b0)} - {_fmt(b1)}</text>')
    parts.append("</svg>")
    return "\n".join(parts)


def curves_svg(curves: dict[str, list[tuple[float, float]]], title: str,
               x_label: str, y_label: str) -> str:
    """Plot one polyline per named curve over shared linear axes."""
    pad = 52
    xs = [x for pts in curves.values() for x, _ in pts]
    ys = [y for pts in curves.values() for _, y in pts]
    if not xs:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    x0, x1 = 0.0, max(xs) * 1.02 or 1.0
    y0, y1 = min(ys) * 0.95, max(ys) * 1.05 or 1.0
    if y1 <= y0:
        y0, y1 = y0 - 0.5, y0 + 0.5

    def px(x):
        return pad + (x - x0) / (x1 - x0) * (WIDTH - 2 * pad)

    def py(y):
        return HEIGHT - pad - (y - y0) / (y1 - y0) * (HEIGHT - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<title>{title}</title>',
        f'<text x="{pad}" y="20" font-family="sans-serif" font-size="14">{title}</text>',
        f'<line x1="{pad}" y1="{HEIGHT - pad}" x2="{WIDTH - pad}" y2="{HEIGHT - pad}" '
        f'stroke="#333333"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{HEIGHT - pad}" stroke="#333333"/>',
        f'<text x="{WIDTH // 2}" y="{HEIGHT - 12}" font-family="sans-serif" font-size="11" '
        f'text-anchor="middle">{x_label}</text>',
        f'<text x="14" y="{HEIGHT // 2}" font-family="sans-serif" font-size="11" '
        f'transform="rotate(-90 14 {HEIGHT // 2})" text-anchor="middle">{y_label}</text>',
    ]
    for i in range(5):
        xv = x0 + (x1 - x0) * i / 4
        yv = y0 + (y1 - y0) * i / 4
        parts.append(f'<text x="{_fmt(px(xv))}" y="{HEIGHT - pad + 16}" font-family="sans-serif" '
                     f'font-size="9" text-anchor="middle">{_fmt(xv)}</text>')
        parts.append(f'<text x="{pad - 6}" y="{_fmt(py(yv) + 3)}" font-family="sans-serif" '
                     f'font-size="9" text-anchor="end">{_fmt(yv)}</text>')
    legend_y = pad
    for i, name in enumerate(sorted(curves)):
        pts = curves[name]
        color = CURVE_COLORS[i % len(CURVE_COLORS)]
        path = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in pts)
        parts.append(f'<polyline points="{path}" fill="none" stroke="{color}" '
                     f'stroke-width="1.6"/>')
        parts.append(f'<line x1="{WIDTH - 150}" y1="{legend_y}" x2="{WIDTH - 128}" '
                     f'y2="{legend_y}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{WIDTH - 122}" y="{legend_y + 4}" font-family="sans-serif" '
                     f'font-size="10">{name}</text>')
        legend_y += 16
    parts.append("</svg>")
    return "\n".join(parts)
