"""Self-contained SVG log-log ROC plots (no plotting dependency)."""

import math

WIDTH, HEIGHT = 640, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 30, 50
AXIS_MIN = 1e-3

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _to_px(fpr: float, tpr: float) -> tuple[float, float]:
    def frac(v):
        v = min(max(v, AXIS_MIN), 1.0)
        return (math.log10(v) - math.log10(AXIS_MIN)) / -math.log10(AXIS_MIN)

    x = MARGIN_L + frac(fpr) * (WIDTH - MARGIN_L - MARGIN_R)
    y = HEIGHT - MARGIN_B - frac(tpr) * (HEIGHT - MARGIN_T - MARGIN_B)
    return x, y


def _polyline(points, color, dash=None):
    coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
    extra = f' stroke-dasharray="{dash}"' if dash else ""
    return (
        f'<polyline fill="none" stroke="{color}" stroke-width="1.5"'
        f'{extra} points="{coords}"/>'
    )


def render_roc_svg(curves, error_bars=None, bound=None, title="ROC") -> str:
    """Render named (fpr, tpr) curves on log-log axes in [1e-3, 1].

    curves: {name: (fpr array, tpr array)}
    error_bars: {name: [(fpr, tpr, lo, hi), ...]} vertical interval marks
    bound: optional (fprs, tprs) overlay drawn dashed and labeled DP(UB)
    """
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.0f}" y="18" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
    ]
    # axes and decade ticks
    x0, y0 = _to_px(AXIS_MIN, AXIS_MIN)
    x1, y1 = _to_px(1.0, 1.0)
    parts.append(
        f'<rect x="{x0:.1f}" y="{y1:.1f}" width="{x1 - x0:.1f}" '
        f'height="{y0 - y1:.1f}" fill="none" stroke="black"/>'
    )
    decades = [1e-3, 1e-2, 1e-1, 1.0]
    for v in decades:
        px, _ = _to_px(v, AXIS_MIN)
        _, py = _to_px(AXIS_MIN, v)
        parts.append(
            f'<line x1="{px:.1f}" y1="{y0:.1f}" x2="{px:.1f}" y2="{y0 + 5:.1f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{px:.1f}" y="{y0 + 20:.1f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{v:g}</text>'
        )
        parts.append(
            f'<line x1="{x0 - 5:.1f}" y1="{py:.1f}" x2="{x0:.1f}" y2="{py:.1f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{x0 - 8:.1f}" y="{py + 4:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{v:g}</text>'
        )
    parts.append(
        f'<text x="{(x0 + x1) / 2:.0f}" y="{HEIGHT - 8}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">False Positive Rate</text>'
    )
    parts.append(
        f'<text x="16" y="{(y0 + y1) / 2:.0f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {(y0 + y1) / 2:.0f})">True Positive Rate</text>'
    )
    # diagonal chance line
    parts.append(_polyline([_to_px(AXIS_MIN, AXIS_MIN), _to_px(1, 1)], "#bbbbbb", "2,3"))

    legend_y = MARGIN_T + 12
    for k, (name, (fprs, tprs)) in enumerate(curves.items()):
        color = PALETTE[k % len(PALETTE)]
        pts = [_to_px(f, t) for f, t in zip(fprs, tprs)]
        parts.append(_polyline(pts, color))
        parts.append(
            f'<text x="{MARGIN_L + 10}" y="{legend_y}" font-family="sans-serif" '
            f'font-size="12" fill="{color}">{name}</text>'
        )
        legend_y += 15
        for fpr, tpr, lo, hi in (error_bars or {}).get(name, []):
            px, py = _to_px(fpr, tpr)
            _, plo = _to_px(fpr, lo)
            _, phi = _to_px(fpr, hi)
            parts.append(
                f'<line x1="{px:.1f}" y1="{plo:.1f}" x2="{px:.1f}" y2="{phi:.1f}" '
                f'stroke="{color}" stroke-width="1"/>'
            )
            parts.append(f'<circle cx="{px:.1f}" cy="{py:.1f}" r="2.5" fill="{color}"/>')
    if bound is not None:
        fprs, tprs = bound
        pts = [_to_px(f, t) for f, t in zip(fprs, tprs)]
        parts.append(_polyline(pts, "#000000", "6,3"))
        parts.append(
            f'<text x="{MARGIN_L + 10}" y="{legend_y}" font-family="sans-serif" '
            f'font-size="12" fill="#000000">DP(UB)</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)
