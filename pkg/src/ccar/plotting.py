"""Dependency-free SVG rate-distortion plots with embedded CSV data."""

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")

_W, _H = 640, 440
_ML, _MR, _MT, _MB = 64, 16, 24, 48


def _fmt(v):
    return f"{v:.6g}"


def _ticks(lo, hi, n=6):
    import math

    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    for mult in (1, 2, 2.5, 5, 10):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-12:
        out.append(round(t, 10))
        t += step
    return out


def rd_curves_svg(curves, title="rate-distortion", x_label="bpp", y_label="PSNR (dB)"):
    """Render RdCurve objects to an SVG string (points + polylines + legend)."""
    xs = [p.bpp for c in curves for p in c.points]
    ys = [p.psnr for c in curves for p in c.points]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    x_pad = 0.05 * (x_hi - x_lo or 1.0)
    y_pad = 0.05 * (y_hi - y_lo or 1.0)
    x_lo, x_hi = x_lo - x_pad, x_hi + x_pad
    y_lo, y_hi = y_lo - y_pad, y_hi + y_pad

    def sx(v):
        return _ML + (v - x_lo) / (x_hi - x_lo) * (_W - _ML - _MR)

    def sy(v):
        return _H - _MB - (v - y_lo) / (y_hi - y_lo) * (_H - _MT - _MB)

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        "<!-- csv:label,bpp,psnr -->",
    ]
    for c in curves:
        for p in c.points:
            lines.append(f"<!-- csv:{c.label},{_fmt(p.bpp)},{_fmt(p.psnr)} -->")
    lines.append(f'<rect width="{_W}" height="{_H}" fill="white"/>')
    lines.append(f'<text x="{_W // 2}" y="16" text-anchor="middle" font-size="14">{title}</text>')
    # axes
    lines.append(f'<line x1="{_ML}" y1="{_H - _MB}" x2="{_W - _MR}" y2="{_H - _MB}" stroke="black"/>')
    lines.append(f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H - _MB}" stroke="black"/>')
    for t in _ticks(x_lo, x_hi):
        lines.append(f'<line x1="{_fmt(sx(t))}" y1="{_H - _MB}" x2="{_fmt(sx(t))}" y2="{_H - _MB + 4}" stroke="black"/>')
        lines.append(f'<text x="{_fmt(sx(t))}" y="{_H - _MB + 18}" text-anchor="middle" font-size="11">{_fmt(t)}</text>')
    for t in _ticks(y_lo, y_hi):
        lines.append(f'<line x1="{_ML - 4}" y1="{_fmt(sy(t))}" x2="{_ML}" y2="{_fmt(sy(t))}" stroke="black"/>')
        lines.append(f'<text x="{_ML - 8}" y="{_fmt(sy(t) + 4)}" text-anchor="end" font-size="11">{_fmt(t)}</text>')
    lines.append(f'<text x="{_W // 2}" y="{_H - 10}" text-anchor="middle" font-size="12">{x_label}</text>')
    lines.append(f'<text x="16" y="{_H // 2}" text-anchor="middle" font-size="12" '
                 f'transform="rotate(-90 16 {_H // 2})">{y_label}</text>')
    # curves
    for k, c in enumerate(curves):
        color = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{_fmt(sx(p.bpp))},{_fmt(sy(p.psnr))}" for p in c.points)
        lines.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for p in c.points:
            lines.append(f'<circle cx="{_fmt(sx(p.bpp))}" cy="{_fmt(sy(p.psnr))}" r="3" fill="{color}"/>')
        lines.append(f'<text x="{_W - _MR - 8}" y="{_MT + 16 + 16 * k}" text-anchor="end" '
                     f'font-size="12" fill="{color}">{c.label or f"curve {k}"}</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
