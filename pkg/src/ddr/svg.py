"""Dependency-free SVG scatter plots for 2-D learned features."""

from __future__ import annotations

import os

import numpy as np

__all__ = ["scatter_svg"]

_PALETTE = [
    "#1f77b4",
    "#ff7f0e",
    "#2ca02c",
    "#d62728",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#7f7f7f",
]


def scatter_svg(points, labels, path: str, title: str = "", size: int = 480) -> None:
    """Write a scatter of 2-D ``points`` colored by integer ``labels``.

    Points, axes and a small legend only; written atomically.
    """
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels).ravel().astype(int)
    if points.ndim != 2 or points.shape[1] != 2:
        raise ValueError(f"scatter_svg needs (n, 2) points, got {points.shape}")
    margin = 48
    span = size - 2 * margin
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    width = np.where(hi - lo > 0, hi - lo, 1.0)

    def to_px(p):
        x = margin + span * (p[0] - lo[0]) / width[0]
        y = size - margin - span * (p[1] - lo[1]) / width[1]
        return x, y

    classes = sorted(set(labels.tolist()))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        f'<line x1="{margin}" y1="{size - margin}" x2="{size - margin}" '
        f'y2="{size - margin}" stroke="black" stroke-width="1"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
        f'y2="{size - margin}" stroke="black" stroke-width="1"/>',
    ]
    if title:
        parts.append(
            f'<text x="{size / 2:.0f}" y="24" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{title}</text>'
        )
    for p, lab in zip(points, labels):
        x, y = to_px(p)
        color = _PALETTE[classes.index(lab) % len(_PALETTE)]
        parts.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="2" fill="{color}" fill-opacity="0.6"/>')
    for k, cls in enumerate(classes):
        color = _PALETTE[k % len(_PALETTE)]
        y = margin + 16 * k
        parts.append(f'<circle cx="{size - margin + 10}" cy="{y}" r="4" fill="{color}"/>')
        parts.append(
            f'<text x="{size - margin + 18}" y="{y + 4}" font-family="sans-serif" '
            f'font-size="11">class {cls}</text>'
        )
    parts.append("</svg>")
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts))
    os.replace(tmp, path)
