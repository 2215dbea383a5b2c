"""Deterministic report artifacts: CSV tables, SVG plots, a manifest.

Every writer emits byte-stable output for identical inputs: fixed
column orders, ``\\n`` line endings, floats rendered with ``%.6g``, no
timestamps or environment-dependent content anywhere. The manifest
lists SHA-256 digests of the other artifacts and is written last.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Mapping, Sequence

from scipy.special import ndtr

from .survival import SurvivalCurve

FLOAT_FORMAT = "%.6g"

_PALETTE = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
]


def format_value(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return FLOAT_FORMAT % value
    if value is None:
        return ""
    return str(value)


def write_table(path, columns: Sequence[str], rows: Sequence[Sequence]) -> Path:
    """Write rows as CSV with fixed formatting and newline discipline."""
    path = Path(path)
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def two_sided_p(z: float) -> float:
    """Two-sided normal p-value for a z statistic."""
    return float(2.0 * ndtr(-abs(z)))


def stars(p: float) -> str:
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.1:
        return "*"
    return ""


def _estimate_rows(names, estimates: Mapping[str, float], ses: Mapping[str, float]) -> list[tuple]:
    rows = []
    for name in names:
        est = float(estimates[name])
        se = float(ses[name])
        if se > 0:
            z = est / se
            p = two_sided_p(z)
            rows.append((name, est, se, z, p, stars(p)))
        else:
            rows.append((name, est, se, float("nan"), float("nan"), ""))
    return rows


def coefficient_rows(fit) -> list[tuple]:
    """Tabulate a fit: estimate, SE, z, p, stars per coefficient."""
    return _estimate_rows(fit.column_names, fit.coefficients, fit.se)


def write_coefficient_table(fit, path) -> Path:
    columns = ["name", "estimate", "cluster_se", "z", "p", "stars"]
    rows = coefficient_rows(fit)
    footer = [
        ("n_obs", fit.n_obs, "", "", "", ""),
        ("pseudo_r2", fit.pseudo_r2, "", "", "", ""),
        ("clusters", fit.clusters if fit.clusters is not None else "", "", "", "", ""),
        ("iterations", fit.iterations, "", "", "", ""),
        ("converged", fit.converged, "", "", "", ""),
    ]
    return write_table(path, columns, rows + footer)


def write_selection_table(fit, path) -> Path:
    """First-stage probit table: same layout, likelihood footer."""
    columns = ["name", "estimate", "se", "z", "p", "stars"]
    rows = _estimate_rows(fit.column_names, fit.gamma, fit.se)
    footer = [
        ("n_obs", fit.n_obs, "", "", "", ""),
        ("loglik", fit.loglik, "", "", "", ""),
        ("iterations", fit.iterations, "", "", "", ""),
        ("converged", fit.converged, "", "", "", ""),
    ]
    return write_table(path, columns, rows + footer)


def write_mapping_table(mapping: Mapping, path, key_name: str, value_name: str) -> Path:
    rows = [(k, mapping[k]) for k in sorted(mapping)]
    return write_table(path, [key_name, value_name], rows)


def write_citation_long(matrix, path) -> Path:
    """Citation matrix in long form: one row per (citing, cited) pair."""
    rows = []
    for i, citing in enumerate(matrix.axis):
        for j, cited in enumerate(matrix.axis):
            rows.append((citing, cited, float(matrix.counts[i, j])))
    return write_table(path, ["citing", "cited", "count"], rows)


def write_matrix_wide(axis: Sequence[str], values, path, corner: str) -> Path:
    """Square matrix in wide form with labeled header row and column."""
    columns = [corner] + list(axis)
    rows = []
    for i, label in enumerate(axis):
        rows.append([label] + [float(values[i][j]) for j in range(len(axis))])
    return write_table(path, columns, rows)


def write_survival_table(curves: Mapping[str, SurvivalCurve], path) -> Path:
    rows = []
    for group in sorted(curves):
        for step in curves[group].steps:
            rows.append((group, step.t, step.d, step.n, step.s))
    return write_table(path, ["group", "t_months", "events", "at_risk", "survival"], rows)


def write_plateau_table(curves: Mapping[str, SurvivalCurve], path) -> Path:
    rows = [
        (g, curves[g].plateau, curves[g].subjects, curves[g].events)
        for g in sorted(curves)
    ]
    return write_table(path, ["group", "plateau", "subjects", "events"], rows)


def _svg_coords(curve: SurvivalCurve, t_max: int,
                x0: float, y0: float, w: float, h: float) -> str:
    def x(t: float) -> float:
        return x0 + (t / t_max) * w if t_max > 0 else x0

    def y(s: float) -> float:
        return y0 + (1.0 - s) * h

    parts = [f"M {x(0):.2f} {y(1.0):.2f}"]
    s = 1.0
    for step in curve.steps:
        parts.append(f"L {x(step.t):.2f} {y(s):.2f}")
        parts.append(f"L {x(step.t):.2f} {y(step.s):.2f}")
        s = step.s
    parts.append(f"L {x(t_max):.2f} {y(s):.2f}")
    return " ".join(parts)


def svg_survival(curves: Mapping[str, SurvivalCurve], path,
                 title: str = "first-citation survival") -> Path:
    """Render survival step curves as a static SVG, one path per group."""
    path = Path(path)
    width, height = 640.0, 420.0
    x0, y0 = 70.0, 40.0
    plot_w, plot_h = width - x0 - 30.0, height - y0 - 60.0
    t_max = 1
    for curve in curves.values():
        for step in curve.steps:
            t_max = max(t_max, int(step.t))
    t_max = max(12, int(math.ceil(t_max / 12.0)) * 12)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
        f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">',
        f'<rect width="{width:.0f}" height="{height:.0f}" fill="white"/>',
        f'<text x="{width / 2:.2f}" y="22" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>',
    ]
    # axes
    out.append(
        f'<line x1="{x0:.2f}" y1="{y0:.2f}" x2="{x0:.2f}" '
        f'y2="{y0 + plot_h:.2f}" stroke="black"/>'
    )
    out.append(
        f'<line x1="{x0:.2f}" y1="{y0 + plot_h:.2f}" x2="{x0 + plot_w:.2f}" '
        f'y2="{y0 + plot_h:.2f}" stroke="black"/>'
    )
    for k in range(5):
        s = k / 4.0
        yy = y0 + (1.0 - s) * plot_h
        out.append(
            f'<line x1="{x0 - 4:.2f}" y1="{yy:.2f}" x2="{x0:.2f}" '
            f'y2="{yy:.2f}" stroke="black"/>'
        )
        out.append(
            f'<text x="{x0 - 8:.2f}" y="{yy + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{s:.2f}</text>'
        )
    n_xticks = min(8, max(2, t_max // 12))
    for k in range(n_xticks + 1):
        t = round(t_max * k / n_xticks)
        xx = x0 + (t / t_max) * plot_w
        out.append(
            f'<line x1="{xx:.2f}" y1="{y0 + plot_h:.2f}" x2="{xx:.2f}" '
            f'y2="{y0 + plot_h + 4:.2f}" stroke="black"/>'
        )
        out.append(
            f'<text x="{xx:.2f}" y="{y0 + plot_h + 18:.2f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{t}</text>'
        )
    out.append(
        f'<text x="{x0 + plot_w / 2:.2f}" y="{height - 12:.2f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">months since publication</text>'
    )
    out.append(
        f'<text x="16" y="{y0 + plot_h / 2:.2f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 16 {y0 + plot_h / 2:.2f})">survival probability</text>'
    )
    for k, group in enumerate(sorted(curves)):
        color = _PALETTE[k % len(_PALETTE)]
        d = _svg_coords(curves[group], t_max, x0, y0, plot_w, plot_h)
        out.append(f'<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = y0 + 14 + 16 * k
        out.append(
            f'<rect x="{x0 + plot_w - 110:.2f}" y="{ly - 9:.2f}" width="10" '
            f'height="10" fill="{color}"/>'
        )
        out.append(
            f'<text x="{x0 + plot_w - 96:.2f}" y="{ly:.2f}" '
            f'font-family="sans-serif" font-size="11">{group}</text>'
        )
    out.append("</svg>")
    path.write_text("\n".join(out) + "\n", encoding="utf-8")
    return path


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(artifacts: Sequence[Path], out_dir) -> Path:
    """Hash artifacts into manifest.json; call after all other writes."""
    out_dir = Path(out_dir)
    entries = {}
    for p in artifacts:
        p = Path(p)
        rel = p.relative_to(out_dir).as_posix() if p.is_relative_to(out_dir) else p.name
        entries[rel] = sha256_file(p)
    manifest = out_dir / "manifest.json"
    payload = json.dumps({"files": entries}, sort_keys=True, indent=2)
    manifest.write_text(payload + "\n", encoding="utf-8")
    return manifest
