"""Report writers: delimited tables, JSON documents, figures, manifests.

Every file is written atomically (temp + rename).  Tables are RFC-4180
style CSV with a dot decimal separator and seventeen significant digits, so
reruns with the same configuration and seed are byte-identical.  Each
command also renders a figure next to its tables; figures are a courtesy
view, the CSV stays canonical.
"""
from __future__ import annotations

import csv
import io
import json
import os
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

FIG_DPI = 150


def _format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def atomic_write_bytes(path: Path, payload: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f"{path.name}.tmp-{os.getpid()}")
    tmp.write_bytes(payload)
    os.replace(tmp, path)


def write_csv(path: Path, header: list[str], rows) -> Path:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_format_value(v) for v in row])
    atomic_write_bytes(path, buf.getvalue().encode())
    return path


def write_json(path: Path, payload: dict) -> Path:
    text = json.dumps(payload, sort_keys=True, indent=2)
    atomic_write_bytes(path, (text + "\n").encode())
    return path


def save_figure(fig, path: Path) -> Path:
    buf = io.BytesIO()
    fig.savefig(buf, format="png", dpi=FIG_DPI,
                metadata={"Software": "schottkyflow"})
    plt.close(fig)
    atomic_write_bytes(path, buf.getvalue())
    return path


def write_manifest(outdir: Path, command: str, cfg, outputs: list[Path],
                   extra: dict | None = None) -> Path:
    import numpy
    import scipy
    from . import __version__
    payload = {
        "command": command,
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "depth": cfg.depth,
        "threads": cfg.threads,
        "outputs": sorted(p.name for p in outputs),
        "versions": {
            "schottkyflow": __version__,
            "numpy": numpy.__version__,
            "scipy": scipy.__version__,
            "matplotlib": matplotlib.__version__,
        },
    }
    if extra:
        payload["parameters"] = extra
    return write_json(outdir / "manifest.json", payload)


# ---------------------------------------------------------------------------
# figures

def fig_scheme(scheme, points: np.ndarray):
    fig, ax = plt.subplots(figsize=(6, 6))
    for x, (disk, sym) in enumerate(zip(scheme.disks, scheme.symbols)):
        circle = plt.Circle((disk.center.real, disk.center.imag), disk.radius,
                            fill=False, color="tab:blue", lw=1.2)
        ax.add_patch(circle)
        ax.annotate(sym.label, (disk.center.real, disk.center.imag + disk.radius),
                    ha="center", va="bottom", fontsize=9)
    ax.plot(points.real, points.imag, ".", ms=0.5, color="tab:red", alpha=0.5)
    ax.set_aspect("equal")
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.set_title("scheme disks and sampled limit set")
    return fig


def fig_pressure(s_values, p_values, delta: float | None = None):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(s_values, p_values, "o-", ms=3)
    ax.axhline(0.0, color="gray", lw=0.8)
    if delta is not None:
        ax.axvline(delta, color="tab:red", lw=0.8, ls="--",
                   label=f"root {delta:.6f}")
        ax.legend()
    ax.set_xlabel("s")
    ax.set_ylabel("pressure")
    ax.set_title("pressure against the exponent")
    return fig


def fig_gap_heatmap(report):
    bs = sorted({r.b for r in report.rows})
    ks = sorted({r.k for r in report.rows})
    grid = np.full((len(ks), len(bs)), np.nan)
    for r in report.rows:
        grid[ks.index(r.k), bs.index(r.b)] = r.eta
    fig, ax = plt.subplots(figsize=(6, 4))
    im = ax.imshow(grid, origin="lower", aspect="auto", cmap="viridis")
    ax.set_xticks(range(len(bs)), [f"{b:g}" for b in bs])
    ax.set_yticks(range(len(ks)), [str(k) for k in ks])
    ax.set_xlabel("frequency b")
    ax.set_ylabel("character k")
    ax.set_title("fitted decay exponent")
    fig.colorbar(im, ax=ax, label="eta")
    return fig


def fig_stability(rows):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot([r.a for r in rows], [r.eta for r in rows], "o-")
    ax.set_xlabel("exponent offset a")
    ax.set_ylabel("eta")
    ax.set_title("decay exponent under exponent offsets")
    return fig


def fig_lnic(angles, values):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(angles, values, "o-")
    ax.set_yscale("log")
    ax.set_xlabel("direction angle in the (time, rotation) plane")
    ax.set_ylabel("minimal pairing")
    ax.set_title("non-integrability probe")
    return fig


def fig_ncp(rows):
    fig, ax = plt.subplots(figsize=(6, 4))
    eps = sorted({r[0] for r in rows})
    angles = sorted({r[1] for r in rows})
    for ang in angles:
        ys = [min(r[4] for r in rows if r[0] == e and r[1] == ang) for e in eps]
        ax.plot(eps, ys, "o-", label=f"angle {ang:.2f}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("ball radius")
    ax.set_ylabel("min spread over centers")
    ax.set_title("non-concentration spread")
    ax.legend(fontsize=7)
    return fig


def fig_correlation(series, fit=None):
    fig, ax = plt.subplots(figsize=(6, 4))
    mask = np.abs(series.upsilon) > 0
    ax.semilogy(series.t[mask], np.abs(series.upsilon[mask]), "o-", ms=3,
                label="|correlation|")
    ax.axvline(series.max_tau, color="gray", lw=0.8, ls=":", label="roof")
    if fit is not None:
        ts = np.linspace(fit.window[0], fit.window[1], 50)
        ax.semilogy(ts, fit.amplitude * np.exp(-fit.eta * ts), "--",
                    label=f"fit eta = {fit.eta:.4f}")
    ax.set_xlabel("t")
    ax.set_ylabel("|correlation|")
    ax.set_title("correlation decay")
    ax.legend(fontsize=8)
    return fig


def fig_geodesics(classes, rows):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    angles = [g.angle for g in classes]
    ax1.hist(angles, bins=24, range=(-np.pi, np.pi), color="tab:blue")
    ax1.set_xlabel("holonomy angle")
    ax1.set_ylabel("classes")
    ax1.set_title("holonomy histogram")
    ax2.plot([r.T for r in rows], [r.s1 for r in rows], "o-", label="|S1|")
    ax2.plot([r.T for r in rows], [r.s2 for r in rows], "s-", label="|S2|")
    ax2.plot([r.T for r in rows], [r.s3 for r in rows], "^-", label="|S3|")
    ax2.set_xlabel("length cut T")
    ax2.set_ylabel("character average")
    ax2.set_title("equidistribution trend")
    ax2.legend(fontsize=8)
    return fig
